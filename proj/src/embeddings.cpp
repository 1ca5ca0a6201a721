#include "hner/embeddings.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hner/errors.hpp"

namespace hner {

namespace {

void warn(std::vector<std::string>* sink, std::string message) {
  if (sink != nullptr) {
    sink->push_back(std::move(message));
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

// Splits on single spaces, skipping empty fields (trailing spaces are common
// in published .vec files).
std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    auto next = line.find(' ', pos);
    if (next == std::string_view::npos) next = line.size();
    if (next > pos) out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_size(std::string_view s, std::size_t& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dim, std::string identity)
    : dim_(dim), identity_(std::move(identity)), zero_(dim, 0.0) {
  if (dim == 0) throw ParameterError("embedding dimension must be positive");
}

bool EmbeddingTable::insert(const std::string& word, std::span<const double> vector) {
  if (vector.size() != dim_) {
    throw DimensionError("embedding for '" + word + "' has " + std::to_string(vector.size()) +
                         " components, table dim is " + std::to_string(dim_));
  }
  auto it = index_.find(word);
  if (it != index_.end()) {
    std::copy(vector.begin(), vector.end(), data_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
    return true;
  }
  index_.emplace(word, index_.size());
  data_.insert(data_.end(), vector.begin(), vector.end());
  return false;
}

EmbeddingTable::Lookup EmbeddingTable::lookup(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return Lookup{zero_, true};
  return Lookup{std::span<const double>(data_).subspan(it->second * dim_, dim_), false};
}

EmbeddingTable load_vec_file(const std::filesystem::path& path, const VecLoadOptions& options,
                             std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file " + path.string());
  return load_vec_stream(in, path.string(), options, warnings);
}

EmbeddingTable load_vec_stream(std::istream& in, const std::string& source_name, const VecLoadOptions& options,
                               std::vector<std::string>* warnings) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(source_name + ": empty embedding file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_fields(line);
  std::size_t declared = 0;
  std::size_t dim = 0;
  if (header.size() != 2 || !parse_size(header[0], declared) || !parse_size(header[1], dim) || dim == 0) {
    throw FormatError(source_name + ":1: header must be \"count dim\"");
  }
  EmbeddingTable table(dim, source_name);
  std::vector<double> vec(dim);
  std::size_t line_no = 1;
  std::size_t entries = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != dim + 1) {
      throw FormatError(source_name + ":" + std::to_string(line_no) + ": expected word plus " + std::to_string(dim) +
                        " values, found " + std::to_string(fields.empty() ? 0 : fields.size() - 1));
    }
    for (std::size_t i = 0; i < dim; ++i) {
      if (!parse_double(fields[i + 1], vec[i])) {
        throw ParseError(source_name, line_no, "malformed number '" + std::string(fields[i + 1]) + "'");
      }
    }
    ++entries;
    std::string word(fields[0]);
    if (options.vocabulary != nullptr && !options.vocabulary->contains(word)) continue;
    if (table.insert(word, vec)) {
      warn(warnings, source_name + ":" + std::to_string(line_no) + ": duplicate word '" + word +
                         "', keeping last occurrence");
    }
  }
  if (entries != declared) {
    warn(warnings, source_name + ": header declares " + std::to_string(declared) + " entries, found " +
                       std::to_string(entries));
  }
  return table;
}

void write_vec_file(const EmbeddingTable& table, const std::vector<std::string>& words,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  out << words.size() << ' ' << table.dim() << '\n';
  for (const auto& w : words) {
    out << w;
    for (double v : table.lookup(w).vector) out << ' ' << v;
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::unordered_set<std::string> read_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary file " + path.string());
  std::unordered_set<std::string> vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) vocab.insert(line);
  }
  return vocab;
}

EmbeddedSentence embed_sentence(const EmbeddingTable& table, std::span<const std::string> tokens,
                                std::size_t max_len, std::size_t* truncation_counter) {
  if (tokens.empty()) throw DegenerateInputError("embed_sentence: empty token list");
  if (max_len == 0) throw ParameterError("embed_sentence: max_len must be positive");
  EmbeddedSentence out;
  const std::size_t dim = table.dim();
  out.matrix = Tensor(Shape{max_len, dim}, 0.0);
  out.mask.assign(max_len, 0.0);
  out.oov.assign(max_len, 0);
  out.length = std::min(tokens.size(), max_len);
  out.truncated = tokens.size() > max_len;
  if (out.truncated && truncation_counter != nullptr) ++*truncation_counter;
  auto values = out.matrix.values();
  for (std::size_t t = 0; t < out.length; ++t) {
    auto hit = table.lookup(tokens[t]);
    std::copy(hit.vector.begin(), hit.vector.end(), values.begin() + static_cast<std::ptrdiff_t>(t * dim));
    out.mask[t] = 1.0;
    out.oov[t] = hit.oov ? 1 : 0;
  }
  return out;
}

}  // namespace hner
