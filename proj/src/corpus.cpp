#include "hner/corpus.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "hner/errors.hpp"
#include "hner/rng.hpp"

namespace hner {

namespace {

bool has_ascii_space(std::string_view s) {
  return s.find_first_of(" \t\r\n\v\f") != std::string_view::npos;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Raw:
      return "raw";
    case Provenance::Processed:
      return "processed";
    case Provenance::ReducedRaw:
      return "reduced-raw";
    case Provenance::ReducedProcessed:
      return "reduced-processed";
  }
  return "raw";
}

void validate_sentence(const TaggedSentence& s) {
  if (s.tokens.empty()) throw ParameterError("sentence has no tokens");
  if (s.tokens.size() != s.tags.size()) {
    throw ParameterError("sentence has " + std::to_string(s.tokens.size()) + " tokens but " +
                         std::to_string(s.tags.size()) + " tags");
  }
  for (const auto& t : s.tokens) {
    if (t.empty() || has_ascii_space(t)) throw ParameterError("invalid token '" + t + "'");
  }
}

Corpus parse_corpus(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_corpus(in, path.string());
}

Corpus parse_corpus(std::istream& in, const std::string& source_name) {
  Corpus corpus;
  TaggedSentence current;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      if (!current.tokens.empty()) corpus.sentences.push_back(std::move(current));
      current = TaggedSentence{};
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError(source_name, line_no, "expected exactly two tab-separated fields (token, tag)");
    }
    std::string token = line.substr(0, tab);
    std::string_view tag_text = std::string_view(line).substr(tab + 1);
    if (token.empty() || has_ascii_space(token)) {
      throw ParseError(source_name, line_no, "token is empty or contains whitespace");
    }
    auto tag = parse_tag(tag_text);
    if (!tag) throw ParseError(source_name, line_no, "unknown tag '" + std::string(tag_text) + "'");
    current.tokens.push_back(std::move(token));
    current.tags.push_back(*tag);
  }
  if (!current.tokens.empty()) corpus.sentences.push_back(std::move(current));
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_corpus(corpus, out);
  if (!out) throw IoError("write failed for " + path.string());
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& s : corpus.sentences) {
    validate_sentence(s);
    for (std::size_t i = 0; i < s.size(); ++i) out << s.tokens[i] << '\t' << tag_name(s.tags[i]) << '\n';
    out << '\n';
  }
}

std::vector<std::vector<std::string>> read_token_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> current;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
      continue;
    }
    std::string token = line.substr(0, line.find('\t'));
    if (token.empty() || has_ascii_space(token)) {
      throw ParseError(path.string(), line_no, "token is empty or contains whitespace");
    }
    current.push_back(std::move(token));
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

bool is_punctuation_token(std::string_view token) {
  if (token.empty()) return false;
  const auto* s = reinterpret_cast<const std::uint8_t*>(token.data());
  const auto length = static_cast<std::int32_t>(token.size());
  std::int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) return false;
    if (c == 0x0964 || c == 0x0965) continue;
    if (!u_ispunct(c)) return false;
  }
  return true;
}

PreprocessResult preprocess(const Corpus& raw) {
  if (raw.provenance != Provenance::Raw && raw.provenance != Provenance::ReducedRaw) {
    throw ParameterError(std::string("preprocess expects a raw corpus, got ") + to_string(raw.provenance));
  }
  PreprocessResult result;
  result.corpus.provenance =
      raw.provenance == Provenance::Raw ? Provenance::Processed : Provenance::ReducedProcessed;
  for (std::size_t si = 0; si < raw.sentences.size(); ++si) {
    const auto& s = raw.sentences[si];
    TaggedSentence out;
    const std::size_t n = s.size();
    std::size_t i = 0;
    while (i < n) {
      if (!s.tokens[i].starts_with('(')) {
        if (is_punctuation_token(s.tokens[i])) {
          ++result.stats.punctuation_tokens_removed;
        } else {
          out.tokens.push_back(s.tokens[i]);
          out.tags.push_back(s.tags[i]);
        }
        ++i;
        continue;
      }
      long depth = 0;
      std::size_t j = i;
      for (; j < n; ++j) {
        const auto& tok = s.tokens[j];
        depth += std::count(tok.begin(), tok.end(), '(') - std::count(tok.begin(), tok.end(), ')');
        if (depth <= 0) break;
      }
      if (j == n) {
        ++result.stats.unbalanced_parentheses;
        result.warnings.push_back("sentence " + std::to_string(si + 1) +
                                  ": unbalanced '(' removes tokens to end of sentence");
        result.stats.parenthesized_tokens_removed += n - i;
        i = n;
      } else {
        result.stats.parenthesized_tokens_removed += j - i + 1;
        i = j + 1;
      }
    }
    if (out.tokens.empty()) {
      ++result.stats.sentences_dropped;
    } else {
      result.corpus.sentences.push_back(std::move(out));
    }
  }
  return result;
}

FilterResult filter_negative_only(const Corpus& corpus) {
  FilterResult result;
  result.corpus.provenance = corpus.provenance == Provenance::Processed || corpus.provenance == Provenance::ReducedProcessed
                                 ? Provenance::ReducedProcessed
                                 : Provenance::ReducedRaw;
  for (const auto& s : corpus.sentences) {
    if (std::any_of(s.tags.begin(), s.tags.end(), is_entity)) {
      result.corpus.sentences.push_back(s);
    } else {
      ++result.removed;
    }
  }
  if (result.corpus.empty()) throw DegenerateOutputError("negative-only filtering removed every sentence");
  result.removed_fraction = static_cast<double>(result.removed) / static_cast<double>(corpus.size());
  return result;
}

CorpusSplits split_corpus(const Corpus& corpus, const SplitSpec& spec) {
  if (!(spec.train > 0.0 && spec.val > 0.0 && spec.test > 0.0)) {
    throw ParameterError("split ratios must all be positive");
  }
  if (std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9) throw ParameterError("split ratios must sum to 1");
  const std::size_t n = corpus.size();
  if (n < 3) throw ParameterError("need at least 3 sentences to split, got " + std::to_string(n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.seed);
  shuffle(std::span<std::size_t>(order), rng);

  // The epsilon absorbs representation error, e.g. (0.70 + 0.15) * 100.
  const double nd = static_cast<double>(n);
  auto a = static_cast<std::size_t>(std::floor(spec.train * nd + 1e-9));
  auto b = static_cast<std::size_t>(std::floor((spec.train + spec.val) * nd + 1e-9));
  a = std::clamp<std::size_t>(a, 1, n - 2);
  b = std::clamp<std::size_t>(b, a + 1, n - 1);

  CorpusSplits out;
  out.train.provenance = out.val.provenance = out.test.provenance = corpus.provenance;
  for (std::size_t i = 0; i < n; ++i) {
    Corpus& dst = i < a ? out.train : (i < b ? out.val : out.test);
    dst.sentences.push_back(corpus.sentences[order[i]]);
  }
  return out;
}

CorpusStats corpus_stats(const Corpus& corpus, std::size_t max_length) {
  CorpusStats st;
  st.max_length = max_length;
  st.sentences = corpus.size();
  std::unordered_set<std::string> unique;
  for (const auto& s : corpus.sentences) {
    st.total_tokens += s.size();
    ++st.length_histogram[s.size()];
    if (s.size() > max_length) ++st.longer_than_max;
    for (const auto& t : s.tokens) unique.insert(t);
    for (auto tag : s.tags) ++st.tag_counts[tag_index(tag)];
  }
  st.unique_tokens = unique.size();
  st.other_fraction = st.total_tokens == 0 ? 0.0
                                           : static_cast<double>(st.tag_counts[kOtherIndex]) /
                                                 static_cast<double>(st.total_tokens);
  return st;
}

std::string to_key_value(const CorpusStats& st) {
  std::ostringstream out;
  out.precision(17);
  out << "sentences=" << st.sentences << '\n';
  out << "total_tokens=" << st.total_tokens << '\n';
  out << "unique_tokens=" << st.unique_tokens << '\n';
  for (std::size_t i = 0; i < kNumTags; ++i) out << "tag_count." << kTagNames[i] << '=' << st.tag_counts[i] << '\n';
  out << "other_fraction=" << st.other_fraction << '\n';
  out << "longer_than_" << st.max_length << '=' << st.longer_than_max << '\n';
  for (const auto& [len, count] : st.length_histogram) out << "length_histogram." << len << '=' << count << '\n';
  return out.str();
}

}  // namespace hner
