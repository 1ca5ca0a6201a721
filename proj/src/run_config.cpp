#include "hner/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hner/errors.hpp"
#include "json.hpp"

namespace hner {

namespace {

using nlohmann::json;

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw ParameterError("config key '" + key + "': '" + v + "' is not a number");
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ParameterError("config key '" + key + "': '" + v + "' is not a non-negative integer");
  }
  return out;
}

std::vector<std::size_t> parse_widths(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<std::size_t>(parse_uint(key, item)));
  if (out.empty()) throw ParameterError("config key '" + key + "' needs at least one width");
  return out;
}

std::string widths_string(const std::vector<std::size_t>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
  return s;
}

}  // namespace

RunConfig::RunConfig() {
  dae.lambda = train.lambda;
  dae.label_feed = cond.label_feed = train.label_feed;
  base.dropout = cond.dropout = train.dropout;
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "batch_size", "bottleneck", "clip_norm", "cond_hidden", "cond_layers", "dae_hidden", "decoder_direction",
      "dense_widths", "dropout", "hidden_size", "label_feed", "lambda", "layers", "lr", "max_epochs", "max_len",
      "patience", "seed"};
  return k;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "lr") {
    train.lr = parse_double(key, value);
  } else if (key == "batch_size") {
    train.batch_size = parse_uint(key, value);
  } else if (key == "dropout") {
    train.dropout = base.dropout = cond.dropout = parse_double(key, value);
  } else if (key == "max_epochs") {
    train.max_epochs = parse_uint(key, value);
  } else if (key == "patience") {
    train.patience = parse_uint(key, value);
  } else if (key == "seed") {
    train.seed = parse_uint(key, value);
  } else if (key == "lambda") {
    train.lambda = dae.lambda = parse_double(key, value);
  } else if (key == "label_feed") {
    train.label_feed = dae.label_feed = cond.label_feed = label_feed_from_string(value);
  } else if (key == "clip_norm") {
    train.clip_norm = parse_double(key, value);
  } else if (key == "max_len") {
    train.max_len = parse_uint(key, value);
  } else if (key == "hidden_size") {
    base.hidden_size = parse_uint(key, value);
  } else if (key == "layers") {
    base.layers = parse_uint(key, value);
  } else if (key == "dae_hidden") {
    dae.hidden_size = parse_uint(key, value);
  } else if (key == "bottleneck") {
    dae.bottleneck = parse_uint(key, value);
  } else if (key == "decoder_direction") {
    dae.decoder_direction = direction_from_string(value);
  } else if (key == "cond_hidden") {
    cond.hidden_size = parse_uint(key, value);
  } else if (key == "cond_layers") {
    cond.layers = parse_uint(key, value);
  } else if (key == "dense_widths") {
    cond.dense_widths = parse_widths(key, value);
  } else {
    throw ParameterError("unknown config key '" + key + "'");
  }
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ParameterError("override '" + assignment + "' is not key=value");
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void RunConfig::merge_json_text(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(source, 0, e.what());
  }
  if (!doc.is_object()) throw ParseError(source, 0, "config must be a JSON object");
  for (const auto& [key, v] : doc.items()) {
    std::string value;
    if (v.is_string()) {
      value = v.get<std::string>();
    } else if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) value += (i ? "," : "") + v[i].dump();
    } else if (v.is_number() || v.is_boolean()) {
      value = v.dump();
    } else {
      throw ParameterError(source + ": config key '" + key + "' has an unsupported value");
    }
    set(key, value);
  }
}

void RunConfig::merge_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  merge_json_text(buf.str(), path.string());
}

void RunConfig::set_embedding_dim(std::size_t dim) { base.embedding_dim = dae.embedding_dim = cond.embedding_dim = dim; }

std::string RunConfig::to_json() const {
  json j;
  j["lr"] = train.lr;
  j["batch_size"] = train.batch_size;
  j["dropout"] = train.dropout;
  j["max_epochs"] = train.max_epochs;
  j["patience"] = train.patience;
  j["seed"] = train.seed;
  j["lambda"] = train.lambda;
  j["label_feed"] = to_string(train.label_feed);
  j["clip_norm"] = train.clip_norm;
  j["max_len"] = train.max_len;
  j["hidden_size"] = base.hidden_size;
  j["layers"] = base.layers;
  j["dae_hidden"] = dae.hidden_size;
  j["bottleneck"] = dae.bottleneck;
  j["decoder_direction"] = to_string(dae.decoder_direction);
  j["cond_hidden"] = cond.hidden_size;
  j["cond_layers"] = cond.layers;
  j["dense_widths"] = widths_string(cond.dense_widths);
  return j.dump(2);
}

std::uint64_t RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace hner
