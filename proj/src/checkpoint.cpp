#include "hner/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hner/errors.hpp"
#include "json.hpp"

namespace hner {

namespace {

using nlohmann::json;

constexpr const char* kPrefix = "{\"checksum\":\"";
constexpr const char* kInfix = "\",\"body\":";

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const char* to_string(CondVariant v) { return v == CondVariant::Bilstm ? "bilstm" : "dense"; }

json config_json(const BaseTaggerConfig& c) {
  return {{"embedding_dim", c.embedding_dim},
          {"hidden_size", c.hidden_size},
          {"layers", c.layers},
          {"num_tags", c.num_tags},
          {"dropout", c.dropout}};
}

json config_json(const DaeConfig& c) {
  return {{"embedding_dim", c.embedding_dim},         {"num_tags", c.num_tags},
          {"hidden_size", c.hidden_size},             {"bottleneck", c.bottleneck},
          {"decoder_direction", to_string(c.decoder_direction)}, {"lambda", c.lambda},
          {"label_feed", to_string(c.label_feed)}};
}

json config_json(const CondConfig& c) {
  return {{"variant", to_string(c.variant)},   {"embedding_dim", c.embedding_dim},
          {"num_tags", c.num_tags},            {"hidden_size", c.hidden_size},
          {"layers", c.layers},                {"dense_widths", c.dense_widths},
          {"dropout", c.dropout},              {"label_feed", to_string(c.label_feed)}};
}

json params_json(ParamRegistry reg) {
  json arr = json::array();
  for (const auto& [name, t] : reg.entries()) {
    arr.push_back({{"name", name},
                   {"shape", t->shape()},
                   {"values", std::vector<double>(t->values().begin(), t->values().end())}});
  }
  return arr;
}

void load_params(ParamRegistry reg, const json& arr) {
  if (!arr.is_array() || arr.size() != reg.size()) {
    throw LoadError("checkpoint holds " + std::to_string(arr.is_array() ? arr.size() : 0) +
                    " parameter arrays, model expects " + std::to_string(reg.size()));
  }
  for (std::size_t i = 0; i < reg.size(); ++i) {
    const auto& [name, t] = reg.entries()[i];
    const json& p = arr[i];
    if (p.at("name").get<std::string>() != name) {
      throw LoadError("parameter " + std::to_string(i) + " is '" + p.at("name").get<std::string>() + "', expected '" +
                      name + "'");
    }
    if (p.at("shape").get<Shape>() != t->shape()) throw LoadError("shape mismatch for parameter " + name);
    const auto values = p.at("values").get<std::vector<double>>();
    if (values.size() != t->size()) throw LoadError("value count mismatch for parameter " + name);
    std::copy(values.begin(), values.end(), t->values().begin());
  }
}

template <typename Model>
AnyModel restore(Model model, const json& body) {
  load_params(model.params(), body.at("params"));
  return model;
}

AnyModel model_from_json(const json& body) {
  const ModelFamily family = model_family_from_string(body.at("family").get<std::string>());
  const json& c = body.at("config");
  switch (family) {
    case ModelFamily::Base: {
      BaseTaggerConfig cfg;
      cfg.embedding_dim = c.at("embedding_dim").get<std::size_t>();
      cfg.hidden_size = c.at("hidden_size").get<std::size_t>();
      cfg.layers = c.at("layers").get<std::size_t>();
      cfg.num_tags = c.at("num_tags").get<std::size_t>();
      cfg.dropout = c.at("dropout").get<double>();
      return restore(BaseTagger(cfg), body);
    }
    case ModelFamily::Dae: {
      DaeConfig cfg;
      cfg.embedding_dim = c.at("embedding_dim").get<std::size_t>();
      cfg.num_tags = c.at("num_tags").get<std::size_t>();
      cfg.hidden_size = c.at("hidden_size").get<std::size_t>();
      cfg.bottleneck = c.at("bottleneck").get<std::size_t>();
      cfg.decoder_direction = direction_from_string(c.at("decoder_direction").get<std::string>());
      cfg.lambda = c.at("lambda").get<double>();
      cfg.label_feed = label_feed_from_string(c.at("label_feed").get<std::string>());
      return restore(DaeRefiner(cfg), body);
    }
    case ModelFamily::CondBilstm:
    case ModelFamily::CondDense: {
      CondConfig cfg;
      const std::string variant = c.at("variant").get<std::string>();
      cfg.variant = variant == "bilstm" ? CondVariant::Bilstm : CondVariant::Dense;
      if (variant != to_string(cfg.variant) ||
          (cfg.variant == CondVariant::Bilstm) != (family == ModelFamily::CondBilstm)) {
        throw LoadError("conditioning variant '" + variant + "' does not match family " + to_string(family));
      }
      cfg.embedding_dim = c.at("embedding_dim").get<std::size_t>();
      cfg.num_tags = c.at("num_tags").get<std::size_t>();
      cfg.hidden_size = c.at("hidden_size").get<std::size_t>();
      cfg.layers = c.at("layers").get<std::size_t>();
      cfg.dense_widths = c.at("dense_widths").get<std::vector<std::size_t>>();
      cfg.dropout = c.at("dropout").get<double>();
      cfg.label_feed = label_feed_from_string(c.at("label_feed").get<std::string>());
      return restore(CondRefiner(cfg), body);
    }
  }
  throw LoadError("unknown model family");
}

json adam_json(const std::vector<AdamState>& states) {
  json arr = json::array();
  for (const auto& s : states) {
    arr.push_back({{"t", s.t}, {"beta1", s.beta1}, {"beta2", s.beta2}, {"epsilon", s.epsilon}, {"m", s.m}, {"v", s.v}});
  }
  return arr;
}

std::vector<AdamState> adam_from_json(const json& arr) {
  std::vector<AdamState> out;
  for (const auto& a : arr) {
    AdamState s;
    s.t = a.at("t").get<std::uint64_t>();
    s.beta1 = a.at("beta1").get<double>();
    s.beta2 = a.at("beta2").get<double>();
    s.epsilon = a.at("epsilon").get<double>();
    s.m = a.at("m").get<std::vector<double>>();
    s.v = a.at("v").get<std::vector<double>>();
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

ModelFamily family_of(const AnyModel& model) {
  if (std::holds_alternative<BaseTagger>(model)) return ModelFamily::Base;
  if (std::holds_alternative<DaeRefiner>(model)) return ModelFamily::Dae;
  return std::get<CondRefiner>(model).family();
}

std::string checkpoint_to_string(const AnyModel& model, const std::vector<AdamState>* adam) {
  json body;
  body["format_version"] = kCheckpointVersion;
  body["family"] = to_string(family_of(model));
  body["tagset"] = std::vector<std::string>(kTagNames.begin(), kTagNames.end());
  // params() needs mutable access; a copy keeps the caller's model const.
  std::visit(
      [&](const auto& m) {
        auto copy = m;
        body["config"] = config_json(copy.config());
        body["params"] = params_json(copy.params());
      },
      model);
  if (adam) body["adam"] = adam_json(*adam);
  const std::string text = body.dump();
  return kPrefix + hex64(fnv1a(text)) + kInfix + text + "}";
}

LoadedCheckpoint checkpoint_from_string(const std::string& text, const std::string& source) {
  const std::string prefix = kPrefix;
  const std::string infix = kInfix;
  const std::size_t head = prefix.size() + 16 + infix.size();
  if (text.size() < head + 1 || text.compare(0, prefix.size(), prefix) != 0 ||
      text.compare(prefix.size() + 16, infix.size(), infix) != 0 || text.back() != '}') {
    throw LoadError(source + ": not a checkpoint or truncated");
  }
  const std::string stored = text.substr(prefix.size(), 16);
  const std::string body_text = text.substr(head, text.size() - head - 1);
  if (hex64(fnv1a(body_text)) != stored) throw LoadError(source + ": checksum mismatch (file corrupted)");
  try {
    const json body = json::parse(body_text);
    const int version = body.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
      throw LoadError(source + ": format version " + std::to_string(version) + ", expected " +
                      std::to_string(kCheckpointVersion));
    }
    if (body.at("tagset").get<std::vector<std::string>>() !=
        std::vector<std::string>(kTagNames.begin(), kTagNames.end())) {
      throw LoadError(source + ": tag set order differs from this build");
    }
    LoadedCheckpoint out{model_from_json(body), {}};
    if (body.contains("adam")) out.adam = adam_from_json(body.at("adam"));
    return out;
  } catch (const LoadError&) {
    throw;
  } catch (const std::exception& e) {
    throw LoadError(source + ": " + e.what());
  }
}

void save_checkpoint(const AnyModel& model, const std::filesystem::path& path, const std::vector<AdamState>* adam) {
  const std::string text = checkpoint_to_string(model, adam);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void save_checkpoint(const Refiner& refiner, const std::filesystem::path& path) {
  if (const auto* dae = std::get_if<DaeRefiner>(&refiner)) return save_checkpoint(AnyModel(*dae), path);
  if (const auto* cond = std::get_if<CondRefiner>(&refiner)) return save_checkpoint(AnyModel(*cond), path);
  throw StateError("no refiner to save");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str(), path.string());
}

BaseTagger load_base_checkpoint(const std::filesystem::path& path) {
  auto loaded = load_checkpoint(path);
  if (auto* base = std::get_if<BaseTagger>(&loaded.model)) return std::move(*base);
  throw LoadError(path.string() + ": holds a " + to_string(family_of(loaded.model)) +
                  " model, expected a base tagger");
}

Refiner load_refiner_checkpoint(const std::filesystem::path& path) {
  auto loaded = load_checkpoint(path);
  if (auto* dae = std::get_if<DaeRefiner>(&loaded.model)) return std::move(*dae);
  if (auto* cond = std::get_if<CondRefiner>(&loaded.model)) return std::move(*cond);
  throw LoadError(path.string() + ": holds a base tagger, expected a refiner");
}

}  // namespace hner
