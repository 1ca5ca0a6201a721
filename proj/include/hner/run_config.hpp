#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hner/models.hpp"
#include "hner/training.hpp"

namespace hner {

// Everything a CLI run needs beyond file paths. Keys are flat:
//   lr batch_size dropout max_epochs patience seed lambda label_feed clip_norm max_len
//   hidden_size layers                      (base tagger)
//   dae_hidden bottleneck decoder_direction  (DAE refiner)
//   cond_hidden cond_layers dense_widths     (conditioning refiners)
// Model input sizes come from the embedding table at run time.
struct RunConfig {
  TrainConfig train;
  BaseTaggerConfig base;
  DaeConfig dae;
  CondConfig cond;

  RunConfig();

  static const std::vector<std::string>& keys();

  // Throws ParameterError for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  // "key=value"
  void apply_override(const std::string& assignment);
  // Flat JSON object; values may be numbers, strings or (dense_widths) arrays.
  void merge_json_text(const std::string& text, const std::string& source = "<config>");
  void merge_json_file(const std::filesystem::path& path);

  // Sets embedding_dim on every model config.
  void set_embedding_dim(std::size_t dim);

  // Resolved configuration as pretty JSON with sorted keys.
  std::string to_json() const;
  std::uint64_t hash() const;
};

}  // namespace hner
