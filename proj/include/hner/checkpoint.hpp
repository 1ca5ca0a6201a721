#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "hner/adam.hpp"
#include "hner/models.hpp"

namespace hner {

inline constexpr int kCheckpointVersion = 1;

using AnyModel = std::variant<BaseTagger, DaeRefiner, CondRefiner>;

struct LoadedCheckpoint {
  AnyModel model;
  std::vector<AdamState> adam;  // empty unless saved
};

// File layout: {"checksum":"<16 hex digits>","body":<compact JSON>} where the
// checksum is FNV-1a over the exact bytes of the body. The body holds the
// format version, model family, config block, tag order and the parameters
// as flat row-major arrays in registry order.
std::string checkpoint_to_string(const AnyModel& model, const std::vector<AdamState>* adam = nullptr);
LoadedCheckpoint checkpoint_from_string(const std::string& text, const std::string& source = "<memory>");

void save_checkpoint(const AnyModel& model, const std::filesystem::path& path,
                     const std::vector<AdamState>* adam = nullptr);
void save_checkpoint(const Refiner& refiner, const std::filesystem::path& path);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// Family-checked loaders; a mismatch throws LoadError.
BaseTagger load_base_checkpoint(const std::filesystem::path& path);
Refiner load_refiner_checkpoint(const std::filesystem::path& path);

ModelFamily family_of(const AnyModel& model);

}  // namespace hner
