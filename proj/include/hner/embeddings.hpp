#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hner/tensor.hpp"

namespace hner {

inline constexpr std::size_t kMaxSentenceLength = 30;

// In-memory word -> vector map. Unknown words resolve to the zero vector and
// are flagged OOV; a stored all-zero vector is still in-vocabulary.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim, std::string identity = "");

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return index_.size(); }
  const std::string& identity() const { return identity_; }
  void set_identity(std::string id) { identity_ = std::move(id); }

  // Returns true when an existing entry was replaced.
  bool insert(const std::string& word, std::span<const double> vector);
  bool contains(const std::string& word) const { return index_.contains(word); }

  struct Lookup {
    std::span<const double> vector;
    bool oov = false;
  };
  Lookup lookup(const std::string& word) const;

 private:
  std::size_t dim_;
  std::string identity_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;
  std::vector<double> zero_;
};

struct VecLoadOptions {
  // When set, only these words are kept.
  const std::unordered_set<std::string>* vocabulary = nullptr;
};

// Text .vec layout: header "count dim", then "word v1 ... v_dim" per line.
// Duplicate words: last occurrence wins. Header/count mismatches and
// duplicates are reported through `warnings` (and standard error when
// warnings is null).
EmbeddingTable load_vec_file(const std::filesystem::path& path, const VecLoadOptions& options = {},
                             std::vector<std::string>* warnings = nullptr);
EmbeddingTable load_vec_stream(std::istream& in, const std::string& source_name, const VecLoadOptions& options = {},
                               std::vector<std::string>* warnings = nullptr);
void write_vec_file(const EmbeddingTable& table, const std::vector<std::string>& words,
                    const std::filesystem::path& path);

// One word per line.
std::unordered_set<std::string> read_vocabulary(const std::filesystem::path& path);

struct EmbeddedSentence {
  Tensor matrix;                  // [max_len x dim]; pad rows are zero
  std::vector<double> mask;       // 1 for real tokens, 0 for padding
  std::vector<std::uint8_t> oov;  // 1 only for real OOV tokens
  std::size_t length = 0;         // number of real tokens
  bool truncated = false;
};

// Embeds the first min(|tokens|, max_len) tokens and zero-pads the rest.
// Truncation increments *truncation_counter when given.
EmbeddedSentence embed_sentence(const EmbeddingTable& table, std::span<const std::string> tokens,
                                std::size_t max_len = kMaxSentenceLength, std::size_t* truncation_counter = nullptr);

}  // namespace hner
