#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hner/corpus.hpp"
#include "hner/embeddings.hpp"
#include "hner/rng.hpp"

namespace hner {

// Deterministic tagged corpora for tests and acceptance runs. Each word has a
// fixed tag, except that a location word followed by two organization-suffix
// words forms a three-token organization run.
struct SyntheticSpec {
  std::uint64_t seed = 1;
  std::size_t n_sentences = 50;
  std::size_t vocab_size = 100;
  std::size_t n_tags = 5;  // entity classes in use plus `other`
  double entity_density = 0.3;
  double run_rate = 0.3;  // chance that a stretch of >= 3 entity slots becomes an organization run
  std::size_t min_length = 5;
  std::size_t max_length = 20;

  void validate() const;
};

struct SyntheticLexicon {
  std::vector<std::string> words;
  std::vector<Tag> word_tags;  // tag of each word outside organization runs
  std::vector<Tag> entity_classes;
  std::vector<std::size_t> other_words;
  std::vector<std::size_t> entity_words;
  std::vector<std::size_t> run_heads;  // location words that may open a run
  std::vector<std::size_t> run_tails;  // organization-suffix words
};

SyntheticLexicon make_synthetic_lexicon(const SyntheticSpec& spec);
Corpus generate_synthetic_corpus(const SyntheticSpec& spec);

// Random vectors in [-1, 1]^dim for every lexicon word.
EmbeddingTable synthetic_embeddings(const SyntheticLexicon& lexicon, std::size_t dim, std::uint64_t seed);

// Label corruption with context-dependent targets. Each real token is
// flipped independently with probability flip_rate:
//   - a token continuing an entity run (same gold entity tag as its
//     predecessor) becomes `other`;
//   - any other entity token becomes the next class in `classes` (cyclic);
//   - an `other` token becomes classes[0].
struct NoiseChannel {
  double flip_rate = 0.3;
  std::uint64_t seed = 0;
  std::vector<Tag> classes;  // empty = all 12 entity classes

  Tag corrupt(std::span<const Tag> gold, std::size_t position) const;
  std::vector<Tag> apply(std::span<const Tag> gold, std::size_t sentence_index) const;
  Corpus apply(const Corpus& corpus) const;
};

}  // namespace hner
