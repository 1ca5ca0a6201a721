#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hner/corpus.hpp"
#include "hner/embeddings.hpp"
#include "hner/models.hpp"
#include "hner/tagset.hpp"

namespace hner {

// Token-level confusion matrix: rows gold, columns predicted.
struct ConfusionCounts {
  std::array<std::array<std::uint64_t, kNumTags>, kNumTags> m{};

  std::uint64_t total() const;
  ConfusionCounts transposed() const;
  ConfusionCounts& operator+=(const ConfusionCounts& other);
  bool operator==(const ConfusionCounts&) const = default;
};

// Counts the aligned pairs (gold[i], pred[i]) with mask[i] != 0; an empty mask
// means every position is real. Throws AlignmentError on length mismatch.
ConfusionCounts score(std::span<const std::size_t> gold, std::span<const std::size_t> pred,
                      std::span<const double> mask = {});
ConfusionCounts score(std::span<const Tag> gold, std::span<const Tag> pred);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
};

// P, R and F1 from pooled counts; any zero denominator yields 0.
Prf prf(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn);

struct Metrics {
  std::array<Prf, kNumTags> per_class{};
  Prf entity_micro;  // pooled over the 12 entity classes
  // Mean of per-class entity F1/P/R over classes that occur in gold or
  // predictions; 0 when none do.
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::size_t macro_classes = 0;
  double accuracy = 0.0;  // including `other`
  std::uint64_t tokens = 0;
};

Metrics metrics(const ConfusionCounts& counts);

struct EvalReport {
  std::string model = "unknown";
  std::string dataset = "unknown";
  std::string embeddings;
  std::uint64_t config_hash = 0;

  ConfusionCounts counts;
  Metrics all;
  std::optional<ConfusionCounts> in_vocab_counts;
  std::optional<ConfusionCounts> oov_counts;
  std::optional<Metrics> in_vocab;
  std::optional<Metrics> oov;
};

// Splits the scored tokens by their OOV flag. The two count matrices add up
// to score(gold, pred) exactly. All three spans must have equal length.
std::pair<ConfusionCounts, ConfusionCounts> oov_breakdown(std::span<const std::size_t> gold,
                                                          std::span<const std::size_t> pred,
                                                          std::span<const std::uint8_t> oov_flags);

// Fills the counts, metrics and OOV sub-reports of `report` from per-sentence
// gold/pred/oov sequences. Sentence-level lengths must agree.
void fill_report(EvalReport& report, std::span<const std::vector<std::size_t>> gold,
                 std::span<const std::vector<std::size_t>> pred, std::span<const std::vector<std::uint8_t>> oov);

// Tags every sentence (without dropout) on its first max_len tokens and
// scores against the gold tags of those tokens.
EvalReport evaluate(const Stack& stack, const Corpus& test, const EmbeddingTable& table,
                    std::size_t max_len = kMaxSentenceLength);

// Scores two tagged corpora against each other token by token. Sentences and
// tokens must align. OOV flags are taken from `table` when given.
EvalReport evaluate_files(const Corpus& gold, const Corpus& pred, const EmbeddingTable* table,
                          std::size_t max_len = kMaxSentenceLength);

// Output formats.
std::string to_key_value(const EvalReport& report);
// class,precision,recall,f1,tp,fp,fn plus aggregate rows.
void write_class_csv(const EvalReport& report, std::ostream& out);
// model,subset,f1,precision,recall: one row per subset (all, in-vocab, oov).
void write_summary_csv(const EvalReport& report, std::ostream& out, bool header = true);

}  // namespace hner
