#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "hner/corpus.hpp"
#include "hner/embeddings.hpp"
#include "hner/models.hpp"

namespace hner {

struct TrainConfig {
  double lr = 0.003;
  std::size_t batch_size = 8;
  double dropout = 0.5;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;  // epochs without val-F1 improvement; 0 disables early stopping
  std::uint64_t seed = 0;
  double lambda = 1.0;  // weight of the DAE reconstruction term
  LabelFeed label_feed = LabelFeed::HardOneHot;
  double clip_norm = 5.0;  // global gradient norm; 0 disables clipping
  std::size_t max_len = kMaxSentenceLength;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean over real training tokens
  double val_acc = 0.0;
  double val_f1 = 0.0;  // entity-micro
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
  double best_val_f1 = 0.0;

  // Header: epoch,train_loss,val_acc,val_f1,seconds
  void write_csv(std::ostream& out) const;
  void write_csv(const std::filesystem::path& path) const;
};

// Index batches over [0, n): a shuffle seeded by (seed ^ epoch), cut into
// consecutive chunks of batch_size; the last chunk may be short.
std::vector<std::vector<std::size_t>> batch_iter(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                 std::size_t epoch);

// Embedded sentences with their gold labels, truncated to max_len.
struct Dataset {
  std::vector<EmbeddedSentence> inputs;
  std::vector<Tensor> gold;                       // one-hot [max_len x C]
  std::vector<std::vector<std::size_t>> gold_ids;  // real tokens only

  std::size_t size() const { return inputs.size(); }
};

Dataset make_dataset(const Corpus& corpus, const EmbeddingTable& table, std::size_t max_len = kMaxSentenceLength);

using EpochCallback = std::function<void(const EpochRecord&)>;

struct BaseTrainResult {
  BaseTagger model;
  TrainHistory history;
};

// Trains a fresh base tagger initialised from config.seed. model.dropout is
// replaced by config.dropout and model.embedding_dim must equal table.dim().
BaseTrainResult train_base(const Corpus& train, const Corpus& val, BaseTaggerConfig model, const TrainConfig& config,
                           const EmbeddingTable& table, const EpochCallback& on_epoch = {});
BaseTrainResult train_base(const Dataset& train, const Dataset& val, BaseTaggerConfig model,
                           const TrainConfig& config, const EpochCallback& on_epoch = {});

// Refiner inputs: embedded sentences, gold labels and the label tensors the
// refiner is conditioned on (one per sentence, [max_len x C]).
struct RefinerData {
  Dataset data;
  std::vector<Tensor> noisy;
};

struct RefinerTrainResult {
  Refiner refiner;
  TrainHistory history;
};

// A freshly initialised refiner of the given family. dropout and label_feed
// come from config.
Refiner make_refiner(ModelFamily family, const DaeConfig& dae, const CondConfig& cond, const TrainConfig& config);

// Trains `refiner` on arbitrary label inputs; early stopping uses the
// refiner's entity-micro F1 on `val`.
RefinerTrainResult fit_refiner(Refiner refiner, const RefinerData& train, const RefinerData& val,
                               const TrainConfig& config, const EpochCallback& on_epoch = {});

// Stack training: noisy labels are the frozen base tagger's outputs on each
// split. Throws TrainingError if the base parameters change.
RefinerTrainResult train_refiner(const BaseTagger& base, Refiner refiner, const Corpus& train, const Corpus& val,
                                 const TrainConfig& config, const EmbeddingTable& table,
                                 const EpochCallback& on_epoch = {});

// Token accuracy and entity-micro F1 of predictions against gold ids.
struct QuickScore {
  double accuracy = 0.0;
  double f1 = 0.0;
};
QuickScore quick_score(std::span<const std::vector<std::size_t>> gold, std::span<const std::vector<std::size_t>> pred);

}  // namespace hner
