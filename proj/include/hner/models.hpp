#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hner/embeddings.hpp"
#include "hner/graph.hpp"
#include "hner/layers.hpp"
#include "hner/params.hpp"
#include "hner/rng.hpp"
#include "hner/tagset.hpp"

namespace hner {

enum class ModelFamily { Base, Dae, CondBilstm, CondDense };
enum class LabelFeed { HardOneHot, SoftDistribution };

const char* to_string(ModelFamily f);
ModelFamily model_family_from_string(const std::string& s);
const char* to_string(LabelFeed f);
LabelFeed label_feed_from_string(const std::string& s);

struct BaseTaggerConfig {
  std::size_t embedding_dim = 300;
  std::size_t hidden_size = 256;
  std::size_t layers = 2;
  std::size_t num_tags = kNumTags;
  double dropout = 0.5;

  void validate() const;
};

// Stacked BiLSTM layers with dropout after each, then dense -> softmax.
class BaseTagger {
 public:
  // Zero parameters; used when loading checkpoints.
  explicit BaseTagger(const BaseTaggerConfig& config);
  BaseTagger(const BaseTaggerConfig& config, Rng& rng);

  const BaseTaggerConfig& config() const { return config_; }

  // emb: [T x D] with `length` leading real rows. Returns tag probabilities
  // [T x C]. Dropout is active only when training (rng required then).
  Var forward(Graph& g, Var emb, std::size_t length, bool training, Rng* rng);
  Var forward(Graph& g, Var emb, std::size_t length) const;

  ParamRegistry params();
  std::uint64_t checksum() const;

 private:
  struct Layer {
    LstmParams forward;
    LstmParams backward;
  };

  template <typename Self>
  static Var forward_impl(Self& self, Graph& g, Var emb, std::size_t length, bool training, Rng* rng);

  BaseTaggerConfig config_;
  std::vector<Layer> layers_;
  DenseParams output_;
};

struct DaeConfig {
  std::size_t embedding_dim = 300;
  std::size_t num_tags = kNumTags;
  std::size_t hidden_size = 128;
  std::size_t bottleneck = 128;
  Direction decoder_direction = Direction::Forward;
  double lambda = 1.0;
  LabelFeed label_feed = LabelFeed::HardOneHot;

  void validate() const;
};

// Encoder: LSTM over concat(embedding, noisy label) then a tanh bottleneck.
// Decoder: tanh expansion then LSTM, feeding a reconstruction head (D reals)
// and a tag head (softmax over C).
class DaeRefiner {
 public:
  struct Output {
    Var reconstruction;  // [T x D]
    Var tags;            // [T x C]
  };

  explicit DaeRefiner(const DaeConfig& config);
  DaeRefiner(const DaeConfig& config, Rng& rng);

  const DaeConfig& config() const { return config_; }

  Output forward(Graph& g, Var emb, Var noisy, std::size_t length);
  Output forward(Graph& g, Var emb, Var noisy, std::size_t length) const;

  ParamRegistry params();
  std::uint64_t checksum() const;

 private:
  template <typename Self>
  static Output forward_impl(Self& self, Graph& g, Var emb, Var noisy, std::size_t length);

  DaeConfig config_;
  LstmParams encoder_;
  DenseParams bottleneck_;
  DenseParams expansion_;
  LstmParams decoder_;
  DenseParams reconstruction_head_;
  DenseParams tag_head_;
};

enum class CondVariant { Bilstm, Dense };

struct CondConfig {
  CondVariant variant = CondVariant::Bilstm;
  std::size_t embedding_dim = 300;
  std::size_t num_tags = kNumTags;
  std::size_t hidden_size = 128;                      // bilstm variant
  std::size_t layers = 2;                             // bilstm variant
  std::vector<std::size_t> dense_widths{256, 64, 13};  // dense variant; last == num_tags
  double dropout = 0.5;                               // bilstm variant
  LabelFeed label_feed = LabelFeed::HardOneHot;

  void validate() const;
};

// Classifies each token from concat(embedding, noisy label). The bilstm
// variant mixes context across tokens; the dense variant is a per-token map.
class CondRefiner {
 public:
  explicit CondRefiner(const CondConfig& config);
  CondRefiner(const CondConfig& config, Rng& rng);

  const CondConfig& config() const { return config_; }
  ModelFamily family() const {
    return config_.variant == CondVariant::Bilstm ? ModelFamily::CondBilstm : ModelFamily::CondDense;
  }

  Var forward(Graph& g, Var emb, Var noisy, std::size_t length, bool training, Rng* rng);
  Var forward(Graph& g, Var emb, Var noisy, std::size_t length) const;

  ParamRegistry params();
  std::uint64_t checksum() const;

 private:
  struct Layer {
    LstmParams forward;
    LstmParams backward;
  };

  template <typename Self>
  static Var forward_impl(Self& self, Graph& g, Var emb, Var noisy, std::size_t length, bool training, Rng* rng);

  CondConfig config_;
  std::vector<Layer> layers_;
  std::vector<DenseParams> dense_;
};

// Masked categorical cross-entropy of a tag distribution against one-hot gold.
Var base_loss(Var probs, Var gold, std::span<const double> mask, std::optional<double> normalizer = std::nullopt);

// cross_entropy(tags, gold) + lambda * mse(reconstruction, emb_target).
Var dae_loss(const DaeRefiner::Output& out, Var emb_target, Var gold, std::span<const double> mask, double lambda,
             std::optional<double> normalizer = std::nullopt);

// [rows x classes] one-hot matrix; rows past indices.size() are zero.
Tensor one_hot(std::span<const std::size_t> indices, std::size_t rows, std::size_t classes);
std::vector<std::size_t> argmax_rows(std::span<const double> probs, std::size_t classes, std::size_t rows);

// Converts a tag distribution into the label input of a refiner: the argmax
// one-hot (hard) or the distribution itself (soft). Pad rows become zero.
Tensor labels_to_feed(std::span<const double> probs, std::size_t rows, std::size_t classes, std::size_t length,
                      LabelFeed feed);

// Runs the frozen base tagger (no dropout) over each sentence and converts
// its output per `feed`.
std::vector<Tensor> make_noisy_labels(const BaseTagger& base, std::span<const EmbeddedSentence> sentences,
                                      LabelFeed feed);

using Refiner = std::variant<std::monostate, DaeRefiner, CondRefiner>;

// Base tagger followed by an optional refiner fed with the base labels.
class Stack {
 public:
  explicit Stack(BaseTagger base, Refiner refiner = std::monostate{});

  const BaseTagger& base() const { return base_; }
  const Refiner& refiner() const { return refiner_; }
  bool has_refiner() const { return !std::holds_alternative<std::monostate>(refiner_); }
  LabelFeed label_feed() const;

  // Tag indices for the real tokens of one embedded sentence.
  std::vector<std::size_t> predict(const EmbeddedSentence& sentence) const;
  // Tags for the first min(|tokens|, max_len) tokens.
  std::vector<Tag> predict(std::span<const std::string> tokens, const EmbeddingTable& table,
                           std::size_t max_len = kMaxSentenceLength) const;
  // Sentences are tagged concurrently in parallel numerics mode; output order
  // matches input order.
  std::vector<std::vector<std::size_t>> predict_all(std::span<const EmbeddedSentence> sentences) const;

 private:
  BaseTagger base_;
  Refiner refiner_;
};

// Tag predictions of a refiner given precomputed label inputs.
std::vector<std::size_t> refiner_predict(const Refiner& refiner, const EmbeddedSentence& sentence,
                                         const Tensor& noisy);

}  // namespace hner
