#include "hner/models.hpp"

#include <algorithm>

#include "hner/errors.hpp"
#include "hner/ops.hpp"
#include "hner/parallel.hpp"

namespace hner {

namespace {

void check_input(Var emb, std::size_t dim, std::size_t length, const char* who) {
  const Shape& s = emb.shape();
  if (s.size() != 2 || s[1] != dim) {
    throw DimensionError(std::string(who) + ": embedding input " + shape_string(s) + " does not have dimension " +
                         std::to_string(dim));
  }
  if (length == 0) throw DegenerateInputError(std::string(who) + ": sentence has no real tokens");
  if (length > s[0]) {
    throw DimensionError(std::string(who) + ": length " + std::to_string(length) + " exceeds " +
                         std::to_string(s[0]) + " rows");
  }
}

void check_labels(Var emb, Var noisy, std::size_t classes, const char* who) {
  const Shape& s = noisy.shape();
  if (s.size() != 2 || s[0] != emb.shape()[0] || s[1] != classes) {
    throw DimensionError(std::string(who) + ": label input " + shape_string(s) + " is not [" +
                         std::to_string(emb.shape()[0]) + " x " + std::to_string(classes) + "]");
  }
}

template <typename Model>
std::uint64_t checksum_of(const Model& m) {
  // params() only builds a view; checksum() reads values.
  return const_cast<Model&>(m).params().checksum();
}

}  // namespace

const char* to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::Base:
      return "base";
    case ModelFamily::Dae:
      return "dae";
    case ModelFamily::CondBilstm:
      return "cond-bilstm";
    case ModelFamily::CondDense:
      return "cond-dense";
  }
  return "base";
}

ModelFamily model_family_from_string(const std::string& s) {
  if (s == "base") return ModelFamily::Base;
  if (s == "dae") return ModelFamily::Dae;
  if (s == "cond-bilstm") return ModelFamily::CondBilstm;
  if (s == "cond-dense") return ModelFamily::CondDense;
  throw ParameterError("unknown model family: " + s);
}

const char* to_string(LabelFeed f) { return f == LabelFeed::HardOneHot ? "hard-onehot" : "soft-distribution"; }

LabelFeed label_feed_from_string(const std::string& s) {
  if (s == "hard-onehot") return LabelFeed::HardOneHot;
  if (s == "soft-distribution") return LabelFeed::SoftDistribution;
  throw ParameterError("unknown label feed mode: " + s);
}

// ---------------------------------------------------------------------------
// BaseTagger

void BaseTaggerConfig::validate() const {
  if (embedding_dim == 0 || hidden_size == 0 || layers == 0) {
    throw ParameterError("base tagger sizes must be positive");
  }
  if (num_tags < 2) throw ParameterError("base tagger needs at least 2 tags");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ParameterError("dropout must lie in [0, 1)");
}

BaseTagger::BaseTagger(const BaseTaggerConfig& config) : config_(config) {
  config_.validate();
  std::size_t in = config_.embedding_dim;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    layers_.push_back(Layer{LstmParams::zeros(in, config_.hidden_size), LstmParams::zeros(in, config_.hidden_size)});
    in = 2 * config_.hidden_size;
  }
  output_.input_size = in;
  output_.output_size = config_.num_tags;
  output_.activation = Activation::Softmax;
  output_.weight = Tensor(Shape{config_.num_tags, in});
  output_.bias = Tensor(Shape{config_.num_tags});
}

BaseTagger::BaseTagger(const BaseTaggerConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  std::size_t in = config_.embedding_dim;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    LstmParams f = LstmParams::init(in, config_.hidden_size, rng);
    LstmParams b = LstmParams::init(in, config_.hidden_size, rng);
    layers_.push_back(Layer{std::move(f), std::move(b)});
    in = 2 * config_.hidden_size;
  }
  output_ = DenseParams::init(in, config_.num_tags, Activation::Softmax, rng);
}

template <typename Self>
Var BaseTagger::forward_impl(Self& self, Graph& g, Var emb, std::size_t length, bool training, Rng* rng) {
  const auto& cfg = self.config_;
  check_input(emb, cfg.embedding_dim, length, "base tagger");
  const bool drop = training && cfg.dropout > 0.0;
  if (drop && rng == nullptr) throw StateError("base tagger: training mode needs an rng");
  Var x = emb;
  for (auto& layer : self.layers_) {
    x = bilstm(bind(g, layer.forward), bind(g, layer.backward), x, length);
    if (drop) x = dropout(x, cfg.dropout, true, *rng);
  }
  return dense(bind(g, self.output_), x);
}

Var BaseTagger::forward(Graph& g, Var emb, std::size_t length, bool training, Rng* rng) {
  return forward_impl(*this, g, emb, length, training, rng);
}

Var BaseTagger::forward(Graph& g, Var emb, std::size_t length) const {
  return forward_impl(*this, g, emb, length, false, nullptr);
}

ParamRegistry BaseTagger::params() {
  ParamRegistry r;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].forward.register_into(r, "bilstm" + std::to_string(l) + ".forward");
    layers_[l].backward.register_into(r, "bilstm" + std::to_string(l) + ".backward");
  }
  output_.register_into(r, "output");
  return r;
}

std::uint64_t BaseTagger::checksum() const { return checksum_of(*this); }

// ---------------------------------------------------------------------------
// DaeRefiner

void DaeConfig::validate() const {
  if (embedding_dim == 0 || num_tags < 2 || hidden_size == 0 || bottleneck == 0) {
    throw ParameterError("DAE sizes must be positive");
  }
  if (bottleneck >= embedding_dim + num_tags) {
    throw ParameterError("DAE bottleneck " + std::to_string(bottleneck) + " must be smaller than its input size " +
                         std::to_string(embedding_dim + num_tags));
  }
  if (!(lambda >= 0.0)) throw ParameterError("DAE loss weight lambda must be >= 0");
}

DaeRefiner::DaeRefiner(const DaeConfig& config) : config_(config) {
  config_.validate();
  const std::size_t in = config_.embedding_dim + config_.num_tags;
  const std::size_t H = config_.hidden_size;
  auto zero_dense = [](std::size_t i, std::size_t o, Activation a) {
    DenseParams p;
    p.input_size = i;
    p.output_size = o;
    p.activation = a;
    p.weight = Tensor(Shape{o, i});
    p.bias = Tensor(Shape{o});
    return p;
  };
  encoder_ = LstmParams::zeros(in, H);
  bottleneck_ = zero_dense(H, config_.bottleneck, Activation::Tanh);
  expansion_ = zero_dense(config_.bottleneck, H, Activation::Tanh);
  decoder_ = LstmParams::zeros(H, H);
  reconstruction_head_ = zero_dense(H, config_.embedding_dim, Activation::None);
  tag_head_ = zero_dense(H, config_.num_tags, Activation::Softmax);
}

DaeRefiner::DaeRefiner(const DaeConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const std::size_t in = config_.embedding_dim + config_.num_tags;
  const std::size_t H = config_.hidden_size;
  encoder_ = LstmParams::init(in, H, rng);
  bottleneck_ = DenseParams::init(H, config_.bottleneck, Activation::Tanh, rng);
  expansion_ = DenseParams::init(config_.bottleneck, H, Activation::Tanh, rng);
  decoder_ = LstmParams::init(H, H, rng);
  reconstruction_head_ = DenseParams::init(H, config_.embedding_dim, Activation::None, rng);
  tag_head_ = DenseParams::init(H, config_.num_tags, Activation::Softmax, rng);
}

template <typename Self>
DaeRefiner::Output DaeRefiner::forward_impl(Self& self, Graph& g, Var emb, Var noisy, std::size_t length) {
  const auto& cfg = self.config_;
  check_input(emb, cfg.embedding_dim, length, "DAE refiner");
  check_labels(emb, noisy, cfg.num_tags, "DAE refiner");
  Var x = concat(emb, noisy, 1);
  Var encoded = lstm_sequence(bind(g, self.encoder_), x, Direction::Forward, length);
  Var code = dense(bind(g, self.bottleneck_), encoded);
  Var expanded = dense(bind(g, self.expansion_), code);
  Var decoded = lstm_sequence(bind(g, self.decoder_), expanded, cfg.decoder_direction, length);
  return Output{dense(bind(g, self.reconstruction_head_), decoded), dense(bind(g, self.tag_head_), decoded)};
}

DaeRefiner::Output DaeRefiner::forward(Graph& g, Var emb, Var noisy, std::size_t length) {
  return forward_impl(*this, g, emb, noisy, length);
}

DaeRefiner::Output DaeRefiner::forward(Graph& g, Var emb, Var noisy, std::size_t length) const {
  return forward_impl(*this, g, emb, noisy, length);
}

ParamRegistry DaeRefiner::params() {
  ParamRegistry r;
  encoder_.register_into(r, "encoder");
  bottleneck_.register_into(r, "bottleneck");
  expansion_.register_into(r, "expansion");
  decoder_.register_into(r, "decoder");
  reconstruction_head_.register_into(r, "reconstruction_head");
  tag_head_.register_into(r, "tag_head");
  return r;
}

std::uint64_t DaeRefiner::checksum() const { return checksum_of(*this); }

// ---------------------------------------------------------------------------
// CondRefiner

void CondConfig::validate() const {
  if (embedding_dim == 0 || num_tags < 2) throw ParameterError("conditioning refiner sizes must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ParameterError("dropout must lie in [0, 1)");
  if (variant == CondVariant::Bilstm) {
    if (hidden_size == 0 || layers == 0) throw ParameterError("conditioning BiLSTM sizes must be positive");
    return;
  }
  if (dense_widths.empty()) throw ParameterError("dense conditioning refiner needs at least one layer");
  std::size_t prev = embedding_dim + num_tags;
  for (auto w : dense_widths) {
    if (w == 0 || w >= prev) {
      throw ParameterError("dense conditioning widths must strictly decrease from the input size " +
                           std::to_string(embedding_dim + num_tags));
    }
    prev = w;
  }
  if (dense_widths.back() != num_tags) {
    throw ParameterError("last dense conditioning width must equal the tag count " + std::to_string(num_tags));
  }
}

CondRefiner::CondRefiner(const CondConfig& config) : config_(config) {
  config_.validate();
  std::size_t in = config_.embedding_dim + config_.num_tags;
  if (config_.variant == CondVariant::Bilstm) {
    for (std::size_t l = 0; l < config_.layers; ++l) {
      layers_.push_back(Layer{LstmParams::zeros(in, config_.hidden_size), LstmParams::zeros(in, config_.hidden_size)});
      in = 2 * config_.hidden_size;
    }
    DenseParams out;
    out.input_size = in;
    out.output_size = config_.num_tags;
    out.activation = Activation::Softmax;
    out.weight = Tensor(Shape{config_.num_tags, in});
    out.bias = Tensor(Shape{config_.num_tags});
    dense_.push_back(std::move(out));
    return;
  }
  for (std::size_t i = 0; i < config_.dense_widths.size(); ++i) {
    DenseParams p;
    p.input_size = in;
    p.output_size = config_.dense_widths[i];
    p.activation = i + 1 == config_.dense_widths.size() ? Activation::Softmax : Activation::Tanh;
    p.weight = Tensor(Shape{p.output_size, in});
    p.bias = Tensor(Shape{p.output_size});
    in = p.output_size;
    dense_.push_back(std::move(p));
  }
}

CondRefiner::CondRefiner(const CondConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  std::size_t in = config_.embedding_dim + config_.num_tags;
  if (config_.variant == CondVariant::Bilstm) {
    for (std::size_t l = 0; l < config_.layers; ++l) {
      LstmParams f = LstmParams::init(in, config_.hidden_size, rng);
      LstmParams b = LstmParams::init(in, config_.hidden_size, rng);
      layers_.push_back(Layer{std::move(f), std::move(b)});
      in = 2 * config_.hidden_size;
    }
    dense_.push_back(DenseParams::init(in, config_.num_tags, Activation::Softmax, rng));
    return;
  }
  for (std::size_t i = 0; i < config_.dense_widths.size(); ++i) {
    const bool last = i + 1 == config_.dense_widths.size();
    dense_.push_back(
        DenseParams::init(in, config_.dense_widths[i], last ? Activation::Softmax : Activation::Tanh, rng));
    in = config_.dense_widths[i];
  }
}

template <typename Self>
Var CondRefiner::forward_impl(Self& self, Graph& g, Var emb, Var noisy, std::size_t length, bool training,
                              Rng* rng) {
  const auto& cfg = self.config_;
  check_input(emb, cfg.embedding_dim, length, "conditioning refiner");
  check_labels(emb, noisy, cfg.num_tags, "conditioning refiner");
  Var x = concat(emb, noisy, 1);
  if (cfg.variant == CondVariant::Bilstm) {
    const bool drop = training && cfg.dropout > 0.0;
    if (drop && rng == nullptr) throw StateError("conditioning refiner: training mode needs an rng");
    for (auto& layer : self.layers_) {
      x = bilstm(bind(g, layer.forward), bind(g, layer.backward), x, length);
      if (drop) x = dropout(x, cfg.dropout, true, *rng);
    }
  }
  for (auto& d : self.dense_) x = dense(bind(g, d), x);
  return x;
}

Var CondRefiner::forward(Graph& g, Var emb, Var noisy, std::size_t length, bool training, Rng* rng) {
  return forward_impl(*this, g, emb, noisy, length, training, rng);
}

Var CondRefiner::forward(Graph& g, Var emb, Var noisy, std::size_t length) const {
  return forward_impl(*this, g, emb, noisy, length, false, nullptr);
}

ParamRegistry CondRefiner::params() {
  ParamRegistry r;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].forward.register_into(r, "bilstm" + std::to_string(l) + ".forward");
    layers_[l].backward.register_into(r, "bilstm" + std::to_string(l) + ".backward");
  }
  for (std::size_t i = 0; i < dense_.size(); ++i) dense_[i].register_into(r, "dense" + std::to_string(i));
  return r;
}

std::uint64_t CondRefiner::checksum() const { return checksum_of(*this); }

// ---------------------------------------------------------------------------
// Losses and label plumbing

Var base_loss(Var probs, Var gold, std::span<const double> mask, std::optional<double> normalizer) {
  return cross_entropy(probs, gold, mask, normalizer);
}

Var dae_loss(const DaeRefiner::Output& out, Var emb_target, Var gold, std::span<const double> mask, double lambda,
             std::optional<double> normalizer) {
  if (!(lambda >= 0.0)) throw ParameterError("dae_loss: lambda must be >= 0");
  Var ce = cross_entropy(out.tags, gold, mask, normalizer);
  if (lambda == 0.0) return ce;
  return add(ce, scale(mse(out.reconstruction, emb_target, mask, normalizer), lambda));
}

Tensor one_hot(std::span<const std::size_t> indices, std::size_t rows, std::size_t classes) {
  if (indices.size() > rows) throw DimensionError("one_hot: more indices than rows");
  Tensor t(Shape{rows, classes}, 0.0);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= classes) throw DimensionError("one_hot: class index out of range");
    t.at(r, indices[r]) = 1.0;
  }
  return t;
}

std::vector<std::size_t> argmax_rows(std::span<const double> probs, std::size_t classes, std::size_t rows) {
  if (rows * classes > probs.size()) throw DimensionError("argmax_rows: not enough values");
  std::vector<std::size_t> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = probs.subspan(r * classes, classes);
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

Tensor labels_to_feed(std::span<const double> probs, std::size_t rows, std::size_t classes, std::size_t length,
                      LabelFeed feed) {
  if (probs.size() != rows * classes) throw DimensionError("labels_to_feed: probs size mismatch");
  if (length > rows) throw DimensionError("labels_to_feed: length exceeds rows");
  if (feed == LabelFeed::HardOneHot) return one_hot(argmax_rows(probs, classes, length), rows, classes);
  Tensor t(Shape{rows, classes}, 0.0);
  std::copy_n(probs.begin(), length * classes, t.values().begin());
  return t;
}

std::vector<Tensor> make_noisy_labels(const BaseTagger& base, std::span<const EmbeddedSentence> sentences,
                                      LabelFeed feed) {
  std::vector<Tensor> out(sentences.size());
  const std::size_t C = base.config().num_tags;
  parallel_for(sentences.size(), [&](std::size_t i) {
    const auto& s = sentences[i];
    Graph g;
    Var probs = base.forward(g, g.input(s.matrix), s.length);
    out[i] = labels_to_feed(probs.value(), s.matrix.dim(0), C, s.length, feed);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Stack

Stack::Stack(BaseTagger base, Refiner refiner) : base_(std::move(base)), refiner_(std::move(refiner)) {
  const std::size_t C = base_.config().num_tags;
  const std::size_t D = base_.config().embedding_dim;
  auto check = [&](std::size_t c, std::size_t d) {
    if (c != C || d != D) {
      throw DimensionError("refiner expects D=" + std::to_string(d) + ", C=" + std::to_string(c) +
                           " but base tagger has D=" + std::to_string(D) + ", C=" + std::to_string(C));
    }
  };
  if (const auto* dae = std::get_if<DaeRefiner>(&refiner_)) check(dae->config().num_tags, dae->config().embedding_dim);
  if (const auto* cond = std::get_if<CondRefiner>(&refiner_)) {
    check(cond->config().num_tags, cond->config().embedding_dim);
  }
}

LabelFeed Stack::label_feed() const {
  if (const auto* dae = std::get_if<DaeRefiner>(&refiner_)) return dae->config().label_feed;
  if (const auto* cond = std::get_if<CondRefiner>(&refiner_)) return cond->config().label_feed;
  return LabelFeed::HardOneHot;
}

std::vector<std::size_t> refiner_predict(const Refiner& refiner, const EmbeddedSentence& s, const Tensor& noisy) {
  Graph g;
  Var emb = g.input(s.matrix);
  Var labels = g.input(noisy);
  if (const auto* dae = std::get_if<DaeRefiner>(&refiner)) {
    auto out = dae->forward(g, emb, labels, s.length);
    return argmax_rows(out.tags.value(), dae->config().num_tags, s.length);
  }
  if (const auto* cond = std::get_if<CondRefiner>(&refiner)) {
    Var probs = cond->forward(g, emb, labels, s.length);
    return argmax_rows(probs.value(), cond->config().num_tags, s.length);
  }
  throw StateError("refiner_predict: no refiner");
}

std::vector<std::size_t> Stack::predict(const EmbeddedSentence& s) const {
  if (s.length == 0) throw DegenerateInputError("stack_predict: empty sentence");
  const std::size_t C = base_.config().num_tags;
  Graph g;
  Var probs = base_.forward(g, g.input(s.matrix), s.length);
  if (!has_refiner()) return argmax_rows(probs.value(), C, s.length);
  Tensor noisy = labels_to_feed(probs.value(), s.matrix.dim(0), C, s.length, label_feed());
  return refiner_predict(refiner_, s, noisy);
}

std::vector<Tag> Stack::predict(std::span<const std::string> tokens, const EmbeddingTable& table,
                                std::size_t max_len) const {
  if (tokens.empty()) throw DegenerateInputError("stack_predict: empty sentence");
  auto idx = predict(embed_sentence(table, tokens, max_len));
  std::vector<Tag> tags;
  tags.reserve(idx.size());
  for (auto i : idx) tags.push_back(tag_from_index(i));
  return tags;
}

std::vector<std::vector<std::size_t>> Stack::predict_all(std::span<const EmbeddedSentence> sentences) const {
  std::vector<std::vector<std::size_t>> out(sentences.size());
  parallel_for(sentences.size(), [&](std::size_t i) { out[i] = predict(sentences[i]); });
  return out;
}

}  // namespace hner
