#include "hner/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>

#include "hner/adam.hpp"
#include "hner/errors.hpp"
#include "hner/evaluation.hpp"
#include "hner/ops.hpp"
#include "hner/parallel.hpp"

namespace hner {

namespace {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ParamRegistry params_of(BaseTagger& m) { return m.params(); }
ParamRegistry params_of(Refiner& r) {
  if (auto* dae = std::get_if<DaeRefiner>(&r)) return dae->params();
  if (auto* cond = std::get_if<CondRefiner>(&r)) return cond->params();
  throw StateError("no refiner to train");
}

LabelFeed feed_of(const Refiner& r) {
  if (const auto* dae = std::get_if<DaeRefiner>(&r)) return dae->config().label_feed;
  if (const auto* cond = std::get_if<CondRefiner>(&r)) return cond->config().label_feed;
  throw StateError("no refiner to train");
}

std::size_t real_tokens(const Dataset& d, const std::vector<std::size_t>& batch) {
  std::size_t n = 0;
  for (auto i : batch) n += d.inputs[i].length;
  return n;
}

Var accumulate(Var total, Var term) { return total.valid() ? add(total, term) : term; }

void require_nonempty(const Dataset& train, const Dataset& val) {
  if (train.size() == 0) throw DegenerateInputError("training split is empty");
  if (val.size() == 0) throw DegenerateInputError("validation split is empty");
}

// Shared epoch loop: Adam over params_of(model), early stopping on val F1,
// best-epoch parameters restored at the end.
template <typename Model, typename BatchLoss, typename Predict>
TrainHistory fit(Model& model, const Dataset& train, const Dataset& val, const TrainConfig& cfg,
                 BatchLoss batch_loss, Predict predict, const EpochCallback& on_epoch) {
  TrainHistory history;
  if (cfg.max_epochs == 0) return history;

  ParamRegistry reg = params_of(model);
  reg.set_requires_grad(true);
  std::vector<Tensor*> tensors = reg.tensors();
  std::vector<AdamState> states;
  for (Tensor* t : tensors) states.push_back(AdamState::for_param(*t));
  Rng dropout_rng(mix_seed(cfg.seed, 2));

  Model best = model;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    std::size_t token_sum = 0;
    for (const auto& batch : batch_iter(train.size(), cfg.batch_size, cfg.seed, epoch)) {
      const std::size_t n = real_tokens(train, batch);
      Graph g;
      Var loss = batch_loss(g, model, batch, static_cast<double>(n), dropout_rng);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      g.backward(loss);
      if (cfg.clip_norm > 0.0) reg.clip_grad_norm(cfg.clip_norm);
      adam_step(tensors, states, cfg.lr);
      reg.zero_grad();
      loss_sum += value * static_cast<double>(n);
      token_sum += n;
    }
    const auto pred = predict(static_cast<const Model&>(model), val);
    const QuickScore s = quick_score(val.gold_ids, pred);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = token_sum == 0 ? 0.0 : loss_sum / static_cast<double>(token_sum);
    rec.val_acc = s.accuracy;
    rec.val_f1 = s.f1;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (history.best_epoch == 0 || rec.val_f1 > history.best_val_f1) {
      history.best_epoch = epoch;
      history.best_val_f1 = rec.val_f1;
      best = model;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  model = std::move(best);
  params_of(model).set_requires_grad(false);
  return history;
}

std::vector<std::vector<std::size_t>> predict_base(const BaseTagger& m, const Dataset& d) {
  std::vector<std::vector<std::size_t>> out(d.size());
  parallel_for(d.size(), [&](std::size_t i) {
    const auto& s = d.inputs[i];
    Graph g;
    Var probs = m.forward(g, g.input(s.matrix), s.length);
    out[i] = argmax_rows(probs.value(), m.config().num_tags, s.length);
  });
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ParameterError("lr must be positive");
  if (batch_size < 1) throw ParameterError("batch_size must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ParameterError("dropout must lie in [0, 1)");
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be non-negative");
  if (!(clip_norm >= 0.0)) throw ParameterError("clip_norm must be non-negative");
  if (max_len < 1) throw ParameterError("max_len must be at least 1");
}

void TrainHistory::write_csv(std::ostream& out) const {
  out << "epoch,train_loss,val_acc,val_f1,seconds\n";
  for (const auto& r : epochs) {
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.3f", r.seconds);
    out << r.epoch << ',' << g17(r.train_loss) << ',' << g17(r.val_acc) << ',' << g17(r.val_f1) << ',' << secs
        << '\n';
  }
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(out);
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::vector<std::size_t>> batch_iter(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                 std::size_t epoch) {
  if (batch_size == 0) throw ParameterError("batch_size must be at least 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed ^ static_cast<std::uint64_t>(epoch));
  shuffle(std::span<std::size_t>(order), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n; i += batch_size) {
    const std::size_t end = std::min(n, i + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

Dataset make_dataset(const Corpus& corpus, const EmbeddingTable& table, std::size_t max_len) {
  Dataset d;
  d.inputs.resize(corpus.size());
  d.gold.resize(corpus.size());
  d.gold_ids.resize(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) {
    const auto& s = corpus.sentences[i];
    d.inputs[i] = embed_sentence(table, s.tokens, max_len);
    const std::size_t len = d.inputs[i].length;
    for (std::size_t t = 0; t < len; ++t) d.gold_ids[i].push_back(tag_index(s.tags[t]));
    d.gold[i] = one_hot(d.gold_ids[i], max_len, kNumTags);
  });
  return d;
}

QuickScore quick_score(std::span<const std::vector<std::size_t>> gold, std::span<const std::vector<std::size_t>> pred) {
  EvalReport r;
  fill_report(r, gold, pred, {});
  return {r.all.accuracy, r.all.entity_micro.f1};
}

BaseTrainResult train_base(const Corpus& train, const Corpus& val, BaseTaggerConfig model, const TrainConfig& config,
                           const EmbeddingTable& table, const EpochCallback& on_epoch) {
  config.validate();
  if (model.embedding_dim != table.dim()) {
    throw DimensionError("embedding table has dim " + std::to_string(table.dim()) + " but the model expects " +
                         std::to_string(model.embedding_dim));
  }
  return train_base(make_dataset(train, table, config.max_len), make_dataset(val, table, config.max_len), model,
                    config, on_epoch);
}

BaseTrainResult train_base(const Dataset& train, const Dataset& val, BaseTaggerConfig model,
                           const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  require_nonempty(train, val);
  if (model.num_tags != kNumTags) throw ParameterError("training uses the 13-tag set; num_tags must be 13");
  model.dropout = config.dropout;
  model.validate();
  Rng init(mix_seed(config.seed, 1));
  BaseTrainResult result{BaseTagger(model, init), {}};

  auto loss_fn = [&](Graph& g, BaseTagger& m, const std::vector<std::size_t>& batch, double n, Rng& rng) {
    Var total;
    for (auto i : batch) {
      const auto& s = train.inputs[i];
      Var probs = m.forward(g, g.input(s.matrix), s.length, true, &rng);
      total = accumulate(total, base_loss(probs, g.input(train.gold[i]), s.mask, n));
    }
    return total;
  };
  result.history = fit(result.model, train, val, config, loss_fn, predict_base, on_epoch);
  return result;
}

Refiner make_refiner(ModelFamily family, const DaeConfig& dae, const CondConfig& cond, const TrainConfig& config) {
  config.validate();
  Rng init(mix_seed(config.seed, 3));
  switch (family) {
    case ModelFamily::Dae: {
      DaeConfig c = dae;
      c.label_feed = config.label_feed;
      c.lambda = config.lambda;
      return DaeRefiner(c, init);
    }
    case ModelFamily::CondBilstm:
    case ModelFamily::CondDense: {
      CondConfig c = cond;
      c.variant = family == ModelFamily::CondBilstm ? CondVariant::Bilstm : CondVariant::Dense;
      c.label_feed = config.label_feed;
      c.dropout = config.dropout;
      return CondRefiner(c, init);
    }
    case ModelFamily::Base:
      break;
  }
  throw ParameterError("the base family is not a refiner");
}

RefinerTrainResult fit_refiner(Refiner refiner, const RefinerData& train, const RefinerData& val,
                               const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  require_nonempty(train.data, val.data);
  if (train.noisy.size() != train.data.size() || val.noisy.size() != val.data.size()) {
    throw AlignmentError("refiner label inputs do not match the sentences");
  }
  auto loss_fn = [&](Graph& g, Refiner& r, const std::vector<std::size_t>& batch, double n, Rng& rng) {
    Var total;
    for (auto i : batch) {
      const auto& s = train.data.inputs[i];
      Var emb = g.input(s.matrix);
      Var noisy = g.input(train.noisy[i]);
      Var gold = g.input(train.data.gold[i]);
      if (auto* dae = std::get_if<DaeRefiner>(&r)) {
        auto out = dae->forward(g, emb, noisy, s.length);
        total = accumulate(total, dae_loss(out, emb, gold, s.mask, config.lambda, n));
      } else {
        auto& cond = std::get<CondRefiner>(r);
        Var probs = cond.forward(g, emb, noisy, s.length, true, &rng);
        total = accumulate(total, base_loss(probs, gold, s.mask, n));
      }
    }
    return total;
  };
  auto predict = [&](const Refiner& r, const Dataset& d) {
    std::vector<std::vector<std::size_t>> out(d.size());
    parallel_for(d.size(), [&](std::size_t i) { out[i] = refiner_predict(r, d.inputs[i], val.noisy[i]); });
    return out;
  };
  RefinerTrainResult result{std::move(refiner), {}};
  if (std::holds_alternative<std::monostate>(result.refiner)) throw StateError("no refiner to train");
  result.history = fit(result.refiner, train.data, val.data, config, loss_fn, predict, on_epoch);
  return result;
}

RefinerTrainResult train_refiner(const BaseTagger& base, Refiner refiner, const Corpus& train, const Corpus& val,
                                 const TrainConfig& config, const EmbeddingTable& table,
                                 const EpochCallback& on_epoch) {
  config.validate();
  if (base.config().embedding_dim != table.dim()) {
    throw DimensionError("embedding table has dim " + std::to_string(table.dim()) + " but the base tagger expects " +
                         std::to_string(base.config().embedding_dim));
  }
  // Checks D and C of the refiner against the base.
  (void)Stack(base, refiner);
  const LabelFeed feed = feed_of(refiner);
  const std::uint64_t before = base.checksum();

  RefinerData tr{make_dataset(train, table, config.max_len), {}};
  RefinerData va{make_dataset(val, table, config.max_len), {}};
  tr.noisy = make_noisy_labels(base, tr.data.inputs, feed);
  va.noisy = make_noisy_labels(base, va.data.inputs, feed);
  auto result = fit_refiner(std::move(refiner), tr, va, config, on_epoch);

  if (base.checksum() != before) throw TrainingError("base tagger parameters changed during refiner training");
  return result;
}

}  // namespace hner
