#include "hner/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "hner/errors.hpp"
#include "hner/parallel.hpp"

namespace hner {

namespace {

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void check_index(std::size_t i) {
  if (i >= kNumTags) throw AlignmentError("tag index " + std::to_string(i) + " outside the 13-tag set");
}

void append_metrics(std::ostringstream& out, const std::string& prefix, const Metrics& m) {
  out << prefix << "tokens=" << m.tokens << '\n';
  out << prefix << "accuracy=" << fixed(m.accuracy) << '\n';
  out << prefix << "entity_micro.precision=" << fixed(m.entity_micro.precision) << '\n';
  out << prefix << "entity_micro.recall=" << fixed(m.entity_micro.recall) << '\n';
  out << prefix << "entity_micro.f1=" << fixed(m.entity_micro.f1) << '\n';
  out << prefix << "macro.precision=" << fixed(m.macro_precision) << '\n';
  out << prefix << "macro.recall=" << fixed(m.macro_recall) << '\n';
  out << prefix << "macro.f1=" << fixed(m.macro_f1) << '\n';
  out << prefix << "macro.classes=" << m.macro_classes << '\n';
  for (std::size_t c = 0; c + 1 < kNumTags; ++c) {
    const Prf& p = m.per_class[c];
    const std::string k = prefix + "class." + std::string(kTagNames[c]) + ".";
    out << k << "precision=" << fixed(p.precision) << '\n';
    out << k << "recall=" << fixed(p.recall) << '\n';
    out << k << "f1=" << fixed(p.f1) << '\n';
  }
}

}  // namespace

std::uint64_t ConfusionCounts::total() const {
  std::uint64_t t = 0;
  for (const auto& row : m) {
    for (auto v : row) t += v;
  }
  return t;
}

ConfusionCounts ConfusionCounts::transposed() const {
  ConfusionCounts out;
  for (std::size_t i = 0; i < kNumTags; ++i) {
    for (std::size_t j = 0; j < kNumTags; ++j) out.m[j][i] = m[i][j];
  }
  return out;
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
  for (std::size_t i = 0; i < kNumTags; ++i) {
    for (std::size_t j = 0; j < kNumTags; ++j) m[i][j] += other.m[i][j];
  }
  return *this;
}

ConfusionCounts score(std::span<const std::size_t> gold, std::span<const std::size_t> pred,
                      std::span<const double> mask) {
  if (gold.size() != pred.size() || (!mask.empty() && mask.size() != gold.size())) {
    throw AlignmentError("score: gold has " + std::to_string(gold.size()) + " tags, prediction " +
                         std::to_string(pred.size()) + ", mask " + std::to_string(mask.size()));
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (!mask.empty() && mask[i] == 0.0) continue;
    check_index(gold[i]);
    check_index(pred[i]);
    ++c.m[gold[i]][pred[i]];
  }
  return c;
}

ConfusionCounts score(std::span<const Tag> gold, std::span<const Tag> pred) {
  std::vector<std::size_t> g, p;
  for (Tag t : gold) g.push_back(tag_index(t));
  for (Tag t : pred) p.push_back(tag_index(t));
  return score(g, p);
}

Prf prf(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  Prf r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  r.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  // Same value as 2PR/(P+R), rounded once.
  r.f1 = tp == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
  return r;
}

Metrics metrics(const ConfusionCounts& counts) {
  Metrics out;
  std::uint64_t correct = 0;
  std::uint64_t micro_tp = 0, micro_fp = 0, micro_fn = 0;
  for (std::size_t c = 0; c < kNumTags; ++c) {
    std::uint64_t tp = counts.m[c][c], fp = 0, fn = 0;
    for (std::size_t k = 0; k < kNumTags; ++k) {
      if (k == c) continue;
      fp += counts.m[k][c];
      fn += counts.m[c][k];
    }
    out.per_class[c] = prf(tp, fp, fn);
    correct += tp;
    if (c != kOtherIndex) {
      micro_tp += tp;
      micro_fp += fp;
      micro_fn += fn;
      if (tp + fp + fn > 0) {
        out.macro_precision += out.per_class[c].precision;
        out.macro_recall += out.per_class[c].recall;
        out.macro_f1 += out.per_class[c].f1;
        ++out.macro_classes;
      }
    }
  }
  // Confusions among entity classes count as both FP and FN; `other` gold
  // predicted as an entity is FP only, and the reverse FN only. Summing the
  // per-class counts over entity classes gives exactly that.
  out.entity_micro = prf(micro_tp, micro_fp, micro_fn);
  if (out.macro_classes > 0) {
    const double n = static_cast<double>(out.macro_classes);
    out.macro_precision /= n;
    out.macro_recall /= n;
    out.macro_f1 /= n;
  }
  out.tokens = counts.total();
  out.accuracy = out.tokens == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(out.tokens);
  return out;
}

std::pair<ConfusionCounts, ConfusionCounts> oov_breakdown(std::span<const std::size_t> gold,
                                                          std::span<const std::size_t> pred,
                                                          std::span<const std::uint8_t> oov_flags) {
  if (gold.size() != pred.size() || gold.size() != oov_flags.size()) {
    throw AlignmentError("oov_breakdown: gold, prediction and OOV flags differ in length (" +
                         std::to_string(gold.size()) + ", " + std::to_string(pred.size()) + ", " +
                         std::to_string(oov_flags.size()) + ")");
  }
  std::pair<ConfusionCounts, ConfusionCounts> out;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    check_index(gold[i]);
    check_index(pred[i]);
    auto& target = oov_flags[i] ? out.second : out.first;
    ++target.m[gold[i]][pred[i]];
  }
  return out;
}

void fill_report(EvalReport& report, std::span<const std::vector<std::size_t>> gold,
                 std::span<const std::vector<std::size_t>> pred, std::span<const std::vector<std::uint8_t>> oov) {
  if (gold.size() != pred.size() || (!oov.empty() && oov.size() != gold.size())) {
    throw AlignmentError("fill_report: sentence counts differ");
  }
  ConfusionCounts all, in_vocab, out_vocab;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size()) {
      throw AlignmentError("sentence " + std::to_string(s + 1) + ": gold has " + std::to_string(gold[s].size()) +
                           " tokens, prediction " + std::to_string(pred[s].size()));
    }
    all += score(gold[s], pred[s]);
    if (!oov.empty()) {
      auto [iv, ov] = oov_breakdown(gold[s], pred[s], oov[s]);
      in_vocab += iv;
      out_vocab += ov;
    }
  }
  report.counts = all;
  report.all = metrics(all);
  if (!oov.empty()) {
    report.in_vocab_counts = in_vocab;
    report.oov_counts = out_vocab;
    report.in_vocab = metrics(in_vocab);
    report.oov = metrics(out_vocab);
  } else {
    report.in_vocab_counts.reset();
    report.oov_counts.reset();
    report.in_vocab.reset();
    report.oov.reset();
  }
}

EvalReport evaluate(const Stack& stack, const Corpus& test, const EmbeddingTable& table, std::size_t max_len) {
  if (test.empty()) throw DegenerateInputError("evaluate: empty test split");
  std::vector<EmbeddedSentence> embedded(test.size());
  parallel_for(test.size(), [&](std::size_t i) {
    embedded[i] = embed_sentence(table, test.sentences[i].tokens, max_len);
  });
  auto pred = stack.predict_all(embedded);
  std::vector<std::vector<std::size_t>> gold(test.size());
  std::vector<std::vector<std::uint8_t>> oov(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& s = embedded[i];
    for (std::size_t t = 0; t < s.length; ++t) gold[i].push_back(tag_index(test.sentences[i].tags[t]));
    oov[i].assign(s.oov.begin(), s.oov.begin() + static_cast<std::ptrdiff_t>(s.length));
  }
  EvalReport report;
  if (std::holds_alternative<DaeRefiner>(stack.refiner())) {
    report.model = "dae";
  } else if (const auto* cond = std::get_if<CondRefiner>(&stack.refiner())) {
    report.model = to_string(cond->family());
  } else {
    report.model = "base";
  }
  report.dataset = to_string(test.provenance);
  report.embeddings = table.identity();
  fill_report(report, gold, pred, oov);
  return report;
}

EvalReport evaluate_files(const Corpus& gold, const Corpus& pred, const EmbeddingTable* table, std::size_t max_len) {
  if (gold.empty()) throw DegenerateInputError("evaluate: empty gold corpus");
  if (gold.size() != pred.size()) {
    throw AlignmentError("gold has " + std::to_string(gold.size()) + " sentences, prediction " +
                         std::to_string(pred.size()));
  }
  std::vector<std::vector<std::size_t>> g(gold.size()), p(gold.size());
  std::vector<std::vector<std::uint8_t>> oov;
  if (table) oov.resize(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& gs = gold.sentences[i];
    const auto& ps = pred.sentences[i];
    if (gs.tokens != ps.tokens) {
      // Predictions may cover only the first max_len tokens.
      const std::size_t n = std::min(gs.size(), max_len);
      if (ps.size() != n || !std::equal(ps.tokens.begin(), ps.tokens.end(), gs.tokens.begin())) {
        throw AlignmentError("sentence " + std::to_string(i + 1) + ": tokens of gold and prediction differ");
      }
    }
    const std::size_t n = std::min(ps.size(), max_len);
    for (std::size_t t = 0; t < n; ++t) {
      g[i].push_back(tag_index(gs.tags[t]));
      p[i].push_back(tag_index(ps.tags[t]));
      if (table) oov[i].push_back(table->contains(gs.tokens[t]) ? 0 : 1);
    }
  }
  EvalReport report;
  report.dataset = to_string(gold.provenance);
  if (table) report.embeddings = table->identity();
  fill_report(report, g, p, oov);
  return report;
}

std::string to_key_value(const EvalReport& report) {
  std::ostringstream out;
  out << "model=" << report.model << '\n';
  out << "dataset=" << report.dataset << '\n';
  out << "embeddings=" << report.embeddings << '\n';
  out << "config_hash=" << hex64(report.config_hash) << '\n';
  append_metrics(out, "", report.all);
  if (report.in_vocab) append_metrics(out, "in_vocab.", *report.in_vocab);
  if (report.oov) append_metrics(out, "oov.", *report.oov);
  return out.str();
}

void write_class_csv(const EvalReport& report, std::ostream& out) {
  out << "class,precision,recall,f1,tp,fp,fn\n";
  const Metrics& m = report.all;
  for (std::size_t c = 0; c < kNumTags; ++c) {
    const Prf& p = m.per_class[c];
    out << kTagNames[c] << ',' << fixed(p.precision) << ',' << fixed(p.recall) << ',' << fixed(p.f1) << ','
        << p.tp << ',' << p.fp << ',' << p.fn << '\n';
  }
  const Prf& e = m.entity_micro;
  out << "entity-micro," << fixed(e.precision) << ',' << fixed(e.recall) << ',' << fixed(e.f1) << ',' << e.tp
      << ',' << e.fp << ',' << e.fn << '\n';
  out << "macro," << fixed(m.macro_precision) << ',' << fixed(m.macro_recall) << ',' << fixed(m.macro_f1)
      << ",,,\n";
  out << "accuracy,,," << fixed(m.accuracy) << ",,,\n";
}

void write_summary_csv(const EvalReport& report, std::ostream& out, bool header) {
  if (header) out << "model,subset,f1,precision,recall\n";
  auto row = [&](const char* subset, const Metrics& m) {
    out << report.model << ',' << subset << ',' << fixed(m.entity_micro.f1) << ',' << fixed(m.entity_micro.precision)
        << ',' << fixed(m.entity_micro.recall) << '\n';
  };
  row("all", report.all);
  if (report.in_vocab) row("in-vocab", *report.in_vocab);
  if (report.oov) row("oov", *report.oov);
}

}  // namespace hner
