// Command-line front end: preprocess, split, train, tag, eval, gradcheck, stats, synth.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include "hner/checkpoint.hpp"
#include "hner/corpus.hpp"
#include "hner/embeddings.hpp"
#include "hner/errors.hpp"
#include "hner/evaluation.hpp"
#include "hner/gradcheck.hpp"
#include "hner/kernels.hpp"
#include "hner/run_config.hpp"
#include "hner/synthetic.hpp"
#include "hner/training.hpp"

namespace {

using namespace hner;

// Misuse that CLI11 cannot detect by itself (missing companion flags).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void echo(const std::string& command, const std::vector<std::pair<std::string, std::string>>& settings) {
  std::cerr << "# " << command << " resolved config\n";
  for (const auto& [k, v] : settings) std::cerr << "#   " << k << " = " << v << '\n';
}

std::unordered_set<std::string> vocabulary_of(const std::vector<const Corpus*>& corpora) {
  std::unordered_set<std::string> vocab;
  for (const Corpus* c : corpora) {
    for (const auto& s : c->sentences) vocab.insert(s.tokens.begin(), s.tokens.end());
  }
  return vocab;
}

EmbeddingTable load_embeddings(const std::string& path, const std::unordered_set<std::string>& vocab) {
  std::vector<std::string> warnings;
  VecLoadOptions opts;
  opts.vocabulary = &vocab;
  EmbeddingTable table = load_vec_file(path, opts, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  std::cerr << "loaded " << table.size() << " vectors of dim " << table.dim() << " from " << path << '\n';
  return table;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// ---------------------------------------------------------------------------

struct PreprocessArgs {
  std::string in, out, kind = "raw";
  bool filter = false;
};

int run_preprocess(const PreprocessArgs& a) {
  echo("preprocess", {{"in", a.in}, {"out", a.out}, {"input_kind", a.kind},
                      {"filter_negative_only", a.filter ? "true" : "false"}});
  Corpus raw = parse_corpus(a.in);
  if (a.kind == "reduced-raw") {
    raw.provenance = Provenance::ReducedRaw;
  } else if (a.kind != "raw") {
    throw UsageError("--input-kind must be raw or reduced-raw");
  }
  const std::size_t sentences_in = raw.size();
  PreprocessResult r = preprocess(raw);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "sentences_in=" << sentences_in << '\n';
  std::cout << "parenthesized_tokens_removed=" << r.stats.parenthesized_tokens_removed << '\n';
  std::cout << "punctuation_tokens_removed=" << r.stats.punctuation_tokens_removed << '\n';
  std::cout << "sentences_dropped=" << r.stats.sentences_dropped << '\n';
  std::cout << "unbalanced_parentheses=" << r.stats.unbalanced_parentheses << '\n';
  Corpus out = std::move(r.corpus);
  if (a.filter) {
    FilterResult f = filter_negative_only(out);
    std::cout << "negative_only_removed=" << f.removed << '\n';
    std::cout << "negative_only_fraction=" << fmt(f.removed_fraction) << '\n';
    out = std::move(f.corpus);
  }
  std::cout << "sentences_out=" << out.size() << '\n';
  write_corpus(out, a.out);
  return 0;
}

struct SplitArgs {
  std::string in, ratios = "0.70,0.15,0.15", prefix;
  std::uint64_t seed = 0;
};

int run_split(const SplitArgs& a) {
  echo("split", {{"in", a.in}, {"ratios", a.ratios}, {"seed", std::to_string(a.seed)}, {"out_prefix", a.prefix}});
  std::vector<double> r;
  std::stringstream ss(a.ratios);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      r.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--ratios: '" + item + "' is not a number");
    }
  }
  if (r.size() != 3) throw UsageError("--ratios needs three comma-separated values");
  SplitSpec spec{r[0], r[1], r[2], a.seed};
  Corpus corpus = parse_corpus(a.in);
  CorpusSplits splits;
  try {
    splits = split_corpus(corpus, spec);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  write_corpus(splits.train, a.prefix + ".train");
  write_corpus(splits.val, a.prefix + ".val");
  write_corpus(splits.test, a.prefix + ".test");
  std::cout << "train=" << splits.train.size() << "\nval=" << splits.val.size() << "\ntest=" << splits.test.size()
            << '\n';
  return 0;
}

struct TrainArgs {
  std::string model = "base", config, embeddings, train, val, out, base, history;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

int run_train(const TrainArgs& a) {
  const ModelFamily family = model_family_from_string(a.model);
  if (family != ModelFamily::Base && a.base.empty()) throw UsageError("--model " + a.model + " requires --base");
  RunConfig cfg;
  if (!a.config.empty()) cfg.merge_json_file(a.config);
  for (const auto& o : a.overrides) cfg.apply_override(o);
  if (a.seed) cfg.train.seed = *a.seed;
  const std::string history = a.history.empty() ? a.out + ".history.csv" : a.history;

  std::cerr << "# train resolved config\n"
            << "#   model = " << a.model << "\n#   config_file = " << (a.config.empty() ? "(defaults)" : a.config)
            << "\n#   embeddings = " << a.embeddings << "\n#   train = " << a.train << "\n#   val = " << a.val
            << "\n#   out = " << a.out << "\n#   history = " << history << '\n';
  if (!a.base.empty()) std::cerr << "#   base = " << a.base << '\n';
  std::istringstream json(cfg.to_json());
  for (std::string line; std::getline(json, line);) std::cerr << "#   " << line << '\n';

  const Corpus train = parse_corpus(a.train);
  const Corpus val = parse_corpus(a.val);
  const EmbeddingTable table = load_embeddings(a.embeddings, vocabulary_of({&train, &val}));
  cfg.set_embedding_dim(table.dim());
  cfg.train.validate();

  auto log = [](const EpochRecord& r) {
    std::cerr << "epoch " << r.epoch << " loss " << fmt(r.train_loss) << " val_acc " << fmt(r.val_acc) << " val_f1 "
              << fmt(r.val_f1) << '\n';
  };
  TrainHistory hist;
  if (family == ModelFamily::Base) {
    auto result = train_base(train, val, cfg.base, cfg.train, table, log);
    save_checkpoint(AnyModel(std::move(result.model)), a.out);
    hist = std::move(result.history);
  } else {
    const BaseTagger base = load_base_checkpoint(a.base);
    Refiner refiner = make_refiner(family, cfg.dae, cfg.cond, cfg.train);
    auto result = train_refiner(base, std::move(refiner), train, val, cfg.train, table, log);
    save_checkpoint(result.refiner, a.out);
    hist = std::move(result.history);
  }
  hist.write_csv(history);
  std::cerr << "best_epoch " << hist.best_epoch << " best_val_f1 " << fmt(hist.best_val_f1) << '\n';
  std::cerr << "wrote " << a.out << " and " << history << '\n';
  return 0;
}

struct TagArgs {
  std::string base, refiner, embeddings, in, out;
  std::size_t max_len = kMaxSentenceLength;
};

int run_tag(const TagArgs& a) {
  echo("tag", {{"base", a.base}, {"refiner", a.refiner.empty() ? "(none)" : a.refiner}, {"embeddings", a.embeddings},
               {"in", a.in}, {"out", a.out}, {"max_len", std::to_string(a.max_len)}});
  const auto sentences = read_token_file(a.in);
  std::unordered_set<std::string> vocab;
  for (const auto& s : sentences) vocab.insert(s.begin(), s.end());
  const EmbeddingTable table = load_embeddings(a.embeddings, vocab);
  BaseTagger base = load_base_checkpoint(a.base);
  Refiner refiner;
  if (!a.refiner.empty()) refiner = load_refiner_checkpoint(a.refiner);
  const Stack stack(std::move(base), std::move(refiner));

  std::vector<EmbeddedSentence> embedded(sentences.size());
  std::size_t truncated = 0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    embedded[i] = embed_sentence(table, sentences[i], a.max_len, &truncated);
  }
  const auto pred = stack.predict_all(embedded);
  Corpus out;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    TaggedSentence s;
    s.tokens = sentences[i];
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      s.tags.push_back(t < pred[i].size() ? tag_from_index(pred[i][t]) : Tag::Other);
    }
    out.sentences.push_back(std::move(s));
  }
  write_corpus(out, a.out);
  if (truncated > 0) {
    std::cerr << "warning: " << truncated << " sentences longer than " << a.max_len
              << " tokens; their tail tokens were tagged other\n";
  }
  std::cerr << "tagged " << out.size() << " sentences\n";
  return 0;
}

struct EvalArgs {
  std::string gold, pred, embeddings, report, class_csv, label = "model";
  bool oov = false;
  std::size_t max_len = kMaxSentenceLength;
};

int run_eval(const EvalArgs& a) {
  echo("eval", {{"gold", a.gold}, {"pred", a.pred}, {"embeddings", a.embeddings.empty() ? "(none)" : a.embeddings},
                {"oov_breakdown", a.oov ? "true" : "false"}, {"model", a.label},
                {"max_len", std::to_string(a.max_len)}});
  if (a.oov && a.embeddings.empty()) throw UsageError("--oov-breakdown requires --embeddings");
  const Corpus gold = parse_corpus(a.gold);
  const Corpus pred = parse_corpus(a.pred);
  std::optional<EmbeddingTable> table;
  if (!a.embeddings.empty()) table = load_embeddings(a.embeddings, vocabulary_of({&gold}));
  EvalReport report = evaluate_files(gold, pred, a.oov ? &*table : nullptr, a.max_len);
  report.model = a.label;
  if (table) report.embeddings = table->identity().empty() ? a.embeddings : table->identity();
  write_summary_csv(report, std::cout);
  if (!a.report.empty()) {
    std::ofstream out(a.report);
    if (!out) throw IoError("cannot write " + a.report);
    out << to_key_value(report);
  }
  if (!a.class_csv.empty()) {
    std::ofstream out(a.class_csv);
    if (!out) throw IoError("cannot write " + a.class_csv);
    write_class_csv(report, out);
  }
  return 0;
}

int run_gradcheck(std::uint64_t seed, std::size_t seeds) {
  echo("gradcheck", {{"seed", std::to_string(seed)}, {"seeds", std::to_string(seeds)},
                     {"tolerance", "1e-4 (linear ops 1e-6)"}});
  std::size_t failed = 0, total = 0;
  for (std::uint64_t s = seed; s < seed + seeds; ++s) {
    for (const auto& r : gradcheck_suite(s)) {
      ++total;
      if (!r.passed()) ++failed;
      char line[256];
      std::snprintf(line, sizeof line, "%s seed=%llu %s max_rel_error=%.3e tolerance=%.0e coords=%zu\n",
                    r.passed() ? "PASS" : "FAIL", static_cast<unsigned long long>(s), r.name.c_str(),
                    r.max_rel_error, r.tolerance, r.coordinates);
      std::cout << line;
    }
  }
  std::cout << "checks=" << total << " failed=" << failed << '\n';
  return failed == 0 ? 0 : 1;
}

struct SynthArgs {
  SyntheticSpec spec;
  std::size_t dim = 16;
  std::string prefix;
};

int run_synth(const SynthArgs& a) {
  echo("synth", {{"seed", std::to_string(a.spec.seed)}, {"sentences", std::to_string(a.spec.n_sentences)},
                 {"vocab", std::to_string(a.spec.vocab_size)}, {"tags", std::to_string(a.spec.n_tags)},
                 {"dim", std::to_string(a.dim)}, {"out_prefix", a.prefix}});
  const SyntheticLexicon lex = make_synthetic_lexicon(a.spec);
  write_corpus(generate_synthetic_corpus(a.spec), a.prefix + ".corpus");
  write_vec_file(synthetic_embeddings(lex, a.dim, a.spec.seed), lex.words, a.prefix + ".vec");
  std::cout << "corpus=" << a.prefix << ".corpus\nembeddings=" << a.prefix << ".vec\n";
  return 0;
}

int run_stats(const std::string& in, std::size_t max_len) {
  echo("stats", {{"in", in}, {"max_len", std::to_string(max_len)}});
  std::cout << to_key_value(corpus_stats(parse_corpus(in), max_len));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical NER tagger for Hindi: base BiLSTM plus denoising / conditioning refiners"};
  app.require_subcommand(1);
  bool serial = false;
  app.add_flag("--serial", serial, "Run all numerics single-threaded");

  PreprocessArgs pre;
  auto* c_pre = app.add_subcommand("preprocess", "Remove parenthesized spans and punctuation tokens");
  c_pre->add_option("--in", pre.in, "Raw corpus")->required();
  c_pre->add_option("--out", pre.out, "Processed corpus")->required();
  c_pre->add_option("--input-kind", pre.kind, "raw or reduced-raw");
  c_pre->add_flag("--filter-negative-only", pre.filter, "Also drop sentences tagged entirely `other`");

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "Seeded train/val/test split");
  c_split->add_option("--in", split.in, "Corpus")->required();
  c_split->add_option("--ratios", split.ratios, "train,val,test ratios summing to 1");
  c_split->add_option("--seed", split.seed, "Shuffle seed");
  c_split->add_option("--out-prefix", split.prefix, "Writes PREFIX.train, PREFIX.val, PREFIX.test")->required();

  TrainArgs train;
  std::uint64_t train_seed = 0;
  auto* c_train = app.add_subcommand("train", "Train a base tagger or a refiner");
  c_train->add_option("--model", train.model, "base, dae, cond-bilstm or cond-dense")
      ->check(CLI::IsMember({"base", "dae", "cond-bilstm", "cond-dense"}));
  c_train->add_option("--config", train.config, "JSON run config");
  c_train->add_option("--set", train.overrides, "key=value override (repeatable)");
  auto* seed_opt = c_train->add_option("--seed", train_seed, "Overrides the config seed");
  c_train->add_option("--embeddings", train.embeddings, ".vec file")->required();
  c_train->add_option("--train", train.train, "Training corpus")->required();
  c_train->add_option("--val", train.val, "Validation corpus")->required();
  c_train->add_option("--out", train.out, "Checkpoint path")->required();
  c_train->add_option("--base", train.base, "Base checkpoint (refiners only)");
  c_train->add_option("--history", train.history, "History CSV (default OUT.history.csv)");

  TagArgs tag;
  auto* c_tag = app.add_subcommand("tag", "Tag token files with a base tagger and optional refiner");
  c_tag->add_option("--base", tag.base, "Base checkpoint")->required();
  c_tag->add_option("--refiner", tag.refiner, "Refiner checkpoint");
  c_tag->add_option("--embeddings", tag.embeddings, ".vec file")->required();
  c_tag->add_option("--in", tag.in, "Token file (one token per line, blank line between sentences)")->required();
  c_tag->add_option("--out", tag.out, "Tagged corpus")->required();
  c_tag->add_option("--max-len", tag.max_len, "Tokens per sentence seen by the model");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Score predictions against gold tags");
  c_eval->add_option("--gold", ev.gold, "Gold corpus")->required();
  c_eval->add_option("--pred", ev.pred, "Predicted corpus")->required();
  c_eval->add_option("--embeddings", ev.embeddings, ".vec file (for OOV flags)");
  c_eval->add_flag("--oov-breakdown", ev.oov, "Add in-vocabulary and OOV sub-reports");
  c_eval->add_option("--report", ev.report, "Write the key=value report here");
  c_eval->add_option("--class-csv", ev.class_csv, "Write the per-class CSV here");
  c_eval->add_option("--model", ev.label, "Model name for the summary rows");
  c_eval->add_option("--max-len", ev.max_len, "Tokens per sentence that were tagged");

  std::uint64_t gc_seed = 0;
  std::size_t gc_seeds = 10;
  auto* c_grad = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  c_grad->add_option("--seed", gc_seed, "First seed");
  c_grad->add_option("--seeds", gc_seeds, "Number of consecutive seeds");

  std::string stats_in;
  std::size_t stats_max = kMaxSentenceLength;
  auto* c_stats = app.add_subcommand("stats", "Corpus statistics");
  c_stats->add_option("--in", stats_in, "Corpus")->required();
  c_stats->add_option("--max-len", stats_max, "Length threshold for the truncation count");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic tagged corpus and matching embeddings");
  c_synth->add_option("--seed", synth.spec.seed, "Generator seed");
  c_synth->add_option("--sentences", synth.spec.n_sentences, "Sentence count");
  c_synth->add_option("--vocab", synth.spec.vocab_size, "Vocabulary size");
  c_synth->add_option("--tags", synth.spec.n_tags, "Tags in use, including other");
  c_synth->add_option("--dim", synth.dim, "Embedding dimension");
  c_synth->add_option("--out-prefix", synth.prefix, "Writes PREFIX.corpus and PREFIX.vec")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (serial) kernels::set_mode(kernels::Mode::Serial);
  if (seed_opt->count() > 0) train.seed = train_seed;

  try {
    if (c_pre->parsed()) return run_preprocess(pre);
    if (c_split->parsed()) return run_split(split);
    if (c_train->parsed()) return run_train(train);
    if (c_tag->parsed()) return run_tag(tag);
    if (c_eval->parsed()) return run_eval(ev);
    if (c_grad->parsed()) return run_gradcheck(gc_seed, gc_seeds);
    if (c_stats->parsed()) return run_stats(stats_in, stats_max);
    if (c_synth->parsed()) return run_synth(synth);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
