#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

#include "hner/corpus.hpp"
#include "test_util.hpp"

using hner::test::read_file;
using hner::test::TempDir;
using hner::test::write_file;

namespace {

const std::filesystem::path kFixtures = HNER_FIXTURES;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run hner_run(const TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + HNER_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

// Synthetic corpus split into train/val/test with matching vectors.
void make_data(const TempDir& dir) {
  ASSERT_EQ(hner_run(dir, "synth --seed 4 --sentences 40 --vocab 40 --dim 6 --out-prefix " + q(dir / "syn")).code, 0);
  ASSERT_EQ(hner_run(dir, "split --in " + q(dir / "syn.corpus") + " --seed 1 --out-prefix " + q(dir / "d")).code, 0);
}

std::string strip_tags(const std::string& corpus) {
  std::istringstream in(corpus);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.find('\t')) + "\n";
  return out;
}

}  // namespace

TEST(Cli, PreprocessMatchesGoldenAndIsIdempotent) {
  TempDir dir("cli");
  auto r = hner_run(dir, "preprocess --in " + q(kFixtures / "raw.corpus") + " --out " + q(dir / "p1"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(dir / "p1"), read_file(kFixtures / "processed.golden"));
  r = hner_run(dir, "preprocess --in " + q(dir / "p1") + " --out " + q(dir / "p2"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(dir / "p2"), read_file(dir / "p1"));
}

TEST(Cli, NegativeOnlyFilterReportsFraction) {
  TempDir dir("cli");
  const auto r = hner_run(dir, "preprocess --filter-negative-only --in " + q(kFixtures / "negative.corpus") +
                                   " --out " + q(dir / "f"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("negative_only_fraction=0.600000"), std::string::npos) << r.out;
  EXPECT_EQ(read_file(dir / "f"), read_file(kFixtures / "negative_filtered.golden"));
}

TEST(Cli, SplitIsSeededAndPartitions) {
  TempDir dir("cli");
  make_data(dir);
  ASSERT_EQ(hner_run(dir, "split --in " + q(dir / "syn.corpus") + " --seed 1 --out-prefix " + q(dir / "e")).code, 0);
  std::size_t total = 0;
  for (const char* part : {".train", ".val", ".test"}) {
    EXPECT_EQ(read_file(dir / (std::string("d") + part)), read_file(dir / (std::string("e") + part)));
    total += hner::parse_corpus(dir / (std::string("d") + part)).size();
  }
  EXPECT_EQ(total, 40u);
  EXPECT_EQ(hner_run(dir, "split --in " + q(dir / "syn.corpus") + " --ratios 0.5,0.5,0.5 --out-prefix " +
                              q(dir / "x"))
                .code,
            2);
}

TEST(Cli, TrainTagEvalPipeline) {
  TempDir dir("cli");
  make_data(dir);
  const std::string data = " --embeddings " + q(dir / "syn.vec") + " --train " + q(dir / "d.train") + " --val " +
                           q(dir / "d.val");
  auto r = hner_run(dir, "train --model base --set max_epochs=2 --set hidden_size=4" + data + " --out " +
                             q(dir / "base.ckpt"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("# train resolved config"), std::string::npos);
  EXPECT_NE(r.err.find("\"lr\": 0.003"), std::string::npos) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "base.ckpt"));
  EXPECT_EQ(read_file(dir / "base.ckpt.history.csv").substr(0, 39), "epoch,train_loss,val_acc,val_f1,seconds");

  EXPECT_EQ(hner_run(dir, "train --model dae --set max_epochs=1" + data + " --out " + q(dir / "dae.ckpt")).code, 2);
  r = hner_run(dir, "train --model dae --set max_epochs=1 --set dae_hidden=4 --set bottleneck=3" + data +
                        " --base " + q(dir / "base.ckpt") + " --out " + q(dir / "dae.ckpt"));
  ASSERT_EQ(r.code, 0) << r.err;

  write_file(dir / "test.tokens", strip_tags(read_file(dir / "d.test")));
  const std::string tag = "tag --base " + q(dir / "base.ckpt") + " --embeddings " + q(dir / "syn.vec") + " --in " +
                          q(dir / "test.tokens");
  ASSERT_EQ(hner_run(dir, tag + " --out " + q(dir / "pred_base")).code, 0);
  ASSERT_EQ(hner_run(dir, tag + " --refiner " + q(dir / "dae.ckpt") + " --out " + q(dir / "pred_dae")).code, 0);
  EXPECT_EQ(strip_tags(read_file(dir / "pred_base")), strip_tags(read_file(dir / "pred_dae")));
  EXPECT_EQ(strip_tags(read_file(dir / "pred_base")), read_file(dir / "test.tokens"));

  r = hner_run(dir, "eval --gold " + q(dir / "pred_base") + " --pred " + q(dir / "pred_base") + " --model self");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("self,all,1.000000,1.000000,1.000000"), std::string::npos) << r.out;

  r = hner_run(dir, "eval --oov-breakdown --gold " + q(dir / "d.test") + " --pred " + q(dir / "pred_dae") +
                        " --embeddings " + q(dir / "syn.vec") + " --report " + q(dir / "report.txt"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find(",in-vocab,"), std::string::npos);
  EXPECT_NE(r.out.find(",oov,"), std::string::npos);
}

TEST(Cli, MissingEmbeddingFileNamesThePath) {
  TempDir dir("cli");
  make_data(dir);
  const auto missing = dir / "nowhere.vec";
  const auto r = hner_run(dir, "train --model base --embeddings " + q(missing) + " --train " + q(dir / "d.train") +
                                   " --val " + q(dir / "d.val") + " --out " + q(dir / "m.ckpt"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find(missing.string()), std::string::npos) << r.err;
}

TEST(Cli, UsageErrorsExitTwo) {
  TempDir dir("cli");
  EXPECT_EQ(hner_run(dir, "").code, 2);
  EXPECT_EQ(hner_run(dir, "train --model crf").code, 2);
  EXPECT_EQ(hner_run(dir, "bogus").code, 2);
}

TEST(Cli, GradcheckPasses) {
  TempDir dir("cli");
  const auto r = hner_run(dir, "gradcheck --seeds 2");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, StatsReportsCounts) {
  TempDir dir("cli");
  const auto r = hner_run(dir, "stats --in " + q(kFixtures / "negative.corpus"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("sentences=5"), std::string::npos);
}
