#include <gtest/gtest.h>

#include "hner/checkpoint.hpp"
#include "hner/errors.hpp"
#include "test_util.hpp"

using namespace hner;
using hner::test::read_file;
using hner::test::TempDir;
using hner::test::write_file;

namespace {

BaseTaggerConfig base_cfg() {
  BaseTaggerConfig c;
  c.embedding_dim = 7;
  c.hidden_size = 4;
  return c;
}

EmbeddedSentence random_sentence(Rng& rng) {
  EmbeddedSentence s;
  s.length = 1 + uniform_index(rng, 30);
  s.matrix = Tensor({30, 7});
  for (std::size_t t = 0; t < s.length; ++t) {
    for (std::size_t d = 0; d < 7; ++d) s.matrix.at(t, d) = uniform(rng, -2, 2);
  }
  s.mask.assign(30, 0.0);
  std::fill(s.mask.begin(), s.mask.begin() + static_cast<std::ptrdiff_t>(s.length), 1.0);
  s.oov.assign(30, 0);
  return s;
}

std::vector<double> probs(const BaseTagger& m, const EmbeddedSentence& s) {
  Graph g;
  auto v = m.forward(g, g.input(s.matrix), s.length).value();
  return {v.begin(), v.end()};
}

}  // namespace

TEST(Checkpoint, BaseRoundTripIsBitwise) {
  Rng rng(1);
  const BaseTagger model(base_cfg(), rng);
  TempDir dir("ckpt");
  save_checkpoint(AnyModel(model), dir / "base.ckpt");
  const BaseTagger back = load_base_checkpoint(dir / "base.ckpt");
  EXPECT_EQ(back.checksum(), model.checksum());
  for (int i = 0; i < 10; ++i) {
    const auto s = random_sentence(rng);
    EXPECT_EQ(probs(back, s), probs(model, s));
  }
}

TEST(Checkpoint, RefinersRoundTrip) {
  Rng rng(2);
  DaeConfig d;
  d.embedding_dim = 7;
  d.hidden_size = 4;
  d.bottleneck = 3;
  d.decoder_direction = Direction::Backward;
  CondConfig c;
  c.variant = CondVariant::Dense;
  c.embedding_dim = 7;
  c.dense_widths = {17, 13};
  TempDir dir("ckpt");
  const Refiner dae = DaeRefiner(d, rng), cond = CondRefiner(c, rng);
  save_checkpoint(dae, dir / "dae.ckpt");
  save_checkpoint(cond, dir / "cond.ckpt");
  const Refiner dae_back = load_refiner_checkpoint(dir / "dae.ckpt");
  const Refiner cond_back = load_refiner_checkpoint(dir / "cond.ckpt");
  EXPECT_EQ(std::get<DaeRefiner>(dae_back).checksum(), std::get<DaeRefiner>(dae).checksum());
  EXPECT_EQ(std::get<DaeRefiner>(dae_back).config().decoder_direction, Direction::Backward);
  EXPECT_EQ(std::get<CondRefiner>(cond_back).checksum(), std::get<CondRefiner>(cond).checksum());
  EXPECT_THROW(load_base_checkpoint(dir / "dae.ckpt"), LoadError);
  EXPECT_THROW(load_refiner_checkpoint(dir / "missing.ckpt"), IoError);
}

TEST(Checkpoint, AnyByteFlipIsDetected) {
  Rng rng(3);
  const std::string text = checkpoint_to_string(AnyModel(BaseTagger(base_cfg(), rng)));
  const std::size_t body = text.find("\"body\":") + 7;
  for (int trial = 0; trial < 20; ++trial) {
    std::string bad = text;
    const std::size_t pos = body + uniform_index(rng, text.size() - body - 1);
    bad[pos] = static_cast<char>(bad[pos] ^ 0x01);
    EXPECT_THROW(checkpoint_from_string(bad), LoadError) << pos;
  }
  EXPECT_THROW(checkpoint_from_string(text.substr(0, text.size() / 2)), LoadError);
  EXPECT_THROW(checkpoint_from_string(""), LoadError);
}

TEST(Checkpoint, AdamStateRoundTrips) {
  Rng rng(4);
  BaseTagger model(base_cfg(), rng);
  std::vector<AdamState> adam;
  const auto reg = model.params();
  for (const auto& [name, t] : reg.entries()) {
    AdamState st = AdamState::for_param(*t);
    st.t = 3;
    for (double& v : st.m) v = uniform(rng, -1, 1);
    adam.push_back(std::move(st));
  }
  const auto loaded = checkpoint_from_string(checkpoint_to_string(AnyModel(model), &adam));
  ASSERT_EQ(loaded.adam.size(), adam.size());
  EXPECT_EQ(loaded.adam[0].m, adam[0].m);
  EXPECT_EQ(loaded.adam[0].t, 3u);
  EXPECT_EQ(family_of(loaded.model), ModelFamily::Base);
}
