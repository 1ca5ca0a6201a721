#include "hner/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hner/errors.hpp"

namespace hner {

namespace {

// Entity classes in the order they are brought into use.
constexpr Tag kClassPreference[] = {
    Tag::Person,      Tag::Organization, Tag::Location,     Tag::Time,        Tag::Number,      Tag::Measure,
    Tag::Designation, Tag::Abbreviation, Tag::Brand,        Tag::TitlePerson, Tag::TitleObject, Tag::Terms,
};

bool uses(const std::vector<Tag>& classes, Tag t) { return std::find(classes.begin(), classes.end(), t) != classes.end(); }

std::string word_name(std::size_t i, std::size_t vocab) {
  const int width = static_cast<int>(std::to_string(vocab - 1).size());
  char buf[32];
  std::snprintf(buf, sizeof buf, "w%0*zu", width, i);
  return buf;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_sentences == 0 || vocab_size == 0) throw ParameterError("synthetic corpus sizes must be positive");
  if (n_tags < 2 || n_tags > kNumTags) throw ParameterError("synthetic n_tags must lie in [2, 13]");
  if (min_length == 0 || max_length < min_length) throw ParameterError("invalid synthetic sentence length range");
  if (!(entity_density >= 0.0 && entity_density <= 1.0)) throw ParameterError("entity_density must lie in [0, 1]");
  if (!(run_rate >= 0.0 && run_rate <= 1.0)) throw ParameterError("run_rate must lie in [0, 1]");
}

SyntheticLexicon make_synthetic_lexicon(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticLexicon lex;
  lex.entity_classes.assign(std::begin(kClassPreference), std::begin(kClassPreference) + (spec.n_tags - 1));
  const std::size_t V = spec.vocab_size;
  const bool runs = uses(lex.entity_classes, Tag::Organization) && uses(lex.entity_classes, Tag::Location);
  const std::size_t n_other = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.4 * V)));
  const std::size_t n_tail = runs ? std::max<std::size_t>(2, V / 10) : 0;
  if (n_other + n_tail + lex.entity_classes.size() > V) {
    throw ParameterError("synthetic vocabulary of " + std::to_string(V) + " words is too small for " +
                         std::to_string(spec.n_tags) + " tags");
  }
  lex.words.reserve(V);
  lex.word_tags.reserve(V);
  for (std::size_t i = 0; i < V; ++i) lex.words.push_back(word_name(i, V));
  for (std::size_t i = 0; i < n_other; ++i) {
    lex.word_tags.push_back(Tag::Other);
    lex.other_words.push_back(i);
  }
  for (std::size_t i = 0; i < n_tail; ++i) {
    lex.word_tags.push_back(Tag::Organization);
    lex.run_tails.push_back(n_other + i);
  }
  for (std::size_t i = n_other + n_tail, k = 0; i < V; ++i, ++k) {
    const Tag t = lex.entity_classes[k % lex.entity_classes.size()];
    lex.word_tags.push_back(t);
    lex.entity_words.push_back(i);
    if (runs && t == Tag::Location) lex.run_heads.push_back(i);
  }
  return lex;
}

Corpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  const SyntheticLexicon lex = make_synthetic_lexicon(spec);
  Rng rng(mix_seed(spec.seed, 0));
  const bool runs = !lex.run_heads.empty() && lex.run_tails.size() >= 1;
  Corpus corpus;
  corpus.sentences.reserve(spec.n_sentences);
  for (std::size_t s = 0; s < spec.n_sentences; ++s) {
    const std::size_t len = spec.min_length + uniform_index(rng, spec.max_length - spec.min_length + 1);
    std::vector<bool> entity(len);
    for (std::size_t t = 0; t < len; ++t) entity[t] = uniform01(rng) < spec.entity_density;

    TaggedSentence sent;
    std::size_t t = 0;
    while (t < len) {
      if (!entity[t]) {
        const std::size_t w = lex.other_words[uniform_index(rng, lex.other_words.size())];
        sent.tokens.push_back(lex.words[w]);
        sent.tags.push_back(Tag::Other);
        ++t;
        continue;
      }
      std::size_t end = t;
      while (end < len && entity[end]) ++end;
      // Fill the entity stretch [t, end).
      while (t < end) {
        if (runs && end - t >= 3 && uniform01(rng) < spec.run_rate) {
          const std::size_t head = lex.run_heads[uniform_index(rng, lex.run_heads.size())];
          sent.tokens.push_back(lex.words[head]);
          for (int k = 0; k < 2; ++k) {
            sent.tokens.push_back(lex.words[lex.run_tails[uniform_index(rng, lex.run_tails.size())]]);
          }
          sent.tags.insert(sent.tags.end(), 3, Tag::Organization);
          t += 3;
        } else {
          const std::size_t w = lex.entity_words[uniform_index(rng, lex.entity_words.size())];
          sent.tokens.push_back(lex.words[w]);
          sent.tags.push_back(lex.word_tags[w]);
          ++t;
        }
      }
    }
    corpus.sentences.push_back(std::move(sent));
  }
  return corpus;
}

EmbeddingTable synthetic_embeddings(const SyntheticLexicon& lexicon, std::size_t dim, std::uint64_t seed) {
  EmbeddingTable table(dim, "synthetic-" + std::to_string(dim) + "d-seed" + std::to_string(seed));
  Rng rng(mix_seed(seed, 1));
  std::vector<double> v(dim);
  for (const auto& w : lexicon.words) {
    for (double& x : v) x = uniform(rng, -1.0, 1.0);
    table.insert(w, v);
  }
  return table;
}

Tag NoiseChannel::corrupt(std::span<const Tag> gold, std::size_t position) const {
  static const std::vector<Tag> kAllEntities(std::begin(kClassPreference), std::end(kClassPreference));
  const std::vector<Tag>& cls = classes.empty() ? kAllEntities : classes;
  const Tag t = gold[position];
  if (t == Tag::Other) return cls.front();
  if (position > 0 && gold[position - 1] == t) return Tag::Other;
  auto it = std::find(cls.begin(), cls.end(), t);
  if (it == cls.end() || std::next(it) == cls.end()) return cls.front() == t ? Tag::Other : cls.front();
  return *std::next(it);
}

std::vector<Tag> NoiseChannel::apply(std::span<const Tag> gold, std::size_t sentence_index) const {
  if (!(flip_rate >= 0.0 && flip_rate <= 1.0)) throw ParameterError("noise flip_rate must lie in [0, 1]");
  Rng rng(mix_seed(seed, sentence_index));
  std::vector<Tag> out(gold.begin(), gold.end());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (uniform01(rng) < flip_rate) out[i] = corrupt(gold, i);
  }
  return out;
}

Corpus NoiseChannel::apply(const Corpus& corpus) const {
  Corpus out;
  out.provenance = corpus.provenance;
  out.sentences.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    TaggedSentence s = corpus.sentences[i];
    s.tags = apply(corpus.sentences[i].tags, i);
    out.sentences.push_back(std::move(s));
  }
  return out;
}

}  // namespace hner
