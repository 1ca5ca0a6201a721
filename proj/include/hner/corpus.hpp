#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hner/tagset.hpp"

namespace hner {

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<Tag> tags;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const TaggedSentence&) const = default;
};

enum class Provenance { Raw, Processed, ReducedRaw, ReducedProcessed };

const char* to_string(Provenance p);

struct Corpus {
  std::vector<TaggedSentence> sentences;
  Provenance provenance = Provenance::Raw;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
};

// Checks |tokens| == |tags| >= 1 and that no token is empty or holds whitespace.
void validate_sentence(const TaggedSentence& s);

// File format: one "token<TAB>tag" per line, a blank line after every
// sentence. Parsed corpora have Provenance::Raw; provenance is not stored.
Corpus parse_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::istream& in, const std::string& source_name = "<stream>");
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);
void write_corpus(const Corpus& corpus, std::ostream& out);

// Token-only input for tagging: one token per line, blank line between
// sentences. A line that carries "token<TAB>tag" contributes only its token.
std::vector<std::vector<std::string>> read_token_file(const std::filesystem::path& path);

// True when every code point is Unicode punctuation (general category P*) or
// a Devanagari danda (U+0964, U+0965). Invalid UTF-8 is never punctuation.
bool is_punctuation_token(std::string_view token);

struct PreprocessStats {
  std::size_t parenthesized_tokens_removed = 0;
  std::size_t punctuation_tokens_removed = 0;
  std::size_t sentences_dropped = 0;
  std::size_t unbalanced_parentheses = 0;
};

struct PreprocessResult {
  Corpus corpus;
  PreprocessStats stats;
  std::vector<std::string> warnings;
};

// Deletes parenthesized token spans, then punctuation-only tokens. A span
// opens at a token starting with '(' and closes at the token that brings the
// parenthesis depth back to zero; an unclosed span runs to sentence end.
PreprocessResult preprocess(const Corpus& raw);

struct FilterResult {
  Corpus corpus;
  std::size_t removed = 0;
  double removed_fraction = 0.0;
};

// Drops sentences whose tags are all `other`.
FilterResult filter_negative_only(const Corpus& corpus);

struct SplitSpec {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
  std::uint64_t seed = 0;
};

struct CorpusSplits {
  Corpus train;
  Corpus val;
  Corpus test;
};

// Seeded shuffle, then cuts at floor(train * n) and floor((train + val) * n).
CorpusSplits split_corpus(const Corpus& corpus, const SplitSpec& spec);

struct CorpusStats {
  std::size_t sentences = 0;
  std::size_t total_tokens = 0;
  std::size_t unique_tokens = 0;
  std::array<std::size_t, kNumTags> tag_counts{};
  double other_fraction = 0.0;
  std::map<std::size_t, std::size_t> length_histogram;
  std::size_t longer_than_max = 0;
  std::size_t max_length = 30;
};

CorpusStats corpus_stats(const Corpus& corpus, std::size_t max_length = 30);
// "key=value" lines.
std::string to_key_value(const CorpusStats& stats);

}  // namespace hner
