#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "semae/common.hpp"

namespace semae {

struct SentenceRecord {
  std::string entity_id;
  std::string review_id;
  std::size_t sentence_idx = 0;
  std::string text;
  std::vector<std::string> tokens;

  SentenceKey key() const { return {entity_id, review_id, sentence_idx}; }
  bool operator==(const SentenceRecord&) const = default;
};

struct Corpus {
  std::vector<SentenceRecord> records;

  bool operator==(const Corpus&) const = default;

  // Record indices grouped by entity, entities ordered by id.
  std::map<std::string, std::vector<std::size_t>> by_entity() const;
  const SentenceRecord* find(const SentenceKey& key) const;
};

// Lowercase, drop ASCII and Unicode punctuation, split on whitespace.
// Only ASCII letters are case-folded.
std::vector<std::string> tokenize(std::string_view text);

// One JSON object per line: {"entity_id", "review_id", "sentences": [...]}.
Corpus parse_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);
void write_corpus(const Corpus& corpus, std::ostream& out);

struct EmbeddingSet {
  std::size_t dim = 0;
  std::map<SentenceKey, Vector> rows;

  bool operator==(const EmbeddingSet& other) const;
  // Rows of `records` in order; throws ArgumentError on a missing key.
  Matrix matrix_for(const std::vector<SentenceRecord>& records) const;
};

// Header "dim=<d>", then "<entity>\t<review>\t<idx>\t<v1> ... <vd>".
EmbeddingSet parse_embeddings(std::istream& in, const Corpus& corpus);
EmbeddingSet load_embeddings(const std::filesystem::path& path, const Corpus& corpus);
void write_embeddings(const EmbeddingSet& embeddings, std::ostream& out);

inline constexpr std::size_t kFeatureBuckets = std::size_t{1} << 16;

// Hashed bag of words over kFeatureBuckets buckets, seeded Gaussian
// projection to `dim`, then L2 normalization. Sentences without tokens
// keep the zero vector.
EmbeddingSet featurize(const Corpus& corpus, std::size_t dim, std::uint64_t rng_seed);

struct AspectScore {
  std::string aspect;
  double confidence = 0.0;
};

struct AspectLexicon {
  std::vector<std::string> aspects;  // declared order
  std::map<std::string, std::vector<AspectScore>> entries;  // confidence descending

  bool empty() const { return entries.empty(); }
  void validate() const;
  // Every aspect any of the tokens is a keyword for.
  std::set<std::string> aspects_mentioned(const std::vector<std::string>& tokens) const;
};

// Lexicon lines "<keyword>\t<aspect>\t<confidence>"; aspect file has one
// aspect per line.
AspectLexicon parse_lexicon(std::istream& lexicon, std::istream& aspect_order);
AspectLexicon load_lexicon(const std::filesystem::path& lexicon_path,
                           const std::filesystem::path& aspects_path);
void write_lexicon(const AspectLexicon& lexicon, std::ostream& lexicon_out,
                   std::ostream& aspects_out);

// Aspect of the highest-confidence keyword present in the sentence; ties
// go to the keyword occurring first. Single-token keywords only.
std::optional<std::string> assign_aspect(const SentenceRecord& record,
                                         const AspectLexicon& lexicon);

struct SynthSpec {
  std::size_t n_entities = 40;
  std::size_t reviews_per_entity = 10;
  std::size_t sentences_per_review = 5;
  std::size_t n_topics = 8;
  std::size_t dim = 32;
  double topic_separation = 10.0;
  double noise_sigma = 0.1;
  std::uint64_t rng_seed = 0;
  // Share of an entity's sentences drawn from its majority topic; the rest
  // are spread uniformly over the other topics.
  double majority_share = 0.6;
  std::size_t tokens_per_sentence = 8;
  std::size_t words_per_topic = 12;

  void validate() const;
};

struct SynthData {
  Corpus corpus;
  EmbeddingSet embeddings;
  std::map<SentenceKey, int> topic;
  std::map<std::string, int> majority_topic;
  std::vector<Vector> centers;
  // One keyword per topic, aspect "topic<t>".
  AspectLexicon lexicon;
};

// Topic centers are periodic with period P, the smallest divisor of dim
// that is >= n_topics, so head slices whose width is a multiple of P all
// carry the same topic prototype. Pairwise center distance is exactly
// topic_separation.
SynthData synth_generate(const SynthSpec& spec);

// Planted gold summary: for each topic making up at least `min_share` of
// the entity's sentences, the entity sentence nearest that topic center.
std::map<std::string, std::vector<SentenceKey>> synth_gold(const SynthData& data,
                                                           double min_share = 0.2);

}  // namespace semae
