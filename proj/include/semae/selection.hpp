#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semae/corpus.hpp"
#include "semae/model.hpp"

namespace semae {

enum class Divergence { kl, cosine };
enum class Strategy { plain, redundancy, aspect, aspect_redundancy, herding, clustering, ot };

std::string to_string(Divergence d);
std::string to_string(Strategy s);
Divergence parse_divergence(std::string_view s);
Strategy parse_strategy(std::string_view s);

struct SelectionConfig {
  int n = 20;              // sentence budget
  int token_budget = 75;
  double gamma = 0.1;      // redundancy weight
  double beta = 0.7;       // aspect informativeness
  double beta_prime = 0.1; // background informativeness
  std::optional<int> m;    // per-bucket count; ceil(n / nonempty buckets) when unset
  Divergence divergence = Divergence::kl;
  Strategy strategy = Strategy::plain;
  int cluster_k = 5;
  double cluster_gamma = 0.005;
  std::uint64_t seed = 0;  // clustering k-means
  bool widen_aspect_pool = false;

  void validate() const;
  bool operator==(const SelectionConfig&) const = default;
};

struct Candidate {
  SentenceKey key;
  Matrix alpha;  // H x K
  std::vector<std::string> tokens;
};

// Selectable sentences of one entity, sorted by key, plus their mean.
// Sentences without tokens are never candidates.
struct EntityReps {
  std::string entity_id;
  std::vector<Candidate> candidates;
  Matrix mean;

  const Candidate* find(const SentenceKey& key) const;
};

EntityReps make_entity_reps(std::string entity_id, std::vector<Candidate> candidates);

// Encodes every sentence with the model and groups by entity (ordered by id).
std::vector<EntityReps> encode_entities(const Corpus& corpus, const EmbeddingSet& embeddings,
                                        const SemaeModel& model);

// Mean over every candidate of every entity.
Matrix background_rep(const std::vector<EntityReps>& entities);

Matrix mean_rep(const std::vector<Matrix>& reps);

// Similarity of `x` to the reference `ref`:
//   kl:     -sum_h KL(ref_h || x_h)
//   cosine:  sum_h cos(ref_h, x_h), zero-norm heads contribute 0
double divergence_delta(const Matrix& ref, const Matrix& x, Divergence kind);

struct Scored {
  SentenceKey key;
  double score = 0.0;
};

enum class SummaryStatus { ok, empty };

struct SummaryItem {
  SentenceKey key;
  double score = 0.0;
  std::vector<std::string> aspects;
};

struct Summary {
  std::vector<SummaryItem> items;
  SummaryStatus status = SummaryStatus::ok;
  std::string note;
  bool converged = true;
};

// Descending score, ties by ascending key.
void sort_scored(std::vector<Scored>& scored);

// Keeps the leading items up to cfg.n sentences, stopping before the first
// sentence that would overflow cfg.token_budget.
Summary finalize(const std::vector<Scored>& ordered, const EntityReps& reps, const SelectionConfig& cfg);

std::vector<Scored> rank_general(const EntityReps& reps, const SelectionConfig& cfg);
Summary select_plain(const EntityReps& reps, const SelectionConfig& cfg);

// Greedy: R(s) = D(mean, s) - gamma * max over selected s' of D(s', s).
Summary select_redundancy(const EntityReps& reps, const SelectionConfig& cfg);

// Buckets by assigned aspect in declared order, m per bucket ranked by
// relevance (Strategy::aspect) or greedy with redundancy
// (Strategy::aspect_redundancy).
Summary select_aspect_aware(const EntityReps& reps, const AspectLexicon& lexicon, const SelectionConfig& cfg);

// Candidates of `reps` whose assigned aspect is `aspect`.
std::vector<Candidate> aspect_set(const EntityReps& reps, const std::string& aspect, const AspectLexicon& lexicon);

// R_a(s) = D(aspect mean, s) - beta * D(entity mean, s) over the aspect set
// (or all entity candidates with cfg.widen_aspect_pool).
Summary select_aspect_summary(const EntityReps& reps, const std::vector<Candidate>& aspect_sentences,
                              const SelectionConfig& cfg);

// R(s) = D(mean, s) - beta' * D(background, s).
Summary select_informative_general(const EntityReps& reps, const Matrix& background, const SelectionConfig& cfg);

// Greedy against the mean of the not-yet-selected sentences.
Summary select_herding(const EntityReps& reps, const SelectionConfig& cfg);

// k-means over flattened alpha; R(s) = -||alpha_s - center||^2 + gamma * |cluster|.
Summary select_clustering(const EntityReps& reps, const SelectionConfig& cfg);

// R(s) = D(seed mean, s) - beta * D(entity mean, s) over all candidates.
Summary select_seeded(const EntityReps& reps, const std::vector<SentenceKey>& seed_keys, const SelectionConfig& cfg);

// Seeds are the sentences mentioning every requested aspect, or failing
// that any of them; items are annotated with the aspects they mention.
Summary select_multi_aspect(const EntityReps& reps, const std::vector<std::string>& aspects,
                            const AspectLexicon& lexicon, const SelectionConfig& cfg);

}  // namespace semae
