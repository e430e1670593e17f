#include "semae/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "semae/trainer.hpp"

namespace semae {

std::string to_string(Divergence d) { return d == Divergence::kl ? "kl" : "cosine"; }

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::plain: return "plain";
    case Strategy::redundancy: return "redundancy";
    case Strategy::aspect: return "aspect";
    case Strategy::aspect_redundancy: return "aspect_redundancy";
    case Strategy::herding: return "herding";
    case Strategy::clustering: return "clustering";
    case Strategy::ot: return "ot";
  }
  return "plain";
}

Divergence parse_divergence(std::string_view s) {
  if (s == "kl") return Divergence::kl;
  if (s == "cosine") return Divergence::cosine;
  throw ConfigError("unknown divergence '" + std::string(s) + "'");
}

Strategy parse_strategy(std::string_view s) {
  for (Strategy st : {Strategy::plain, Strategy::redundancy, Strategy::aspect, Strategy::aspect_redundancy,
                      Strategy::herding, Strategy::clustering, Strategy::ot}) {
    if (to_string(st) == s) return st;
  }
  throw ConfigError("unknown strategy '" + std::string(s) + "'");
}

void SelectionConfig::validate() const {
  if (n < 1) throw ConfigError("N must be >= 1");
  if (token_budget < 1) throw ConfigError("token budget must be >= 1");
  for (double v : {gamma, beta, beta_prime, cluster_gamma}) {
    if (!(std::isfinite(v) && v >= 0.0)) throw ConfigError("selection weights must be finite and >= 0");
  }
  if (m && *m < 1) throw ConfigError("m must be >= 1");
  if (cluster_k < 1) throw ConfigError("cluster k must be >= 1");
}

const Candidate* EntityReps::find(const SentenceKey& key) const {
  auto it = std::lower_bound(candidates.begin(), candidates.end(), key,
                             [](const Candidate& c, const SentenceKey& k) { return c.key < k; });
  return it != candidates.end() && it->key == key ? &*it : nullptr;
}

Matrix mean_rep(const std::vector<Matrix>& reps) {
  if (reps.empty()) throw ArgumentError("mean_rep: empty list");
  Matrix sum = Matrix::Zero(reps.front().rows(), reps.front().cols());
  for (const auto& r : reps) {
    if (r.rows() != sum.rows() || r.cols() != sum.cols()) throw DimensionError("mean_rep: shapes differ");
    sum += r;
  }
  return sum / static_cast<double>(reps.size());
}

EntityReps make_entity_reps(std::string entity_id, std::vector<Candidate> candidates) {
  EntityReps reps;
  reps.entity_id = std::move(entity_id);
  for (auto& c : candidates) {
    if (!c.tokens.empty()) reps.candidates.push_back(std::move(c));
  }
  std::sort(reps.candidates.begin(), reps.candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.key < b.key; });
  for (std::size_t i = 1; i < reps.candidates.size(); ++i) {
    if (reps.candidates[i].key == reps.candidates[i - 1].key) {
      throw DuplicateKeyError("duplicate candidate " + reps.candidates[i].key.str());
    }
  }
  if (!reps.candidates.empty()) {
    std::vector<Matrix> all;
    for (const auto& c : reps.candidates) all.push_back(c.alpha);
    reps.mean = mean_rep(all);
  }
  return reps;
}

std::vector<EntityReps> encode_entities(const Corpus& corpus, const EmbeddingSet& embeddings,
                                        const SemaeModel& model) {
  std::vector<EntityReps> out;
  for (const auto& [entity, idx] : corpus.by_entity()) {
    std::vector<Candidate> cands;
    for (std::size_t i : idx) {
      const auto& rec = corpus.records[i];
      auto it = embeddings.rows.find(rec.key());
      if (it == embeddings.rows.end()) throw ArgumentError("no embedding for " + rec.key().str());
      cands.push_back({rec.key(), encode(it->second, model.transform, model.dictionary,
                                         model.config.attention_kernel).alpha,
                       rec.tokens});
    }
    out.push_back(make_entity_reps(entity, std::move(cands)));
  }
  return out;
}

Matrix background_rep(const std::vector<EntityReps>& entities) {
  std::vector<Matrix> all;
  for (const auto& e : entities) {
    for (const auto& c : e.candidates) all.push_back(c.alpha);
  }
  return mean_rep(all);
}

double divergence_delta(const Matrix& ref, const Matrix& x, Divergence kind) {
  if (ref.rows() != x.rows() || ref.cols() != x.cols()) throw DimensionError("divergence_delta: shapes differ");
  double total = 0.0;
  if (kind == Divergence::kl) {
    for (Eigen::Index h = 0; h < ref.rows(); ++h) {
      for (Eigen::Index k = 0; k < ref.cols(); ++k) {
        const double a = ref(h, k);
        total -= a * std::log((a + kLogFloor) / (x(h, k) + kLogFloor));
      }
    }
  } else {
    for (Eigen::Index h = 0; h < ref.rows(); ++h) {
      const double na = ref.row(h).norm();
      const double nb = x.row(h).norm();
      if (na == 0.0 || nb == 0.0) continue;
      total += ref.row(h).dot(x.row(h)) / (na * nb);
    }
  }
  return total;
}

void sort_scored(std::vector<Scored>& scored) {
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.key < b.key;
  });
}

Summary finalize(const std::vector<Scored>& ordered, const EntityReps& reps, const SelectionConfig& cfg) {
  Summary s;
  std::size_t tokens = 0;
  for (const auto& item : ordered) {
    if (static_cast<int>(s.items.size()) >= cfg.n) break;
    const Candidate* c = reps.find(item.key);
    const std::size_t len = c ? c->tokens.size() : 0;
    if (tokens + len > static_cast<std::size_t>(cfg.token_budget)) break;
    tokens += len;
    s.items.push_back({item.key, item.score, {}});
  }
  return s;
}

namespace {

template <typename ScoreFn>
std::vector<Scored> score_all(const std::vector<Candidate>& pool, ScoreFn fn) {
  std::vector<Scored> out;
  out.reserve(pool.size());
  for (const auto& c : pool) out.push_back({c.key, fn(c)});
  sort_scored(out);
  return out;
}

Summary empty_summary(std::string note) {
  Summary s;
  s.status = SummaryStatus::empty;
  s.note = std::move(note);
  return s;
}

// Greedy Eq.-6 style selection of up to `count` sentences from `pool`.
std::vector<Scored> greedy_redundancy(const std::vector<const Candidate*>& pool, const Matrix& mean,
                                      const SelectionConfig& cfg, std::size_t count) {
  std::vector<double> relevance(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) relevance[i] = divergence_delta(mean, pool[i]->alpha, cfg.divergence);
  std::vector<double> worst(pool.size(), -std::numeric_limits<double>::infinity());
  std::vector<bool> taken(pool.size(), false);
  std::vector<Scored> out;
  while (out.size() < std::min(count, pool.size())) {
    std::size_t best = pool.size();
    double best_score = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (taken[i]) continue;
      const double score = out.empty() ? relevance[i] : relevance[i] - cfg.gamma * worst[i];
      if (best == pool.size() || score > best_score ||
          (score == best_score && pool[i]->key < pool[best]->key)) {
        best = i;
        best_score = score;
      }
    }
    taken[best] = true;
    out.push_back({pool[best]->key, best_score});
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!taken[i]) worst[i] = std::max(worst[i], divergence_delta(pool[best]->alpha, pool[i]->alpha, cfg.divergence));
    }
  }
  return out;
}

std::vector<const Candidate*> pointers(const std::vector<Candidate>& v) {
  std::vector<const Candidate*> out;
  for (const auto& c : v) out.push_back(&c);
  return out;
}

}  // namespace

std::vector<Scored> rank_general(const EntityReps& reps, const SelectionConfig& cfg) {
  return score_all(reps.candidates,
                   [&](const Candidate& c) { return divergence_delta(reps.mean, c.alpha, cfg.divergence); });
}

Summary select_plain(const EntityReps& reps, const SelectionConfig& cfg) {
  return finalize(rank_general(reps, cfg), reps, cfg);
}

Summary select_redundancy(const EntityReps& reps, const SelectionConfig& cfg) {
  if (reps.candidates.empty()) return empty_summary("entity has no candidates");
  auto picks = greedy_redundancy(pointers(reps.candidates), reps.mean, cfg, static_cast<std::size_t>(cfg.n));
  return finalize(picks, reps, cfg);
}

Summary select_aspect_aware(const EntityReps& reps, const AspectLexicon& lexicon, const SelectionConfig& cfg) {
  if (lexicon.empty()) throw ArgumentError("aspect-aware selection needs a nonempty lexicon");
  std::vector<std::vector<const Candidate*>> buckets(lexicon.aspects.size());
  for (const auto& c : reps.candidates) {
    auto aspect = assign_aspect(SentenceRecord{reps.entity_id, c.key.review_id, c.key.sentence_idx, {}, c.tokens},
                                lexicon);
    if (!aspect) continue;
    auto pos = std::find(lexicon.aspects.begin(), lexicon.aspects.end(), *aspect);
    buckets[static_cast<std::size_t>(pos - lexicon.aspects.begin())].push_back(&c);
  }
  std::size_t nonempty = 0;
  for (const auto& b : buckets) nonempty += b.empty() ? 0 : 1;
  if (nonempty == 0) return empty_summary("no sentence matched any aspect keyword");

  const std::size_t m = cfg.m ? static_cast<std::size_t>(*cfg.m)
                              : (static_cast<std::size_t>(cfg.n) + nonempty - 1) / nonempty;
  std::vector<Scored> ordered;
  std::vector<std::string> labels;
  for (std::size_t a = 0; a < buckets.size(); ++a) {
    if (buckets[a].empty()) continue;
    std::vector<Scored> picks;
    if (cfg.strategy == Strategy::aspect_redundancy) {
      picks = greedy_redundancy(buckets[a], reps.mean, cfg, m);
    } else {
      for (const auto* c : buckets[a]) picks.push_back({c->key, divergence_delta(reps.mean, c->alpha, cfg.divergence)});
      sort_scored(picks);
      if (picks.size() > m) picks.resize(m);
    }
    for (auto& p : picks) {
      ordered.push_back(p);
      labels.push_back(lexicon.aspects[a]);
    }
  }
  Summary s = finalize(ordered, reps, cfg);
  for (std::size_t i = 0; i < s.items.size(); ++i) s.items[i].aspects = {labels[i]};
  return s;
}

std::vector<Candidate> aspect_set(const EntityReps& reps, const std::string& aspect, const AspectLexicon& lexicon) {
  std::vector<Candidate> out;
  for (const auto& c : reps.candidates) {
    auto a = assign_aspect(SentenceRecord{reps.entity_id, c.key.review_id, c.key.sentence_idx, {}, c.tokens}, lexicon);
    if (a && *a == aspect) out.push_back(c);
  }
  return out;
}

Summary select_aspect_summary(const EntityReps& reps, const std::vector<Candidate>& aspect_sentences,
                              const SelectionConfig& cfg) {
  if (aspect_sentences.empty()) return empty_summary("aspect set is empty");
  std::vector<Matrix> alphas;
  for (const auto& c : aspect_sentences) alphas.push_back(c.alpha);
  const Matrix aspect_mean = mean_rep(alphas);
  const Matrix& entity_mean = reps.candidates.empty() ? aspect_mean : reps.mean;

  std::vector<Candidate> pool = cfg.widen_aspect_pool ? reps.candidates : aspect_sentences;
  if (!cfg.widen_aspect_pool) {
    std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) { return a.key < b.key; });
  }
  auto ranked = score_all(pool, [&](const Candidate& c) {
    return divergence_delta(aspect_mean, c.alpha, cfg.divergence) -
           cfg.beta * divergence_delta(entity_mean, c.alpha, cfg.divergence);
  });
  // Aspect sentences may come from a held-out set, so finalize against the pool.
  EntityReps pool_reps;
  pool_reps.entity_id = reps.entity_id;
  pool_reps.candidates = std::move(pool);
  return finalize(ranked, pool_reps, cfg);
}

Summary select_informative_general(const EntityReps& reps, const Matrix& background, const SelectionConfig& cfg) {
  auto ranked = score_all(reps.candidates, [&](const Candidate& c) {
    return divergence_delta(reps.mean, c.alpha, cfg.divergence) -
           cfg.beta_prime * divergence_delta(background, c.alpha, cfg.divergence);
  });
  return finalize(ranked, reps, cfg);
}

Summary select_herding(const EntityReps& reps, const SelectionConfig& cfg) {
  const auto& pool = reps.candidates;
  if (pool.empty()) return empty_summary("entity has no candidates");
  Matrix remaining_sum = reps.mean * static_cast<double>(pool.size());
  std::size_t remaining = pool.size();
  std::vector<bool> taken(pool.size(), false);
  std::vector<Scored> picks;
  const std::size_t steps = std::min(pool.size(), static_cast<std::size_t>(cfg.n));
  while (picks.size() < steps) {
    const Matrix target = remaining_sum / static_cast<double>(remaining);
    std::size_t best = pool.size();
    double best_score = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (taken[i]) continue;
      const double score = divergence_delta(target, pool[i].alpha, cfg.divergence);
      if (best == pool.size() || score > best_score) {
        best = i;
        best_score = score;
      }
    }
    taken[best] = true;
    picks.push_back({pool[best].key, best_score});
    remaining_sum -= pool[best].alpha;
    --remaining;
  }
  return finalize(picks, reps, cfg);
}

Summary select_clustering(const EntityReps& reps, const SelectionConfig& cfg) {
  const auto& pool = reps.candidates;
  if (static_cast<int>(pool.size()) < cfg.cluster_k) {
    throw ArgumentError("clustering selection: " + std::to_string(pool.size()) + " candidates for k=" +
                        std::to_string(cfg.cluster_k));
  }
  const Eigen::Index width = pool.front().alpha.size();
  Matrix flat(static_cast<Eigen::Index>(pool.size()), width);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    flat.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(pool[i].alpha.data(), width);
  }
  KMeansResult km = kmeans(flat, cfg.cluster_k, cfg.seed);
  std::vector<int> sizes(static_cast<std::size_t>(cfg.cluster_k), 0);
  for (int a : km.assignment) ++sizes[static_cast<std::size_t>(a)];
  std::vector<Scored> scored;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const int c = km.assignment[i];
    const double dist = (flat.row(static_cast<Eigen::Index>(i)) - km.centers.row(c)).squaredNorm();
    scored.push_back({pool[i].key, -dist + cfg.cluster_gamma * sizes[static_cast<std::size_t>(c)]});
  }
  sort_scored(scored);
  return finalize(scored, reps, cfg);
}

Summary select_seeded(const EntityReps& reps, const std::vector<SentenceKey>& seed_keys, const SelectionConfig& cfg) {
  if (seed_keys.empty()) throw ArgumentError("seeded selection needs at least one seed sentence");
  std::vector<Matrix> seeds;
  for (const auto& k : seed_keys) {
    const Candidate* c = reps.find(k);
    if (c == nullptr) throw ArgumentError("seed sentence " + k.str() + " is not a candidate of entity " + reps.entity_id);
    seeds.push_back(c->alpha);
  }
  const Matrix seed_mean = mean_rep(seeds);
  auto ranked = score_all(reps.candidates, [&](const Candidate& c) {
    return divergence_delta(seed_mean, c.alpha, cfg.divergence) -
           cfg.beta * divergence_delta(reps.mean, c.alpha, cfg.divergence);
  });
  return finalize(ranked, reps, cfg);
}

Summary select_multi_aspect(const EntityReps& reps, const std::vector<std::string>& aspects,
                            const AspectLexicon& lexicon, const SelectionConfig& cfg) {
  if (aspects.empty()) throw ArgumentError("multi-aspect selection needs at least one aspect");
  const std::set<std::string> wanted(aspects.begin(), aspects.end());
  std::vector<SentenceKey> all_match, any_match;
  std::map<SentenceKey, std::vector<std::string>> mentioned;
  for (const auto& c : reps.candidates) {
    std::vector<std::string> hits;
    for (const auto& a : lexicon.aspects_mentioned(c.tokens)) {
      if (wanted.contains(a)) hits.push_back(a);
    }
    if (hits.empty()) continue;
    any_match.push_back(c.key);
    if (hits.size() == wanted.size()) all_match.push_back(c.key);
    mentioned[c.key] = std::move(hits);
  }
  if (any_match.empty()) return empty_summary("no sentence mentions any requested aspect");
  const bool intersect = !all_match.empty();
  Summary s = select_seeded(reps, intersect ? all_match : any_match, cfg);
  s.note = intersect ? "seeds: intersection" : "seeds: union";
  for (auto& item : s.items) {
    auto it = mentioned.find(item.key);
    if (it != mentioned.end()) item.aspects = it->second;
  }
  return s;
}

}  // namespace semae
