#include <cmath>
#include <cstdio>
#include <limits>

#include "semae/corpus.hpp"
#include "semae/rng.hpp"

namespace semae {

namespace {

std::string padded(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i);
  return buf;
}

std::string topic_word(std::size_t topic, std::size_t word) {
  return "t" + std::to_string(topic) + "w" + std::to_string(word);
}

}  // namespace

void SynthSpec::validate() const {
  if (n_entities < 1 || reviews_per_entity < 1 || sentences_per_review < 1 || n_topics < 1 ||
      dim < 1 || tokens_per_sentence < 1 || words_per_topic < 1) {
    throw ConfigError("synth: all counts must be positive");
  }
  if (n_topics > dim) throw ConfigError("synth: n_topics must not exceed dim");
  if (!(topic_separation > 0.0)) throw ConfigError("synth: topic_separation must be positive");
  if (!(noise_sigma >= 0.0)) throw ConfigError("synth: noise_sigma must be nonnegative");
  if (!(majority_share >= 0.0 && majority_share <= 1.0)) {
    throw ConfigError("synth: majority_share must lie in [0,1]");
  }
}

SynthData synth_generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng = Rng::substream(spec.rng_seed, "synth");
  const std::size_t T = spec.n_topics;

  std::size_t period = T;
  while (spec.dim % period != 0) ++period;

  // Orthonormal prototypes via Gram-Schmidt on Gaussian draws.
  std::vector<Vector> protos;
  while (protos.size() < T) {
    Vector p(static_cast<Eigen::Index>(period));
    for (auto& x : p) x = rng.normal();
    for (const auto& q : protos) p -= p.dot(q) * q;
    double n = p.norm();
    if (n < 1e-8) continue;
    protos.push_back(p / n);
  }
  const double repeats = static_cast<double>(spec.dim / period);
  const double scale = spec.topic_separation / (std::sqrt(2.0) * std::sqrt(repeats));

  SynthData data;
  for (std::size_t t = 0; t < T; ++t) {
    Vector c(static_cast<Eigen::Index>(spec.dim));
    for (std::size_t j = 0; j < spec.dim; ++j) {
      c[static_cast<Eigen::Index>(j)] = scale * protos[t][static_cast<Eigen::Index>(j % period)];
    }
    data.centers.push_back(std::move(c));
  }
  data.embeddings.dim = spec.dim;

  for (std::size_t e = 0; e < spec.n_entities; ++e) {
    std::string entity = padded("e", e);
    std::size_t major = e % T;
    data.majority_topic[entity] = static_cast<int>(major);
    for (std::size_t r = 0; r < spec.reviews_per_entity; ++r) {
      std::string review = padded("r", r);
      for (std::size_t s = 0; s < spec.sentences_per_review; ++s) {
        std::size_t topic = major;
        if (T > 1 && rng.uniform() >= spec.majority_share) {
          topic = rng.below(T - 1);
          if (topic >= major) ++topic;
        }
        SentenceRecord rec;
        rec.entity_id = entity;
        rec.review_id = review;
        rec.sentence_idx = s;
        for (std::size_t w = 0; w < spec.tokens_per_sentence; ++w) {
          if (w) rec.text += ' ';
          rec.text += topic_word(topic, rng.below(spec.words_per_topic));
        }
        rec.text += '.';
        rec.tokens = tokenize(rec.text);

        Vector v = data.centers[topic];
        for (auto& x : v) x += spec.noise_sigma * rng.normal();
        data.embeddings.rows[rec.key()] = std::move(v);
        data.topic[rec.key()] = static_cast<int>(topic);
        data.corpus.records.push_back(std::move(rec));
      }
    }
  }

  for (std::size_t t = 0; t < T; ++t) {
    std::string aspect = "topic" + std::to_string(t);
    data.lexicon.aspects.push_back(aspect);
    data.lexicon.entries[topic_word(t, 0)].push_back({aspect, 0.9});
    if (spec.words_per_topic > 1) data.lexicon.entries[topic_word(t, 1)].push_back({aspect, 0.6});
  }
  return data;
}

std::map<std::string, std::vector<SentenceKey>> synth_gold(const SynthData& data, double min_share) {
  std::map<std::string, std::vector<SentenceKey>> gold;
  for (const auto& [entity, idx] : data.corpus.by_entity()) {
    std::vector<std::size_t> counts(data.centers.size(), 0);
    for (std::size_t i : idx) ++counts[static_cast<std::size_t>(data.topic.at(data.corpus.records[i].key()))];
    auto& keys = gold[entity];
    for (std::size_t t = 0; t < counts.size(); ++t) {
      if (static_cast<double>(counts[t]) < min_share * static_cast<double>(idx.size())) continue;
      const SentenceKey* best = nullptr;
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t i : idx) {
        const SentenceKey key = data.corpus.records[i].key();
        if (static_cast<std::size_t>(data.topic.at(key)) != t) continue;
        double dist = (data.embeddings.rows.at(key) - data.centers[t]).squaredNorm();
        if (dist < best_dist) {
          best_dist = dist;
          best = &data.embeddings.rows.find(key)->first;
        }
      }
      if (best != nullptr) keys.push_back(*best);
    }
  }
  return gold;
}

}  // namespace semae
