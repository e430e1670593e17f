#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semae/corpus.hpp"
#include "semae/model.hpp"

namespace semae {

using Tokens = std::vector<std::string>;

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Clipped n-gram overlap against each reference; precision, recall and F
// are each averaged over the references. No stemming or stopword removal.
RougeScore rouge_n(const Tokens& candidate, const std::vector<Tokens>& references, int n);

// Longest-common-subsequence ROUGE, averaged over references.
RougeScore rouge_l(const Tokens& candidate, const std::vector<Tokens>& references);

// Unique n-grams / total n-grams over the concatenation of `texts`; 0 when
// there are no n-grams.
double distinct_n(const std::vector<Tokens>& texts, int n);

// Number of distinct aspects assigned to the summary sentences.
int aspect_coverage(const std::vector<Tokens>& sentences, const AspectLexicon& lexicon);

double adjusted_rand(const std::vector<int>& a, const std::vector<int>& b);

struct ClusterEntry {
  SentenceKey key;
  double similarity = 0.0;
};

struct ClusterReport {
  int clusters = 0;
  std::vector<int> element_cluster;  // dictionary row -> cluster
  Matrix cluster_means;              // clusters x d
  // top[h][c]: sentences whose head-h vector is most cosine-similar to the
  // mean of cluster c, best first.
  std::vector<std::vector<std::vector<ClusterEntry>>> top;
};

ClusterReport dictionary_cluster_report(const SemaeModel& model, const Corpus& corpus,
                                        const EmbeddingSet& embeddings, int k_clusters, std::uint64_t seed,
                                        int top_n = 5);

}  // namespace semae
