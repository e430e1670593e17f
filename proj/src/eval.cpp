#include "semae/eval.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "semae/trainer.hpp"

namespace semae {

namespace {

Tokens lowered(const Tokens& t) {
  Tokens out = t;
  for (auto& s : out) {
    for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return out;
}

std::map<Tokens, int> ngram_counts(const Tokens& t, int n) {
  std::map<Tokens, int> counts;
  const auto un = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + un <= t.size(); ++i) ++counts[Tokens(t.begin() + static_cast<long>(i), t.begin() + static_cast<long>(i + un))];
  return counts;
}

RougeScore from_counts(double overlap, double cand_total, double ref_total) {
  RougeScore s;
  s.precision = cand_total > 0 ? overlap / cand_total : 0.0;
  s.recall = ref_total > 0 ? overlap / ref_total : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

RougeScore average(const std::vector<RougeScore>& scores) {
  RougeScore avg;
  if (scores.empty()) return avg;
  for (const auto& s : scores) {
    avg.precision += s.precision;
    avg.recall += s.recall;
    avg.f1 += s.f1;
  }
  const double n = static_cast<double>(scores.size());
  avg.precision /= n;
  avg.recall /= n;
  avg.f1 /= n;
  return avg;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

RougeScore rouge_n(const Tokens& candidate, const std::vector<Tokens>& references, int n) {
  if (n < 1) throw ArgumentError("rouge_n: n must be >= 1");
  if (candidate.empty() || references.empty()) return {};
  const auto cand = ngram_counts(lowered(candidate), n);
  double cand_total = 0;
  for (const auto& [g, c] : cand) cand_total += c;
  std::vector<RougeScore> per_ref;
  for (const auto& ref : references) {
    const auto rc = ngram_counts(lowered(ref), n);
    double ref_total = 0, overlap = 0;
    for (const auto& [g, c] : rc) {
      ref_total += c;
      auto it = cand.find(g);
      if (it != cand.end()) overlap += std::min(c, it->second);
    }
    per_ref.push_back(from_counts(overlap, cand_total, ref_total));
  }
  return average(per_ref);
}

RougeScore rouge_l(const Tokens& candidate, const std::vector<Tokens>& references) {
  if (candidate.empty() || references.empty()) return {};
  const Tokens cand = lowered(candidate);
  std::vector<RougeScore> per_ref;
  for (const auto& ref : references) {
    const Tokens r = lowered(ref);
    per_ref.push_back(from_counts(static_cast<double>(lcs_length(cand, r)), static_cast<double>(cand.size()),
                                  static_cast<double>(r.size())));
  }
  return average(per_ref);
}

double distinct_n(const std::vector<Tokens>& texts, int n) {
  if (n < 1) throw ArgumentError("distinct_n: n must be >= 1");
  Tokens all;
  for (const auto& t : texts) all.insert(all.end(), t.begin(), t.end());
  const auto counts = ngram_counts(all, n);
  double total = 0;
  for (const auto& [g, c] : counts) total += c;
  return total > 0 ? static_cast<double>(counts.size()) / total : 0.0;
}

int aspect_coverage(const std::vector<Tokens>& sentences, const AspectLexicon& lexicon) {
  std::set<std::string> seen;
  for (const auto& t : sentences) {
    auto a = assign_aspect(SentenceRecord{{}, {}, 0, {}, t}, lexicon);
    if (a) seen.insert(*a);
  }
  return static_cast<int>(seen.size());
}

double adjusted_rand(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw ArgumentError("adjusted_rand: label vectors differ in length");
  const double n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  auto pairs = [](double x) { return x * (x - 1) / 2.0; };
  double sum_joint = 0, sum_a = 0, sum_b = 0;
  for (const auto& [k, v] : joint) sum_joint += pairs(v);
  for (const auto& [k, v] : ra) sum_a += pairs(v);
  for (const auto& [k, v] : rb) sum_b += pairs(v);
  const double expected = sum_a * sum_b / pairs(n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_joint - expected) / (max_index - expected);
}

ClusterReport dictionary_cluster_report(const SemaeModel& model, const Corpus& corpus, const EmbeddingSet& embeddings,
                                        int k_clusters, std::uint64_t seed, int top_n) {
  const int K = model.dict_size();
  if (k_clusters < 1 || k_clusters > K) throw ArgumentError("cluster report: k must lie in [1, K]");
  KMeansResult km = kmeans(model.dictionary.elements, k_clusters, seed);
  ClusterReport report;
  report.clusters = k_clusters;
  report.element_cluster = km.assignment;
  report.cluster_means = km.centers;

  const int H = model.heads();
  std::vector<std::vector<std::vector<ClusterEntry>>> all(
      static_cast<std::size_t>(H), std::vector<std::vector<ClusterEntry>>(static_cast<std::size_t>(k_clusters)));
  for (const auto& rec : corpus.records) {
    auto it = embeddings.rows.find(rec.key());
    if (it == embeddings.rows.end()) throw ArgumentError("no embedding for " + rec.key().str());
    const Matrix heads = head_vectors(it->second, model.transform);
    for (int h = 0; h < H; ++h) {
      const double hn = heads.row(h).norm();
      for (int c = 0; c < k_clusters; ++c) {
        const double cn = km.centers.row(c).norm();
        const double sim = hn > 0 && cn > 0 ? heads.row(h).dot(km.centers.row(c)) / (hn * cn) : 0.0;
        all[static_cast<std::size_t>(h)][static_cast<std::size_t>(c)].push_back({rec.key(), std::clamp(sim, -1.0, 1.0)});
      }
    }
  }
  for (auto& per_head : all) {
    for (auto& list : per_head) {
      std::sort(list.begin(), list.end(), [](const ClusterEntry& x, const ClusterEntry& y) {
        if (x.similarity != y.similarity) return x.similarity > y.similarity;
        return x.key < y.key;
      });
      if (static_cast<int>(list.size()) > top_n) list.resize(static_cast<std::size_t>(top_n));
    }
  }
  report.top = std::move(all);
  return report;
}

}  // namespace semae
