// Naive reference implementations used only by the tests. They work on
// plain nested vectors and share no code with the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "semae/selection.hpp"

namespace oracle {

using Row = std::vector<double>;
using Grid = std::vector<Row>;  // H x K
using Words = std::vector<std::string>;

inline Grid to_grid(const semae::Matrix& m) {
  Grid g(static_cast<std::size_t>(m.rows()), Row(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return g;
}

inline semae::Matrix to_matrix(const Grid& g) {
  semae::Matrix m(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.at(0).size()));
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g[i][j];
  return m;
}

// -sum_h KL(ref_h || x_h) with the 1e-12 floor.
inline double neg_kl(const Grid& ref, const Grid& x) {
  double s = 0.0;
  for (std::size_t h = 0; h < ref.size(); ++h)
    for (std::size_t k = 0; k < ref[h].size(); ++k)
      s -= ref[h][k] * std::log((ref[h][k] + 1e-12) / (x[h][k] + 1e-12));
  return s;
}

inline double cosine_sum(const Grid& a, const Grid& b) {
  double s = 0.0;
  for (std::size_t h = 0; h < a.size(); ++h) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t k = 0; k < a[h].size(); ++k) {
      ab += a[h][k] * b[h][k];
      aa += a[h][k] * a[h][k];
      bb += b[h][k] * b[h][k];
    }
    if (aa > 0 && bb > 0) s += ab / (std::sqrt(aa) * std::sqrt(bb));
  }
  return s;
}

inline double delta(const Grid& ref, const Grid& x, semae::Divergence d) {
  return d == semae::Divergence::kl ? neg_kl(ref, x) : cosine_sum(ref, x);
}

inline Grid mean_of(const std::vector<Grid>& xs) {
  Grid m(xs[0].size(), Row(xs[0][0].size(), 0.0));
  for (const auto& x : xs)
    for (std::size_t h = 0; h < m.size(); ++h)
      for (std::size_t k = 0; k < m[h].size(); ++k) m[h][k] += x[h][k];
  for (auto& r : m)
    for (auto& v : r) v /= static_cast<double>(xs.size());
  return m;
}

struct Item {
  semae::SentenceKey key;
  Grid alpha;
  std::size_t tokens = 1;
};

inline bool better(double s, const semae::SentenceKey& k, double best, const semae::SentenceKey& bk) {
  return s > best || (s == best && k < bk);
}

// Truncate an ordered pick list at n sentences or the first budget overflow.
inline std::vector<semae::SentenceKey> cut(const std::vector<const Item*>& ordered, int n, int budget) {
  std::vector<semae::SentenceKey> out;
  std::size_t used = 0;
  for (const Item* it : ordered) {
    if (static_cast<int>(out.size()) == n) break;
    if (used + it->tokens > static_cast<std::size_t>(budget)) break;
    used += it->tokens;
    out.push_back(it->key);
  }
  return out;
}

inline std::vector<const Item*> sorted_by(const std::vector<Item>& items, const std::vector<double>& score) {
  std::vector<std::size_t> idx(items.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return better(score[a], items[a].key, score[b], items[b].key);
  });
  std::vector<const Item*> out;
  for (auto i : idx) out.push_back(&items[i]);
  return out;
}

inline std::vector<semae::SentenceKey> redundancy(const std::vector<Item>& items, double gamma, int n, int budget,
                                                  semae::Divergence d) {
  std::vector<Grid> all;
  for (const auto& it : items) all.push_back(it.alpha);
  const Grid mean = mean_of(all);
  std::vector<const Item*> chosen;
  std::vector<bool> used(items.size(), false);
  while (chosen.size() < items.size() && static_cast<int>(chosen.size()) < n) {
    int best = -1;
    double best_s = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (used[i]) continue;
      double s = delta(mean, items[i].alpha, d);
      if (!chosen.empty()) {
        double mx = -std::numeric_limits<double>::infinity();
        for (const Item* c : chosen) mx = std::max(mx, delta(c->alpha, items[i].alpha, d));
        s -= gamma * mx;
      }
      if (best < 0 || better(s, items[i].key, best_s, items[static_cast<std::size_t>(best)].key)) {
        best = static_cast<int>(i);
        best_s = s;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    chosen.push_back(&items[static_cast<std::size_t>(best)]);
  }
  return cut(chosen, n, budget);
}

inline std::vector<semae::SentenceKey> herding(const std::vector<Item>& items, int n, int budget,
                                               semae::Divergence d) {
  std::vector<const Item*> chosen;
  std::vector<bool> used(items.size(), false);
  while (chosen.size() < items.size() && static_cast<int>(chosen.size()) < n) {
    std::vector<Grid> rest;
    for (std::size_t i = 0; i < items.size(); ++i)
      if (!used[i]) rest.push_back(items[i].alpha);
    const Grid target = mean_of(rest);
    int best = -1;
    double best_s = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (used[i]) continue;
      const double s = delta(target, items[i].alpha, d);
      if (best < 0 || better(s, items[i].key, best_s, items[static_cast<std::size_t>(best)].key)) {
        best = static_cast<int>(i);
        best_s = s;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    chosen.push_back(&items[static_cast<std::size_t>(best)]);
  }
  return cut(chosen, n, budget);
}

inline Row flatten(const Grid& g) {
  Row r;
  for (const auto& row : g) r.insert(r.end(), row.begin(), row.end());
  return r;
}

inline double sqdist(const Row& a, const Row& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Minimum-SSE partition into exactly k nonempty clusters by enumerating
// every labelling.
inline std::vector<int> best_partition(const std::vector<Row>& pts, int k) {
  const std::size_t n = pts.size();
  std::vector<int> label(n, 0), best;
  double best_sse = std::numeric_limits<double>::infinity();
  while (true) {
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (int l : label) ++count[static_cast<std::size_t>(l)];
    if (std::all_of(count.begin(), count.end(), [](int c) { return c > 0; })) {
      std::vector<Row> centers(static_cast<std::size_t>(k), Row(pts[0].size(), 0.0));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < pts[i].size(); ++j) centers[static_cast<std::size_t>(label[i])][j] += pts[i][j];
      for (int c = 0; c < k; ++c)
        for (auto& v : centers[static_cast<std::size_t>(c)]) v /= count[static_cast<std::size_t>(c)];
      double sse = 0;
      for (std::size_t i = 0; i < n; ++i) sse += sqdist(pts[i], centers[static_cast<std::size_t>(label[i])]);
      if (sse < best_sse - 1e-12) {
        best_sse = sse;
        best = label;
      }
    }
    std::size_t pos = 0;
    while (pos < n && label[pos] == k - 1) label[pos++] = 0;
    if (pos == n) break;
    ++label[pos];
  }
  return best;
}

inline std::vector<semae::SentenceKey> clustering(const std::vector<Item>& items, int k, double gamma, int n,
                                                  int budget) {
  std::vector<Row> pts;
  for (const auto& it : items) pts.push_back(flatten(it.alpha));
  const std::vector<int> label = best_partition(pts, k);
  std::vector<Row> centers(static_cast<std::size_t>(k), Row(pts[0].size(), 0.0));
  std::vector<int> count(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    ++count[static_cast<std::size_t>(label[i])];
    for (std::size_t j = 0; j < pts[i].size(); ++j) centers[static_cast<std::size_t>(label[i])][j] += pts[i][j];
  }
  for (int c = 0; c < k; ++c)
    for (auto& v : centers[static_cast<std::size_t>(c)]) v /= count[static_cast<std::size_t>(c)];
  std::vector<double> score;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto c = static_cast<std::size_t>(label[i]);
    score.push_back(-sqdist(pts[i], centers[c]) + gamma * count[c]);
  }
  return cut(sorted_by(items, score), n, budget);
}

// Plain-domain Sinkhorn; returns <P, C>.
inline double sinkhorn(const Row& a, const Row& b, const Grid& C, double eps, int iters = 20000) {
  const std::size_t K = a.size();
  Grid Kmat(K, Row(K));
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j) Kmat[i][j] = std::exp(-C[i][j] / eps);
  Row u(K, 1.0), v(K, 1.0);
  for (int it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < K; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < K; ++j) s += Kmat[i][j] * v[j];
      u[i] = a[i] / s;
    }
    for (std::size_t j = 0; j < K; ++j) {
      double s = 0;
      for (std::size_t i = 0; i < K; ++i) s += Kmat[i][j] * u[i];
      v[j] = b[j] / s;
    }
  }
  double cost = 0;
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j) cost += u[i] * Kmat[i][j] * v[j] * C[i][j];
  return cost;
}

// Plain-domain iterative Bregman projections, uniform weights.
inline Row barycenter(const std::vector<Row>& ps, const Grid& C, double eps, int iters = 20000) {
  const std::size_t K = C.size(), n = ps.size();
  Grid Kmat(K, Row(K));
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j) Kmat[i][j] = std::exp(-C[i][j] / eps);
  std::vector<Row> v(n, Row(K, 1.0)), u(n, Row(K, 1.0));
  Row q(K, 1.0 / static_cast<double>(K));
  for (int it = 0; it < iters; ++it) {
    std::vector<Row> ktu(n, Row(K, 0.0));
    Row logq(K, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
      for (std::size_t i = 0; i < K; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < K; ++j) s += Kmat[i][j] * v[m][j];
        u[m][i] = ps[m][i] / s;
      }
      for (std::size_t j = 0; j < K; ++j) {
        double s = 0;
        for (std::size_t i = 0; i < K; ++i) s += Kmat[i][j] * u[m][i];
        ktu[m][j] = s;
        logq[j] += std::log(s) / static_cast<double>(n);
      }
    }
    for (std::size_t j = 0; j < K; ++j) q[j] = std::exp(logq[j]);
    for (std::size_t m = 0; m < n; ++m)
      for (std::size_t j = 0; j < K; ++j) v[m][j] = q[j] / ktu[m][j];
  }
  double total = 0;
  for (double x : q) total += x;
  for (double& x : q) x /= total;
  return q;
}

inline std::vector<semae::SentenceKey> ot(const std::vector<Item>& items, const Grid& C, double eps, int n,
                                          int budget) {
  const std::size_t H = items[0].alpha.size();
  std::vector<Row> centers;
  for (std::size_t h = 0; h < H; ++h) {
    std::vector<Row> rows;
    for (const auto& it : items) rows.push_back(it.alpha[h]);
    centers.push_back(barycenter(rows, C, eps));
  }
  std::vector<double> score;
  for (const auto& it : items) {
    double s = 0;
    for (std::size_t h = 0; h < H; ++h) s -= sinkhorn(centers[h], it.alpha[h], C, eps);
    score.push_back(s);
  }
  return cut(sorted_by(items, score), n, budget);
}

// Exact 1-D optimal transport between histograms on bins 0..K-1 under a
// convex cost of |i - j|: the monotone (north-west corner) coupling.
template <typename Cost>
double ot_line(Row a, Row b, Cost cost) {
  double total = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double m = std::min(a[i], b[j]);
    total += m * cost(static_cast<double>(i) - static_cast<double>(j));
    a[i] -= m;
    b[j] -= m;
    if (a[i] <= 1e-15) ++i;
    if (i < a.size() && b[j] <= 1e-15) ++j;
  }
  return total;
}

// ---- ROUGE by brute force --------------------------------------------------

inline std::vector<Words> ngrams(const Words& t, int n) {
  std::vector<Words> out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= t.size(); ++i)
    out.emplace_back(t.begin() + static_cast<long>(i), t.begin() + static_cast<long>(i) + n);
  return out;
}

struct PRF {
  double p = 0, r = 0, f = 0;
};

inline double f1(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

inline PRF rouge_n(const Words& cand, const std::vector<Words>& refs, int n) {
  PRF acc;
  if (cand.empty() || refs.empty()) return acc;
  const auto cg = ngrams(cand, n);
  for (const auto& ref : refs) {
    const auto rg = ngrams(ref, n);
    // Clipped overlap: match each reference n-gram at most once.
    std::vector<bool> taken(rg.size(), false);
    double hit = 0;
    for (const auto& g : cg) {
      for (std::size_t j = 0; j < rg.size(); ++j) {
        if (!taken[j] && rg[j] == g) {
          taken[j] = true;
          hit += 1;
          break;
        }
      }
    }
    const double p = cg.empty() ? 0.0 : hit / static_cast<double>(cg.size());
    const double r = rg.empty() ? 0.0 : hit / static_cast<double>(rg.size());
    acc.p += p;
    acc.r += r;
    acc.f += f1(p, r);
  }
  const double m = static_cast<double>(refs.size());
  return {acc.p / m, acc.r / m, acc.f / m};
}

// LCS by exhaustive recursion with memo on (i, j).
inline std::size_t lcs(const Words& a, const Words& b, std::size_t i, std::size_t j,
                       std::map<std::pair<std::size_t, std::size_t>, std::size_t>& memo) {
  if (i == a.size() || j == b.size()) return 0;
  auto key = std::make_pair(i, j);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  std::size_t v = a[i] == b[j] ? 1 + lcs(a, b, i + 1, j + 1, memo)
                               : std::max(lcs(a, b, i + 1, j, memo), lcs(a, b, i, j + 1, memo));
  memo[key] = v;
  return v;
}

inline PRF rouge_l(const Words& cand, const std::vector<Words>& refs) {
  PRF acc;
  if (cand.empty() || refs.empty()) return acc;
  for (const auto& ref : refs) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    const double l = static_cast<double>(lcs(cand, ref, 0, 0, memo));
    const double p = l / static_cast<double>(cand.size());
    const double r = ref.empty() ? 0.0 : l / static_cast<double>(ref.size());
    acc.p += p;
    acc.r += r;
    acc.f += f1(p, r);
  }
  const double m = static_cast<double>(refs.size());
  return {acc.p / m, acc.r / m, acc.f / m};
}

// ---- random instance helpers ---------------------------------------------

inline Grid random_alpha(std::mt19937_64& g, std::size_t H, std::size_t K, double spread = 2.0) {
  std::normal_distribution<double> nd(0.0, spread);
  Grid a(H, Row(K));
  for (auto& row : a) {
    double s = 0;
    for (auto& v : row) {
      v = std::exp(nd(g));
      s += v;
    }
    for (auto& v : row) v /= s;
  }
  return a;
}

inline std::vector<Item> random_items(std::mt19937_64& g, std::size_t count, std::size_t H, std::size_t K) {
  std::vector<Item> items;
  std::uniform_int_distribution<int> len(1, 12);
  for (std::size_t i = 0; i < count; ++i) {
    Item it;
    it.key = {"e", "r" + std::to_string(i / 3), static_cast<std::size_t>(i % 3)};
    it.alpha = random_alpha(g, H, K);
    it.tokens = static_cast<std::size_t>(len(g));
    items.push_back(std::move(it));
  }
  return items;
}

inline semae::EntityReps to_reps(const std::vector<Item>& items) {
  std::vector<semae::Candidate> cands;
  for (const auto& it : items) {
    semae::Candidate c;
    c.key = it.key;
    c.alpha = to_matrix(it.alpha);
    c.tokens.assign(it.tokens, "w");
    cands.push_back(std::move(c));
  }
  return semae::make_entity_reps("e", std::move(cands));
}

inline std::vector<semae::SentenceKey> keys(const semae::Summary& s) {
  std::vector<semae::SentenceKey> out;
  for (const auto& i : s.items) out.push_back(i.key);
  return out;
}

}  // namespace oracle
