#include <cmath>
#include <limits>

#include "semae/rng.hpp"
#include "semae/trainer.hpp"

namespace semae {

namespace {

int nearest(const Matrix& centers, const Eigen::Ref<const Vector>& p, double* dist) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    double d = (centers.row(c).transpose() - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist) *dist = best_d;
  return best;
}

Matrix seed_plus_plus(const Matrix& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Matrix centers(k, points.cols());
  centers.row(0) = points.row(static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(n))));
  Vector d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = (points.row(i) - centers.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::size_t>(n)));
    }
    centers.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], (points.row(i) - centers.row(c)).squaredNorm());
  }
  return centers;
}

KMeansResult lloyd(const Matrix& points, int k, Rng& rng, int max_iter, double tol) {
  const Eigen::Index n = points.rows();
  KMeansResult res;
  res.centers = seed_plus_plus(points, k, rng);
  res.assignment.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> dist(static_cast<std::size_t>(n));

  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations_run = iter + 1;
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto ui = static_cast<std::size_t>(i);
      res.assignment[ui] = nearest(res.centers, points.row(i).transpose(), &dist[ui]);
      ++counts[static_cast<std::size_t>(res.assignment[ui])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < dist.size(); ++i) {
        if (counts[static_cast<std::size_t>(res.assignment[i])] > 1 && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      if (far_d < 0.0) continue;
      --counts[static_cast<std::size_t>(res.assignment[far])];
      res.assignment[far] = c;
      dist[far] = 0.0;
      counts[static_cast<std::size_t>(c)] = 1;
      res.centers.row(c) = points.row(static_cast<Eigen::Index>(far));
    }

    Matrix next = Matrix::Zero(k, points.cols());
    for (Eigen::Index i = 0; i < n; ++i) next.row(res.assignment[static_cast<std::size_t>(i)]) += points.row(i);
    double moved = 0.0;
    for (int c = 0; c < k; ++c) {
      next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
      moved = std::max(moved, (next.row(c) - res.centers.row(c)).norm());
    }
    res.centers = std::move(next);
    if (moved < tol) break;
  }

  res.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double d = 0.0;
    res.assignment[static_cast<std::size_t>(i)] = nearest(res.centers, points.row(i).transpose(), &d);
    res.inertia += d;
  }
  return res;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t rng_seed, int max_iter, double tol, int restarts) {
  const Eigen::Index n = points.rows();
  if (k < 1) throw ArgumentError("kmeans: k must be >= 1");
  if (n < k) throw ArgumentError("kmeans: need at least k=" + std::to_string(k) + " points, got " + std::to_string(n));
  if (max_iter < 1 || !(tol > 0.0) || restarts < 1) {
    throw ArgumentError("kmeans: max_iter, tol and restarts must be positive");
  }
  Rng rng(rng_seed);
  KMeansResult best = lloyd(points, k, rng, max_iter, tol);
  for (int r = 1; r < restarts; ++r) {
    KMeansResult next = lloyd(points, k, rng, max_iter, tol);
    if (next.inertia < best.inertia) best = std::move(next);
  }
  return best;
}

Dictionary init_dictionary(const std::vector<Vector>& sentences, const HeadTransform& params, int K,
                           std::uint64_t rng_seed, int max_iter) {
  const auto pooled_rows = static_cast<Eigen::Index>(sentences.size()) * params.heads;
  if (K < 1 || pooled_rows < K) {
    throw ArgumentError("init_dictionary: " + std::to_string(pooled_rows) + " head vectors for K=" +
                        std::to_string(K));
  }
  Matrix pooled(pooled_rows, params.dim);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    pooled.middleRows(static_cast<Eigen::Index>(i) * params.heads, params.heads) = head_vectors(sentences[i], params);
  }
  Dictionary dict;
  dict.elements = kmeans(pooled, K, rng_seed, max_iter, 1e-8, kInitRestarts).centers;
  return dict;
}

Dictionary init_dictionary(const EmbeddingSet& embeddings, const HeadTransform& params, int K,
                           std::uint64_t rng_seed, int max_iter) {
  std::vector<Vector> rows;
  rows.reserve(embeddings.rows.size());
  for (const auto& [key, v] : embeddings.rows) rows.push_back(v);
  return init_dictionary(rows, params, K, rng_seed, max_iter);
}

}  // namespace semae
