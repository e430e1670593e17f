#include "semae/ot.hpp"

#include <cmath>
#include <limits>

namespace semae {

namespace {

// Cap on sweeps at each intermediate epsilon of the annealing schedule.
constexpr int kStageSweeps = 50;

Vector floored_log(const Vector& p) {
  Vector q = p.cwiseMax(kLogFloor);
  q /= q.sum();
  return q.array().log();
}

// log sum_j exp(v_j)
double log_sum_exp(const Eigen::Ref<const Vector>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

void check_distribution(const Vector& p, Eigen::Index K, const char* what) {
  if (p.size() != K) throw DimensionError(std::string(what) + ": size differs from cost matrix");
  if (!p.allFinite() || (p.array() < 0.0).any()) throw ArgumentError(std::string(what) + ": not a distribution");
  if (std::abs(p.sum() - 1.0) > 1e-6) throw ArgumentError(std::string(what) + ": does not sum to 1");
}

}  // namespace

GroundCost ground_cost(const Dictionary& dict) {
  const Eigen::Index K = dict.elements.rows();
  if (K < 2) throw DimensionError("ground cost needs K >= 2");
  GroundCost g;
  g.C = Matrix::Zero(K, K);
  for (Eigen::Index i = 0; i < K; ++i) {
    for (Eigen::Index j = i + 1; j < K; ++j) {
      const double d = (dict.elements.row(i) - dict.elements.row(j)).norm();
      g.C(i, j) = d;
      g.C(j, i) = d;
    }
  }
  return g;
}

SinkhornParams default_sinkhorn_params(const GroundCost& cost) {
  const Eigen::Index K = cost.C.rows();
  double mean = K > 1 ? cost.C.sum() / static_cast<double>(K * (K - 1)) : 0.0;
  SinkhornParams p;
  p.epsilon = mean > 0.0 ? 0.05 * mean : 0.05;
  return p;
}

namespace {

// Scaling state of one Sinkhorn problem at a fixed epsilon. The kernel is
// stabilized by absorbed log potentials: Kt = exp(-C/eps + f 1' + 1 g'),
// and the current plan is diag(u) Kt diag(v).
class ScaledSinkhorn {
 public:
  ScaledSinkhorn(const Matrix& C, const Vector& log_a, const Vector& log_b)
      : C_(C), log_a_(log_a), log_b_(log_b), a_(log_a.array().exp()), b_(log_b.array().exp()),
        f_(Vector::Zero(C.rows())), g_(Vector::Zero(C.rows())) {}

  // Switches to a new epsilon, keeping the dual potentials eps*f, eps*g.
  void set_epsilon(double eps) {
    absorb();
    if (eps_ > 0.0) {
      f_ *= eps_ / eps;
      g_ *= eps_ / eps;
    }
    eps_ = eps;
    rebuild();
  }

  // One row-then-column update; returns the L1 row-marginal violation.
  double sweep() {
    Vector kv = kernel_ * v_;
    if (!usable(kv)) return log_sweep();
    u_ = a_.cwiseQuotient(kv);
    Vector ktu = kernel_.transpose() * u_;
    if (!usable(ktu)) return log_sweep();
    v_ = b_.cwiseQuotient(ktu);
    if (u_.cwiseAbs().maxCoeff() > kAbsorbAbove || v_.cwiseAbs().maxCoeff() > kAbsorbAbove ||
        u_.minCoeff() < 1.0 / kAbsorbAbove || v_.minCoeff() < 1.0 / kAbsorbAbove) {
      absorb();
      rebuild();
    }
    kv = kernel_ * v_;
    return (u_.cwiseProduct(kv) - a_).cwiseAbs().sum();
  }

  Vector log_u() const { return f_ + u_.array().log().matrix(); }
  Vector log_v() const { return g_ + v_.array().log().matrix(); }

 private:
  static constexpr double kAbsorbAbove = 1e30;

  static bool usable(const Vector& x) { return x.allFinite() && x.minCoeff() > 1e-280; }

  void absorb() {
    if (u_.size() == 0) return;
    f_ = log_u();
    g_ = log_v();
  }

  void rebuild() {
    const Eigen::Index K = C_.rows();
    kernel_.resize(K, K);
    for (Eigen::Index i = 0; i < K; ++i) {
      for (Eigen::Index j = 0; j < K; ++j) kernel_(i, j) = std::exp(f_[i] + g_[j] - C_(i, j) / eps_);
    }
    u_ = Vector::Ones(K);
    v_ = Vector::Ones(K);
  }

  // Log-domain sweep for when the scaled kernel under- or overflows.
  double log_sweep() {
    absorb();
    const Eigen::Index K = C_.rows();
    Vector tmp(K);
    for (Eigen::Index i = 0; i < K; ++i) {
      tmp = -C_.row(i).transpose() / eps_ + g_;
      f_[i] = log_a_[i] - log_sum_exp(tmp);
    }
    for (Eigen::Index j = 0; j < K; ++j) {
      tmp = -C_.col(j) / eps_ + f_;
      g_[j] = log_b_[j] - log_sum_exp(tmp);
    }
    double err = 0.0;
    for (Eigen::Index i = 0; i < K; ++i) {
      tmp = -C_.row(i).transpose() / eps_ + g_;
      err += std::abs(std::exp(f_[i] + log_sum_exp(tmp)) - a_[i]);
    }
    rebuild();
    return err;
  }

  const Matrix& C_;
  Vector log_a_, log_b_, a_, b_;
  Vector f_, g_, u_, v_;
  Matrix kernel_;
  double eps_ = 0.0;
};

}  // namespace

SinkhornResult sinkhorn(const Vector& a, const Vector& b, const GroundCost& cost, const SinkhornParams& params) {
  const Matrix& C = cost.C;
  const Eigen::Index K = C.rows();
  check_distribution(a, K, "sinkhorn source");
  check_distribution(b, K, "sinkhorn target");
  if (!(params.epsilon > 0.0) || params.max_iter < 1 || !(params.tol > 0.0)) {
    throw ArgumentError("sinkhorn: epsilon, max_iter and tol must be positive");
  }
  ScaledSinkhorn state(C, floored_log(a), floored_log(b));

  // Epsilon scaling: anneal from the largest cost down to the target.
  // Cold starts otherwise need on the order of max(C)/eps sweeps.
  int sweeps = 0;
  for (double eps = C.maxCoeff(); eps > 2.0 * params.epsilon; eps *= 0.5) {
    state.set_epsilon(eps);
    for (int s = 0; s < kStageSweeps; ++s) {
      ++sweeps;
      if (state.sweep() < params.tol) break;
    }
  }
  state.set_epsilon(params.epsilon);

  SinkhornResult res;
  Vector best_f = state.log_u(), best_g = state.log_v();
  double best_err = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= params.max_iter; ++it) {
    const double err = state.sweep();
    res.iterations = sweeps + it;
    if (err < best_err) {
      best_err = err;
      best_f = state.log_u();
      best_g = state.log_v();
    }
    if (err < params.tol) {
      res.converged = true;
      break;
    }
  }
  res.marginal_error = best_err;
  res.plan.resize(K, K);
  for (Eigen::Index i = 0; i < K; ++i) {
    for (Eigen::Index j = 0; j < K; ++j) res.plan(i, j) = std::exp(best_f[i] + best_g[j] - C(i, j) / params.epsilon);
  }
  res.distance = res.plan.cwiseProduct(C).sum();
  return res;
}

namespace {

// Above this many kernel entries across all measures, stay in the log domain
// instead of keeping one stabilized kernel per measure.
constexpr double kMaxKernelEntries = 2e7;

// Iterative Bregman projections for a uniform-weight barycenter. Each input
// measure m has its own absorbed potentials f_m, g_m and stabilized kernel
// exp(-C/eps + f_m 1' + 1 g_m'), as in ScaledSinkhorn.
class ScaledBarycenter {
 public:
  ScaledBarycenter(const Matrix& C, const std::vector<Vector>& dists)
      : C_(C), n_(dists.size()), w_(1.0 / static_cast<double>(dists.size())) {
    const Eigen::Index K = C.rows();
    for (const auto& d : dists) {
      log_p_.push_back(floored_log(d));
      p_.push_back(log_p_.back().array().exp());
    }
    f_.assign(n_, Vector::Zero(K));
    g_.assign(n_, Vector::Zero(K));
    u_.assign(n_, Vector::Ones(K));
    v_.assign(n_, Vector::Ones(K));
    kernel_.resize(n_);
    log_only_ = static_cast<double>(n_) * static_cast<double>(K) * static_cast<double>(K) > kMaxKernelEntries;
    q_ = Vector::Constant(K, 1.0 / static_cast<double>(K));
  }

  void set_epsilon(double eps) {
    absorb();
    if (eps_ > 0.0) {
      for (std::size_t m = 0; m < n_; ++m) {
        f_[m] *= eps_ / eps;
        g_[m] *= eps_ / eps;
      }
    }
    eps_ = eps;
    rebuild();
  }

  // One projection round. Returns the row-marginal violation of the plans
  // entering the round (weighted over measures) and sets `moved` to the L1
  // change of the barycenter.
  double step(double& moved) {
    if (log_only_) return log_step(moved);
    const Eigen::Index K = C_.rows();
    std::vector<Vector> ktu(n_);
    double err = 0.0;
    Vector log_q = Vector::Zero(K);
    for (std::size_t m = 0; m < n_; ++m) {
      const Vector kv = kernel_[m] * v_[m];
      if (!usable(kv)) return log_step(moved);
      err += w_ * (u_[m].cwiseProduct(kv) - p_[m]).cwiseAbs().sum();
      u_[m] = p_[m].cwiseQuotient(kv);
      ktu[m] = kernel_[m].transpose() * u_[m];
      if (!usable(ktu[m])) return log_step(moved);
      log_q += w_ * (ktu[m].array().log().matrix() - g_[m]);
    }
    const Vector next = log_q.array().exp();
    if (!next.allFinite()) return log_step(moved);
    bool wide = false;
    for (std::size_t m = 0; m < n_; ++m) {
      v_[m] = next.cwiseQuotient(ktu[m]);
      wide = wide || !usable(v_[m]) || v_[m].maxCoeff() > kAbsorbAbove || u_[m].maxCoeff() > kAbsorbAbove ||
             u_[m].minCoeff() < 1.0 / kAbsorbAbove || v_[m].minCoeff() < 1.0 / kAbsorbAbove;
    }
    moved = (next - q_).cwiseAbs().sum();
    q_ = next;
    if (wide) {
      absorb();
      rebuild();
    }
    return err;
  }

  const Vector& q() const { return q_; }

 private:
  static constexpr double kAbsorbAbove = 1e30;

  static bool usable(const Vector& x) { return x.allFinite() && x.minCoeff() > 1e-280; }

  void absorb() {
    for (std::size_t m = 0; m < n_; ++m) {
      f_[m] += u_[m].array().log().matrix();
      g_[m] += v_[m].array().log().matrix();
      u_[m].setOnes();
      v_[m].setOnes();
    }
  }

  void rebuild() {
    if (log_only_) return;
    const Eigen::Index K = C_.rows();
    for (std::size_t m = 0; m < n_; ++m) {
      kernel_[m].resize(K, K);
      for (Eigen::Index i = 0; i < K; ++i) {
        for (Eigen::Index j = 0; j < K; ++j) kernel_[m](i, j) = std::exp(f_[m][i] + g_[m][j] - C_(i, j) / eps_);
      }
    }
  }

  double log_step(double& moved) {
    absorb();
    const Eigen::Index K = C_.rows();
    Vector tmp(K), log_q = Vector::Zero(K);
    std::vector<Vector> log_ktu(n_, Vector(K));
    double err = 0.0;
    for (std::size_t m = 0; m < n_; ++m) {
      for (Eigen::Index i = 0; i < K; ++i) {
        tmp = -C_.row(i).transpose() / eps_ + g_[m];
        const double f_new = log_p_[m][i] - log_sum_exp(tmp);
        err += w_ * std::abs(std::exp(f_[m][i] - f_new) - 1.0) * p_[m][i];
        f_[m][i] = f_new;
      }
      for (Eigen::Index j = 0; j < K; ++j) {
        tmp = -C_.col(j) / eps_ + f_[m];
        log_ktu[m][j] = log_sum_exp(tmp);
      }
      log_q += w_ * log_ktu[m];
    }
    for (std::size_t m = 0; m < n_; ++m) g_[m] = log_q - log_ktu[m];
    const Vector next = log_q.array().exp();
    moved = (next - q_).cwiseAbs().sum();
    q_ = next;
    rebuild();
    return err;
  }

  const Matrix& C_;
  std::size_t n_;
  double w_;
  std::vector<Vector> log_p_, p_, f_, g_, u_, v_;
  std::vector<Matrix> kernel_;
  bool log_only_ = false;
  Vector q_;
  double eps_ = 0.0;
};

}  // namespace

BarycenterResult barycenter(const std::vector<Vector>& dists, const GroundCost& cost, const SinkhornParams& params) {
  if (dists.empty()) throw ArgumentError("barycenter: empty input list");
  const Eigen::Index K = cost.C.rows();
  for (const auto& p : dists) check_distribution(p, K, "barycenter input");
  if (!(params.epsilon > 0.0) || params.max_iter < 1 || !(params.tol > 0.0)) {
    throw ArgumentError("barycenter: epsilon, max_iter and tol must be positive");
  }
  ScaledBarycenter state(cost.C, dists);

  // Same annealing as sinkhorn: at small epsilon a cold start moves the
  // barycenter so slowly that the movement test would stop it early.
  BarycenterResult res;
  double moved = 0.0;
  int sweeps = 0;
  for (double eps = cost.C.maxCoeff(); eps > 2.0 * params.epsilon; eps *= 0.5) {
    state.set_epsilon(eps);
    for (int s = 0; s < kStageSweeps; ++s) {
      ++sweeps;
      const double err = state.step(moved);
      if (err < params.tol && moved < params.tol) break;
    }
  }
  state.set_epsilon(params.epsilon);

  Vector best = state.q();
  double best_err = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= params.max_iter; ++it) {
    Vector before = state.q();
    const double err = state.step(moved);
    res.iterations = sweeps + it;
    // err describes the plans that produced `before`.
    if (it > 1 && err < best_err) {
      best_err = err;
      best = before;
    }
    if (it > 1 && err < params.tol && moved < params.tol) {
      res.converged = true;
      best = state.q();
      break;
    }
  }
  if (params.max_iter == 1 || !std::isfinite(best_err)) best = state.q();
  res.distribution = best / best.sum();
  return res;
}

Summary select_ot(const EntityReps& reps, const Dictionary& dict, const SelectionConfig& cfg,
                  std::optional<SinkhornParams> params) {
  Summary empty;
  if (reps.candidates.empty()) {
    empty.status = SummaryStatus::empty;
    empty.note = "entity has no candidates";
    return empty;
  }
  const GroundCost cost = ground_cost(dict);
  const SinkhornParams p = params.value_or(default_sinkhorn_params(cost));
  const auto H = reps.candidates.front().alpha.rows();
  bool converged = true;

  std::vector<Vector> centers;
  for (Eigen::Index h = 0; h < H; ++h) {
    std::vector<Vector> rows;
    for (const auto& c : reps.candidates) rows.push_back(c.alpha.row(h).transpose());
    BarycenterResult bc = barycenter(rows, cost, p);
    converged = converged && bc.converged;
    centers.push_back(std::move(bc.distribution));
  }
  std::vector<Scored> scored;
  for (const auto& c : reps.candidates) {
    double score = 0.0;
    for (Eigen::Index h = 0; h < H; ++h) {
      SinkhornResult sr = sinkhorn(centers[static_cast<std::size_t>(h)], c.alpha.row(h).transpose(), cost, p);
      converged = converged && sr.converged;
      score -= sr.distance;
    }
    scored.push_back({c.key, score});
  }
  sort_scored(scored);
  Summary s = finalize(scored, reps, cfg);
  s.converged = converged;
  if (!converged) s.note = "optimal transport did not converge";
  return s;
}

}  // namespace semae
