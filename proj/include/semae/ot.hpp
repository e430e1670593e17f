#pragma once

#include <optional>
#include <vector>

#include "semae/model.hpp"
#include "semae/selection.hpp"

namespace semae {

struct GroundCost {
  Matrix C;  // K x K, symmetric, zero diagonal
};

// C[i][j] = ||D_i - D_j||_2.
GroundCost ground_cost(const Dictionary& dict);

struct SinkhornParams {
  double epsilon = 0.05;
  int max_iter = 500;
  double tol = 1e-6;
};

// epsilon = 0.05 * mean off-diagonal cost.
SinkhornParams default_sinkhorn_params(const GroundCost& cost);

struct SinkhornResult {
  double distance = 0.0;  // <plan, C>
  Matrix plan;
  bool converged = false;
  int iterations = 0;
  double marginal_error = 0.0;  // L1 row-marginal violation
};

// Sinkhorn scaling on the Gibbs kernel exp(-C / epsilon), stabilized by
// absorbing large scalings into log potentials and annealed from max(C)
// down to epsilon. Inputs are floored at 1e-12 and renormalized. Without
// convergence the iterate with the smallest marginal violation is returned
// and `converged` is false. `iterations` counts annealing sweeps too.
SinkhornResult sinkhorn(const Vector& a, const Vector& b, const GroundCost& cost, const SinkhornParams& params);

struct BarycenterResult {
  Vector distribution;
  bool converged = false;
  int iterations = 0;
};

// Uniform-weight entropic Wasserstein barycenter by iterative Bregman
// projections with the same stabilization and epsilon annealing as
// sinkhorn. Converged once the barycenter moves less than tol in L1 and the
// plans' row marginals are within tol of the inputs.
BarycenterResult barycenter(const std::vector<Vector>& dists, const GroundCost& cost, const SinkhornParams& params);

// R(s) = -sum_h W(barycenter_h, alpha_h). Summary::converged is false if
// any barycenter or distance failed to converge.
Summary select_ot(const EntityReps& reps, const Dictionary& dict, const SelectionConfig& cfg,
                  std::optional<SinkhornParams> params = std::nullopt);

}  // namespace semae
