#pragma once

// Optimal-design solvers. D-optimal designs use the Kumar-Yildirim start and
// Wolfe's away-step iteration; every G-type objective (G, H, naive,
// pessimistic) is a weighted G-optimal problem
//
//   min_lambda max_i w_i ||y_i||^2_{A(lambda)^{-1}},  A(lambda) = sum_j lambda_j y_j y_j^T,
//
// solved by a log-barrier interior-point method (default) or Frank-Wolfe.

#include <cstdint>
#include <vector>

#include "logbandit/core.hpp"

namespace logbandit {

struct DesignSolution {
  DesignWeights weights;
  double objective = 0.0;
  int iterations = 0;
  /// Relative optimality slack: equivalence-theorem slack for D-optimal,
  /// barrier duality gap or Frank-Wolfe gap for weighted G problems.
  double certificate_gap = 0.0;
  bool converged = true;
};

enum class WeightedMethod { Barrier, FrankWolfe };

struct DesignOptions {
  WeightedMethod method = WeightedMethod::Barrier;
  /// Barrier: relative duality gap. Frank-Wolfe: relative improvement over a 25-step window.
  double tol = 1e-9;
  /// 0 selects the method default (barrier: 2000 Newton steps, Frank-Wolfe: 20 d K).
  int max_iter = 0;
  /// Weights below this are dropped and the rest renormalized.
  double prune = 1e-8;
};

/// d arm indices (sorted) whose vectors span R^d. Throws RankDeficient.
IndexSet initial_support(const ArmSet& arms);

/// D-optimal design by Wolfe's away-step algorithm. Stops when
/// max_k omega_k <= d(1+eps) and min_{support} omega_k >= d(1-eps),
/// omega_k = x_k^T V(lambda)^{-1} x_k. Objective is max_k omega_k.
DesignSolution away_step_design(const ArmSet& arms, const DesignWeights& init, double eps,
                                int max_iter = 1'000'000);

/// initial_support followed by away steps with eps = 1.
DesignSolution two_approx_design(const ArmSet& arms);

/// Weighted G-optimal design over the rows of `vectors`. When the vectors do
/// not span R^d the problem is solved exactly on their span.
DesignSolution weighted_g_design(const ArmSet& vectors, const std::vector<double>& point_weights,
                                 const DesignOptions& options = {});

/// Same, with rows that may exceed unit norm (the transformed vectors y_x).
DesignSolution weighted_g_design(const Mat& vectors, const std::vector<double>& point_weights,
                                 const DesignOptions& options = {});

/// min_lambda max_{x in active} ||x||^2_{H_lambda(theta)^{-1}}; weights indexed by all arms.
DesignSolution g_optimal(const ArmSet& arms, const IndexSet& active, const Theta& theta,
                         const DesignOptions& options = {});

/// min_lambda max_{x in active} mudot(x^T theta)^2 ||x||^2_{H_lambda(theta)^{-1}}.
DesignSolution h_optimal(const ArmSet& arms, const IndexSet& active, const Theta& theta,
                         const DesignOptions& options = {});

/// G design for H^naive_lambda = sum lambda_x mudot(||x|| S) x x^T.
DesignSolution naive_warmup_design(const ArmSet& arms, double s_bound,
                                   const DesignOptions& options = {});

/// G design for H^pes_lambda = sum lambda_x mudot_pes(x) x x^T.
DesignSolution pessimistic_design(const ArmSet& arms, const std::vector<double>& mudot_pes,
                                  const DesignOptions& options = {});

/// Entrywise max of (n_H/(n_H+n_G)) lam_H and (n_G/(n_H+n_G)) lam_G, renormalized.
DesignWeights mix_designs(const DesignWeights& lam_h, std::uint64_t n_h,
                          const DesignWeights& lam_g, std::uint64_t n_g);

struct RoundingPlan {
  std::vector<std::uint64_t> counts;
  std::uint64_t n = 0;
  double eps = 0.0;
};

/// r(eps) = ceil(p (1 + eps) / eps) for a design with support size p.
std::uint64_t rounding_min_budget(std::size_t support_size, double eps);

/// counts_x = ceil(n lam_x / (1+eps)) on the support, topped up one pull at a
/// time in descending weight order. Throws BudgetTooSmall when n < r(eps).
RoundingPlan round_design(std::uint64_t n, const DesignWeights& lam, double eps);

}  // namespace logbandit
