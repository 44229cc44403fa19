#pragma once

// Logistic maximum likelihood on fixed designs, the mean-parameter
// confidence width and warmup condition that gate it, and the 1-d
// estimators used to study MLE bias.

#include <cstdint>
#include <optional>

#include "logbandit/core.hpp"

namespace logbandit {

/// gamma(d, n, delta) = max{d + log(6(2+n)/delta), 6.1^2 log(6(2+n)/delta)}.
/// Throws InvalidDelta unless 0 < delta <= 1/e.
double gamma(std::size_t d, std::size_t n, double delta);

/// Throws InvalidDelta unless 0 < delta <= 1/e.
void check_delta(double delta);

struct MleOptions {
  double tol = 1e-10;         // KKT residual per pull (gradient norm when unconstrained)
  int max_iter = 100;
  double l2_eps = 1e-9;       // objective gets -(l2_eps/2)||theta||^2
  std::optional<double> norm_cap;  // constrain to the ball of this radius
};

struct MleResult {
  Theta theta_hat;
  bool converged = false;
  int iterations = 0;
  /// Norm of the gradient of the regularized negative log-likelihood; on the
  /// boundary of the norm cap only its tangential/outward-violating part.
  double grad_norm = 0.0;
  double regularizer_used = 0.0;
};

/// Damped Newton with Armijo backtracking (constant 1e-4, halving).
/// Non-convergence is reported through `converged`, not thrown.
/// Throws DegenerateDesign when l2_eps = 0 and the pulled arms do not span R^d.
MleResult fit_mle(const ArmSet& arms, const PullLog& pulls, const MleOptions& options = {});

/// Gradient of the regularized negative log-likelihood at theta.
Vec mle_gradient(const ArmSet& arms, const PullLog& pulls, const Theta& theta, double l2_eps);

/// Mean-parameter width 4.8 mudot(x^T theta) ||x||_{H^{-1}} sqrt(log(2(2+t_eff)K/delta)).
double mean_conf_width(const Vec& x, const SpdMatrix& h, std::size_t t_eff, std::size_t num_arms,
                       double delta, const Theta& theta);

struct WarmupCheck {
  double xi2 = 0.0;        // max over pulled arms of ||x||^2_{H_t(theta)^{-1}}
  double threshold = 0.0;  // 1 / gamma(d, t_eff, delta)
  bool satisfied = false;
};

WarmupCheck warmup_check(const ArmSet& arms, const PullLog& pulls, const Theta& theta,
                         double delta);

/// Add-1/2 log-odds estimate log((H + 1/2)/(N - H + 1/2)).
double kt_estimate(std::uint64_t successes, std::uint64_t n);

/// 1-d MLE log(p/(1-p)) with p = H/N, replaced by (N - 1/2)/N or (1/2)/N when
/// every outcome is a success or a failure.
double mle_1d_natural(std::uint64_t successes, std::uint64_t n);

enum class Estimator { Mle, Kt };

/// E[estimator] - c for N Bernoulli(mu(c)) draws by exact enumeration.
double exact_bias_1d(Estimator estimator, double c, std::uint64_t n);

}  // namespace logbandit
