#pragma once

// Numeric foundations shared by every other module: the logistic link,
// Fisher information matrices, inverse quadratic forms and the two design
// objectives (G and H) evaluated at a fixed weight vector.

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "logbandit/error.hpp"
#include "logbandit/pull_log.hpp"

namespace logbandit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
/// Natural parameter (theta*, theta-hat, ...).
using Theta = Eigen::VectorXd;
/// Sorted list of arm indices (an active set, a support, ...).
using IndexSet = std::vector<std::size_t>;

// ---------------------------------------------------------------- link --

/// Logistic function 1/(1+exp(-z)). Stable for any finite z.
double mu(double z) noexcept;
/// Logistic variance mu(z)(1-mu(z)); maximum 1/4 at z = 0.
double mudot(double z) noexcept;
/// log(1 + exp(z)) without overflow.
double softplus(double z) noexcept;
/// Inverse of mu on (0, 1).
double logit(double p) noexcept;

// ---------------------------------------------------------------- arms --

/// Ordered, immutable list of arm feature vectors of a common dimension.
/// Norms are bounded by 1 (plus 1e-12 slack) and coordinates are finite.
class ArmSet {
 public:
  /// Rows of `rows` are the arms.
  explicit ArmSet(Mat rows);
  static ArmSet from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t size() const noexcept { return static_cast<std::size_t>(x_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(x_.cols()); }

  Vec arm(std::size_t i) const { return x_.row(static_cast<Eigen::Index>(i)).transpose(); }
  const Mat& matrix() const noexcept { return x_; }
  double norm(std::size_t i) const { return x_.row(static_cast<Eigen::Index>(i)).norm(); }

  /// x_i^T theta for every arm.
  Vec natural(const Theta& theta) const;
  IndexSet all() const;
  /// Subset of arms, in the order given.
  ArmSet subset(const IndexSet& idx) const;
  /// Rank of the arm matrix (numerical, relative tolerance 1e-10).
  std::size_t rank() const;

 private:
  Mat x_;
};

// ------------------------------------------------------------- weights --

/// A point of the probability simplex indexed by arm index.
class DesignWeights {
 public:
  DesignWeights() = default;
  explicit DesignWeights(std::vector<double> w);

  static DesignWeights uniform(std::size_t k);
  static DesignWeights uniform_on(std::size_t k, const IndexSet& support);
  /// Normalizes a nonnegative vector with positive sum.
  static DesignWeights normalized(std::vector<double> w);
  static DesignWeights point_mass(std::size_t k, std::size_t at);

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  const std::vector<double>& values() const noexcept { return w_; }
  IndexSet support() const;

 private:
  std::vector<double> w_;
};

// -------------------------------------------------------------- matrix --

/// Symmetric positive semidefinite d x d matrix.
class SpdMatrix {
 public:
  explicit SpdMatrix(Mat a);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(a_.rows()); }
  const Mat& matrix() const noexcept { return a_; }
  double trace() const { return a_.trace(); }
  double min_eigenvalue() const;

  SpdMatrix operator*(double s) const { return SpdMatrix(a_ * s); }

 private:
  Mat a_;
};

/// Factorization of A + ridge*I used for repeated x^T (A + ridge I)^{-1} x
/// evaluations. Cholesky first; on failure an eigendecomposition whose
/// eigenvalues are clipped below 1e-12 * lambda_max. With ridge = 0 a
/// numerically singular A throws Singular.
class SpdSolver {
 public:
  SpdSolver(const SpdMatrix& a, double ridge = 0.0);

  double quad(const Vec& x) const;
  Vec solve(const Vec& x) const;
  std::size_t dim() const noexcept { return static_cast<std::size_t>(n_); }

 private:
  Eigen::Index n_ = 0;
  std::optional<Eigen::LLT<Mat>> llt_;
  Mat eig_vectors_;
  Vec eig_inv_values_;
};

/// Default ridge used by solvers: 1e-10 * trace(A) / d.
double default_ridge(const SpdMatrix& a);

/// x^T (A + ridge I)^{-1} x.
double inv_quad(const SpdMatrix& a, const Vec& x, double ridge = 0.0);

/// sum_i c_i x_i x_i^T.
SpdMatrix weighted_gram(const ArmSet& arms, const std::vector<double>& coeffs);

/// H_lambda(theta) = sum_x lambda_x mudot(x^T theta) x x^T.
SpdMatrix fisher_weighted(const ArmSet& arms, const DesignWeights& weights, const Theta& theta);

/// H_t(theta) = sum_s mudot(x_s^T theta) x_s x_s^T from aggregated counts.
SpdMatrix fisher_counts(const ArmSet& arms, const PullLog& pulls, const Theta& theta);

/// max_{x in active} ||x||^2_{H_lambda(theta)^{-1}}.
double g_value(const ArmSet& arms, const IndexSet& active, const DesignWeights& weights,
               const Theta& theta, double ridge = 0.0);

/// max_{x in active} mudot(x^T theta)^2 ||x||^2_{H_lambda(theta)^{-1}}.
double h_value(const ArmSet& arms, const IndexSet& active, const DesignWeights& weights,
               const Theta& theta, double ridge = 0.0);

}  // namespace logbandit
