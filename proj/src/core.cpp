#include "logbandit/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace logbandit {

// ---------------------------------------------------------------- link --

double mu(double z) noexcept {
  const double e = std::exp(-std::abs(z));
  return z >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
}

double mudot(double z) noexcept {
  const double e = std::exp(-std::abs(z));
  const double s = 1.0 + e;
  return e / (s * s);
}

double softplus(double z) noexcept {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double logit(double p) noexcept { return std::log(p) - std::log1p(-p); }

// ------------------------------------------------------------- PullLog --

void PullLog::add(std::size_t arm, std::uint64_t pulls, std::uint64_t successes) {
  if (arm >= pulls_.size()) {
    throw Error(ErrorCode::InvalidArgument, "arm index " + std::to_string(arm) + " out of range");
  }
  if (successes > pulls) {
    throw Error(ErrorCode::InvalidArgument, "successes exceed pulls");
  }
  pulls_[arm] += pulls;
  successes_[arm] += successes;
  total_ += pulls;
}

void PullLog::merge(const PullLog& other) {
  if (other.num_arms() != num_arms()) {
    throw Error(ErrorCode::DimensionMismatch, "pull logs over different arm sets");
  }
  for (std::size_t i = 0; i < num_arms(); ++i) add(i, other.pulls_[i], other.successes_[i]);
}

std::size_t PullLog::t_eff() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(pulls_.begin(), pulls_.end(), [](std::uint64_t n) { return n > 0; }));
}

// ---------------------------------------------------------------- arms --

ArmSet::ArmSet(Mat rows) : x_(std::move(rows)) {
  if (x_.rows() == 0 || x_.cols() == 0) {
    throw Error(ErrorCode::InvalidArgument, "arm set must be non-empty with d >= 1");
  }
  if (!x_.allFinite()) throw Error(ErrorCode::InvalidArgument, "arm coordinates must be finite");
  for (Eigen::Index i = 0; i < x_.rows(); ++i) {
    if (x_.row(i).norm() > 1.0 + 1e-12) {
      throw Error(ErrorCode::InvalidArgument,
                  "arm " + std::to_string(i) + " has norm " + std::to_string(x_.row(i).norm()) + " > 1");
    }
  }
}

ArmSet ArmSet::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "arm set must be non-empty");
  const std::size_t d = rows.front().size();
  Mat x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) throw Error(ErrorCode::DimensionMismatch, "ragged arm rows");
    for (std::size_t j = 0; j < d; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return ArmSet(std::move(x));
}

Vec ArmSet::natural(const Theta& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dim()) {
    throw Error(ErrorCode::DimensionMismatch, "theta dimension " + std::to_string(theta.size()) +
                                                  " != arm dimension " + std::to_string(dim()));
  }
  return x_ * theta;
}

IndexSet ArmSet::all() const {
  IndexSet idx(size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

ArmSet ArmSet::subset(const IndexSet& idx) const {
  Mat y(static_cast<Eigen::Index>(idx.size()), x_.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    y.row(static_cast<Eigen::Index>(r)) = x_.row(static_cast<Eigen::Index>(idx.at(r)));
  }
  return ArmSet(std::move(y));
}

std::size_t ArmSet::rank() const {
  Eigen::JacobiSVD<Mat> svd(x_);
  const Vec& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > 1e-10 * s(0)) ++r;
  }
  return r;
}

// ------------------------------------------------------------- weights --

DesignWeights::DesignWeights(std::vector<double> w) : w_(std::move(w)) {
  if (w_.empty()) throw Error(ErrorCode::InvalidArgument, "design weights must be non-empty");
  double sum = 0.0;
  for (double v : w_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, "design weights must be finite and nonnegative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "design weights sum to " + std::to_string(sum));
  }
}

DesignWeights DesignWeights::uniform(std::size_t k) {
  return DesignWeights(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

DesignWeights DesignWeights::uniform_on(std::size_t k, const IndexSet& support) {
  if (support.empty()) throw Error(ErrorCode::InvalidArgument, "empty support");
  std::vector<double> w(k, 0.0);
  for (std::size_t i : support) w.at(i) = 1.0;
  return normalized(std::move(w));
}

DesignWeights DesignWeights::normalized(std::vector<double> w) {
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative design weight");
    sum += v;
  }
  if (!(sum > 0.0)) throw Error(ErrorCode::InvalidArgument, "design weights have zero mass");
  for (double& v : w) v /= sum;
  return DesignWeights(std::move(w));
}

DesignWeights DesignWeights::point_mass(std::size_t k, std::size_t at) {
  std::vector<double> w(k, 0.0);
  w.at(at) = 1.0;
  return DesignWeights(std::move(w));
}

IndexSet DesignWeights::support() const {
  IndexSet s;
  for (std::size_t i = 0; i < w_.size(); ++i) {
    if (w_[i] > 0.0) s.push_back(i);
  }
  return s;
}

// -------------------------------------------------------------- matrix --

SpdMatrix::SpdMatrix(Mat a) : a_(std::move(a)) {
  if (a_.rows() != a_.cols()) throw Error(ErrorCode::DimensionMismatch, "matrix is not square");
  if (!a_.allFinite()) throw Error(ErrorCode::InvalidArgument, "matrix has non-finite entries");
  const double scale = std::max(a_.cwiseAbs().maxCoeff(), 1e-300);
  if ((a_ - a_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(ErrorCode::InvalidArgument, "matrix is not symmetric");
  }
  a_ = 0.5 * (a_ + a_.transpose());
}

double SpdMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Mat> es(a_, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

SpdSolver::SpdSolver(const SpdMatrix& a, double ridge) : n_(static_cast<Eigen::Index>(a.dim())) {
  if (ridge < 0.0) throw Error(ErrorCode::InvalidArgument, "ridge must be nonnegative");
  Mat m = a.matrix();
  m.diagonal().array() += ridge;
  Eigen::LLT<Mat> llt(m);
  const double diag_max = m.diagonal().maxCoeff();
  if (llt.info() == Eigen::Success &&
      llt.matrixLLT().diagonal().array().square().minCoeff() > 1e-12 * diag_max) {
    llt_ = std::move(llt);
    return;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  const Vec& ev = es.eigenvalues();
  const double top = ev(ev.size() - 1);
  const double floor = 1e-12 * std::max(top, 0.0);
  if (!(top > 0.0) || (ridge == 0.0 && ev(0) <= floor)) {
    throw Error(ErrorCode::Singular, "matrix is singular; supply a ridge or a spanning design");
  }
  eig_vectors_ = es.eigenvectors();
  eig_inv_values_ = ev.unaryExpr([floor](double v) { return 1.0 / std::max(v, floor); });
}

Vec SpdSolver::solve(const Vec& x) const {
  if (x.size() != n_) throw Error(ErrorCode::DimensionMismatch, "vector dimension mismatch");
  if (llt_) return llt_->solve(x);
  return eig_vectors_ * (eig_inv_values_.asDiagonal() * (eig_vectors_.transpose() * x));
}

double SpdSolver::quad(const Vec& x) const {
  if (x.size() != n_) throw Error(ErrorCode::DimensionMismatch, "vector dimension mismatch");
  if (llt_) {
    const Vec y = llt_->matrixL().solve(x);
    return y.squaredNorm();
  }
  const Vec y = eig_vectors_.transpose() * x;
  return (y.array().square() * eig_inv_values_.array()).sum();
}

double default_ridge(const SpdMatrix& a) {
  return 1e-10 * a.trace() / static_cast<double>(a.dim());
}

double inv_quad(const SpdMatrix& a, const Vec& x, double ridge) {
  return SpdSolver(a, ridge).quad(x);
}

SpdMatrix weighted_gram(const ArmSet& arms, const std::vector<double>& coeffs) {
  if (coeffs.size() != arms.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one coefficient per arm required");
  }
  const Mat& x = arms.matrix();
  const Eigen::Map<const Vec> c(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
  return SpdMatrix(x.transpose() * c.asDiagonal() * x);
}

SpdMatrix fisher_weighted(const ArmSet& arms, const DesignWeights& weights, const Theta& theta) {
  if (weights.size() != arms.size()) {
    throw Error(ErrorCode::DimensionMismatch, "weights must be indexed by the arm set");
  }
  const Vec z = arms.natural(theta);
  std::vector<double> c(arms.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] = weights[i] * mudot(z(static_cast<Eigen::Index>(i)));
  }
  return weighted_gram(arms, c);
}

SpdMatrix fisher_counts(const ArmSet& arms, const PullLog& pulls, const Theta& theta) {
  if (pulls.num_arms() != arms.size()) {
    throw Error(ErrorCode::DimensionMismatch, "pull log must be indexed by the arm set");
  }
  const Vec z = arms.natural(theta);
  std::vector<double> c(arms.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] = static_cast<double>(pulls.pulls(i)) * mudot(z(static_cast<Eigen::Index>(i)));
  }
  return weighted_gram(arms, c);
}

namespace {

double max_weighted_inv_quad(const ArmSet& arms, const IndexSet& active,
                             const DesignWeights& weights, const Theta& theta, double ridge,
                             bool h_weighting) {
  if (active.empty()) throw Error(ErrorCode::InvalidArgument, "active set is empty");
  const SpdSolver solver(fisher_weighted(arms, weights, theta), ridge);
  const Vec z = arms.natural(theta);
  double best = 0.0;
  for (std::size_t i : active) {
    double v = solver.quad(arms.arm(i));
    if (h_weighting) {
      const double m = mudot(z(static_cast<Eigen::Index>(i)));
      v *= m * m;
    }
    best = std::max(best, v);
  }
  return best;
}

}  // namespace

double g_value(const ArmSet& arms, const IndexSet& active, const DesignWeights& weights,
               const Theta& theta, double ridge) {
  return max_weighted_inv_quad(arms, active, weights, theta, ridge, false);
}

double h_value(const ArmSet& arms, const IndexSet& active, const DesignWeights& weights,
               const Theta& theta, double ridge) {
  return max_weighted_inv_quad(arms, active, weights, theta, ridge, true);
}

}  // namespace logbandit
