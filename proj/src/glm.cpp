#include "logbandit/glm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace logbandit {

void check_delta(double delta) {
  if (!(delta > 0.0) || delta > std::exp(-1.0)) {
    throw Error(ErrorCode::InvalidDelta,
                "delta must lie in (0, 1/e], got " + std::to_string(delta));
  }
}

double gamma(std::size_t d, std::size_t n, double delta) {
  check_delta(delta);
  if (d < 1 || n < 1) throw Error(ErrorCode::InvalidArgument, "gamma needs d >= 1 and n >= 1");
  const double log_term = std::log(6.0 * (2.0 + static_cast<double>(n)) / delta);
  return std::max(static_cast<double>(d) + log_term, 6.1 * 6.1 * log_term);
}

namespace {

struct CountData {
  Mat x;      // pulled arms only
  Vec n;      // pulls
  Vec s;      // successes
};

CountData pulled_arms(const ArmSet& arms, const PullLog& pulls) {
  if (pulls.num_arms() != arms.size()) {
    throw Error(ErrorCode::DimensionMismatch, "pull log must be indexed by the arm set");
  }
  IndexSet idx;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (pulls.pulls(i) > 0) idx.push_back(i);
  }
  CountData c;
  c.x.resize(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(arms.dim()));
  c.n.resize(static_cast<Eigen::Index>(idx.size()));
  c.s.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto e = static_cast<Eigen::Index>(r);
    c.x.row(e) = arms.matrix().row(static_cast<Eigen::Index>(idx[r]));
    c.n(e) = static_cast<double>(pulls.pulls(idx[r]));
    c.s(e) = static_cast<double>(pulls.successes(idx[r]));
  }
  return c;
}

// n*mu(z) - s, evaluated so that the cancellation happens on the smaller side.
double residual(double n, double s, double z) {
  return z > 0.0 ? (n - s) - n * mu(-z) : n * mu(z) - s;
}

double objective(const CountData& c, const Theta& theta, double l2) {
  const Vec z = c.x * theta;
  double f = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    f += c.n(i) * softplus(z(i)) - c.s(i) * z(i);
  }
  return f + 0.5 * l2 * theta.squaredNorm();
}

Vec gradient(const CountData& c, const Theta& theta, double l2) {
  const Vec z = c.x * theta;
  Vec r(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) r(i) = residual(c.n(i), c.s(i), z(i));
  return c.x.transpose() * r + l2 * theta;
}

Mat hessian(const CountData& c, const Theta& theta, double l2) {
  const Vec z = c.x * theta;
  Vec w(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) w(i) = c.n(i) * mudot(z(i));
  Mat h = c.x.transpose() * w.asDiagonal() * c.x;
  h.diagonal().array() += l2;
  return h;
}

// Stationarity residual of min f over the (optional) ball.
double kkt_residual(const Vec& grad, const Theta& theta, const std::optional<double>& cap) {
  if (cap && *cap > 0.0) {
    const double nrm = theta.norm();
    if (nrm >= *cap * (1.0 - 1e-12)) {
      const Vec u = theta / nrm;
      const double radial = grad.dot(u);
      if (radial < 0.0) return (grad - radial * u).norm();
    }
  }
  return grad.norm();
}

// Damped Newton on the l2-regularized negative log-likelihood, in place.
// Returns the iteration count.
int newton(const CountData& data, Theta& theta, double l2, double tol, int max_iter) {
  Vec grad = gradient(data, theta, l2);
  double f = objective(data, theta, l2);
  int it = 0;
  for (; it < max_iter; ++it) {
    if (grad.norm() <= tol) break;
    Mat h = hessian(data, theta, l2);
    Eigen::LLT<Mat> llt(h);
    if (llt.info() != Eigen::Success) {
      h.diagonal().array() += 1e-12 * std::max(h.trace(), 1.0);
      llt.compute(h);
    }
    const Vec step = -llt.solve(grad);

    double alpha = 1.0;
    bool accepted = false;
    Theta candidate;
    double f_candidate = 0.0;
    // Near the optimum the predicted decrease is below the roundoff of f and
    // Armijo would accept noise; judge the full step by the gradient instead.
    const bool tiny = std::abs(grad.dot(step)) < 1e-11 * std::max(1.0, std::abs(f));
    for (int ls = 0; !tiny && ls < 60; ++ls, alpha *= 0.5) {
      candidate = theta + alpha * step;
      f_candidate = objective(data, candidate, l2);
      if (f_candidate <= f + 1e-4 * alpha * grad.dot(step)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Objective differences are below roundoff; accept the full step only
      // while it still shrinks the gradient.
      candidate = theta + step;
      const Vec g_candidate = gradient(data, candidate, l2);
      if (g_candidate.norm() >= grad.norm()) break;
      f_candidate = objective(data, candidate, l2);
    }
    theta = candidate;
    f = f_candidate;
    grad = gradient(data, theta, l2);
  }
  return it;
}

}  // namespace

Vec mle_gradient(const ArmSet& arms, const PullLog& pulls, const Theta& theta, double l2_eps) {
  return gradient(pulled_arms(arms, pulls), theta, l2_eps);
}

MleResult fit_mle(const ArmSet& arms, const PullLog& pulls, const MleOptions& options) {
  if (pulls.total() < 1) throw Error(ErrorCode::InvalidArgument, "fit_mle needs at least one pull");
  if (options.l2_eps < 0.0) throw Error(ErrorCode::InvalidArgument, "l2_eps must be nonnegative");
  const CountData data = pulled_arms(arms, pulls);
  const auto d = static_cast<Eigen::Index>(arms.dim());
  if (options.l2_eps == 0.0) {
    Eigen::JacobiSVD<Mat> svd(data.x);
    const Vec& sv = svd.singularValues();
    const Eigen::Index rank = (sv.array() > 1e-10 * sv(0)).count();
    if (rank < d) {
      throw Error(ErrorCode::DegenerateDesign, "pulled arms span dimension " +
                                                   std::to_string(rank) + " < " + std::to_string(d));
    }
  }

  MleResult out;
  out.regularizer_used = options.l2_eps;
  Theta theta = Theta::Zero(d);
  out.iterations = newton(data, theta, options.l2_eps, options.tol, options.max_iter);

  if (options.norm_cap && theta.norm() > *options.norm_cap) {
    // On the boundary the solution is the ridge path point theta(nu) with
    // ||theta(nu)|| = cap; the norm is decreasing in nu, so bisect on log nu.
    const double cap = *options.norm_cap;
    const Theta start = theta;
    double lo = 0.0;
    double hi = 1e-6 * std::max(hessian(data, theta, 0.0).trace(), 1.0);
    Theta at_hi = start;
    for (int k = 0; k < 200; ++k) {
      at_hi = start;
      out.iterations += newton(data, at_hi, options.l2_eps + hi, options.tol, options.max_iter);
      if (at_hi.norm() <= cap) break;
      lo = hi;
      hi *= 4.0;
    }
    theta = at_hi;
    for (int k = 0; k < 200 && theta.norm() < cap * (1.0 - 1e-12); ++k) {
      const double mid = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * hi;
      if (!(mid > lo && mid < hi)) break;
      Theta trial = theta;
      out.iterations += newton(data, trial, options.l2_eps + mid, options.tol, options.max_iter);
      if (trial.norm() > cap) {
        lo = mid;
      } else {
        hi = mid;
        theta = trial;
      }
    }
    theta *= cap / theta.norm();

    // Polish with Newton on the KKT system grad + nu theta = 0, ||theta|| = cap.
    double nu = lo > 0.0 ? std::sqrt(lo * hi) : hi;
    for (int k = 0; k < 8; ++k) {
      const Vec g = gradient(data, theta, options.l2_eps);
      const double before = kkt_residual(g, theta, options.norm_cap);
      Mat j = Mat::Zero(d + 1, d + 1);
      j.topLeftCorner(d, d) = hessian(data, theta, options.l2_eps);
      j.topLeftCorner(d, d).diagonal().array() += nu;
      j.topRightCorner(d, 1) = theta;
      j.bottomLeftCorner(1, d) = theta.transpose();
      Vec rhs(d + 1);
      rhs.head(d) = -(g + nu * theta);
      rhs(d) = -0.5 * (theta.squaredNorm() - cap * cap);
      const Vec step = j.fullPivLu().solve(rhs);
      Theta next = theta + step.head(d);
      next *= cap / next.norm();
      const double after = kkt_residual(gradient(data, next, options.l2_eps), next, options.norm_cap);
      if (!(after < before)) break;
      theta = next;
      nu += step(d);
    }
  }

  const Vec grad = gradient(data, theta, options.l2_eps);
  out.theta_hat = theta;
  out.grad_norm = kkt_residual(grad, theta, options.norm_cap);
  out.converged = out.grad_norm <= options.tol * std::max(1.0, data.n.sum());
  return out;
}

double mean_conf_width(const Vec& x, const SpdMatrix& h, std::size_t t_eff, std::size_t num_arms,
                       double delta, const Theta& theta) {
  check_delta(delta);
  if (static_cast<std::size_t>(x.size()) != h.dim() || x.size() != theta.size()) {
    throw Error(ErrorCode::DimensionMismatch, "x, H and theta must share a dimension");
  }
  const double norm = std::sqrt(inv_quad(h, x));
  const double log_term =
      std::log(2.0 * (2.0 + static_cast<double>(t_eff)) * static_cast<double>(num_arms) / delta);
  return 4.8 * mudot(x.dot(theta)) * norm * std::sqrt(log_term);
}

WarmupCheck warmup_check(const ArmSet& arms, const PullLog& pulls, const Theta& theta,
                         double delta) {
  if (pulls.total() < 1) throw Error(ErrorCode::InvalidArgument, "warmup_check needs pulls");
  const SpdSolver solver(fisher_counts(arms, pulls, theta));
  WarmupCheck out;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (pulls.pulls(i) > 0) out.xi2 = std::max(out.xi2, solver.quad(arms.arm(i)));
  }
  out.threshold = 1.0 / gamma(arms.dim(), pulls.t_eff(), delta);
  out.satisfied = out.xi2 <= out.threshold;
  return out;
}

double kt_estimate(std::uint64_t successes, std::uint64_t n) {
  if (n < 1 || successes > n) throw Error(ErrorCode::InvalidArgument, "need 0 <= H <= N, N >= 1");
  const double h = static_cast<double>(successes);
  const double t = static_cast<double>(n - successes);
  return std::log((h + 0.5) / (t + 0.5));
}

double mle_1d_natural(std::uint64_t successes, std::uint64_t n) {
  if (n < 1 || successes > n) throw Error(ErrorCode::InvalidArgument, "need 0 <= H <= N, N >= 1");
  const double nn = static_cast<double>(n);
  if (successes == n) return std::log((nn - 0.5) / 0.5);
  if (successes == 0) return std::log(0.5 / (nn - 0.5));
  const double h = static_cast<double>(successes);
  return std::log(h / (nn - h));
}

double exact_bias_1d(Estimator estimator, double c, std::uint64_t n) {
  if (n < 1 || n > 1'000'000) throw Error(ErrorCode::InvalidArgument, "N must lie in [1, 1e6]");
  const double log_p = -softplus(-c);  // log mu(c)
  const double log_q = -softplus(c);   // log(1 - mu(c))
  const double nn = static_cast<double>(n);
  const double lg_n = std::lgamma(nn + 1.0);
  // Neumaier-compensated sums of pmf and pmf * estimate.
  double mass = 0.0, mass_c = 0.0, acc = 0.0, acc_c = 0.0;
  auto add = [](double& sum, double& comp, double v) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  };
  for (std::uint64_t h = 0; h <= n; ++h) {
    const double hh = static_cast<double>(h);
    const double log_pmf = lg_n - std::lgamma(hh + 1.0) - std::lgamma(nn - hh + 1.0) +
                           hh * log_p + (nn - hh) * log_q;
    const double pmf = std::exp(log_pmf);
    if (pmf == 0.0) continue;
    const double est = estimator == Estimator::Mle ? mle_1d_natural(h, n) : kt_estimate(h, n);
    add(mass, mass_c, pmf);
    add(acc, acc_c, pmf * est);
  }
  return (acc + acc_c) / (mass + mass_c) - c;
}

}  // namespace logbandit
