#include "logbandit/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <spdlog/spdlog.h>

namespace logbandit {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

// V(lambda)^{-1} via Cholesky; RankDeficient if V is numerically singular.
Mat inverse_gram(const Mat& x, const Vec& lam) {
  const Mat v = x.transpose() * lam.asDiagonal() * x;
  Eigen::LLT<Mat> llt(v);
  const double scale = std::max(v.diagonal().maxCoeff(), 1e-300);
  if (llt.info() != Eigen::Success ||
      llt.matrixLLT().diagonal().array().square().minCoeff() <= 1e-13 * scale) {
    throw Error(ErrorCode::RankDeficient, "design matrix is singular on the current support");
  }
  return llt.solve(Mat::Identity(v.rows(), v.cols()));
}

Vec leverages(const Mat& x, const Mat& vinv) {
  return ((x * vinv).array() * x.array()).rowwise().sum();
}

}  // namespace

// ------------------------------------------------------------ D-optimal --

IndexSet initial_support(const ArmSet& arms) {
  const Mat& x = arms.matrix();
  const auto d = x.cols();
  const double scale = x.rowwise().norm().maxCoeff();
  if (!(scale > 0.0)) throw Error(ErrorCode::RankDeficient, "all arms are zero");
  Mat q = Mat::Identity(d, d);
  IndexSet chosen;
  for (Eigen::Index j = 0; j < d; ++j) {
    const Vec proj = x * q.col(j);
    Eigen::Index best = 0;
    proj.cwiseAbs().maxCoeff(&best);
    if (std::abs(proj(best)) <= 1e-10 * scale) {
      throw Error(ErrorCode::RankDeficient,
                  "arms span only " + std::to_string(j) + " of " + std::to_string(d) + " dimensions");
    }
    chosen.push_back(static_cast<std::size_t>(best));
    Vec w = q.transpose() * x.row(best).transpose();
    w.head(j).setZero();
    const double wn = w.norm();
    const double sign = w(j) >= 0.0 ? 1.0 : -1.0;
    Vec u = w;
    u(j) += sign * wn;
    q -= (q * u) * u.transpose() / (wn * (std::abs(w(j)) + wn));
  }
  std::sort(chosen.begin(), chosen.end());
  chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
  return chosen;
}

DesignSolution away_step_design(const ArmSet& arms, const DesignWeights& init, double eps,
                                int max_iter) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  if (init.size() != arms.size()) {
    throw Error(ErrorCode::DimensionMismatch, "initial weights must be indexed by the arm set");
  }
  const Mat& x = arms.matrix();
  const double d = static_cast<double>(arms.dim());

  if (arms.dim() == 1) {
    Eigen::Index best = 0;
    x.col(0).cwiseAbs().maxCoeff(&best);
    if (x(best, 0) == 0.0) throw Error(ErrorCode::RankDeficient, "all arms are zero");
    return {DesignWeights::point_mass(arms.size(), static_cast<std::size_t>(best)), 1.0, 0, 0.0,
            true};
  }

  Vec lam = Eigen::Map<const Vec>(init.values().data(), idx(init.size()));
  int it = 0;
  double gap = 0.0;
  Vec omega;
  for (;; ++it) {
    omega = leverages(x, inverse_gram(x, lam));
    Eigen::Index kp = 0;
    const double eps_plus = (omega.maxCoeff(&kp) - d) / d;
    Eigen::Index km = -1;
    double eps_minus = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < lam.size(); ++k) {
      if (lam(k) > 0.0 && (d - omega(k)) / d > eps_minus) {
        eps_minus = (d - omega(k)) / d;
        km = k;
      }
    }
    gap = std::max(eps_plus, eps_minus);
    if (gap <= eps) break;
    if (it >= max_iter) {
      spdlog::warn("away_step_design: stopped after {} iterations, certificate gap {}", it, gap);
      return {DesignWeights::normalized(std::vector<double>(lam.data(), lam.data() + lam.size())),
              omega.maxCoeff(), it, gap, false};
    }
    if (eps_plus >= eps_minus) {
      const double psi = (omega(kp) - d) / ((d - 1.0) * omega(kp));
      lam(kp) += psi;
      lam /= 1.0 + psi;
    } else {
      const double psi_star = (omega(km) - d) / ((d - 1.0) * omega(km));
      if (psi_star <= -lam(km)) {
        const double psi = -lam(km);
        lam(km) = 0.0;
        lam /= 1.0 + psi;
      } else {
        lam(km) += psi_star;
        lam /= 1.0 + psi_star;
      }
    }
  }
  std::vector<double> w(lam.data(), lam.data() + lam.size());
  for (double& v : w) v = std::max(v, 0.0);
  return {DesignWeights::normalized(std::move(w)), omega.maxCoeff(), it, std::max(gap, 0.0), true};
}

DesignSolution two_approx_design(const ArmSet& arms) {
  const IndexSet support = initial_support(arms);
  return away_step_design(arms, DesignWeights::uniform_on(arms.size(), support), 1.0);
}

// ------------------------------------------------------------ weighted G --

namespace {

struct Reduced {
  Mat y;  // K x r, rows in a basis of span{y_i}
};

Reduced reduce_to_span(const Mat& y) {
  Eigen::JacobiSVD<Mat> svd(y, Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv(0) > 0.0)) throw Error(ErrorCode::RankDeficient, "all vectors are zero");
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > 1e-10 * sv(0)) ++rank;
  }
  if (rank == y.cols()) return {y};
  spdlog::debug("weighted_g_design: vectors span {} of {} dimensions; solving on the span", rank,
                y.cols());
  return {y * svd.matrixV().leftCols(rank)};
}

// q_i = w_i y_i^T A(lambda)^{-1} y_i, or empty if A is not positive definite.
bool objective_terms(const Mat& z, const Mat& y, const Vec& lam, Vec& q, Mat& ainv) {
  const Mat a = y.transpose() * lam.asDiagonal() * y;
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success) return false;
  const double scale = std::max(a.diagonal().maxCoeff(), 1e-300);
  if (llt.matrixLLT().diagonal().array().square().minCoeff() <= 1e-15 * scale) return false;
  ainv = llt.solve(Mat::Identity(a.rows(), a.cols()));
  q = ((z * ainv).array() * z.array()).rowwise().sum();
  return true;
}

Mat kron_rows(const Mat& a) {
  const auto d = a.cols();
  Mat out(a.rows(), d * d);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index p = 0; p < d; ++p) {
      out.row(i).segment(p * d, d) = a(i, p) * a.row(i);
    }
  }
  return out;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

struct RawSolution {
  Vec lam;
  int iterations = 0;
  double gap = 0.0;
  bool converged = true;
};

double barrier_value(const Mat& z, const Mat& y, const Vec& lam, double s, double t) {
  if ((lam.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
  Vec q;
  Mat ainv;
  if (!objective_terms(z, y, lam, q, ainv)) return std::numeric_limits<double>::infinity();
  const Vec r = s - q.array();
  if ((r.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
  return t * s - r.array().log().sum() - lam.array().log().sum();
}

// Barrier method on min s  s.t.  q_i(lambda) <= s, lambda in the simplex.
// The lambda-block of the Newton matrix is diag(1/lambda^2) + W C W^T with
// W = [y_j kron y_j] (K x r^2), which the solve exploits through Woodbury.
RawSolution solve_barrier(const Mat& y, const Vec& w, double tol, int max_newton) {
  const auto k = y.rows();
  const Mat z = w.cwiseSqrt().asDiagonal() * y;
  const Mat wk = kron_rows(y);

  RawSolution out;
  Vec lam = Vec::Constant(k, 1.0 / static_cast<double>(k));
  Vec q;
  Mat ainv;
  if (!objective_terms(z, y, lam, q, ainv)) {
    throw Error(ErrorCode::RankDeficient, "vectors do not span");
  }
  double s = 1.1 * q.maxCoeff() + 1e-12;
  const double kk = static_cast<double>(k);
  double t = 2.0 * kk / (0.1 * s);
  int newton = 0;

  for (;;) {
    for (int inner = 0; inner < 200; ++inner) {
      if (newton >= max_newton) {
        out.converged = false;
        break;
      }
      objective_terms(z, y, lam, q, ainv);
      const Vec rr = s - q.array();
      const Vec inv_r = rr.cwiseInverse();
      const Vec inv_r2 = inv_r.cwiseAbs2();
      const Mat mz = z * ainv;  // rows (A^{-1} z_i)^T
      const Mat vk = kron_rows(mz);
      const Mat nmat = ainv * (z.transpose() * inv_r.asDiagonal() * z) * ainv;
      const Mat c = 2.0 * kron(ainv, nmat) + vk.transpose() * inv_r2.asDiagonal() * vk;
      const Vec cs = vk.transpose() * inv_r2;

      const Vec gl = -(wk * (vk.transpose() * inv_r)) - lam.cwiseInverse();
      const double gs = t - inv_r.sum();
      const double hss = inv_r2.sum();

      // Newton system in scaled variables d(lambda) = lambda .* u, ds = sigma * v,
      // so that the diagonal of the reduced matrix is O(1).
      const double sigma = 1.0 / std::sqrt(hss);
      const Mat bt = lam.asDiagonal() * wk;
      Mat kkt = Mat::Zero(k + 2, k + 2);
      kkt.topLeftCorner(k, k) = bt * c * bt.transpose();
      kkt.topLeftCorner(k, k).diagonal().array() += 1.0;
      const Vec hs = sigma * (bt * cs);
      kkt.block(0, k, k, 1) = hs;
      kkt.block(k, 0, 1, k) = hs.transpose();
      kkt(k, k) = 1.0;
      kkt.block(0, k + 1, k, 1) = lam;
      kkt.block(k + 1, 0, 1, k) = lam.transpose();
      Vec rhs(k + 2);
      rhs.head(k) = -lam.cwiseProduct(gl);
      rhs(k) = -sigma * gs;
      rhs(k + 1) = 0.0;
      const Vec sol = kkt.partialPivLu().solve(rhs);
      const Vec dl = lam.cwiseProduct(sol.head(k));
      const double ds = sigma * sol(k);
      const double dec = -(gl.dot(dl) + gs * ds);
      ++newton;
      if (!(dec / 2.0 >= 1e-10)) break;

      const double f0 = barrier_value(z, y, lam, s, t);
      double step = 1.0;
      while (barrier_value(z, y, lam + step * dl, s + step * ds, t) > f0 - 0.25 * step * dec) {
        step *= 0.5;
        if (step < 1e-14) break;
      }
      if (step < 1e-14) break;
      lam += step * dl;
      s += step * ds;
    }
    out.gap = 2.0 * kk / (t * s);
    if (!out.converged || out.gap < tol) break;
    t *= 8.0;
  }
  out.lam = lam;
  out.iterations = newton;
  return out;
}

RawSolution solve_frank_wolfe(const Mat& y, const Vec& w, double tol, int max_iter) {
  const auto k = y.rows();
  const Mat z = w.cwiseSqrt().asDiagonal() * y;
  RawSolution out;
  Vec lam = Vec::Constant(k, 1.0 / static_cast<double>(k));
  Vec best_lam = lam;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> history;
  Vec q;
  Mat ainv;
  int it = 0;
  out.converged = false;
  for (; it < max_iter; ++it) {
    if (!objective_terms(z, y, lam, q, ainv)) throw Error(ErrorCode::RankDeficient, "singular design");
    Eigen::Index istar = 0;
    const double f = q.maxCoeff(&istar);
    const Vec proj = y * (ainv * z.row(istar).transpose());
    Eigen::Index jstar = 0;
    const double top = proj.cwiseAbs2().maxCoeff(&jstar);
    if (f < best) {
      best = f;
      best_lam = lam;
      out.gap = std::max(0.0, (top - f) / f);
    }
    history.push_back(best);
    if (history.size() > 25) {
      const double old = history[history.size() - 26];
      if ((old - best) / best < tol) {
        out.converged = true;
        break;
      }
    }
    const double alpha = 2.0 / (static_cast<double>(it) + 3.0);
    lam *= 1.0 - alpha;
    lam(jstar) += alpha;
  }
  out.lam = best_lam;
  out.iterations = it;
  return out;
}

}  // namespace

DesignSolution weighted_g_design(const Mat& vectors, const std::vector<double>& point_weights,
                                 const DesignOptions& options) {
  const auto k = vectors.rows();
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "no design points");
  if (point_weights.size() != static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::DimensionMismatch, "one point weight per vector required");
  }
  Vec w(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    w(i) = point_weights[static_cast<std::size_t>(i)];
    if (!(w(i) > 0.0) || !std::isfinite(w(i))) {
      throw Error(ErrorCode::InvalidArgument, "point weights must be positive and finite");
    }
  }
  const Reduced red = reduce_to_span(vectors);
  const Mat& y = red.y;

  RawSolution raw;
  if (k == 1 || y.cols() == 1) {
    // On a line the design matrix is scalar; all mass on the longest vector is optimal.
    Eigen::Index best = 0;
    y.rowwise().squaredNorm().maxCoeff(&best);
    raw.lam = Vec::Zero(k);
    raw.lam(best) = 1.0;
  } else if (options.method == WeightedMethod::Barrier) {
    raw = solve_barrier(y, w, options.tol, options.max_iter > 0 ? options.max_iter : 2000);
  } else {
    const int cap = options.max_iter > 0 ? options.max_iter
                                         : static_cast<int>(20 * y.cols() * k);
    raw = solve_frank_wolfe(y, w, options.tol, cap);
  }
  if (!raw.converged) {
    spdlog::warn("weighted_g_design: not converged after {} iterations (gap {})", raw.iterations,
                 raw.gap);
  }

  const Mat z = w.cwiseSqrt().asDiagonal() * y;
  Vec lam = raw.lam.cwiseMax(0.0);
  Vec pruned = (lam.array() < options.prune).select(0.0, lam);
  Vec q;
  Mat ainv;
  if (pruned.sum() > 0.0 && objective_terms(z, y, pruned / pruned.sum(), q, ainv)) {
    lam = pruned / pruned.sum();
  } else {
    lam /= lam.sum();
    objective_terms(z, y, lam, q, ainv);
  }
  std::vector<double> out(lam.data(), lam.data() + lam.size());
  return {DesignWeights::normalized(std::move(out)), q.maxCoeff(), raw.iterations, raw.gap,
          raw.converged};
}

DesignSolution weighted_g_design(const ArmSet& vectors, const std::vector<double>& point_weights,
                                 const DesignOptions& options) {
  return weighted_g_design(vectors.matrix(), point_weights, options);
}

namespace {

// Solves on the active rows with y = sqrt(v) x and weights wt, then scatters
// the weights back to the full index range.
DesignSolution solve_on(const ArmSet& arms, const IndexSet& active, const std::vector<double>& v,
                        const std::vector<double>& wt, const DesignOptions& options) {
  if (active.empty()) throw Error(ErrorCode::InvalidArgument, "active set is empty");
  Mat y(idx(active.size()), idx(arms.dim()));
  std::vector<double> wa(active.size());
  for (std::size_t r = 0; r < active.size(); ++r) {
    const std::size_t i = active[r];
    if (i >= arms.size()) throw Error(ErrorCode::InvalidArgument, "active index out of range");
    y.row(idx(r)) = std::sqrt(v[i]) * arms.matrix().row(idx(i));
    wa[r] = wt[i];
  }
  DesignSolution sol = weighted_g_design(y, wa, options);
  std::vector<double> full(arms.size(), 0.0);
  for (std::size_t r = 0; r < active.size(); ++r) full[active[r]] = sol.weights[r];
  sol.weights = DesignWeights::normalized(std::move(full));
  return sol;
}

std::vector<double> mudots(const ArmSet& arms, const Theta& theta) {
  const Vec z = arms.natural(theta);
  std::vector<double> v(arms.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = mudot(z(idx(i)));
  return v;
}

std::vector<double> inverse(std::vector<double> v) {
  for (double& x : v) x = 1.0 / x;
  return v;
}

}  // namespace

DesignSolution g_optimal(const ArmSet& arms, const IndexSet& active, const Theta& theta,
                         const DesignOptions& options) {
  const auto v = mudots(arms, theta);
  return solve_on(arms, active, v, inverse(v), options);
}

DesignSolution h_optimal(const ArmSet& arms, const IndexSet& active, const Theta& theta,
                         const DesignOptions& options) {
  const auto v = mudots(arms, theta);
  return solve_on(arms, active, v, v, options);
}

DesignSolution naive_warmup_design(const ArmSet& arms, double s_bound,
                                   const DesignOptions& options) {
  if (!(s_bound >= 0.0)) throw Error(ErrorCode::InvalidArgument, "S must be nonnegative");
  std::vector<double> v(arms.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = mudot(arms.norm(i) * s_bound);
  return solve_on(arms, arms.all(), v, inverse(v), options);
}

DesignSolution pessimistic_design(const ArmSet& arms, const std::vector<double>& mudot_pes,
                                  const DesignOptions& options) {
  if (mudot_pes.size() != arms.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one variance estimate per arm required");
  }
  for (double v : mudot_pes) {
    if (!(v > 0.0) || v > 0.25) {
      throw Error(ErrorCode::InvalidArgument, "pessimistic variances must lie in (0, 1/4]");
    }
  }
  return solve_on(arms, arms.all(), mudot_pes, inverse(mudot_pes), options);
}

DesignWeights mix_designs(const DesignWeights& lam_h, std::uint64_t n_h,
                          const DesignWeights& lam_g, std::uint64_t n_g) {
  if (lam_h.size() != lam_g.size()) {
    throw Error(ErrorCode::DimensionMismatch, "designs over different arm sets");
  }
  if (n_h + n_g == 0) throw Error(ErrorCode::InvalidArgument, "n_H + n_G must be positive");
  const double total = static_cast<double>(n_h + n_g);
  const double ah = static_cast<double>(n_h) / total;
  const double ag = static_cast<double>(n_g) / total;
  std::vector<double> w(lam_h.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::max(ah * lam_h[i], ag * lam_g[i]);
  return DesignWeights::normalized(std::move(w));
}

std::uint64_t rounding_min_budget(std::size_t support_size, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  return static_cast<std::uint64_t>(
      std::ceil(static_cast<double>(support_size) * (1.0 + eps) / eps));
}

RoundingPlan round_design(std::uint64_t n, const DesignWeights& lam, double eps) {
  const IndexSet support = lam.support();
  const std::uint64_t r = rounding_min_budget(support.size(), eps);
  if (n < r) {
    throw Error(ErrorCode::BudgetTooSmall,
                "budget " + std::to_string(n) + " below r(eps) = " + std::to_string(r));
  }
  RoundingPlan plan{std::vector<std::uint64_t>(lam.size(), 0), n, eps};
  const double nn = static_cast<double>(n);
  std::uint64_t used = 0;
  for (std::size_t i : support) {
    plan.counts[i] = static_cast<std::uint64_t>(std::ceil(nn * lam[i] / (1.0 + eps)));
    used += plan.counts[i];
  }
  if (used > n) throw Error(ErrorCode::BudgetTooSmall, "rounding overflow");
  IndexSet order = support;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lam[a] > lam[b]; });
  for (std::size_t j = 0; used < n; j = (j + 1) % order.size(), ++used) ++plan.counts[order[j]];
  return plan;
}

}  // namespace logbandit
