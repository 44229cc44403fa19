#include "logbandit/warmup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <spdlog/spdlog.h>

namespace logbandit {

double bernstein_width(double mu_hat, std::uint64_t n, double delta, std::size_t num_arms) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "bernstein_width needs N >= 1");
  const double nn = static_cast<double>(n);
  // log(3 / delta_N) with delta_N = delta / (K N (N + 1)).
  const double c = std::log(3.0 * static_cast<double>(num_arms) * nn * (nn + 1.0) / delta);
  const double var = std::max(mu_hat * (1.0 - mu_hat), 0.0);
  return std::sqrt(2.0 * var * c / nn) + 3.0 * c / nn;
}

Interval natural_bounds(double mu_hat, double width) {
  constexpr double lo_p = 1e-12;
  constexpr double hi_p = 1.0 - 1e-12;
  const double a = logit(std::clamp(mu_hat - width, lo_p, hi_p));
  const double b = logit(std::clamp(mu_hat + width, lo_p, hi_p));
  Interval out;
  out.hi = std::max(std::abs(a), std::abs(b));
  out.lo = (a <= 0.0 && b >= 0.0) ? 0.0 : std::min(std::abs(a), std::abs(b));
  return out;
}

const char* to_string(ArmStatus s) noexcept {
  switch (s) {
    case ArmStatus::Undecided: return "undecided";
    case ArmStatus::Accepted: return "accepted";
    case ArmStatus::Rejected: return "rejected";
  }
  return "unknown";
}

// ------------------------------------------------------------- tracker --

BernsteinTracker::BernsteinTracker(std::size_t num_arms, double delta)
    : delta_(delta), n_(num_arms, 0), h_(num_arms, 0), status_(num_arms, ArmStatus::Undecided) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::InvalidDelta, "delta must lie in (0, 1)");
}

void BernsteinTracker::add(std::size_t arm, std::uint64_t pulls, std::uint64_t successes) {
  if (successes > pulls) throw Error(ErrorCode::InvalidArgument, "successes exceed pulls");
  n_.at(arm) += pulls;
  h_.at(arm) += successes;
}

double BernsteinTracker::mu_hat(std::size_t arm) const {
  const auto n = n_.at(arm);
  return n == 0 ? 0.5 : static_cast<double>(h_[arm]) / static_cast<double>(n);
}

double BernsteinTracker::width(std::size_t arm) const {
  if (n_.at(arm) == 0) return std::numeric_limits<double>::infinity();
  return bernstein_width(mu_hat(arm), n_[arm], delta_, n_.size());
}

Interval BernsteinTracker::bounds(std::size_t arm) const {
  if (n_.at(arm) == 0) return {0.0, std::numeric_limits<double>::infinity()};
  return natural_bounds(mu_hat(arm), width(arm));
}

void BernsteinTracker::set_status(std::size_t arm, ArmStatus s) {
  if (status_.at(arm) != ArmStatus::Undecided && status_[arm] != s) {
    throw Error(ErrorCode::InvalidArgument, "arm status is final once decided");
  }
  status_[arm] = s;
}

std::uint64_t BernsteinTracker::total() const noexcept {
  std::uint64_t t = 0;
  for (auto v : n_) t += v;
  return t;
}

// ----------------------------------------------------------------- WAR --

void WarParams::validate() const {
  if (!(lower > 0.0 && lower < upper && upper <= 2.399)) {
    throw Error(ErrorCode::InvalidArgument, "WAR needs 0 < L < U <= 2.399");
  }
  if (!(ratio > 1.0)) throw Error(ErrorCode::InvalidArgument, "WAR needs r > 1");
  if (!(s_bound > 0.0)) throw Error(ErrorCode::InvalidArgument, "WAR needs S > 0");
  if (batch < 1 || max_pulls_per_arm < 1 || loop_cap < 1) {
    throw Error(ErrorCode::InvalidArgument, "WAR batch, pull cap and loop cap must be positive");
  }
  check_delta(delta);
}

ArmStatus decide_arm(Environment& env, std::size_t arm, BernsteinTracker& tracker,
                     const WarParams& params) {
  if (tracker.status(arm) != ArmStatus::Undecided) return tracker.status(arm);
  for (;;) {
    const std::uint64_t done = tracker.pulls(arm);
    if (done >= params.max_pulls_per_arm) {
      spdlog::warn("WAR: arm {} undecided after {} pulls; rejecting", arm, done);
      tracker.set_status(arm, ArmStatus::Rejected);
      return ArmStatus::Rejected;
    }
    const std::uint64_t n = std::min(params.batch, params.max_pulls_per_arm - done);
    tracker.add(arm, n, env.pull_many(arm, n));
    const Interval b = tracker.bounds(arm);
    if (b.hi < params.upper) {
      tracker.set_status(arm, ArmStatus::Accepted);
      return ArmStatus::Accepted;
    }
    if (b.lo > params.lower) {
      tracker.set_status(arm, ArmStatus::Rejected);
      return ArmStatus::Rejected;
    }
  }
}

double optimistic_natural(const Vec& x, const ConfidenceSummary& summary) {
  double lo = 0.0;
  for (const auto& t : summary.tested) {
    const double zz = t.x.squaredNorm();
    if (zz == 0.0) continue;
    const double c = x.dot(t.x) / zz;
    lo = std::max(lo, std::abs(c) * t.bounds.lo - summary.s_bound * (x - c * t.x).norm());
  }
  return lo;
}

double pessimistic_natural(const Vec& x, const ConfidenceSummary& summary) {
  const double s = summary.s_bound;
  double hi = s * x.norm();
  if (summary.tested.empty()) return hi;
  const auto d = x.size();
  Mat m = Mat::Zero(d, d);
  for (const auto& t : summary.tested) {
    const double zz = t.x.squaredNorm();
    if (zz == 0.0) continue;
    const double c = x.dot(t.x) / zz;
    hi = std::min(hi, std::abs(c) * t.bounds.hi + s * (x - c * t.x).norm());
    const double h = std::max(t.bounds.hi, 1e-12);
    m += t.x * t.x.transpose() / (h * h);
  }
  const double count = static_cast<double>(summary.tested.size());
  m.diagonal().array() += count / (s * s);
  const double ellipsoid = std::sqrt(2.0 * count * inv_quad(SpdMatrix(m), x));
  return std::min(hi, ellipsoid);
}

double optimistic_mudot(const Vec& x, const ConfidenceSummary& summary) {
  return mudot(optimistic_natural(x, summary));
}

double pessimistic_mudot(const Vec& x, const ConfidenceSummary& summary) {
  return mudot(pessimistic_natural(x, summary));
}

std::vector<std::uint64_t> planned_counts(const DesignSolution& design, std::size_t d,
                                          double delta) {
  const std::size_t support = design.weights.support().size();
  const double scale = gamma(d, std::max<std::size_t>(support, 1), delta) * design.objective;
  std::vector<std::uint64_t> counts(design.weights.size(), 0);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (design.weights[i] > 0.0) {
      counts[i] = static_cast<std::uint64_t>(std::ceil(design.weights[i] * scale));
    }
  }
  return counts;
}

double warmup_sample_count(const DesignSolution& design, std::size_t d, std::size_t t_eff,
                           double delta) {
  return design.objective * gamma(d, t_eff, delta);
}

namespace {

// Pulls the planned counts and fits the MLE on exactly those samples.
void execute_plan(Environment& env, const DesignSolution& design, double delta,
                  std::optional<double> cap, WarmupReport& report) {
  const ArmSet& arms = env.arms();
  const auto counts = planned_counts(design, arms.dim(), delta);
  report.planning = PullLog(arms.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) report.planning.add(i, counts[i], env.pull_many(i, counts[i]));
  }
  MleOptions opt;
  opt.norm_cap = cap;
  const MleResult mle = fit_mle(arms, report.planning, opt);
  if (!mle.converged) {
    spdlog::warn("warmup MLE stopped with gradient norm {}", mle.grad_norm);
  }
  report.theta_hat0 = mle.theta_hat;
  report.samples_planning = report.planning.total();
  report.total = report.samples_probing + report.samples_planning;
  report.design_objective = design.objective;
  report.support_size = design.weights.support().size();
}

}  // namespace

WarmupReport war(Environment& env, const WarParams& params) {
  params.validate();
  const ArmSet& arms = env.arms();
  const std::size_t k = arms.size();
  BernsteinTracker tracker(k, params.delta);
  IndexSet survivors = arms.all();
  WarmupReport report;
  const std::uint64_t start = env.total_pulls();
  const double threshold = mudot(params.lower / params.ratio);

  auto summary = [&]() {
    ConfidenceSummary s;
    s.s_bound = params.s_bound;
    for (std::size_t i = 0; i < k; ++i) {
      if (tracker.status(i) != ArmStatus::Undecided) s.tested.push_back({arms.arm(i), tracker.bounds(i)});
    }
    return s;
  };

  for (int it = 1;; ++it) {
    if (it > params.loop_cap) {
      throw Error(ErrorCode::LoopCap, "WAR exceeded " + std::to_string(params.loop_cap) + " iterations");
    }
    report.iterations = it;
    std::optional<DesignSolution> two;
    try {
      two = two_approx_design(arms.subset(survivors));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RankDeficient) throw;
      spdlog::warn("WAR: survivors no longer span; planning over all arms");
      report.fallback = true;
      break;
    }
    bool all_accepted = true;
    for (std::size_t r : two->weights.support()) {
      const std::size_t arm = survivors[r];
      if (decide_arm(env, arm, tracker, params) != ArmStatus::Accepted) all_accepted = false;
    }
    if (all_accepted) break;

    const ConfidenceSummary s = summary();
    IndexSet next;
    for (std::size_t arm : survivors) {
      if (optimistic_mudot(arms.arm(arm), s) > threshold) next.push_back(arm);
    }
    survivors = std::move(next);
    if (survivors.empty()) {
      spdlog::warn("WAR: every arm eliminated; planning over all arms");
      report.fallback = true;
      break;
    }
  }

  for (std::size_t i = 0; i < k; ++i) {
    if (tracker.pulls(i) > 0) report.decisions.push_back({i, tracker.status(i), tracker.pulls(i)});
  }
  report.samples_probing = env.total_pulls() - start;

  const ConfidenceSummary s = summary();
  std::vector<double> pes(k);
  for (std::size_t i = 0; i < k; ++i) pes[i] = pessimistic_mudot(arms.arm(i), s);
  const DesignSolution plan = pessimistic_design(arms, pes, params.design);
  execute_plan(env, plan, params.delta, params.s_bound, report);
  return report;
}

WarmupReport naive_warmup(Environment& env, double s_bound, double delta,
                          const DesignOptions& options) {
  check_delta(delta);
  WarmupReport report;
  const DesignSolution design = naive_warmup_design(env.arms(), s_bound, options);
  execute_plan(env, design, delta, s_bound > 0.0 ? std::optional<double>(s_bound) : std::nullopt,
               report);
  return report;
}

WarmupReport oracle_warmup(Environment& env, const Theta& theta_true, double delta,
                           const DesignOptions& options) {
  check_delta(delta);
  WarmupReport report;
  const DesignSolution design = g_optimal(env.arms(), env.arms().all(), theta_true, options);
  execute_plan(env, design, delta, std::nullopt, report);
  return report;
}

}  // namespace logbandit
