#pragma once

// Warmup procedures producing an initial estimate theta_hat_0 with
// |x^T (theta_hat_0 - theta*)| <= 1 for all arms with probability >= 1 - delta:
// the naive design over the worst-case variance, WAR (probing by accepts and
// rejects followed by pessimistic planning), and an oracle that knows theta*.

#include <cstdint>
#include <optional>
#include <vector>

#include "logbandit/design.hpp"
#include "logbandit/environment.hpp"
#include "logbandit/glm.hpp"

namespace logbandit {

/// Anytime empirical Bernstein width
/// sqrt(2 mu_hat (1 - mu_hat) log(3/delta_N) / N) + 3 log(3/delta_N) / N,
/// delta_N = delta / (K N (N + 1)).
double bernstein_width(double mu_hat, std::uint64_t n, double delta, std::size_t num_arms);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Bounds on |x^T theta*| from the mean interval [mu_hat - W, mu_hat + W]
/// clamped to [1e-12, 1 - 1e-12] and mapped through the logit.
Interval natural_bounds(double mu_hat, double width);

enum class ArmStatus { Undecided, Accepted, Rejected };

const char* to_string(ArmStatus s) noexcept;

class BernsteinTracker {
 public:
  BernsteinTracker(std::size_t num_arms, double delta);

  void add(std::size_t arm, std::uint64_t pulls, std::uint64_t successes);

  std::uint64_t pulls(std::size_t arm) const { return n_.at(arm); }
  std::uint64_t successes(std::size_t arm) const { return h_.at(arm); }
  double mu_hat(std::size_t arm) const;
  /// Infinite before the first pull.
  double width(std::size_t arm) const;
  /// [0, inf) before the first pull.
  Interval bounds(std::size_t arm) const;

  ArmStatus status(std::size_t arm) const { return status_.at(arm); }
  /// One-way: throws InvalidArgument when changing a decided arm.
  void set_status(std::size_t arm, ArmStatus s);

  std::size_t num_arms() const noexcept { return n_.size(); }
  std::uint64_t total() const noexcept;

 private:
  double delta_;
  std::vector<std::uint64_t> n_;
  std::vector<std::uint64_t> h_;
  std::vector<ArmStatus> status_;
};

struct WarParams {
  double lower = 1.0;   // L: reject once |x^T theta*| > L is certified
  double upper = 2.399; // U: accept once |x^T theta*| < U is certified
  double ratio = 2.0;   // r: eliminate when the optimistic variance is below mudot(L/r)
  double delta = 0.05;
  double s_bound = 1.0; // S >= ||theta*||
  std::uint64_t max_pulls_per_arm = 1'000'000;
  std::uint64_t batch = 8;
  int loop_cap = 64;
  DesignOptions design{};

  /// Throws InvalidArgument / InvalidDelta.
  void validate() const;
};

/// Pulls `arm` in batches until hi < U (Accepted) or lo > L (Rejected).
/// Hitting max_pulls_per_arm returns Rejected with a warning.
ArmStatus decide_arm(Environment& env, std::size_t arm, BernsteinTracker& tracker,
                     const WarParams& params);

struct TestedArm {
  Vec x;
  Interval bounds;
};

/// Tested arms with certified bounds on |z^T theta*| plus ||theta*|| <= S.
struct ConfidenceSummary {
  std::vector<TestedArm> tested;
  double s_bound = 1.0;
};

/// Certified lower bound on min |x^T theta| over the confidence set.
double optimistic_natural(const Vec& x, const ConfidenceSummary& summary);
/// Certified upper bound on max |x^T theta| over the confidence set.
double pessimistic_natural(const Vec& x, const ConfidenceSummary& summary);

/// mudot(optimistic_natural(x)): an upper bound on the largest variance.
double optimistic_mudot(const Vec& x, const ConfidenceSummary& summary);
/// mudot(pessimistic_natural(x)): a lower bound on the smallest variance.
double pessimistic_mudot(const Vec& x, const ConfidenceSummary& summary);

struct ArmDecision {
  std::size_t arm;
  ArmStatus status;
  std::uint64_t pulls;
};

struct WarmupReport {
  Theta theta_hat0;
  std::uint64_t samples_probing = 0;
  std::uint64_t samples_planning = 0;
  std::uint64_t total = 0;
  int iterations = 0;
  std::vector<ArmDecision> decisions;
  /// Samples the estimate was fitted on.
  PullLog planning;
  /// Objective of the planning design (g^naive, g^WAR or g*).
  double design_objective = 0.0;
  std::size_t support_size = 0;
  bool fallback = false;
};

/// ceil(lambda_x * gamma(d, |supp|, delta) * objective) for every arm.
std::vector<std::uint64_t> planned_counts(const DesignSolution& design, std::size_t d,
                                          double delta);

/// objective * gamma(d, t_eff, delta), without rounding.
double warmup_sample_count(const DesignSolution& design, std::size_t d, std::size_t t_eff,
                           double delta);

WarmupReport war(Environment& env, const WarParams& params);

WarmupReport naive_warmup(Environment& env, double s_bound, double delta,
                          const DesignOptions& options = {});

WarmupReport oracle_warmup(Environment& env, const Theta& theta_true, double delta,
                           const DesignOptions& options = {});

}  // namespace logbandit
