#pragma once

// HOMER (H-optimal method for regret), simple baselines and pseudo-regret
// accounting over an Environment trace.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "logbandit/design.hpp"
#include "logbandit/environment.hpp"
#include "logbandit/warmup.hpp"

namespace logbandit {

/// delta_k = delta / (4 (2 + K) K k^2).
double homer_delta(int k, std::size_t num_arms, double delta);

struct HomerBudgets {
  DesignSolution lam_h;
  DesignSolution lam_g;
  std::uint64_t n_h = 0;
  std::uint64_t n_g = 0;
  double delta_k = 0.0;
};

/// ceil(6 (1+eps) 6.1^2 3^3 4^k h_hat log(1/delta_k)).
std::uint64_t homer_n_h(int k, double h_hat, double delta_k, double eps);
/// ceil(6 (1+eps) gamma(d, active, delta_k) g_hat).
std::uint64_t homer_n_g(std::size_t d, std::size_t active, double g_hat, double delta_k, double eps);

/// H and G designs over `active` at theta_prev with their budgets.
HomerBudgets homer_budgets(int k, const ArmSet& arms, const IndexSet& active,
                           const Theta& theta_prev, double delta, double eps,
                           const DesignOptions& options = {});

enum class WarmupChoice { Naive, War, Oracle };

const char* to_string(WarmupChoice w) noexcept;
/// "naive", "war" or "oracle"; throws InvalidArgument otherwise.
WarmupChoice parse_warmup_choice(const std::string& s);

struct HomerParams {
  double delta = 0.05;
  double eps = 0.1;
  double s_bound = 1.0;  // S >= ||theta*||; also the MLE norm cap
  WarmupChoice warmup = WarmupChoice::Naive;
  WarParams war{};       // delta and s_bound are overwritten from above
  DesignOptions design{};
  int max_rounds = 64;
};

struct HomerState {
  int k = 1;
  IndexSet active;
  Theta theta_prev;
  double delta_k = 0.0;
  std::uint64_t n_h = 0;
  std::uint64_t n_g = 0;
  std::uint64_t n_k = 0;
  /// Samples of the last completed round.
  PullLog samples;
};

struct RoundReport {
  int k = 0;
  std::size_t active_before = 0;
  std::size_t active_after = 0;
  std::uint64_t n_h = 0;
  std::uint64_t n_g = 0;
  std::uint64_t n_k = 0;
  double h_hat = 0.0;
  double g_hat = 0.0;
  Theta theta_hat;
  bool best_retained = true;
};

/// Pull order for integer counts in which every prefix stays near
/// proportional (smooth weighted round-robin, lowest index on ties).
std::vector<std::size_t> interleave(const std::vector<std::uint64_t>& counts);

/// One round: budgets, mixing, rounding, pulls, MLE on this round's samples,
/// elimination of arms whose plug-in gap is >= 2 * 2^-k. Advances `state`.
/// Pulls are interleaved so a round cut short by the horizon is a balanced
/// prefix. BudgetExhausted propagates with the partial round already pulled.
RoundReport homer_round(HomerState& state, Environment& env, const HomerParams& params);

struct LedgerEntry {
  std::uint32_t arm;
  bool reward;
  Phase phase;
  std::uint32_t round;
  double regret;      // instantaneous pseudo-regret
  double cumulative;  // R_t
};

/// Per-pull pseudo-regret, built from an environment trace.
class RegretLedger {
 public:
  RegretLedger() = default;
  /// Uses trace entries [first, end).
  RegretLedger(const Environment& env, std::size_t first = 0);

  const std::vector<LedgerEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  double final_regret() const noexcept { return entries_.empty() ? 0.0 : entries_.back().cumulative; }
  /// R_t for t in [0, size]; R_0 = 0.
  double cumulative(std::size_t t) const;
  std::uint64_t phase_pulls(Phase p) const;

 private:
  std::vector<LedgerEntry> entries_;
};

struct HomerResult {
  RegretLedger ledger;
  WarmupReport warmup;
  std::vector<RoundReport> rounds;
  /// Survivor, or the empirical best when the run was cut short.
  std::optional<std::size_t> committed;
  /// The true best arm stayed active through every completed round.
  bool best_survived = true;
  bool truncated = false;
};

/// Warmup, rounds until one arm is left, then commit; the ledger covers
/// exactly T pulls. Internal failures degrade to committing to the arm with
/// the best plug-in mean (logged).
HomerResult run_homer(Environment& env, std::uint64_t horizon, const HomerParams& params);

enum class BaselineKind { Uniform, ExploreThenCommit };

struct BaselineSpec {
  BaselineKind kind = BaselineKind::Uniform;
  std::uint64_t m = 1;  // explore pulls per arm for ExploreThenCommit
};

/// Uniform plays arms round-robin. Explore-then-commit plays m rounds of
/// round-robin and then the arm with the best empirical mean (lowest index on ties).
RegretLedger baseline_policy(const BaselineSpec& spec, Environment& env, std::uint64_t horizon);

}  // namespace logbandit
