#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "logbandit/core.hpp"

namespace logbandit {

enum class Phase : std::uint8_t { Warmup, Round, Commit };

const char* to_string(Phase p) noexcept;

struct PullRecord {
  std::uint32_t arm;
  bool reward;
  Phase phase;
  std::uint32_t round;  // HOMER round for Phase::Round, 0 otherwise
};

/// Bernoulli bandit with rewards y ~ Bernoulli(mu(x^T theta*)). Each pull
/// consumes one 64-bit draw from a seeded mt19937_64, so a seed and a pull
/// sequence determine the reward stream on every platform.
class Environment {
 public:
  Environment(ArmSet arms, Theta theta_star, std::uint64_t seed);

  const ArmSet& arms() const noexcept { return arms_; }
  const Theta& theta_star() const noexcept { return theta_; }
  double mean(std::size_t arm) const { return means_.at(arm); }
  /// Index of the arm with the largest mean (lowest index on ties).
  std::size_t best_arm() const noexcept { return best_; }
  /// mu(x*^T theta*) - mu(x^T theta*).
  double gap(std::size_t arm) const { return means_[best_] - means_.at(arm); }

  bool pull(std::size_t arm);
  /// n pulls of one arm; returns the number of successes. Stops at the budget.
  std::uint64_t pull_many(std::size_t arm, std::uint64_t n);

  std::uint64_t total_pulls() const noexcept { return pulls_; }

  /// Pulls beyond this total throw BudgetExhausted.
  void set_budget(std::optional<std::uint64_t> budget) { budget_ = budget; }
  std::optional<std::uint64_t> remaining() const;

  void enable_trace() { tracing_ = true; }
  void set_phase(Phase phase, std::uint32_t round = 0) {
    phase_ = phase;
    round_ = round;
  }
  const std::vector<PullRecord>& trace() const noexcept { return trace_; }

 private:
  ArmSet arms_;
  Theta theta_;
  std::vector<double> means_;
  std::size_t best_ = 0;
  std::mt19937_64 rng_;
  std::uint64_t pulls_ = 0;
  std::optional<std::uint64_t> budget_;
  bool tracing_ = false;
  Phase phase_ = Phase::Warmup;
  std::uint32_t round_ = 0;
  std::vector<PullRecord> trace_;
};

/// splitmix64 mix of a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

}  // namespace logbandit
