#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace logbandit {

/// Aggregated fixed-design data: per-arm pull and success counts. The
/// Bernoulli likelihood only depends on these, so individual rewards are
/// never stored.
class PullLog {
 public:
  PullLog() = default;
  explicit PullLog(std::size_t num_arms) : pulls_(num_arms, 0), successes_(num_arms, 0) {}

  std::size_t num_arms() const noexcept { return pulls_.size(); }

  void add(std::size_t arm, std::uint64_t pulls, std::uint64_t successes);
  void record(std::size_t arm, bool reward) { add(arm, 1, reward ? 1 : 0); }
  void merge(const PullLog& other);

  std::uint64_t pulls(std::size_t arm) const { return pulls_.at(arm); }
  std::uint64_t successes(std::size_t arm) const { return successes_.at(arm); }
  const std::vector<std::uint64_t>& pull_counts() const noexcept { return pulls_; }

  /// Total pulls t.
  std::uint64_t total() const noexcept { return total_; }
  /// Number of distinct arms with at least one pull.
  std::size_t t_eff() const noexcept;

 private:
  std::vector<std::uint64_t> pulls_;
  std::vector<std::uint64_t> successes_;
  std::uint64_t total_ = 0;
};

}  // namespace logbandit
