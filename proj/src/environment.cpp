#include "logbandit/environment.hpp"

#include <string>

namespace logbandit {

const char* to_string(Phase p) noexcept {
  switch (p) {
    case Phase::Warmup: return "warmup";
    case Phase::Round: return "round";
    case Phase::Commit: return "commit";
  }
  return "unknown";
}

Environment::Environment(ArmSet arms, Theta theta_star, std::uint64_t seed)
    : arms_(std::move(arms)), theta_(std::move(theta_star)), rng_(seed) {
  const Vec z = arms_.natural(theta_);
  means_.resize(arms_.size());
  for (std::size_t i = 0; i < means_.size(); ++i) {
    means_[i] = mu(z(static_cast<Eigen::Index>(i)));
    if (means_[i] > means_[best_]) best_ = i;
  }
}

bool Environment::pull(std::size_t arm) {
  if (arm >= means_.size()) {
    throw Error(ErrorCode::InvalidArgument, "arm index " + std::to_string(arm) + " out of range");
  }
  if (budget_ && pulls_ >= *budget_) {
    throw Error(ErrorCode::BudgetExhausted, "sample budget of " + std::to_string(*budget_) + " spent");
  }
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  const bool reward = u < means_[arm];
  ++pulls_;
  if (tracing_) trace_.push_back({static_cast<std::uint32_t>(arm), reward, phase_, round_});
  return reward;
}

std::uint64_t Environment::pull_many(std::size_t arm, std::uint64_t n) {
  std::uint64_t s = 0;
  for (std::uint64_t i = 0; i < n; ++i) s += pull(arm) ? 1 : 0;
  return s;
}

std::optional<std::uint64_t> Environment::remaining() const {
  if (!budget_) return std::nullopt;
  return *budget_ > pulls_ ? *budget_ - pulls_ : 0;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace logbandit
