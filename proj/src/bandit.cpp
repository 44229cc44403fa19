#include "logbandit/bandit.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

namespace logbandit {

double homer_delta(int k, std::size_t num_arms, double delta) {
  if (k < 1 || num_arms < 1) throw Error(ErrorCode::InvalidArgument, "homer_delta needs k >= 1, K >= 1");
  const double kk = static_cast<double>(num_arms);
  const double r = static_cast<double>(k);
  return delta / (4.0 * (2.0 + kk) * kk * r * r);
}

std::uint64_t homer_n_h(int k, double h_hat, double delta_k, double eps) {
  const double n = 6.0 * (1.0 + eps) * 6.1 * 6.1 * 27.0 * std::ldexp(1.0, 2 * k) * h_hat *
                   std::log(1.0 / delta_k);
  return static_cast<std::uint64_t>(std::ceil(n));
}

std::uint64_t homer_n_g(std::size_t d, std::size_t active, double g_hat, double delta_k, double eps) {
  return static_cast<std::uint64_t>(std::ceil(6.0 * (1.0 + eps) * gamma(d, active, delta_k) * g_hat));
}

HomerBudgets homer_budgets(int k, const ArmSet& arms, const IndexSet& active,
                           const Theta& theta_prev, double delta, double eps,
                           const DesignOptions& options) {
  if (active.empty()) throw Error(ErrorCode::InvalidArgument, "homer_budgets needs an active arm");
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  check_delta(delta);
  HomerBudgets b;
  b.delta_k = homer_delta(k, arms.size(), delta);
  b.lam_h = h_optimal(arms, active, theta_prev, options);
  b.lam_g = g_optimal(arms, active, theta_prev, options);
  b.n_h = homer_n_h(k, b.lam_h.objective, b.delta_k, eps);
  b.n_g = homer_n_g(arms.dim(), active.size(), b.lam_g.objective, b.delta_k, eps);
  return b;
}

const char* to_string(WarmupChoice w) noexcept {
  switch (w) {
    case WarmupChoice::Naive: return "naive";
    case WarmupChoice::War: return "war";
    case WarmupChoice::Oracle: return "oracle";
  }
  return "unknown";
}

WarmupChoice parse_warmup_choice(const std::string& s) {
  if (s == "naive") return WarmupChoice::Naive;
  if (s == "war") return WarmupChoice::War;
  if (s == "oracle") return WarmupChoice::Oracle;
  throw Error(ErrorCode::InvalidArgument, "unknown warmup '" + s + "'");
}

std::vector<std::size_t> interleave(const std::vector<std::uint64_t>& counts) {
  // Smooth weighted round-robin: every prefix is close to proportional.
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<std::int64_t> credit(counts.size(), 0);
  for (std::uint64_t t = 0; t < n; ++t) {
    std::size_t pick = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      credit[i] += static_cast<std::int64_t>(counts[i]);
      if (credit[i] > credit[pick]) pick = i;
    }
    credit[pick] -= static_cast<std::int64_t>(n);
    order.push_back(pick);
  }
  return order;
}

RoundReport homer_round(HomerState& state, Environment& env, const HomerParams& params) {
  const ArmSet& arms = env.arms();
  if (state.active.size() < 2) throw Error(ErrorCode::InvalidArgument, "homer_round needs two active arms");
  RoundReport rep;
  rep.k = state.k;
  rep.active_before = state.active.size();

  const HomerBudgets b = homer_budgets(state.k, arms, state.active, state.theta_prev, params.delta,
                                       params.eps, params.design);
  const DesignWeights lam = mix_designs(b.lam_h.weights, b.n_h, b.lam_g.weights, b.n_g);
  const std::uint64_t n_k =
      std::max(b.n_h + b.n_g, rounding_min_budget(lam.support().size(), params.eps));
  const RoundingPlan plan = round_design(n_k, lam, params.eps);
  state.delta_k = b.delta_k;
  state.n_h = rep.n_h = b.n_h;
  state.n_g = rep.n_g = b.n_g;
  state.n_k = rep.n_k = n_k;
  rep.h_hat = b.lam_h.objective;
  rep.g_hat = b.lam_g.objective;

  env.set_phase(Phase::Round, static_cast<std::uint32_t>(state.k));
  PullLog samples(arms.size());
  for (std::size_t i : interleave(plan.counts)) samples.record(i, env.pull(i));

  MleOptions opt;
  opt.norm_cap = params.s_bound;
  const MleResult mle = fit_mle(arms, samples, opt);
  if (!mle.converged) spdlog::warn("HOMER round {}: MLE residual {}", state.k, mle.grad_norm);
  rep.theta_hat = mle.theta_hat;

  const Vec z = arms.natural(mle.theta_hat);
  double best = -1.0;
  for (std::size_t i : state.active) best = std::max(best, mu(z(static_cast<Eigen::Index>(i))));
  const double threshold = 2.0 * std::ldexp(1.0, -state.k);
  IndexSet next;
  for (std::size_t i : state.active) {
    if (best - mu(z(static_cast<Eigen::Index>(i))) < threshold) next.push_back(i);
  }
  rep.best_retained = std::find(next.begin(), next.end(), env.best_arm()) != next.end();
  rep.active_after = next.size();

  state.active = std::move(next);
  state.theta_prev = mle.theta_hat;
  state.samples = std::move(samples);
  ++state.k;
  return rep;
}

// --------------------------------------------------------------- ledger --

RegretLedger::RegretLedger(const Environment& env, std::size_t first) {
  const auto& trace = env.trace();
  if (first > trace.size()) throw Error(ErrorCode::InvalidArgument, "ledger start beyond trace");
  entries_.reserve(trace.size() - first);
  const double top = env.mean(env.best_arm());
  double cum = 0.0;
  for (std::size_t i = first; i < trace.size(); ++i) {
    const PullRecord& r = trace[i];
    const double reg = top - env.mean(r.arm);
    cum += reg;
    entries_.push_back({r.arm, r.reward, r.phase, r.round, reg, cum});
  }
}

double RegretLedger::cumulative(std::size_t t) const {
  if (t > entries_.size()) throw Error(ErrorCode::InvalidArgument, "t beyond ledger");
  return t == 0 ? 0.0 : entries_[t - 1].cumulative;
}

std::uint64_t RegretLedger::phase_pulls(Phase p) const {
  return static_cast<std::uint64_t>(
      std::count_if(entries_.begin(), entries_.end(), [p](const LedgerEntry& e) { return e.phase == p; }));
}

// ---------------------------------------------------------------- HOMER --

namespace {

std::size_t plug_in_best(const ArmSet& arms, const IndexSet& active, const Theta& theta) {
  const Vec z = arms.natural(theta);
  std::size_t best = active.front();
  for (std::size_t i : active) {
    if (z(static_cast<Eigen::Index>(i)) > z(static_cast<Eigen::Index>(best))) best = i;
  }
  return best;
}

void pull_remaining(Environment& env, std::size_t arm) {
  env.set_phase(Phase::Commit);
  while (env.remaining().value_or(0) > 0) env.pull(arm);
}

}  // namespace

HomerResult run_homer(Environment& env, std::uint64_t horizon, const HomerParams& params) {
  if (horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be at least 1");
  const ArmSet& arms = env.arms();
  const std::size_t first = env.trace().size();
  env.enable_trace();
  env.set_budget(env.total_pulls() + horizon);
  HomerResult out;
  HomerState state;
  state.active = arms.all();

  try {
    if (arms.size() == 1) {
      out.committed = 0;
      pull_remaining(env, 0);
    } else {
      env.set_phase(Phase::Warmup);
      switch (params.warmup) {
        case WarmupChoice::Naive:
          out.warmup = naive_warmup(env, params.s_bound, params.delta, params.design);
          break;
        case WarmupChoice::Oracle:
          out.warmup = oracle_warmup(env, env.theta_star(), params.delta, params.design);
          break;
        case WarmupChoice::War: {
          WarParams wp = params.war;
          wp.delta = params.delta;
          wp.s_bound = params.s_bound;
          wp.design = params.design;
          out.warmup = war(env, wp);
          break;
        }
      }
      state.theta_prev = out.warmup.theta_hat0;
      while (state.active.size() > 1) {
        if (state.k > params.max_rounds) {
          throw Error(ErrorCode::LoopCap, "HOMER exceeded " + std::to_string(params.max_rounds) + " rounds");
        }
        out.rounds.push_back(homer_round(state, env, params));
        if (!out.rounds.back().best_retained) out.best_survived = false;
      }
      out.committed = state.active.front();
      pull_remaining(env, state.active.front());
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BudgetExhausted) {
      out.truncated = true;
    } else {
      spdlog::warn("HOMER: {}; committing to the plug-in best arm", e.what());
      out.truncated = true;
      try {
        const std::size_t arm = state.theta_prev.size() == static_cast<Eigen::Index>(arms.dim())
                                    ? plug_in_best(arms, state.active, state.theta_prev)
                                    : 0;
        out.committed = arm;
        pull_remaining(env, arm);
      } catch (const Error& inner) {
        if (inner.code() != ErrorCode::BudgetExhausted) throw;
      }
    }
  }
  if (out.truncated && !out.committed && !state.active.empty() &&
      state.theta_prev.size() == static_cast<Eigen::Index>(arms.dim())) {
    out.committed = plug_in_best(arms, state.active, state.theta_prev);
  }
  env.set_budget(std::nullopt);
  out.ledger = RegretLedger(env, first);
  return out;
}

RegretLedger baseline_policy(const BaselineSpec& spec, Environment& env, std::uint64_t horizon) {
  if (horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be at least 1");
  if (spec.kind == BaselineKind::ExploreThenCommit && spec.m < 1) {
    throw Error(ErrorCode::InvalidArgument, "explore-then-commit needs m >= 1");
  }
  const std::size_t k = env.arms().size();
  const std::size_t first = env.trace().size();
  env.enable_trace();
  env.set_phase(Phase::Warmup);
  std::vector<std::uint64_t> wins(k, 0);
  const std::uint64_t explore =
      spec.kind == BaselineKind::Uniform ? horizon : std::min<std::uint64_t>(horizon, spec.m * k);
  for (std::uint64_t t = 0; t < explore; ++t) {
    const std::size_t arm = static_cast<std::size_t>(t % k);
    if (env.pull(arm)) ++wins[arm];
  }
  if (explore < horizon) {
    // Equal pull counts, so the largest success count is the best empirical mean.
    const std::size_t best = static_cast<std::size_t>(
        std::max_element(wins.begin(), wins.end()) - wins.begin());
    env.set_phase(Phase::Commit);
    for (std::uint64_t t = explore; t < horizon; ++t) env.pull(best);
  }
  return RegretLedger(env, first);
}

}  // namespace logbandit
