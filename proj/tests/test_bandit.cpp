#include <doctest.h>

#include <cmath>
#include <map>

#include "logbandit/bandit.hpp"
#include "logbandit/harness.hpp"

using namespace logbandit;

TEST_CASE("environment rewards") {
  Mat x(2, 2);
  x << 0.0, 1.0, 1.0, 0.0;
  Theta t(2);
  t << 50.0, 0.0;
  Environment env(ArmSet(x), t, 42);
  std::uint64_t ones = env.pull_many(0, 10000);
  CHECK(std::abs(static_cast<double>(ones) / 10000.0 - 0.5) <= 0.02);
  CHECK(env.pull_many(1, 1000) == 1000);
  CHECK(env.total_pulls() == 11000);
  CHECK(env.best_arm() == 1);

  Environment a(ArmSet(x), t, 9), b(ArmSet(x), t, 9);
  for (int i = 0; i < 2000; ++i) CHECK(a.pull(i % 2 == 0 ? 0 : 1) == b.pull(i % 2 == 0 ? 0 : 1));

  a.set_budget(a.total_pulls() + 3);
  a.pull_many(0, 3);
  CHECK_THROWS_AS(a.pull(0), Error);
  CHECK_THROWS_AS(a.pull(7), Error);
}

TEST_CASE("homer schedule and budgets") {
  for (int k = 1; k <= 100; ++k) {
    const double kk = static_cast<double>(k);
    CHECK(homer_delta(k, 10, 0.05) == 0.05 / (4.0 * 12.0 * 10.0 * kk * kk));
  }
  CHECK(homer_n_h(1, 0.1, 0.01, 0.1) == 12215);
  const auto n1 = static_cast<double>(homer_n_h(3, 0.2, 1e-4, 0.1));
  const auto n2 = static_cast<double>(homer_n_h(4, 0.2, 1e-4, 0.1));
  CHECK(n2 / n1 == doctest::Approx(4.0).epsilon(1e-4));
  CHECK(homer_n_g(2, 10, 8.0, 1e-3, 0.1) ==
        static_cast<std::uint64_t>(std::ceil(6.6 * gamma(2, 10, 1e-3) * 8.0)));

  const Instance inst = standard_regret_instance();
  const HomerBudgets b = homer_budgets(1, inst.arms, inst.arms.all(), inst.theta, 0.05, 0.1);
  CHECK(b.delta_k == homer_delta(1, 10, 0.05));
  CHECK(b.lam_h.objective <= 0.5 + 1e-8);
  CHECK(b.n_h == homer_n_h(1, b.lam_h.objective, b.delta_k, 0.1));
  CHECK(b.n_g == homer_n_g(2, 10, b.lam_g.objective, b.delta_k, 0.1));
  CHECK_THROWS_AS(homer_budgets(1, inst.arms, {}, inst.theta, 0.05, 0.1), Error);
}

TEST_CASE("interleave keeps prefixes proportional") {
  const std::vector<std::uint64_t> counts{5, 0, 12, 3};
  const auto order = interleave(counts);
  CHECK(order.size() == 20);
  std::vector<std::uint64_t> seen(4, 0);
  for (std::size_t t = 0; t < order.size(); ++t) {
    ++seen[order[t]];
    for (std::size_t i = 0; i < 4; ++i) {
      const double target = static_cast<double>(counts[i]) * static_cast<double>(t + 1) / 20.0;
      CHECK(std::abs(static_cast<double>(seen[i]) - target) <= 1.0 + 1e-12);
    }
  }
  CHECK(seen == counts);
}

TEST_CASE("homer round eliminates a clearly worse arm") {
  // Two orthogonal arms with a mean gap of 0.3.
  Mat x(2, 2);
  x << 1.0, 0.0, 0.0, 1.0;
  Theta t(2);
  t << logit(0.8), logit(0.5);
  const ArmSet arms(x);
  HomerParams p;
  p.s_bound = t.norm() + 0.5;
  int by_three = 0;
  int retained = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Environment env(arms, t, derive_seed(3, seed));
    HomerState st;
    st.active = arms.all();
    st.theta_prev = t;
    bool best_kept = true;
    while (st.active.size() > 1 && st.k <= 3) {
      const RoundReport r = homer_round(st, env, p);
      CHECK(r.active_after >= 1);
      CHECK(r.active_after <= r.active_before);
      best_kept = best_kept && r.best_retained;
    }
    if (st.active.size() == 1) ++by_three;
    if (best_kept) ++retained;
  }
  CHECK(by_three >= 45);
  CHECK(retained >= 45);
}

TEST_CASE("round samples satisfy the warmup condition") {
  const Instance inst = standard_regret_instance();
  HomerParams p;
  p.s_bound = 3.0;
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Environment env(inst.arms, inst.theta, derive_seed(4, seed));
    HomerState st;
    st.active = inst.arms.all();
    st.theta_prev = inst.theta;
    homer_round(st, env, p);
    if (warmup_check(inst.arms, st.samples, inst.theta, p.delta).satisfied) ++ok;
    CHECK(st.k == 2);
    CHECK(st.samples.total() == st.n_k);
  }
  CHECK(ok >= 19);
}

TEST_CASE("run_homer accounting") {
  const Instance inst = standard_regret_instance();
  HomerParams p;
  p.s_bound = 3.0;
  Environment env(inst.arms, inst.theta, 77);
  const HomerResult r = run_homer(env, 50'000, p);
  CHECK(r.ledger.size() == 50'000);
  CHECK(r.ledger.phase_pulls(Phase::Warmup) == r.warmup.total);

  // Pseudo-regret identity against pull counts.
  std::map<std::uint32_t, std::uint64_t> pulls;
  for (const auto& e : r.ledger.entries()) ++pulls[e.arm];
  double direct = 0.0;
  for (const auto& [arm, n] : pulls) direct += env.gap(arm) * static_cast<double>(n);
  CHECK(r.ledger.final_regret() == doctest::Approx(direct).epsilon(1e-12));
  double prev = 0.0;
  for (const auto& e : r.ledger.entries()) {
    CHECK(e.regret >= 0.0);
    CHECK(e.cumulative >= prev);
    prev = e.cumulative;
  }

  Environment again(inst.arms, inst.theta, 77);
  const HomerResult r2 = run_homer(again, 50'000, p);
  bool same = r2.ledger.size() == r.ledger.size();
  for (std::size_t i = 0; same && i < r.ledger.size(); ++i) {
    same = r.ledger.entries()[i].arm == r2.ledger.entries()[i].arm &&
           r.ledger.entries()[i].reward == r2.ledger.entries()[i].reward;
  }
  CHECK(same);
}

TEST_CASE("run_homer commits on a single arm and on an easy instance") {
  Mat one(1, 2);
  one << 0.6, 0.8;
  Environment env(ArmSet(one), Theta::Ones(2), 1);
  const HomerResult r = run_homer(env, 1000, HomerParams{});
  CHECK(r.ledger.size() == 1000);
  CHECK(r.ledger.final_regret() == 0.0);
  CHECK(r.ledger.phase_pulls(Phase::Commit) == 1000);

  // Orthogonal arms with a large gap finish elimination well inside the horizon.
  Mat x(2, 2);
  x << 1.0, 0.0, 0.0, 1.0;
  Theta t(2);
  t << 2.0, -2.0;
  HomerParams p;
  p.s_bound = 3.0;
  Environment e2(ArmSet(x), t, 5);
  const HomerResult r2 = run_homer(e2, 3'000'000, p);
  REQUIRE(r2.committed.has_value());
  CHECK(*r2.committed == 0);
  CHECK(r2.ledger.phase_pulls(Phase::Commit) > 0);
  CHECK(r2.ledger.size() == 3'000'000);
  CHECK_FALSE(r2.truncated);
}

TEST_CASE("baselines") {
  const Instance inst = standard_regret_instance();
  Environment env(inst.arms, inst.theta, 3);
  const RegretLedger u = baseline_policy({}, env, 100'000);
  double mean_gap = 0.0;
  for (std::size_t i = 0; i < 10; ++i) mean_gap += env.gap(i) / 10.0;
  CHECK(u.final_regret() == doctest::Approx(100'000 * mean_gap).epsilon(0.05));

  Environment e2(inst.arms, inst.theta, 3);
  BaselineSpec etc{BaselineKind::ExploreThenCommit, 1'000'000};
  const RegretLedger big = baseline_policy(etc, e2, 5'000);
  CHECK(big.final_regret() == doctest::Approx(u.cumulative(5'000)));

  Environment e3(inst.arms, inst.theta, 3);
  etc.m = 200;
  const RegretLedger small = baseline_policy(etc, e3, 20'000);
  CHECK(small.phase_pulls(Phase::Commit) == 18'000);
  CHECK(small.final_regret() < u.cumulative(20'000));
}

TEST_CASE("homer beats uniform on the standard instance") {
  const Instance inst = standard_regret_instance();
  HomerParams p;
  p.s_bound = 3.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Environment env(inst.arms, inst.theta, derive_seed(8, seed));
    const HomerResult r = run_homer(env, 200'000, p);
    Environment e2(inst.arms, inst.theta, derive_seed(9, seed));
    const RegretLedger u = baseline_policy({}, e2, 200'000);
    CHECK(r.ledger.final_regret() < u.final_regret());
    const double first = r.ledger.cumulative(100'000);
    CHECK(r.ledger.final_regret() - first < first);
    CHECK(r.best_survived);
  }
}
