#pragma once

// Experiment definitions, configuration, CSV emission and the CLI entry point.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "logbandit/bandit.hpp"

namespace logbandit {

// ----------------------------------------------------------------- arms --

/// K arms drawn uniformly from the unit sphere in R^d (normalized Gaussians).
ArmSet sphere_arms(std::size_t k, std::size_t d, std::mt19937_64& rng);
/// (cos(2 pi i / K), sin(2 pi i / K)) for i = 0..K-1.
ArmSet circle_arms(std::size_t k);
/// K >= 2 evenly spaced points of [-1, 1] (d = 1).
ArmSet grid_arms(std::size_t k);
/// One arm per line, comma or whitespace separated; '#' starts a comment.
ArmSet load_arms(const std::string& path);
/// Uniform direction scaled to `norm`.
Theta random_theta(std::size_t d, double norm, std::mt19937_64& rng);

struct Instance {
  ArmSet arms;
  Theta theta;
};

/// The d=2, K=10 regret instance: theta* = (3, 0), the best arm at natural
/// parameter 0.5 and nine arms spread over [pi - 0.8, pi + 0.8]; gaps 0.51-0.58.
Instance standard_regret_instance();

enum class ArmKind { Sphere, Circle, Grid, File, Standard };

struct ArmSpec {
  ArmKind kind = ArmKind::Sphere;
  std::size_t count = 20;
  std::string path;
};

/// "sphere", "circle", "grid", "file", "standard".
ArmKind parse_arm_kind(const std::string& s);
const char* to_string(ArmKind k) noexcept;
/// Shorthand such as "circle30", "grid101", "standard" or a file path.
ArmSpec parse_arm_shorthand(const std::string& s);
/// Materializes the spec; sphere arms consume `rng`.
ArmSet make_arms(const ArmSpec& spec, std::size_t d, std::mt19937_64& rng);

// --------------------------------------------------------------- config --

struct ExperimentConfig {
  std::string kind;  // table1, design-contrast, design, bias, regret, warmup-bench
  std::size_t d = 3;
  ArmSpec arms;
  std::optional<double> s;          // S, also the bias study's natural parameter
  std::vector<double> s_values;     // table1 sweep
  std::optional<std::vector<double>> theta;
  double delta = 0.05;
  double eps = 0.1;
  std::uint64_t horizon = 200'000;
  int repeats = 5;
  std::uint64_t seed = 1;
  WarParams war{};                  // lower, upper, ratio
  std::string warmup = "naive";
  std::vector<std::string> policies{"homer", "uniform"};
  std::uint64_t etc_m = 100;
  std::string output = ".";

  /// Throws Config naming the offending field.
  void validate() const;
};

/// Parses a JSON document. Unknown keys, wrong types and missing required
/// fields throw Config with the field name in the message.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// ------------------------------------------------------------------ csv --

/// %.17g, so doubles round-trip exactly.
std::string format_double(double v);

struct CsvTable {
  std::string schema;  // e.g. "logbandit.table1.v1"
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// First line "#schema=<schema>", then the header and the rows.
void write_csv(std::ostream& os, const CsvTable& table);
/// Throws InvalidArgument unless the schema line names `expected_schema`
/// exactly and the header matches `expected_header`.
CsvTable read_csv(std::istream& is, const std::string& expected_schema,
                  const std::vector<std::string>& expected_header);

// -------------------------------------------------------------- threads --

/// LOGBANDIT_THREADS if set to a positive integer, else hardware concurrency.
std::size_t worker_count();
/// Runs fn(0..n-1) on the worker pool. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------- experiments --

struct Table1Row {
  std::string method;  // naive, war, oracle
  double s = 0.0;
  int repeat = 0;
  double samples_probing = 0.0;
  double samples_planning = 0.0;
  double total = 0.0;
  /// Integer pulls the naive warmup would make on this instance.
  std::uint64_t naive_pulls = 0;
};

/// Naive and oracle counts are objective * gamma (no rounding); WAR counts
/// are real pulls on a seeded environment.
std::vector<Table1Row> table1_experiment(const ExperimentConfig& cfg);

struct Table1Summary {
  std::string method;
  double s = 0.0;
  double mean = 0.0;
  double std = 0.0;
};
std::vector<Table1Summary> summarize_table1(const std::vector<Table1Row>& rows);

CsvTable table1_csv(const std::vector<Table1Row>& rows);
CsvTable table1_summary_csv(const std::vector<Table1Summary>& rows);
std::vector<Table1Row> parse_table1_csv(const CsvTable& table);

struct DesignContrast {
  Instance instance;
  DesignSolution g;
  DesignSolution h;
  /// Mean |x^T theta*| over each support.
  double g_support_mean_abs = 0.0;
  double h_support_mean_abs = 0.0;
};

DesignContrast design_contrast_experiment(const ExperimentConfig& cfg);
std::string design_contrast_json(const DesignContrast& c, const std::string& instance_name);

struct BiasRow {
  std::string estimator;  // mle, kt
  double c = 0.0;
  std::uint64_t n = 0;
  double bias = 0.0;
  double normalized_bias = 0.0;
};

/// N_j = max(1, round(2^j / mudot(c))) for j = 1..7.
std::vector<std::uint64_t> bias_grid(double c);
std::vector<BiasRow> bias_experiment(const ExperimentConfig& cfg);
CsvTable bias_csv(const std::vector<BiasRow>& rows);

struct RegretRow {
  std::string policy;
  std::uint64_t seed = 0;
  std::uint64_t t = 0;
  double cum_regret = 0.0;
  std::string phase;  // warmup, round<k>, commit
};

struct RegretSummary {
  std::string policy;
  std::uint64_t seed = 0;
  double final_regret = 0.0;
  double first_half = 0.0;
  double second_half = 0.0;
  std::uint64_t warmup_pulls = 0;
  int rounds = 0;
  bool best_survived = true;
};

struct RegretResult {
  std::vector<RegretRow> rows;
  std::vector<RegretSummary> summary;
};

/// At most `max_points` points; the last pull is always kept.
std::vector<RegretRow> downsample(const RegretLedger& ledger, const std::string& policy,
                                  std::uint64_t seed, std::size_t max_points = 1000);
RegretResult regret_experiment(const ExperimentConfig& cfg);
CsvTable regret_csv(const std::vector<RegretRow>& rows);
std::vector<RegretRow> parse_regret_csv(const CsvTable& table);
CsvTable regret_summary_csv(const std::vector<RegretSummary>& rows);

struct WarmupBenchRow {
  std::string method;  // naive, war, oracle
  int repeat = 0;
  std::uint64_t samples_probing = 0;
  std::uint64_t samples_planning = 0;
  std::uint64_t total = 0;
  double max_error = 0.0;  // max_x |x^T (theta_hat0 - theta*)|
};

std::vector<WarmupBenchRow> warmup_bench_experiment(const ExperimentConfig& cfg);
CsvTable warmup_bench_csv(const std::vector<WarmupBenchRow>& rows);

// ------------------------------------------------------------------ cli --

/// Subcommands design, warmup-bench, regret, bias, table1. Returns 0 on
/// success, 2 on usage errors, 3 on configuration errors, 1 otherwise.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace logbandit
