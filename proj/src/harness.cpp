#include "logbandit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace logbandit {

using nlohmann::json;

// ----------------------------------------------------------------- arms --

ArmSet sphere_arms(std::size_t k, std::size_t d, std::mt19937_64& rng) {
  if (k < 1 || d < 1) throw Error(ErrorCode::InvalidArgument, "sphere arms need K >= 1 and d >= 1");
  std::normal_distribution<double> g;
  Mat x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Vec r(x.cols());
    do {
      for (auto& v : r) v = g(rng);
    } while (r.norm() == 0.0);
    x.row(i) = r.normalized().transpose();
  }
  return ArmSet(x);
}

ArmSet circle_arms(std::size_t k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "circle needs K >= 1");
  Mat x(static_cast<Eigen::Index>(k), 2);
  for (std::size_t i = 0; i < k; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k);
    x.row(static_cast<Eigen::Index>(i)) << std::cos(a), std::sin(a);
  }
  return ArmSet(x);
}

ArmSet grid_arms(std::size_t k) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "grid needs K >= 2");
  Mat x(static_cast<Eigen::Index>(k), 1);
  for (std::size_t i = 0; i < k; ++i) {
    x(static_cast<Eigen::Index>(i), 0) = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(k - 1);
  }
  return ArmSet(x);
}

ArmSet load_arms(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open arm file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = line.substr(0, line.find('#'));
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error(ErrorCode::Config, "arm file '" + path + "': bad number '" + tok + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::Config, "arm file '" + path + "' has no arms");
  return ArmSet::from_rows(rows);
}

Theta random_theta(std::size_t d, double norm, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Theta t(static_cast<Eigen::Index>(d));
  do {
    for (auto& v : t) v = g(rng);
  } while (t.norm() == 0.0);
  return t.normalized() * norm;
}

Instance standard_regret_instance() {
  constexpr double s = 3.0;
  constexpr double best_z = 0.5;
  constexpr double spread = 0.8;
  Mat x(10, 2);
  const double a0 = std::acos(best_z / s);
  x.row(0) << std::cos(a0), std::sin(a0);
  for (int i = 1; i < 10; ++i) {
    const double a = std::numbers::pi - spread + 2.0 * spread * (i - 1) / 8.0;
    x.row(i) << std::cos(a), std::sin(a);
  }
  Theta theta(2);
  theta << s, 0.0;
  return {ArmSet(x), theta};
}

ArmKind parse_arm_kind(const std::string& s) {
  if (s == "sphere") return ArmKind::Sphere;
  if (s == "circle") return ArmKind::Circle;
  if (s == "grid") return ArmKind::Grid;
  if (s == "file") return ArmKind::File;
  if (s == "standard") return ArmKind::Standard;
  throw Error(ErrorCode::Config, "arms.kind: unknown arm kind '" + s + "'");
}

const char* to_string(ArmKind k) noexcept {
  switch (k) {
    case ArmKind::Sphere: return "sphere";
    case ArmKind::Circle: return "circle";
    case ArmKind::Grid: return "grid";
    case ArmKind::File: return "file";
    case ArmKind::Standard: return "standard";
  }
  return "unknown";
}

ArmSpec parse_arm_shorthand(const std::string& s) {
  ArmSpec spec;
  if (s == "standard") {
    spec.kind = ArmKind::Standard;
    spec.count = 10;
    return spec;
  }
  for (const char* name : {"sphere", "circle", "grid"}) {
    const std::string prefix(name);
    if (s.size() > prefix.size() && s.compare(0, prefix.size(), prefix) == 0 &&
        std::all_of(s.begin() + static_cast<std::ptrdiff_t>(prefix.size()), s.end(),
                    [](char c) { return c >= '0' && c <= '9'; })) {
      spec.kind = parse_arm_kind(prefix);
      spec.count = std::stoul(s.substr(prefix.size()));
      return spec;
    }
  }
  spec.kind = ArmKind::File;
  spec.path = s;
  return spec;
}

ArmSet make_arms(const ArmSpec& spec, std::size_t d, std::mt19937_64& rng) {
  switch (spec.kind) {
    case ArmKind::Sphere: return sphere_arms(spec.count, d, rng);
    case ArmKind::Circle: return circle_arms(spec.count);
    case ArmKind::Grid: return grid_arms(spec.count);
    case ArmKind::File: return load_arms(spec.path);
    case ArmKind::Standard: return standard_regret_instance().arms;
  }
  throw Error(ErrorCode::Config, "arms.kind: unsupported");
}

// --------------------------------------------------------------- config --

namespace {

const std::vector<std::string> kKinds{"table1", "design-contrast", "design", "bias", "regret",
                                      "warmup-bench"};

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::Config, field + ": " + what);
}

template <class T>
T get_field(const json& j, const std::string& key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    config_error(path, "wrong type");
  }
}

void require(const json& j, const std::string& key) {
  if (!j.contains(key)) config_error(key, "missing required field");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (std::find(kKinds.begin(), kKinds.end(), kind) == kKinds.end()) {
    config_error("kind", "unknown experiment kind '" + kind + "'");
  }
  if (d < 1) config_error("d", "must be positive");
  if (arms.count < 1) config_error("arms.count", "must be positive");
  if (arms.kind == ArmKind::File && arms.path.empty()) config_error("arms.path", "required for file arms");
  if (!(delta > 0.0) || delta > std::exp(-1.0)) config_error("delta", "must lie in (0, 1/e]");
  if (!(eps > 0.0)) config_error("eps", "must be positive");
  if (horizon < 1) config_error("horizon", "must be positive");
  if (repeats < 1) config_error("repeats", "must be positive");
  if (s && !(*s >= 0.0)) config_error("s", "must be nonnegative");
  for (double v : s_values) {
    if (!(v > 0.0)) config_error("s_values", "entries must be positive");
  }
  if (etc_m < 1) config_error("etc_m", "must be positive");
  try {
    WarParams w = war;
    w.delta = std::min(delta, 0.3);
    w.validate();
  } catch (const Error& e) {
    config_error("war", e.what());
  }
  try {
    parse_warmup_choice(warmup);
  } catch (const Error&) {
    config_error("warmup", "must be naive, war or oracle");
  }
  for (const auto& p : policies) {
    if (p != "homer" && p != "uniform" && p != "etc") config_error("policies", "unknown policy '" + p + "'");
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Config, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");
  static const std::vector<std::string> known{"kind", "d", "arms", "s", "s_values", "theta",
                                              "delta", "eps", "horizon", "repeats", "seed",
                                              "war", "warmup", "policies", "etc_m", "output"};
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      config_error(item.key(), "unknown field");
    }
  }

  ExperimentConfig c;
  require(j, "kind");
  c.kind = get_field<std::string>(j, "kind", "kind");
  if (j.contains("d")) c.d = get_field<std::size_t>(j, "d", "d");
  if (j.contains("arms")) {
    const json& a = j.at("arms");
    if (!a.is_object()) config_error("arms", "must be an object");
    for (const auto& item : a.items()) {
      if (item.key() != "kind" && item.key() != "count" && item.key() != "path") {
        config_error("arms." + item.key(), "unknown field");
      }
    }
    if (!a.contains("kind")) config_error("arms.kind", "missing required field");
    c.arms.kind = parse_arm_kind(get_field<std::string>(a, "kind", "arms.kind"));
    if (a.contains("count")) c.arms.count = get_field<std::size_t>(a, "count", "arms.count");
    if (a.contains("path")) c.arms.path = get_field<std::string>(a, "path", "arms.path");
  }
  if (j.contains("s")) c.s = get_field<double>(j, "s", "s");
  if (j.contains("s_values")) c.s_values = get_field<std::vector<double>>(j, "s_values", "s_values");
  if (j.contains("theta")) c.theta = get_field<std::vector<double>>(j, "theta", "theta");
  if (j.contains("delta")) c.delta = get_field<double>(j, "delta", "delta");
  if (j.contains("eps")) c.eps = get_field<double>(j, "eps", "eps");
  if (j.contains("horizon")) c.horizon = get_field<std::uint64_t>(j, "horizon", "horizon");
  if (j.contains("repeats")) c.repeats = get_field<int>(j, "repeats", "repeats");
  if (j.contains("seed")) c.seed = get_field<std::uint64_t>(j, "seed", "seed");
  if (j.contains("war")) {
    const json& w = j.at("war");
    if (!w.is_object()) config_error("war", "must be an object");
    for (const auto& item : w.items()) {
      if (item.key() == "lower") c.war.lower = get_field<double>(w, "lower", "war.lower");
      else if (item.key() == "upper") c.war.upper = get_field<double>(w, "upper", "war.upper");
      else if (item.key() == "ratio") c.war.ratio = get_field<double>(w, "ratio", "war.ratio");
      else config_error("war." + item.key(), "unknown field");
    }
  }
  if (j.contains("warmup")) c.warmup = get_field<std::string>(j, "warmup", "warmup");
  if (j.contains("policies")) c.policies = get_field<std::vector<std::string>>(j, "policies", "policies");
  if (j.contains("etc_m")) c.etc_m = get_field<std::uint64_t>(j, "etc_m", "etc_m");
  if (j.contains("output")) c.output = get_field<std::string>(j, "output", "output");

  // Fields each experiment cannot run without.
  if (c.kind == "table1") {
    require(j, "s_values");
    require(j, "d");
  } else if (c.kind == "bias") {
    if (!j.contains("s") && !j.contains("s_values")) config_error("s", "missing required field");
  } else if (c.kind == "regret" || c.kind == "warmup-bench") {
    require(j, "arms");
    require(j, "horizon");
    if (c.arms.kind != ArmKind::Standard && !c.theta && !c.s) config_error("theta", "missing required field");
  } else if (c.kind == "design" || c.kind == "design-contrast") {
    require(j, "arms");
    require(j, "theta");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ------------------------------------------------------------------ csv --

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& os, const CsvTable& table) {
  os << "#schema=" << table.schema << '\n';
  for (std::size_t i = 0; i < table.header.size(); ++i) os << (i ? "," : "") << table.header[i];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw Error(ErrorCode::InvalidArgument, "bad number '" + s + "'");
  return v;
}

std::uint64_t to_u64(const std::string& s) {
  std::size_t used = 0;
  const auto v = std::stoull(s, &used);
  if (used != s.size()) throw Error(ErrorCode::InvalidArgument, "bad integer '" + s + "'");
  return v;
}

}  // namespace

CsvTable read_csv(std::istream& is, const std::string& expected_schema,
                  const std::vector<std::string>& expected_header) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("#schema=", 0) != 0) {
    throw Error(ErrorCode::InvalidArgument, "missing #schema= line");
  }
  CsvTable t;
  t.schema = line.substr(8);
  if (!t.schema.empty() && t.schema.back() == '\r') t.schema.pop_back();
  if (t.schema != expected_schema) {
    throw Error(ErrorCode::InvalidArgument,
                "unsupported schema '" + t.schema + "', expected '" + expected_schema + "'");
  }
  if (!std::getline(is, line)) throw Error(ErrorCode::InvalidArgument, "missing header");
  t.header = split_csv_line(line);
  if (t.header != expected_header) throw Error(ErrorCode::InvalidArgument, "unexpected CSV header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto row = split_csv_line(line);
    if (row.size() != t.header.size()) throw Error(ErrorCode::InvalidArgument, "ragged CSV row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

// -------------------------------------------------------------- threads --

std::size_t worker_count() {
  if (const char* env = std::getenv("LOGBANDIT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!failure) failure = std::current_exception();
          next.store(n);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------- experiments --

namespace {

double max_natural_error(const ArmSet& arms, const Theta& a, const Theta& b) {
  return (arms.matrix() * (a - b)).cwiseAbs().maxCoeff();
}

std::uint64_t sum_counts(const std::vector<std::uint64_t>& c) {
  std::uint64_t s = 0;
  for (auto v : c) s += v;
  return s;
}

WarParams war_params(const ExperimentConfig& cfg, double s) {
  WarParams p = cfg.war;
  p.delta = cfg.delta;
  p.s_bound = s;
  return p;
}

Theta theta_from(const std::vector<double>& v) {
  Theta t(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) t(static_cast<Eigen::Index>(i)) = v[i];
  return t;
}

// Arms and theta* for one repeat of a regret or warmup-bench run.
Instance instance_for(const ExperimentConfig& cfg, std::uint64_t stream) {
  if (cfg.arms.kind == ArmKind::Standard) return standard_regret_instance();
  std::mt19937_64 rng(derive_seed(cfg.seed, stream));
  ArmSet arms = make_arms(cfg.arms, cfg.d, rng);
  Theta theta = cfg.theta ? theta_from(*cfg.theta) : random_theta(arms.dim(), *cfg.s, rng);
  if (static_cast<std::size_t>(theta.size()) != arms.dim()) {
    throw Error(ErrorCode::Config, "theta: dimension does not match the arms");
  }
  return {std::move(arms), std::move(theta)};
}

}  // namespace

std::vector<Table1Row> table1_experiment(const ExperimentConfig& cfg) {
  const std::size_t ns = cfg.s_values.size();
  const auto reps = static_cast<std::size_t>(cfg.repeats);
  std::vector<std::vector<Table1Row>> out(ns * reps);
  parallel_for(ns * reps, [&](std::size_t job) {
    const std::size_t si = job / reps;
    const int rep = static_cast<int>(job % reps);
    const double s = cfg.s_values[si];
    std::mt19937_64 rng(derive_seed(cfg.seed, 2 * job));
    const ArmSet arms = make_arms(cfg.arms, cfg.d, rng);
    const Theta theta = random_theta(arms.dim(), s, rng);
    const std::size_t d = arms.dim();

    const DesignSolution nd = naive_warmup_design(arms, s);
    const DesignSolution od = g_optimal(arms, arms.all(), theta);
    const double naive = warmup_sample_count(nd, d, nd.weights.support().size(), cfg.delta);
    const double oracle = warmup_sample_count(od, d, od.weights.support().size(), cfg.delta);
    const std::uint64_t naive_pulls = sum_counts(planned_counts(nd, d, cfg.delta));

    Environment env(arms, theta, derive_seed(cfg.seed, 2 * job + 1));
    const WarmupReport w = war(env, war_params(cfg, s));

    auto& rows = out[job];
    rows.push_back({"naive", s, rep, 0.0, naive, naive, naive_pulls});
    rows.push_back({"war", s, rep, static_cast<double>(w.samples_probing),
                    static_cast<double>(w.samples_planning), static_cast<double>(w.total), naive_pulls});
    rows.push_back({"oracle", s, rep, 0.0, oracle, oracle, naive_pulls});
  });
  std::vector<Table1Row> rows;
  for (auto& block : out) rows.insert(rows.end(), block.begin(), block.end());
  return rows;
}

std::vector<Table1Summary> summarize_table1(const std::vector<Table1Row>& rows) {
  std::vector<Table1Summary> out;
  for (const char* method : {"naive", "war", "oracle"}) {
    std::map<double, std::vector<double>> by_s;
    for (const auto& r : rows) {
      if (r.method == method) by_s[r.s].push_back(r.total);
    }
    for (const auto& [s, v] : by_s) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
      out.push_back({method, s, mean, sd});
    }
  }
  return out;
}

namespace {
const std::vector<std::string> kTable1Header{"method", "S", "repeat", "samples_probing",
                                             "samples_planning", "total"};
const std::vector<std::string> kRegretHeader{"policy", "seed", "t", "cum_regret", "phase"};
}  // namespace

CsvTable table1_csv(const std::vector<Table1Row>& rows) {
  CsvTable t{"logbandit.table1.v1", kTable1Header, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.method, format_double(r.s), std::to_string(r.repeat),
                      format_double(r.samples_probing), format_double(r.samples_planning),
                      format_double(r.total)});
  }
  return t;
}

CsvTable table1_summary_csv(const std::vector<Table1Summary>& rows) {
  CsvTable t{"logbandit.table1_summary.v1", {"method", "S", "mean", "std"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.method, format_double(r.s), format_double(r.mean), format_double(r.std)});
  }
  return t;
}

std::vector<Table1Row> parse_table1_csv(const CsvTable& table) {
  if (table.schema != "logbandit.table1.v1" || table.header != kTable1Header) {
    throw Error(ErrorCode::InvalidArgument, "not a table1 v1 table");
  }
  std::vector<Table1Row> rows;
  for (const auto& r : table.rows) {
    Table1Row row;
    row.method = r[0];
    row.s = to_double(r[1]);
    row.repeat = static_cast<int>(to_u64(r[2]));
    row.samples_probing = to_double(r[3]);
    row.samples_planning = to_double(r[4]);
    row.total = to_double(r[5]);
    rows.push_back(row);
  }
  return rows;
}

DesignContrast design_contrast_experiment(const ExperimentConfig& cfg) {
  if (!cfg.theta) config_error("theta", "missing required field");
  std::mt19937_64 rng(derive_seed(cfg.seed, 0));
  Instance inst{make_arms(cfg.arms, cfg.d, rng), theta_from(*cfg.theta)};
  if (static_cast<std::size_t>(inst.theta.size()) != inst.arms.dim()) {
    throw Error(ErrorCode::Config, "theta: dimension does not match the arms");
  }
  DesignContrast c{std::move(inst), {}, {}, 0.0, 0.0};
  const ArmSet& arms = c.instance.arms;
  c.g = g_optimal(arms, arms.all(), c.instance.theta);
  c.h = h_optimal(arms, arms.all(), c.instance.theta);
  const Vec z = arms.natural(c.instance.theta);
  auto mean_abs = [&](const DesignSolution& s) {
    const IndexSet sup = s.weights.support();
    double acc = 0.0;
    for (std::size_t i : sup) acc += std::abs(z(static_cast<Eigen::Index>(i)));
    return sup.empty() ? 0.0 : acc / static_cast<double>(sup.size());
  };
  c.g_support_mean_abs = mean_abs(c.g);
  c.h_support_mean_abs = mean_abs(c.h);
  return c;
}

namespace {
json solution_json(const DesignSolution& s) {
  json w = json::array();
  for (std::size_t i : s.weights.support()) w.push_back({{"arm_index", i}, {"weight", s.weights[i]}});
  return {{"objective", s.objective},
          {"iterations", s.iterations},
          {"certificate_gap", s.certificate_gap},
          {"weights", w}};
}
}  // namespace

std::string design_contrast_json(const DesignContrast& c, const std::string& instance_name) {
  json theta = json::array();
  for (auto v : c.instance.theta) theta.push_back(v);
  json j{{"instance", {{"arms", instance_name}, {"theta", theta}}},
         {"g", solution_json(c.g)},
         {"h", solution_json(c.h)},
         {"support_stats",
          {{"g_support_size", c.g.weights.support().size()},
           {"h_support_size", c.h.weights.support().size()},
           {"g_mean_abs_natural", c.g_support_mean_abs},
           {"h_mean_abs_natural", c.h_support_mean_abs}}}};
  return j.dump(2) + "\n";
}

std::vector<std::uint64_t> bias_grid(double c) {
  std::vector<std::uint64_t> out;
  for (int j = 1; j <= 7; ++j) {
    const double n = std::round(std::ldexp(1.0, j) / mudot(c));
    out.push_back(static_cast<std::uint64_t>(std::max(1.0, n)));
  }
  return out;
}

std::vector<BiasRow> bias_experiment(const ExperimentConfig& cfg) {
  std::vector<double> cs = cfg.s_values;
  if (cs.empty()) cs.push_back(*cfg.s);
  std::vector<BiasRow> rows;
  for (double c : cs) {
    const double v = mudot(c);
    for (const auto& [name, est] : {std::pair{"mle", Estimator::Mle}, std::pair{"kt", Estimator::Kt}}) {
      for (std::uint64_t n : bias_grid(c)) {
        const double b = exact_bias_1d(est, c, n);
        const double scale = static_cast<double>(n) * v;
        rows.push_back({name, c, n, b, est == Estimator::Mle ? b * scale : b * scale * scale});
      }
    }
  }
  return rows;
}

CsvTable bias_csv(const std::vector<BiasRow>& rows) {
  CsvTable t{"logbandit.bias.v1", {"estimator", "c", "N", "bias", "normalized_bias"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.estimator, format_double(r.c), std::to_string(r.n), format_double(r.bias),
                      format_double(r.normalized_bias)});
  }
  return t;
}

namespace {
std::string phase_tag(const LedgerEntry& e) {
  return e.phase == Phase::Round ? "round" + std::to_string(e.round) : to_string(e.phase);
}
}  // namespace

std::vector<RegretRow> downsample(const RegretLedger& ledger, const std::string& policy,
                                  std::uint64_t seed, std::size_t max_points) {
  std::vector<RegretRow> out;
  const std::size_t n = ledger.size();
  if (n == 0 || max_points == 0) return out;
  const std::size_t points = std::min(n, max_points);
  for (std::size_t i = 1; i <= points; ++i) {
    // t_i = ceil(i n / points), so the last point is t = n.
    const std::size_t t = (i * n + points - 1) / points;
    const LedgerEntry& e = ledger.entries()[t - 1];
    out.push_back({policy, seed, t, e.cumulative, phase_tag(e)});
  }
  return out;
}

RegretResult regret_experiment(const ExperimentConfig& cfg) {
  const auto reps = static_cast<std::size_t>(cfg.repeats);
  const std::size_t np = cfg.policies.size();
  std::vector<std::vector<RegretRow>> rows(reps * np);
  std::vector<RegretSummary> summary(reps * np);
  parallel_for(reps * np, [&](std::size_t job) {
    const std::size_t rep = job / np;
    const std::string& policy = cfg.policies[job % np];
    const Instance inst = instance_for(cfg, 2 * rep);
    const std::uint64_t seed = derive_seed(cfg.seed, 2 * rep + 1);
    Environment env(inst.arms, inst.theta, seed);
    RegretSummary& s = summary[job];
    s.policy = policy;
    s.seed = rep;
    RegretLedger ledger;
    if (policy == "homer") {
      HomerParams p;
      p.delta = cfg.delta;
      p.eps = cfg.eps;
      p.s_bound = cfg.s ? *cfg.s : inst.theta.norm();
      p.warmup = parse_warmup_choice(cfg.warmup);
      p.war = cfg.war;
      HomerResult r = run_homer(env, cfg.horizon, p);
      s.warmup_pulls = r.ledger.phase_pulls(Phase::Warmup);
      s.rounds = static_cast<int>(r.rounds.size());
      s.best_survived = r.best_survived;
      ledger = std::move(r.ledger);
    } else {
      BaselineSpec spec;
      spec.kind = policy == "uniform" ? BaselineKind::Uniform : BaselineKind::ExploreThenCommit;
      spec.m = cfg.etc_m;
      ledger = baseline_policy(spec, env, cfg.horizon);
    }
    s.final_regret = ledger.final_regret();
    s.first_half = ledger.cumulative(ledger.size() / 2);
    s.second_half = s.final_regret - s.first_half;
    rows[job] = downsample(ledger, policy, rep);
  });
  RegretResult out;
  for (auto& block : rows) out.rows.insert(out.rows.end(), block.begin(), block.end());
  out.summary = std::move(summary);
  return out;
}

CsvTable regret_csv(const std::vector<RegretRow>& rows) {
  CsvTable t{"logbandit.regret.v1", kRegretHeader, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.policy, std::to_string(r.seed), std::to_string(r.t), format_double(r.cum_regret),
                      r.phase});
  }
  return t;
}

std::vector<RegretRow> parse_regret_csv(const CsvTable& table) {
  if (table.schema != "logbandit.regret.v1" || table.header != kRegretHeader) {
    throw Error(ErrorCode::InvalidArgument, "not a regret v1 table");
  }
  std::vector<RegretRow> rows;
  for (const auto& r : table.rows) {
    rows.push_back({r[0], to_u64(r[1]), to_u64(r[2]), to_double(r[3]), r[4]});
  }
  return rows;
}

CsvTable regret_summary_csv(const std::vector<RegretSummary>& rows) {
  CsvTable t{"logbandit.regret_summary.v1",
             {"policy", "seed", "final_regret", "first_half", "second_half", "warmup_pulls", "rounds",
              "best_survived"},
             {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.policy, std::to_string(r.seed), format_double(r.final_regret),
                      format_double(r.first_half), format_double(r.second_half),
                      std::to_string(r.warmup_pulls), std::to_string(r.rounds),
                      r.best_survived ? "1" : "0"});
  }
  return t;
}

std::vector<WarmupBenchRow> warmup_bench_experiment(const ExperimentConfig& cfg) {
  const auto reps = static_cast<std::size_t>(cfg.repeats);
  std::vector<std::vector<WarmupBenchRow>> out(reps);
  parallel_for(reps, [&](std::size_t rep) {
    const Instance inst = instance_for(cfg, 2 * rep);
    const double s = cfg.s ? *cfg.s : inst.theta.norm();
    const std::uint64_t base = derive_seed(cfg.seed, 2 * rep + 1);
    auto record = [&](const char* method, const WarmupReport& r) {
      out[rep].push_back({method, static_cast<int>(rep), r.samples_probing, r.samples_planning, r.total,
                          max_natural_error(inst.arms, r.theta_hat0, inst.theta)});
    };
    Environment e1(inst.arms, inst.theta, derive_seed(base, 0));
    record("naive", naive_warmup(e1, s, cfg.delta));
    Environment e2(inst.arms, inst.theta, derive_seed(base, 1));
    record("war", war(e2, war_params(cfg, s)));
    Environment e3(inst.arms, inst.theta, derive_seed(base, 2));
    record("oracle", oracle_warmup(e3, inst.theta, cfg.delta));
  });
  std::vector<WarmupBenchRow> rows;
  for (auto& block : out) rows.insert(rows.end(), block.begin(), block.end());
  return rows;
}

CsvTable warmup_bench_csv(const std::vector<WarmupBenchRow>& rows) {
  CsvTable t{"logbandit.warmup_bench.v1",
             {"method", "repeat", "samples_probing", "samples_planning", "total", "max_error"},
             {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.method, std::to_string(r.repeat), std::to_string(r.samples_probing),
                      std::to_string(r.samples_planning), std::to_string(r.total),
                      format_double(r.max_error)});
  }
  return t;
}

}  // namespace logbandit
