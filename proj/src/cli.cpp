#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "logbandit/harness.hpp"

namespace logbandit {

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> repeats;
  std::optional<std::string> out;
  std::string arms;
  std::string theta;
};

std::vector<double> parse_list(const std::string& s, const std::string& field) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Config, field + ": bad number '" + tok + "'");
    }
  }
  if (v.empty()) throw Error(ErrorCode::Config, field + ": empty list");
  return v;
}

ExperimentConfig resolve(const std::string& command, const Overrides& o) {
  ExperimentConfig cfg;
  if (!o.config.empty()) {
    cfg = load_config(o.config);
    const bool design_kind = cfg.kind == "design" || cfg.kind == "design-contrast";
    if (command == "design" ? !design_kind : cfg.kind != command) {
      throw Error(ErrorCode::Config, "kind: config is for '" + cfg.kind + "', not '" + command + "'");
    }
  } else if (command == "design") {
    if (o.arms.empty() || o.theta.empty()) {
      throw Error(ErrorCode::Config, "arms: design needs --config or both --arms and --theta");
    }
    cfg.kind = "design";
  } else {
    throw Error(ErrorCode::Config, "config: --config is required for " + command);
  }
  if (!o.arms.empty()) cfg.arms = parse_arm_shorthand(o.arms);
  if (!o.theta.empty()) cfg.theta = parse_list(o.theta, "theta");
  if (cfg.theta && cfg.arms.kind != ArmKind::Sphere) cfg.d = cfg.theta->size();
  if (o.seed) cfg.seed = *o.seed;
  if (o.repeats) cfg.repeats = *o.repeats;
  if (o.out) cfg.output = *o.out;
  cfg.validate();
  return cfg;
}

void emit(const std::filesystem::path& dir, const std::string& name, const CsvTable& t,
          std::ostream& out) {
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path.string() + "'");
  write_csv(f, t);
  out << "wrote " << path.string() << "\n";
}

int dispatch(const std::string& command, const Overrides& o, bool design_to_file, std::ostream& out) {
  const ExperimentConfig cfg = resolve(command, o);
  const std::filesystem::path dir(cfg.output);
  if (command == "design") {
    const DesignContrast c = design_contrast_experiment(cfg);
    const std::string name = o.arms.empty() ? std::string(to_string(cfg.arms.kind)) +
                                                  std::to_string(cfg.arms.count)
                                            : o.arms;
    const std::string text = design_contrast_json(c, name);
    if (design_to_file) {
      std::filesystem::create_directories(dir);
      std::ofstream f(dir / "design_contrast.json", std::ios::binary);
      f << text;
      out << "wrote " << (dir / "design_contrast.json").string() << "\n";
    } else {
      out << text;
    }
  } else if (command == "table1") {
    const auto rows = table1_experiment(cfg);
    emit(dir, "table1.csv", table1_csv(rows), out);
    emit(dir, "table1_summary.csv", table1_summary_csv(summarize_table1(rows)), out);
  } else if (command == "bias") {
    emit(dir, "bias.csv", bias_csv(bias_experiment(cfg)), out);
  } else if (command == "regret") {
    const RegretResult r = regret_experiment(cfg);
    emit(dir, "regret.csv", regret_csv(r.rows), out);
    emit(dir, "regret_summary.csv", regret_summary_csv(r.summary), out);
  } else if (command == "warmup-bench") {
    emit(dir, "warmup_bench.csv", warmup_bench_csv(warmup_bench_experiment(cfg)), out);
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Logistic bandit experiments"};
  app.require_subcommand(1);
  Overrides o;
  std::uint64_t seed = 0;
  int repeats = 0;
  std::string out_dir;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON experiment config");
    sub->add_option("--seed", seed, "base seed");
    sub->add_option("--repeats", repeats, "number of repeats")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "output directory");
  };
  for (const char* name : {"table1", "bias", "regret", "warmup-bench"}) {
    add_common(app.add_subcommand(name, std::string("run the ") + name + " experiment"));
  }
  CLI::App* design = app.add_subcommand("design", "G- and H-optimal designs as JSON");
  add_common(design);
  design->add_option("--arms", o.arms, "circle30, sphere20, grid101, standard or an arm file");
  design->add_option("--theta", o.theta, "comma separated theta");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) o.seed = seed;
  if (sub->count("--repeats")) o.repeats = repeats;
  if (sub->count("--out")) o.out = out_dir;

  try {
    return dispatch(sub->get_name(), o, sub->count("--out") > 0, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::Config ? 3 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace logbandit
