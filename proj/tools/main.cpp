// neuronlab command-line front end.
//
// exit codes: 0 ran, 1 config or usage error, 2 internal error,
// 3 verify ran and at least one property failed.

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "neuronlab/error.hpp"
#include "neuronlab/harness.hpp"

using namespace neuronlab;

namespace {

int exit_code(Errc code) {
  switch (code) {
    case Errc::non_finite_iterate:
    case Errc::metric_missing:
    case Errc::insufficient_logging:
    case Errc::io_error: return 2;
    default: return 1;
  }
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used == 0 || used != item.size()) throw Error(Errc::config_invalid, "values: cannot parse '" + item + "'");
    out.push_back(x);
  }
  return out;
}

ExperimentConfig load(const std::string& path, const std::optional<std::uint64_t>& seed) {
  // an unreadable config is a usage error, not an internal one
  if (!std::filesystem::is_regular_file(path)) throw Error(Errc::config_invalid, "config not found: " + path);
  ExperimentConfig cfg = load_config(path);
  if (seed) cfg.seed = *seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-neuron learning lab: GD, SGD and GLMTron runs with certificates"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  int workers = 1;
  app.add_option("--seed", seed, "root seed (overrides the config)");
  app.add_option("--workers", workers, "worker threads for replicas and suites")->check(CLI::PositiveNumber);

  std::string config, out, axis, values, suite = "all", aggregation = "excess_risk", report;
  std::optional<double> resolution;
  std::optional<long> n_mc;

  auto* run = app.add_subcommand("run", "execute one experiment and write its artifact bundle");
  run->add_option("--config", config, "experiment JSON")->required();
  run->add_option("--out", out, "output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "run an experiment over one axis");
  sweep->add_option("--config", config, "base experiment JSON")->required();
  sweep->add_option("--axis", axis, "n_train, target_opt, eta or dimension")->required();
  sweep->add_option("--values", values, "comma-separated, strictly increasing")->required();
  sweep->add_option("--out", out, "output directory")->required();
  sweep->add_option("--aggregation", aggregation, "excess_risk or best_iterate_population_F")
      ->check(CLI::IsMember({"excess_risk", "best_iterate_population_F"}));

  auto* verify = app.add_subcommand("verify", "run property suites");
  verify->add_option("--suite", suite, "facts, claims, lemmas, concentration or all")
      ->check(CLI::IsMember({"facts", "claims", "lemmas", "concentration", "all"}));
  verify->add_option("--report", report, "also write the JSON report here");

  auto* oracle = app.add_subcommand("oracle", "grid-search OPT for the config's label model (d <= 3)");
  oracle->add_option("--config", config, "experiment JSON")->required();
  oracle->add_option("--resolution", resolution, "grid spacing (default: config or 0.1)");
  oracle->add_option("--n-mc", n_mc, "Monte-Carlo sample size (default: config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      const RunResult res = run_experiment(load(config, seed), std::filesystem::path(out), workers);
      std::cout << "wrote " << out << " (" << res.replicas.size() << " replicas, "
                << res.summary["certificate_pass_count"].get<long>() << " certificates passed)\n";
    } else if (*sweep) {
      const Aggregation agg =
          aggregation == "excess_risk" ? Aggregation::excess_risk : Aggregation::best_iterate_population_F;
      const SweepResult res =
          run_sweep(load(config, seed), axis, parse_values(values), std::filesystem::path(out), workers, agg);
      std::cout << "wrote " << out << " (" << res.points.size() << " points";
      if (res.fit) std::cout << ", slope " << res.fit->slope << " +- " << res.fit->slope_se;
      std::cout << ")\n";
    } else if (*verify) {
      const VerifyResult res = run_verify(suite, seed ? *seed : 1, workers);
      if (!report.empty()) write_json(report, res.report);
      for (const auto& [name, s] : res.report["suites"].items()) {
        for (const auto& c : s["checks"]) {
          std::cout << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << name << ' ' << c["name"].get<std::string>()
                    << '\n';
        }
      }
      std::cout << (res.pass ? "verify: all checks passed\n" : "verify: FAILED\n");
      return res.pass ? 0 : 3;
    } else if (*oracle) {
      ExperimentConfig cfg = load(config, seed);
      const double res = resolution ? *resolution : cfg.oracle_resolution.value_or(0.1);
      const long m = n_mc ? *n_mc : cfg.oracle_n_mc;
      LabelModel model = cfg.label;
      if (cfg.opt_target) throw Error(Errc::config_invalid, "oracle: opt_target configs already know OPT");
      if (cfg.teacher == TeacherMode::e1) model.v = Eigen::VectorXd::Unit(cfg.input.dim, 0);
      if (cfg.teacher == TeacherMode::random) {
        throw Error(Errc::config_invalid, "oracle: give label.v explicitly (random teachers are resolved at run time)");
      }
      const OracleResult r = grid_opt(model, cfg.input, cfg.act, m, res, cfg.seed, workers);
      std::cout << to_json(r).dump(2) << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "neuronlab: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "neuronlab: internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
