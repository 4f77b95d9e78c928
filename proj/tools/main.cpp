#include <cstdint>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ghdiff/config.hpp"
#include "ghdiff/experiment.hpp"
#include "ghdiff/validation.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;

struct Overrides {
  std::int64_t seed = -1;
  std::string out_dir;
  bool no_svg = false;

  void apply(ghdiff::ExperimentConfig& cfg) const {
    if (seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (no_svg) cfg.emit_svg = false;
  }
};

std::string epsilon_text(double epsilon) {
  if (std::isinf(epsilon)) return "no privacy (epsilon = inf)";
  return "epsilon = " + ghdiff::format_double(epsilon);
}

void print_experiment_summary(const ghdiff::ExperimentResult& result) {
  std::cout << "network: K = " << result.matrix.num_agents
            << ", lambda2 = " << ghdiff::format_double(result.matrix.lambda2)
            << ", a_bar = "
            << ghdiff::format_double(ghdiff::a_bar(result.matrix)) << "\n";
  std::cout << "analysis smoothness delta = "
            << ghdiff::format_double(result.resolved_smoothness)
            << ", risk floor = " << ghdiff::format_double(result.risk_floor)
            << "\n";
  for (const ghdiff::SchemeResult& sr : result.schemes) {
    std::cout << "scheme " << sr.label << ": final risk = "
              << ghdiff::format_double(sr.final_risk_mean) << ", plateau excess = "
              << ghdiff::format_double(sr.plateau_excess) << ", "
              << epsilon_text(sr.final_epsilon) << "\n";
  }
  std::cout << "reports written to " << result.config.output_dir << "\n";
}

int cmd_run(const std::string& config_path, const Overrides& overrides) {
  ghdiff::ExperimentConfig cfg = ghdiff::ExperimentConfig::load(config_path);
  overrides.apply(cfg);
  const ghdiff::ExperimentResult result = ghdiff::run_experiment(cfg);
  ghdiff::write_reports(result);
  print_experiment_summary(result);
  return kExitOk;
}

int cmd_validate(std::int64_t seed) {
  const std::uint64_t used_seed =
      seed >= 0 ? static_cast<std::uint64_t>(seed) : 20240913u;
  const std::vector<ghdiff::CheckResult> results =
      ghdiff::validation_suite(used_seed);
  bool all_pass = true;
  std::size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  for (const auto& r : results) {
    all_pass = all_pass && r.pass;
    std::cout << (r.pass ? "PASS  " : "FAIL  ") << std::left
              << std::setw(static_cast<int>(width) + 2) << r.name << r.detail
              << "\n";
  }
  std::cout << (all_pass ? "all checks passed" : "some checks FAILED") << "\n";
  return all_pass ? kExitOk : kExitCheckFailure;
}

int cmd_sweep(const std::string& config_path, const std::string& parameter,
              const std::vector<std::string>& value_tokens,
              const Overrides& overrides) {
  std::vector<double> values;
  for (const std::string& token : value_tokens) {
    if (ghdiff::KvDoc::trim(token).empty()) continue;
    values.push_back(ghdiff::KvDoc::parse_double(token, "--values"));
  }
  if (values.empty()) {
    throw ghdiff::UnknownParameter("sweep: --values lists no parameter values");
  }
  ghdiff::ExperimentConfig cfg = ghdiff::ExperimentConfig::load(config_path);
  overrides.apply(cfg);
  const std::vector<ghdiff::SweepOutcome> outcomes =
      ghdiff::run_sweep(cfg, parameter, values);
  for (const ghdiff::SweepOutcome& o : outcomes) {
    std::cout << parameter << " = " << ghdiff::format_double(o.value) << ":";
    for (const auto& [label, plateau] : o.plateau_per_scheme) {
      std::cout << "  " << label << " plateau " << ghdiff::format_double(plateau);
    }
    std::cout << "\n";
  }
  std::cout << "sweep reports written under " << cfg.output_dir << "/sweep_"
            << parameter << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "deterministic simulator for private decentralized diffusion learning"};
  app.require_subcommand(1);

  Overrides overrides;
  std::string config_path;
  std::string parameter;
  std::vector<std::string> values;
  std::int64_t seed = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", overrides.seed, "override the master seed");
    cmd->add_option("--out", overrides.out_dir, "override the output directory");
    cmd->add_flag("--no-svg", overrides.no_svg, "skip SVG chart emission");
  };

  CLI::App* run_cmd =
      app.add_subcommand("run", "execute all scheme x replica runs of a config");
  run_cmd->add_option("config", config_path, "experiment config file")->required();
  add_common(run_cmd);

  CLI::App* validate_cmd =
      app.add_subcommand("validate", "run the full invariant suite");
  validate_cmd->add_option("--seed", seed, "seed for the randomized checks");

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "repeat an experiment over parameter values");
  sweep_cmd->add_option("config", config_path, "experiment config file")
      ->required();
  sweep_cmd->add_option("--param", parameter, "mu, b_v, sigma_p2, K or lambda2_target")
      ->required();
  sweep_cmd
      ->add_option("--values", values, "comma-separated list of parameter values")
      ->required()
      ->delimiter(',');
  add_common(sweep_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(config_path, overrides);
    if (validate_cmd->parsed()) return cmd_validate(seed);
    if (sweep_cmd->parsed()) return cmd_sweep(config_path, parameter, values, overrides);
  } catch (const ghdiff::ConfigParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ghdiff::UnknownParameter& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailure;
  }
  return kExitUsage;
}
