#ifndef GHDIFF_EXPERIMENT_HPP
#define GHDIFF_EXPERIMENT_HPP

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ghdiff/config.hpp"
#include "ghdiff/engine.hpp"
#include "ghdiff/report.hpp"

namespace ghdiff {

// Deterministic minimizer of the empirical risk over the evaluation set;
// closed-form solve for least squares, damped Newton for ridge logistic.
// Used as the excess-risk floor of the comparison reports.
inline Vec minimize_empirical_risk(const LossModel& model,
                                   std::span<const Sample> eval_set) {
  if (eval_set.empty()) {
    throw EmptyEvalSet("minimize_empirical_risk: empty evaluation set");
  }
  const Eigen::Index m = eval_set.front().features.size();
  const double n = static_cast<double>(eval_set.size());

  if (model.kind == LossKind::kLeastSquares) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
    Vec rhs = Vec::Zero(m);
    for (const Sample& s : eval_set) {
      h += s.features * s.features.transpose();
      rhs += s.label * s.features;
    }
    h /= n;
    rhs /= n;
    h.diagonal().array() += 1e-12;  // guards rank-deficient sample sets
    return h.ldlt().solve(rhs);
  }

  Vec w = Vec::Zero(m);
  double risk = empirical_risk(model, w, eval_set);
  for (int iter = 0; iter < 200; ++iter) {
    const Vec grad = empirical_risk_gradient(model, w, eval_set);
    if (grad.norm() <= 1e-12) break;
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(m, m);
    for (const Sample& s : eval_set) {
      const double z = s.label * s.features.dot(w);
      const double sig = z > 0 ? std::exp(-z) / (1.0 + std::exp(-z))
                               : 1.0 / (1.0 + std::exp(z));
      hess += (sig * (1.0 - sig)) * (s.features * s.features.transpose());
    }
    hess /= n;
    hess.diagonal().array() += model.ridge + 1e-12;
    const Vec step = hess.ldlt().solve(grad);
    double scale = 1.0;
    bool improved = false;
    for (int bt = 0; bt < 40; ++bt) {
      const Vec candidate = w - scale * step;
      const double candidate_risk = empirical_risk(model, candidate, eval_set);
      if (candidate_risk < risk) {
        w = candidate;
        risk = candidate_risk;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) break;
  }
  return w;
}

struct SchemeResult {
  PerturbationScheme scheme;
  std::string label;
  BoundInputs bounds;
  std::vector<RunTrace> replicas;
  AggregatedTrace agg;
  double final_epsilon = 0.0;
  double final_risk_mean = 0.0;
  double plateau_excess = 0.0;  // mean excess risk over the final 10% of iters
};

struct ExperimentResult {
  ExperimentConfig config;
  CombinationMatrix matrix;
  std::vector<Sample> eval_set;
  double resolved_smoothness = 0.0;
  double risk_floor = 0.0;
  std::vector<SchemeResult> schemes;
};

// First row index of the final 10% of iterations (at least one row).
inline std::size_t plateau_start(std::size_t num_rows) {
  const std::size_t count = std::max<std::size_t>(1, (num_rows - 1) / 10);
  return num_rows - count;
}

inline double plateau_mean(const std::vector<double>& series) {
  const std::size_t start = plateau_start(series.size());
  double total = 0.0;
  for (std::size_t i = start; i < series.size(); ++i) total += series[i];
  return total / static_cast<double>(series.size() - start);
}

namespace detail {

inline void run_replicas_parallel(const RunConfig& base,
                                  const MetricsContext& ctx, int replicas,
                                  std::uint64_t experiment_seed,
                                  std::vector<RunTrace>& out) {
  out.assign(replicas, RunTrace{});
  std::atomic<int> next{0};
  const unsigned workers = std::max(
      1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                             static_cast<unsigned>(replicas)));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        int r;
        while ((r = next.fetch_add(1)) < replicas) {
          RunConfig rc = base;
          rc.master_seed = replica_seed(experiment_seed, r);
          out[static_cast<std::size_t>(r)] = run(rc, ctx);
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult result;
  result.config = config;
  result.matrix = config.build_matrix();

  RngStream eval_stream = make_stream(config.master_seed, StreamPurpose::kEval, 0);
  result.eval_set =
      draw_samples(config.data, config.data.eval_set_size, eval_stream);

  LossModel loss = config.loss;
  if (config.smoothness_auto) {
    loss.smoothness = smoothness_from_features(loss, result.eval_set);
  }
  result.resolved_smoothness = loss.smoothness;

  const Vec w_star = minimize_empirical_risk(loss, result.eval_set);
  double floor = empirical_risk(loss, w_star, result.eval_set);

  for (const PerturbationScheme& scheme : config.schemes) {
    SchemeResult sr;
    sr.scheme = scheme;
    sr.label = scheme.label();

    RunConfig rc = config.to_run_config(scheme, result.matrix, config.master_seed);
    rc.loss = loss;

    MetricsContext ctx;
    ctx.eval_set = result.eval_set;
    ctx.bounds.mu = config.mu;
    ctx.bounds.clip_bound = loss.clip_bound;
    ctx.bounds.smoothness = loss.smoothness;
    ctx.bounds.b_v = scheme.laplace_scale();
    ctx.bounds.lambda2 = result.matrix.lambda2;
    ctx.bounds.a_bar = a_bar(result.matrix);
    ctx.bounds.j_floor = config.j_floor;
    ctx.ledger = make_privacy_ledger(config.mu, loss.clip_bound,
                                     scheme.laplace_scale(), config.iterations);
    sr.bounds = ctx.bounds;

    detail::run_replicas_parallel(rc, ctx, config.replicas, config.master_seed,
                                  sr.replicas);
    sr.final_epsilon = ctx.ledger.entries.back().epsilon;
    result.schemes.push_back(std::move(sr));
  }

  // The excess-risk floor is the smallest risk value seen anywhere in the
  // comparison, the evaluation-set optimum included.
  for (const SchemeResult& sr : result.schemes) {
    for (const RunTrace& t : sr.replicas) {
      for (const TraceRow& row : t.rows) floor = std::min(floor, row.risk_centroid);
    }
  }
  result.risk_floor = floor;

  for (SchemeResult& sr : result.schemes) {
    sr.agg = aggregate(sr.replicas, result.risk_floor);
    sr.final_risk_mean = sr.agg.risk.mean.back();
    sr.plateau_excess = plateau_mean(sr.agg.excess_risk.mean);
  }
  return result;
}

inline void write_reports(const ExperimentResult& result) {
  namespace fs = std::filesystem;
  const fs::path out_dir = result.config.output_dir;
  fs::create_directories(out_dir);
  write_eval_set_csv(out_dir / "eval_set.csv", result.eval_set);

  std::vector<std::pair<std::string, AggregatedTrace>> per_scheme;
  for (const SchemeResult& sr : result.schemes) {
    for (std::size_t r = 0; r < sr.replicas.size(); ++r) {
      std::ostringstream name;
      name << sr.label << "_rep" << std::setw(3) << std::setfill('0') << r
           << ".csv";
      write_trace_csv(out_dir / name.str(), sr.replicas[r]);
    }
    per_scheme.emplace_back(sr.label, sr.agg);
  }
  // a single run carries nothing to aggregate: only its own trace is written
  const bool aggregated =
      result.schemes.size() > 1 || result.config.replicas > 1;
  if (aggregated) {
    write_comparison_csv(out_dir / "comparison.csv", per_scheme);
    if (result.config.emit_svg) {
      write_svg_from_comparison(out_dir / "comparison.csv",
                                out_dir / "comparison.svg");
    }
  }
}

// ---------------------------------------------------------------------------
// Parameter sweeps

struct SweepOutcome {
  double value = 0.0;
  std::filesystem::path report_dir;
  std::vector<std::pair<std::string, double>> plateau_per_scheme;
};

// Finds the self-loop blend theta whose blended matrix hits the requested
// lambda2; the blended eigenvalues are theta + (1 - theta) lambda_i.
inline double solve_blend_for_lambda2(const CombinationMatrix& unblended,
                                      double target) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(unblended.weights);
  const Vec eigs = solver.eigenvalues();
  // drop one eigenvalue equal to 1 (the averaging direction)
  std::vector<double> rest;
  bool dropped = false;
  for (Eigen::Index i = eigs.size() - 1; i >= 0; --i) {
    if (!dropped && std::abs(eigs[i] - 1.0) < 1e-9) {
      dropped = true;
      continue;
    }
    rest.push_back(eigs[i]);
  }
  auto lambda2_of = [&](double theta) {
    double worst = 0.0;
    for (const double l : rest) {
      worst = std::max(worst, std::abs(theta + (1.0 - theta) * l));
    }
    return worst;
  };
  double best_theta = 0.0;
  double best_err = std::abs(lambda2_of(0.0) - target);
  for (double theta = 0.0; theta < 0.999; theta += 1e-4) {
    const double err = std::abs(lambda2_of(theta) - target);
    if (err < best_err) {
      best_err = err;
      best_theta = theta;
    }
  }
  if (best_err > 1e-3) {
    throw ConfigParseError("lambda2_target " + format_double(target) +
                           " is not reachable by self-loop blending on this "
                           "topology (closest error " +
                           format_double(best_err) + ")");
  }
  return best_theta;
}

inline ExperimentConfig apply_sweep_value(const ExperimentConfig& base,
                                          const std::string& parameter,
                                          double value) {
  ExperimentConfig cfg = base;
  if (parameter == "mu") {
    if (value <= 0) throw ConfigParseError("sweep mu: values must be positive");
    cfg.mu = value;
  } else if (parameter == "b_v") {
    if (value < 0) throw ConfigParseError("sweep b_v: values must be nonnegative");
    for (PerturbationScheme& s : cfg.schemes) {
      if (s.kind == PerturbationScheme::Kind::kGraphHomomorphic) s.b_v = value;
    }
  } else if (parameter == "sigma_p2") {
    if (value < 0) {
      throw ConfigParseError("sweep sigma_p2: values must be nonnegative");
    }
    for (PerturbationScheme& s : cfg.schemes) {
      if (s.kind == PerturbationScheme::Kind::kIid) s.sigma_p2 = value;
    }
  } else if (parameter == "K") {
    const int k = static_cast<int>(std::llround(value));
    if (k < 1) throw ConfigParseError("sweep K: values must be positive integers");
    if (cfg.topology.kind == TopologySpec::Kind::kFile) {
      throw ConfigParseError("sweep K: topology comes from a file, K is fixed");
    }
    cfg.num_agents = k;
  } else if (parameter == "lambda2_target") {
    if (value < 0 || value >= 1) {
      throw ConfigParseError("sweep lambda2_target: values must lie in [0,1)");
    }
    const Topology t = cfg.topology.build(cfg.num_agents, cfg.master_seed);
    const double theta = solve_blend_for_lambda2(metropolis_weights(t), value);
    cfg.self_blend = theta;
  } else {
    throw UnknownParameter("sweep parameter '" + parameter +
                           "' (expected mu, b_v, sigma_p2, K or lambda2_target)");
  }
  return cfg;
}

inline std::string sweep_value_tag(double value) {
  std::string s = format_double(value);
  for (char& c : s) {
    if (c == '.') c = 'p';
    if (c == '-') c = 'm';
  }
  return s;
}

inline std::vector<SweepOutcome> run_sweep(const ExperimentConfig& base,
                                           const std::string& parameter,
                                           const std::vector<double>& values,
                                           bool write_files = true) {
  if (values.empty()) {
    throw UnknownParameter("sweep: no values given for parameter '" + parameter +
                           "'");
  }
  namespace fs = std::filesystem;
  const fs::path sweep_dir = fs::path(base.output_dir) / ("sweep_" + parameter);
  std::vector<SweepOutcome> outcomes;
  for (const double value : values) {
    ExperimentConfig cfg = apply_sweep_value(base, parameter, value);
    SweepOutcome outcome;
    outcome.value = value;
    outcome.report_dir = sweep_dir / ("value_" + sweep_value_tag(value));
    cfg.output_dir = outcome.report_dir.string();
    const ExperimentResult result = run_experiment(cfg);
    if (write_files) write_reports(result);
    for (const SchemeResult& sr : result.schemes) {
      outcome.plateau_per_scheme.emplace_back(sr.label, sr.plateau_excess);
    }
    outcomes.push_back(std::move(outcome));
  }
  if (write_files) {
    fs::create_directories(sweep_dir);
    std::ofstream out(sweep_dir / "summary.csv");
    if (!out) {
      throw ConfigParseError("cannot write sweep summary under '" +
                             sweep_dir.string() + "'");
    }
    out << "parameter,value,scheme,plateau_excess\n";
    for (const SweepOutcome& o : outcomes) {
      for (const auto& [label, plateau] : o.plateau_per_scheme) {
        out << parameter << ',' << format_double(o.value) << ',' << label << ','
            << format_double(plateau) << "\n";
      }
    }
  }
  return outcomes;
}

}  // namespace ghdiff

#endif  // GHDIFF_EXPERIMENT_HPP
