#ifndef GHDIFF_ENGINE_HPP
#define GHDIFF_ENGINE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ghdiff/errors.hpp"
#include "ghdiff/graph.hpp"
#include "ghdiff/losses.hpp"
#include "ghdiff/metrics.hpp"
#include "ghdiff/perturbation.hpp"
#include "ghdiff/privacy.hpp"
#include "ghdiff/rng.hpp"
#include "ghdiff/trace.hpp"

namespace ghdiff {

struct RunConfig {
  double mu = 0.1;
  long long iterations = 100;
  PerturbationScheme scheme;
  std::uint64_t master_seed = 1;
  LossModel loss;
  DataSpec data;
  CombinationMatrix matrix;
  Vec init;  // common initial iterate; empty means the zero vector
};

// All agent iterates, the intermediates from the last adapt phase, and the
// network centroid.
struct NetworkState {
  long long iteration = 0;
  Eigen::MatrixXd w;    // K x M
  Eigen::MatrixXd phi;  // K x M
  Vec centroid;         // (1/K) sum_k w_k
};

// Evaluation data and bound parameters used to fill the trace. Shared across
// replicas of one experiment so curves are comparable.
struct MetricsContext {
  std::vector<Sample> eval_set;
  BoundInputs bounds;
  PrivacyLedger ledger;
};

// Adapt phase: phi_k = w_k - mu * g_k(w_k), every agent reading the same
// pre-update state. With a batch of samples the clipped per-sample gradients
// are averaged, which keeps ||phi_k - w_k|| <= mu G.
inline Eigen::MatrixXd adapt_step(const NetworkState& state,
                                  const RunConfig& config,
                                  const std::vector<std::vector<Sample>>& samples) {
  const auto k = state.w.rows();
  if (samples.size() != static_cast<std::size_t>(k)) {
    throw StructureMismatch("adapt_step: expected one sample batch per agent");
  }
  Eigen::MatrixXd phi(k, state.w.cols());
  for (Eigen::Index agent = 0; agent < k; ++agent) {
    const Vec w_agent = state.w.row(agent);
    const auto& batch = samples[static_cast<std::size_t>(agent)];
    if (batch.empty()) {
      throw StructureMismatch("adapt_step: empty sample batch for agent " +
                              std::to_string(agent + 1));
    }
    Vec grad = Vec::Zero(w_agent.size());
    for (const Sample& s : batch) {
      grad += stochastic_gradient(config.loss, w_agent, s);
    }
    grad /= static_cast<double>(batch.size());
    phi.row(agent) = w_agent - config.mu * grad;
  }
  return phi;
}

// Combine phase: w_k = sum_{l in N_k} a_lk (phi_l + q_lk). Self messages
// psi_ll participate here but are never part of the transmitted set the
// privacy accountant covers.
inline Eigen::MatrixXd combine_step(const Eigen::MatrixXd& phi,
                                    const PerturbationPlan& plan,
                                    const CombinationMatrix& a) {
  if (phi.rows() != a.num_agents) {
    throw StructureMismatch("combine_step: phi has " + std::to_string(phi.rows()) +
                            " rows, matrix has K=" + std::to_string(a.num_agents));
  }
  if (plan.num_agents() != a.num_agents || plan.dim() != phi.cols()) {
    throw StructureMismatch("combine_step: plan shape does not match state");
  }
  Eigen::MatrixXd w = a.weights.transpose() * phi;
  for (int l = 0; l < a.num_agents; ++l) {
    for (int k = 0; k < a.num_agents; ++k) {
      const double weight = a.weights(l, k);
      if (weight == 0.0) continue;
      if (!plan.defined(l, k)) {
        throw StructureMismatch("combine_step: plan lacks entry (" +
                                std::to_string(l + 1) + "," + std::to_string(k + 1) +
                                ")");
      }
      w.row(k) += weight * plan.entry(l, k).transpose();
    }
  }
  return w;
}

namespace detail {

inline TraceRow make_trace_row(const NetworkState& state, const RunConfig& config,
                               const MetricsContext& ctx,
                               std::optional<double> residual) {
  TraceRow row;
  row.iter = state.iteration;
  row.risk_centroid = empirical_risk(config.loss, state.centroid, ctx.eval_set);
  row.grad_norm_sq_centroid =
      empirical_risk_gradient(config.loss, state.centroid, ctx.eval_set)
          .squaredNorm();
  row.disagreement = disagreement(state.w);
  row.disagreement_bound = disagreement_bound(ctx.bounds);
  row.epsilon = ctx.ledger.epsilon_at_iteration(state.iteration);
  row.sensitivity_bound =
      ctx.ledger.entries.at(static_cast<std::size_t>(state.iteration)).sensitivity;
  row.centroid_residual = residual;
  return row;
}

inline void check_state_finite(const NetworkState& state) {
  if (!state.w.allFinite()) {
    throw InvariantViolation("run: non-finite iterate at iteration " +
                             std::to_string(state.iteration) +
                             " (step size too large for this loss?)");
  }
}

}  // namespace detail

inline MetricsContext make_metrics_context(const RunConfig& config) {
  MetricsContext ctx;
  RngStream eval_stream =
      make_stream(config.master_seed, StreamPurpose::kEval, 0);
  ctx.eval_set = draw_samples(config.data, config.data.eval_set_size, eval_stream);
  ctx.bounds.mu = config.mu;
  ctx.bounds.clip_bound = config.loss.clip_bound;
  ctx.bounds.smoothness = config.loss.smoothness;
  ctx.bounds.b_v = config.scheme.laplace_scale();
  ctx.bounds.lambda2 = config.matrix.lambda2;
  ctx.bounds.a_bar = a_bar(config.matrix);
  ctx.ledger = make_privacy_ledger(config.mu, config.loss.clip_bound,
                                   config.scheme.laplace_scale(),
                                   config.iterations);
  return ctx;
}

// Executes T iterations of adapt -> perturb -> combine and records one trace
// row per iteration, the initial state included. Deterministic in the master
// seed: each agent owns one data stream and one perturbation stream, so a
// zero-noise scheme consumes exactly the same data draws as the noiseless
// one.
inline RunTrace run(const RunConfig& config, const MetricsContext& ctx) {
  const int k = config.matrix.num_agents;
  const int m = config.data.dim();
  if (config.mu <= 0) throw ConfigParseError("run: mu must be positive");
  if (config.iterations < 0) throw ConfigParseError("run: negative iteration count");
  if (config.data.mean_minus.size() != m) {
    throw DimensionMismatch("run: mean_plus and mean_minus dimensions differ");
  }
  if (config.init.size() != 0 && config.init.size() != m) {
    throw DimensionMismatch("run: init vector has dimension " +
                            std::to_string(config.init.size()) + ", expected " +
                            std::to_string(m));
  }

  std::vector<RngStream> data_streams;
  std::vector<RngStream> pert_streams;
  data_streams.reserve(k);
  pert_streams.reserve(k);
  for (int agent = 0; agent < k; ++agent) {
    data_streams.push_back(
        make_stream(config.master_seed, StreamPurpose::kData, agent));
    pert_streams.push_back(
        make_stream(config.master_seed, StreamPurpose::kPerturbation, agent));
  }

  NetworkState state;
  state.iteration = 0;
  state.w = Eigen::MatrixXd::Zero(k, m);
  if (config.init.size() == m) {
    state.w.rowwise() = config.init.transpose();
  }
  state.phi = state.w;
  state.centroid = state.w.colwise().mean();

  const bool homomorphic =
      config.scheme.kind == PerturbationScheme::Kind::kGraphHomomorphic;

  RunTrace trace;
  trace.rows.reserve(config.iterations + 1);
  trace.rows.push_back(detail::make_trace_row(state, config, ctx, std::nullopt));

  std::vector<std::vector<Sample>> samples(k);
  for (long long i = 1; i <= config.iterations; ++i) {
    for (int agent = 0; agent < k; ++agent) {
      samples[static_cast<std::size_t>(agent)] =
          draw_samples(config.data, config.data.samples_per_agent_per_iter,
                       data_streams[static_cast<std::size_t>(agent)]);
    }
    const Eigen::MatrixXd phi = adapt_step(state, config, samples);
    const PerturbationPlan plan = make_plan(
        config.matrix, config.scheme, m, pert_streams, static_cast<int>(i));
    state.w = combine_step(phi, plan, config.matrix);
    state.phi = phi;
    state.centroid = state.w.colwise().mean();
    state.iteration = i;
    detail::check_state_finite(state);

    std::optional<double> residual;
    if (homomorphic) {
      const Vec phi_centroid = phi.colwise().mean();
      const double res = (state.centroid - phi_centroid).norm();
      residual = res;
      if (res > 1e-10 * std::max(1.0, state.centroid.norm())) {
        throw InvariantViolation(
            "run: centroid bookkeeping identity violated at iteration " +
            std::to_string(i) + " (residual " + format_double(res) + ")");
      }
    }
    trace.rows.push_back(detail::make_trace_row(state, config, ctx, residual));
  }
  return trace;
}

inline RunTrace run(const RunConfig& config) {
  return run(config, make_metrics_context(config));
}

}  // namespace ghdiff

#endif  // GHDIFF_ENGINE_HPP
