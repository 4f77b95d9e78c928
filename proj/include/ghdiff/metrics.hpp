#ifndef GHDIFF_METRICS_HPP
#define GHDIFF_METRICS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ghdiff/errors.hpp"
#include "ghdiff/graph.hpp"
#include "ghdiff/trace.hpp"

namespace ghdiff {

// Inputs to the analytical disagreement and descent bounds.
struct BoundInputs {
  double mu = 0.0;
  double clip_bound = 0.0;   // G
  double smoothness = 0.0;   // delta
  double b_v = 0.0;          // Laplace scale of the scheme under analysis
  double lambda2 = 0.0;
  double a_bar = 0.0;
  double j_floor = 0.0;      // declared lower bound on the risk
};

// max_k { (1 - a_kk) + (1 - a_kk)^2 / a_kk^2 }
inline double a_bar(const CombinationMatrix& a) {
  double worst = 0.0;
  for (int k = 0; k < a.num_agents; ++k) {
    const double self = a.weights(k, k);
    if (self <= 0.0) {
      throw ZeroSelfWeight("a_bar: a[" + std::to_string(k + 1) + "][" +
                           std::to_string(k + 1) + "] = 0");
    }
    const double rest = 1.0 - self;
    worst = std::max(worst, rest + (rest * rest) / (self * self));
  }
  return worst;
}

// (1/K) sum_k ||w_k - w_c||^2 for the rows of a K x M iterate matrix.
inline double disagreement(const Eigen::MatrixXd& iterates) {
  const auto k = iterates.rows();
  const Eigen::RowVectorXd centroid = iterates.colwise().mean();
  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    total += (iterates.row(i) - centroid).squaredNorm();
  }
  return total / static_cast<double>(k);
}

// mu^2 lambda2^2 / (1 - lambda2)^2 * G^2 + b_v^2 * 2 a_bar / (1 - lambda2)
inline double disagreement_bound(const BoundInputs& in) {
  if (in.lambda2 >= 1.0) {
    throw ConfigParseError("disagreement_bound: lambda2 must be below 1");
  }
  const double gap = 1.0 - in.lambda2;
  const double gradient_term = in.mu * in.mu * in.lambda2 * in.lambda2 /
                               (gap * gap) * in.clip_bound * in.clip_bound;
  const double noise_term = in.b_v * in.b_v * 2.0 * in.a_bar / gap;
  return gradient_term + noise_term;
}

// One-step descent bound evaluated from measured risk and gradient at the
// previous iteration; the O(mu^3) remainder is dropped and absorbed into the
// caller's slack.
inline double descent_rhs(double prev_risk, double prev_grad_norm_sq,
                          const BoundInputs& in) {
  const double gap = 1.0 - in.lambda2;
  return prev_risk -
         0.5 * in.mu * (1.0 - 2.0 * in.mu * in.smoothness) * prev_grad_norm_sq +
         0.5 * in.mu * (1.0 + 2.0 * in.smoothness * in.mu) * in.b_v * in.b_v *
             2.0 * in.smoothness * in.smoothness * in.a_bar / gap +
         in.mu * in.mu * 2.0 * in.smoothness * in.clip_bound * in.clip_bound;
}

// descent_rhs(i) minus the measured risk at i; nonnegative (up to statistical
// slack) when the descent relation holds. `trace` is expected to carry
// replica-averaged values.
inline double descent_residual(const RunTrace& trace, const BoundInputs& in,
                               long long i) {
  if (i < 1 || static_cast<std::size_t>(i) >= trace.rows.size()) {
    throw ConfigParseError("descent_residual: iteration " + std::to_string(i) +
                           " out of range");
  }
  const TraceRow& prev = trace.rows[static_cast<std::size_t>(i - 1)];
  const TraceRow& cur = trace.rows[static_cast<std::size_t>(i)];
  return descent_rhs(prev.risk_centroid, prev.grad_norm_sq_centroid, in) -
         cur.risk_centroid;
}

// Running average of the replica-averaged squared centroid gradient norm over
// iterations 0..upto_i-1.
inline double stationarity_summary(std::span<const RunTrace> replicas,
                                   long long upto_i) {
  if (replicas.empty() || upto_i < 1) {
    throw ConfigParseError("stationarity_summary: need >= 1 replica and i >= 1");
  }
  double total = 0.0;
  for (long long n = 0; n < upto_i; ++n) {
    double mean = 0.0;
    for (const RunTrace& t : replicas) {
      mean += t.rows.at(static_cast<std::size_t>(n)).grad_norm_sq_centroid;
    }
    total += mean / static_cast<double>(replicas.size());
  }
  return total / static_cast<double>(upto_i);
}

struct SeriesStats {
  std::vector<double> mean;
  std::vector<double> stderr_;  // stddev of the replica mean
};

inline SeriesStats series_stats(std::span<const std::vector<double>> per_replica) {
  SeriesStats out;
  if (per_replica.empty()) return out;
  const std::size_t n = per_replica.front().size();
  const double reps = static_cast<double>(per_replica.size());
  out.mean.assign(n, 0.0);
  out.stderr_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (const auto& series : per_replica) mean += series[i];
    mean /= reps;
    double var = 0.0;
    for (const auto& series : per_replica) {
      const double d = series[i] - mean;
      var += d * d;
    }
    var = per_replica.size() > 1 ? var / (reps - 1.0) : 0.0;
    out.mean[i] = mean;
    out.stderr_[i] = std::sqrt(var / reps);
  }
  return out;
}

// Replica-aggregated view of a set of traces from one configuration.
struct AggregatedTrace {
  std::vector<long long> iters;
  SeriesStats risk;
  SeriesStats grad_norm_sq;
  SeriesStats disagreement;
  SeriesStats excess_risk;  // risk minus the baseline risk floor
  std::vector<double> epsilon;
  std::vector<double> sensitivity_bound;
  std::vector<double> disagreement_bound;

  // Replica-mean trace, usable wherever a single RunTrace is expected.
  RunTrace mean_trace() const {
    RunTrace t;
    t.rows.reserve(iters.size());
    for (std::size_t i = 0; i < iters.size(); ++i) {
      TraceRow r;
      r.iter = iters[i];
      r.risk_centroid = risk.mean[i];
      r.grad_norm_sq_centroid = grad_norm_sq.mean[i];
      r.disagreement = disagreement.mean[i];
      r.disagreement_bound = disagreement_bound[i];
      r.epsilon = epsilon[i];
      r.sensitivity_bound = sensitivity_bound[i];
      t.rows.push_back(r);
    }
    return t;
  }
};

inline AggregatedTrace aggregate(std::span<const RunTrace> replicas,
                                 double risk_floor) {
  if (replicas.empty()) {
    throw ConfigParseError("aggregate: no replicas");
  }
  const std::size_t n = replicas.front().rows.size();
  for (const RunTrace& t : replicas) {
    if (t.rows.size() != n) {
      throw StructureMismatch("aggregate: replicas have differing lengths");
    }
  }
  std::vector<std::vector<double>> risk(replicas.size()),
      grad(replicas.size()), dis(replicas.size()), excess(replicas.size());
  for (std::size_t r = 0; r < replicas.size(); ++r) {
    risk[r].reserve(n);
    for (const TraceRow& row : replicas[r].rows) {
      risk[r].push_back(row.risk_centroid);
      grad[r].push_back(row.grad_norm_sq_centroid);
      dis[r].push_back(row.disagreement);
      excess[r].push_back(row.risk_centroid - risk_floor);
    }
  }
  AggregatedTrace out;
  out.iters.reserve(n);
  for (const TraceRow& row : replicas.front().rows) {
    out.iters.push_back(row.iter);
    out.epsilon.push_back(row.epsilon);
    out.sensitivity_bound.push_back(row.sensitivity_bound);
    out.disagreement_bound.push_back(row.disagreement_bound);
  }
  out.risk = series_stats(risk);
  out.grad_norm_sq = series_stats(grad);
  out.disagreement = series_stats(dis);
  out.excess_risk = series_stats(excess);
  return out;
}

// Per-iteration descent residual (mean, stderr) across replicas, defined for
// i >= 1. Residuals are computed per replica first so the stderr reflects the
// cross-correlation of consecutive risk values.
inline std::vector<std::pair<double, double>> descent_residual_series(
    std::span<const RunTrace> replicas, const BoundInputs& in) {
  if (replicas.empty()) {
    throw ConfigParseError("descent_residual_series: no replicas");
  }
  const std::size_t n = replicas.front().rows.size();
  std::vector<std::vector<double>> residuals(replicas.size());
  for (std::size_t r = 0; r < replicas.size(); ++r) {
    residuals[r].reserve(n > 0 ? n - 1 : 0);
    for (std::size_t i = 1; i < n; ++i) {
      const TraceRow& prev = replicas[r].rows[i - 1];
      const TraceRow& cur = replicas[r].rows[i];
      residuals[r].push_back(
          descent_rhs(prev.risk_centroid, prev.grad_norm_sq_centroid, in) -
          cur.risk_centroid);
    }
  }
  const SeriesStats stats = series_stats(residuals);
  std::vector<std::pair<double, double>> out;
  out.reserve(stats.mean.size());
  for (std::size_t i = 0; i < stats.mean.size(); ++i) {
    out.emplace_back(stats.mean[i], stats.stderr_[i]);
  }
  return out;
}

}  // namespace ghdiff

#endif  // GHDIFF_METRICS_HPP
