#ifndef GHDIFF_VALIDATION_HPP
#define GHDIFF_VALIDATION_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ghdiff/engine.hpp"
#include "ghdiff/graph.hpp"
#include "ghdiff/losses.hpp"
#include "ghdiff/metrics.hpp"
#include "ghdiff/perturbation.hpp"
#include "ghdiff/privacy.hpp"

namespace ghdiff {

namespace validation_detail {

inline Topology random_connected(int k, RngStream& rng) {
  const double p = 0.25 + 0.6 * rng.uniform01();
  return Topology::erdos_renyi_connected(k, p, rng);
}

inline DataSpec small_spec(int dim) {
  DataSpec spec;
  spec.mean_plus = Vec::Constant(dim, 0.4);
  spec.mean_minus = Vec::Constant(dim, -0.4);
  spec.sigma_h2 = 1.0;
  spec.eval_set_size = 200;
  return spec;
}

inline bool traces_identical(const RunTrace& a, const RunTrace& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const TraceRow& x = a.rows[i];
    const TraceRow& y = b.rows[i];
    if (x.iter != y.iter || x.risk_centroid != y.risk_centroid ||
        x.grad_norm_sq_centroid != y.grad_norm_sq_centroid ||
        x.disagreement != y.disagreement ||
        x.sensitivity_bound != y.sensitivity_bound) {
      return false;
    }
  }
  return true;
}

}  // namespace validation_detail

// Full invariant suite behind the `validate` subcommand: graph validators,
// nullspace checks, gradient/finite-difference checks, accountant identities
// and the one-step empirical differential-privacy check.
inline std::vector<CheckResult> validation_suite(std::uint64_t seed = 20240913) {
  namespace vd = validation_detail;
  std::vector<CheckResult> results;
  auto add = [&results](const std::string& name,
                        const std::function<std::string()>& body) {
    CheckResult r;
    r.name = name;
    try {
      r.detail = body();  // empty or informative detail on success
      r.pass = true;
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = e.what();
    }
    results.push_back(r);
  };
  auto expect = [](bool cond, const std::string& msg) {
    if (!cond) throw std::runtime_error(msg);
  };

  add("graph_matrix_invariants", [&] {
    RngStream rng = make_stream(seed, StreamPurpose::kProbe, 1);
    for (int trial = 0; trial < 25; ++trial) {
      const int k = 2 + static_cast<int>(rng.uniform01() * 18);
      const Topology t = vd::random_connected(k, rng);
      const CombinationMatrix a = metropolis_weights(t);
      require_valid(validate_combination_matrix(a.weights, &t), "metropolis");
      const CombinationMatrix blended = blend_self_loops(a, 0.05);
      require_valid(validate_combination_matrix(blended.weights, &t), "blended");
    }
    return "25 random connected topologies, raw and blended";
  });

  add("graph_disconnected_rejected", [&] {
    Topology split;
    split.num_agents = 6;
    split.add_edge(0, 1);
    split.add_edge(1, 2);
    split.add_edge(3, 4);
    split.add_edge(4, 5);
    try {
      metropolis_weights(split);
    } catch (const DisconnectedGraph&) {
      return "DisconnectedGraph raised as required";
    }
    throw std::runtime_error("disconnected topology was accepted");
  });

  add("graph_lambda2_connectivity", [&] {
    RngStream rng = make_stream(seed, StreamPurpose::kProbe, 2);
    for (int trial = 0; trial < 10; ++trial) {
      const int k = 3 + static_cast<int>(rng.uniform01() * 17);
      const Topology t = vd::random_connected(k, rng);
      const CombinationMatrix a = metropolis_weights(t);
      expect(a.lambda2 < 1.0, "connected topology with lambda2 >= 1");
      // two disconnected copies on the doubled agent set
      Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * k, 2 * k);
      block.topLeftCorner(k, k) = a.weights;
      block.bottomRightCorner(k, k) = a.weights;
      expect(spectral_gap(block) >= 1.0 - 1e-12,
             "disconnected block matrix with lambda2 < 1");
    }
    return "lambda2 < 1 exactly on the connected samples";
  });

  add("graph_blend_contraction", [&] {
    RngStream rng = make_stream(seed, StreamPurpose::kProbe, 3);
    for (int trial = 0; trial < 10; ++trial) {
      const Topology t = vd::random_connected(8, rng);
      const CombinationMatrix a = metropolis_weights(t);
      const double theta = 0.05 + 0.9 * rng.uniform01();
      const CombinationMatrix blended = blend_self_loops(a, theta);
      expect(blended.lambda2 <= (1.0 - theta) * a.lambda2 + theta + 1e-12,
             "blend exceeded the convex-combination bound");
    }
    return "lambda2 under blending stays within the convex bound";
  });

  add("perturbation_nullspace_exactness", [&] {
    RngStream rng = make_stream(seed, StreamPurpose::kProbe, 4);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const int k = 3 + static_cast<int>(rng.uniform01() * 17);
      const CombinationMatrix a =
          blend_self_loops(metropolis_weights(vd::random_connected(k, rng)), 0.05);
      std::vector<RngStream> streams;
      for (int agent = 0; agent < k; ++agent) {
        streams.push_back(make_stream(seed + trial, StreamPurpose::kPerturbation,
                                      agent));
      }
      for (int iter = 0; iter < 20; ++iter) {
        const double b_v = (iter % 3 == 0) ? 10.0 : 1.0;
        const PerturbationPlan plan = homomorphic_plan(a, b_v, 4, streams, iter);
        worst = std::max(worst,
                         weighted_plan_sum(a, plan).cwiseAbs().maxCoeff());
      }
    }
    expect(worst <= 1e-12, "weighted plan sum reached " + format_double(worst));
    return "max |weighted sum| = " + format_double(worst);
  });

  add("perturbation_iid_broadcast", [&] {
    RngStream rng = make_stream(seed, StreamPurpose::kProbe, 5);
    const CombinationMatrix a =
        metropolis_weights(vd::random_connected(6, rng));
    std::vector<RngStream> streams;
    for (int agent = 0; agent < 6; ++agent) {
      streams.push_back(make_stream(seed, StreamPurpose::kPerturbation, agent));
    }
    const PerturbationPlan plan = iid_plan(a, 2.0, 3, streams);
    for (int l = 0; l < 6; ++l) {
      for (int k = 0; k < 6; ++k) {
        if (!plan.defined(l, k)) continue;
        expect(plan.entry(l, k) == plan.entry(l, l),
               "iid plan entry differs from the broadcast vector");
      }
    }
    return "every neighbor of an agent receives the identical vector";
  });

  add("loss_gradient_finite_difference", [&] {
    RngStream rng = make_stream(seed, StreamPurpose::kProbe, 6);
    const int dim = 4;
    const DataSpec spec = vd::small_spec(dim);
    for (const LossKind kind : {LossKind::kLeastSquares, LossKind::kRidgeLogistic}) {
      LossModel model;
      model.kind = kind;
      model.ridge = kind == LossKind::kRidgeLogistic ? 0.1 : 0.0;
      model.clip_bound = 1e9;  // keep every probe in the unclipped regime
      for (int trial = 0; trial < 250; ++trial) {
        const Sample s = draw_sample(spec, rng);
        Vec w(dim);
        for (int i = 0; i < dim; ++i) w[i] = 4.0 * (rng.uniform01() - 0.5);
        const Vec analytic = stochastic_gradient(model, w, s);
        Vec fd(dim);
        const double h = 1e-5;
        for (int i = 0; i < dim; ++i) {
          Vec wp = w, wm = w;
          wp[i] += h;
          wm[i] -= h;
          fd[i] = (sample_loss(model, wp, s) - sample_loss(model, wm, s)) / (2 * h);
        }
        const double rel =
            (analytic - fd).norm() / std::max(1.0, analytic.norm());
        expect(rel <= 1e-6, "finite-difference mismatch " + format_double(rel));
      }
    }
    return "500 random probes across both losses within 1e-6";
  });

  add("loss_gradient_clipping", [&] {
    RngStream rng = make_stream(seed, StreamPurpose::kProbe, 7);
    const DataSpec spec = vd::small_spec(4);
    LossModel model;
    model.kind = LossKind::kLeastSquares;
    model.clip_bound = 0.5;
    for (int trial = 0; trial < 500; ++trial) {
      const Sample s = draw_sample(spec, rng);
      Vec w(4);
      for (int i = 0; i < 4; ++i) w[i] = 20.0 * (rng.uniform01() - 0.5);
      expect(stochastic_gradient(model, w, s).norm() <= model.clip_bound + 1e-12,
             "clipped gradient exceeded the bound");
    }
    return "clipped norms stay within G + 1e-12";
  });

  add("loss_least_squares_leak", [&] {
    RngStream rng = make_stream(seed, StreamPurpose::kProbe, 8);
    const DataSpec spec = vd::small_spec(5);
    LossModel model;
    model.kind = LossKind::kLeastSquares;
    model.clip_bound = 1e9;
    for (int trial = 0; trial < 200; ++trial) {
      const Sample s = draw_sample(spec, rng);
      Vec w(5);
      for (int i = 0; i < 5; ++i) w[i] = 6.0 * (rng.uniform01() - 0.5);
      const Vec g = stochastic_gradient(model, w, s);
      const Vec unit = s.features.normalized();
      const double off_axis = (g - g.dot(unit) * unit).norm();
      expect(off_axis <= 1e-12 * std::max(1.0, g.norm()),
             "least-squares gradient not parallel to the feature");
    }
    return "gradients stay on the feature direction";
  });

  add("accountant_identities", [&] {
    const double mu = 0.001, g = 10.0;
    for (const double b_v : {0.5, 1.0, 3.0}) {
      long long twice_sum = 0;
      for (long long i = 1; i <= 10000; ++i) {
        twice_sum += 2 * i;
        const double closed = epsilon_at(mu, g, b_v, i);
        const double telescoped =
            mu * g * static_cast<double>(twice_sum) / b_v;
        expect(closed == telescoped, "closed form differs from telescoped sum");
        expect(epsilon_at(mu, g, 2.0 * b_v, i) == closed / 2.0,
               "power-of-two scale inversion not exact");
        expect(closed > epsilon_at(mu, g, b_v, i - 1), "epsilon not increasing");
      }
    }
    expect(sensitivity_bound(0.01, 10.0, 0) == 0.0, "Delta(0) != 0");
    return "closed form == telescoped accumulation over 10^4 steps";
  });

  add("accountant_no_privacy_marker", [&] {
    const PrivacyLedger ledger = make_privacy_ledger(0.01, 10.0, 0.0, 5);
    expect(ledger.no_privacy, "zero scale not marked no_privacy");
    expect(ledger.entries[0].epsilon == 0.0, "epsilon(0) must stay 0");
    expect(std::isinf(ledger.entries[1].epsilon),
           "zero scale must report infinite epsilon, not a number");
    try {
      epsilon_schedule(0.01, 10.0, 0.0, 5);
    } catch (const ZeroScale&) {
      return "b_v = 0 reported as infinite privacy loss";
    }
    throw std::runtime_error("epsilon_schedule accepted b_v = 0");
  });

  add("laplace_moments", [&] {
    RngStream rng = make_stream(seed, StreamPurpose::kProbe, 9);
    const long long n = 1000000;
    double sum = 0.0, sum_sq = 0.0;
    for (long long i = 0; i < n; ++i) {
      const double x = laplace_inv_cdf(rng.uniform_open01(), 1.0);
      sum += x;
      sum_sq += x * x;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    expect(std::abs(mean) <= 0.01, "sample mean " + format_double(mean));
    expect(std::abs(var - 2.0) <= 0.04, "sample variance " + format_double(var));
    expect(laplace_inv_cdf(0.5, 1.0) == 0.0, "median of the inverse CDF not 0");
    return "mean " + format_double(mean) + ", variance " + format_double(var);
  });

  add("empirical_dp_microcheck", [&] {
    RngStream rng = make_stream(seed, StreamPurpose::kProbe, 10);
    const DpCheckReport at_shift = empirical_dp_check(1.0, 1.0, 1.0, 1000000, rng);
    expect(at_shift.pass, "log-ratio " + format_double(at_shift.max_log_ratio) +
                              " above 1 + " + format_double(at_shift.slack));
    const DpCheckReport at_zero = empirical_dp_check(0.0, 1.0, 0.0, 1000000, rng);
    expect(at_zero.max_log_ratio <= at_zero.slack,
           "identical distributions produced ratio " +
               format_double(at_zero.max_log_ratio));
    return "max log ratio " + format_double(at_shift.max_log_ratio) +
           " vs bound 1 (+" + format_double(at_shift.slack) + ")";
  });

  add("engine_zero_noise_equivalence", [&] {
    RngStream rng = make_stream(seed, StreamPurpose::kProbe, 11);
    RunConfig rc;
    rc.mu = 0.1;
    rc.iterations = 30;
    rc.master_seed = seed;
    rc.loss.kind = LossKind::kRidgeLogistic;
    rc.loss.ridge = 0.1;
    rc.data = vd::small_spec(3);
    rc.matrix =
        blend_self_loops(metropolis_weights(vd::random_connected(8, rng)), 0.05);
    rc.scheme = PerturbationScheme::none();
    const RunTrace plain = run(rc);
    rc.scheme = PerturbationScheme::graph_homomorphic(0.0);
    const RunTrace zero_noise = run(rc);
    expect(vd::traces_identical(plain, zero_noise),
           "b_v = 0 run departed from the noiseless run");
    return "bitwise identical traces under a shared master seed";
  });

  add("engine_centroid_invariance", [&] {
    RngStream rng = make_stream(seed, StreamPurpose::kProbe, 12);
    RunConfig rc;
    rc.mu = 0.1;
    rc.iterations = 50;
    rc.master_seed = seed + 7;
    rc.loss.kind = LossKind::kRidgeLogistic;
    rc.loss.ridge = 0.1;
    rc.data = vd::small_spec(3);
    rc.matrix =
        blend_self_loops(metropolis_weights(vd::random_connected(10, rng)), 0.05);
    rc.scheme = PerturbationScheme::graph_homomorphic(10.0);
    const RunTrace trace = run(rc);  // the engine itself asserts the identity
    double worst = 0.0;
    for (std::size_t i = 1; i < trace.rows.size(); ++i) {
      expect(trace.rows[i].centroid_residual.has_value(),
             "homomorphic run missing centroid residual");
      worst = std::max(worst, *trace.rows[i].centroid_residual);
    }
    return "b_v = 10 run, max residual " + format_double(worst);
  });

  add("engine_determinism_replay", [&] {
    RngStream rng = make_stream(seed, StreamPurpose::kProbe, 13);
    RunConfig rc;
    rc.mu = 0.2;
    rc.iterations = 25;
    rc.master_seed = seed + 3;
    rc.loss.kind = LossKind::kLeastSquares;
    rc.data = vd::small_spec(2);
    rc.matrix = metropolis_weights(vd::random_connected(5, rng));
    rc.scheme = PerturbationScheme::iid(2.0);
    std::ostringstream first, second;
    write_trace_csv(first, run(rc));
    write_trace_csv(second, run(rc));
    expect(first.str() == second.str(), "repeated run changed the trace bytes");
    return "identical bytes across repeated runs";
  });

  return results;
}

}  // namespace ghdiff

#endif  // GHDIFF_VALIDATION_HPP
