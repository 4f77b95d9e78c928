#ifndef GHDIFF_PERTURBATION_HPP
#define GHDIFF_PERTURBATION_HPP

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ghdiff/errors.hpp"
#include "ghdiff/graph.hpp"
#include "ghdiff/losses.hpp"
#include "ghdiff/rng.hpp"

namespace ghdiff {

// Privacy noise regime for the shared messages. The homomorphic scheme's
// per-coordinate power is sigma_v^2 = 2 b_v^2.
struct PerturbationScheme {
  enum class Kind { kNone, kIid, kGraphHomomorphic };

  Kind kind = Kind::kNone;
  double sigma_p2 = 0.0;  // iid per-coordinate noise power
  double b_v = 0.0;       // homomorphic Laplace scale

  static PerturbationScheme none() { return {}; }

  static PerturbationScheme iid(double sigma_p2) {
    if (sigma_p2 < 0) {
      throw ConfigParseError("scheme iid: sigma_p2 must be nonnegative");
    }
    PerturbationScheme s;
    s.kind = Kind::kIid;
    s.sigma_p2 = sigma_p2;
    return s;
  }

  static PerturbationScheme graph_homomorphic(double b_v) {
    if (b_v < 0) {
      throw ConfigParseError("scheme graph_homomorphic: b_v must be nonnegative");
    }
    PerturbationScheme s;
    s.kind = Kind::kGraphHomomorphic;
    s.b_v = b_v;
    return s;
  }

  // Laplace scale of the messages this scheme transmits.
  double laplace_scale() const {
    switch (kind) {
      case Kind::kNone:
        return 0.0;
      case Kind::kIid:
        return std::sqrt(sigma_p2 / 2.0);
      case Kind::kGraphHomomorphic:
        return b_v;
    }
    return 0.0;
  }

  std::string label() const {
    switch (kind) {
      case Kind::kNone:
        return "none";
      case Kind::kIid:
        return "iid_sp2_" + format_value(sigma_p2);
      case Kind::kGraphHomomorphic:
        return "graph_homomorphic_bv_" + format_value(b_v);
    }
    return "none";
  }

 private:
  static std::string format_value(double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    for (char& c : s)
      if (c == '.') c = 'p';
    return s;
  }
};

// Directed-edge noise for one iteration: q[(l,k)] for every k in N_l,
// self entries included. Stored dense over the K x K pair grid with a
// defined-mask mirroring the matrix's neighbor structure.
class PerturbationPlan {
 public:
  PerturbationPlan(const CombinationMatrix& a, int dim, int iteration)
      : num_agents_(a.num_agents),
        dim_(dim),
        iteration_(iteration),
        defined_(static_cast<std::size_t>(a.num_agents) * a.num_agents, 0),
        values_(static_cast<std::size_t>(a.num_agents) * a.num_agents * dim, 0.0) {
    for (int l = 0; l < num_agents_; ++l)
      for (int k = 0; k < num_agents_; ++k)
        if (a.is_neighbor(l, k)) defined_[index(l, k)] = 1;
  }

  int num_agents() const { return num_agents_; }
  int dim() const { return dim_; }
  int iteration() const { return iteration_; }

  bool defined(int l, int k) const { return defined_[index(l, k)] != 0; }

  Eigen::Map<Vec> entry(int l, int k) {
    return Eigen::Map<Vec>(values_.data() + index(l, k) * dim_, dim_);
  }

  Eigen::Map<const Vec> entry(int l, int k) const {
    return Eigen::Map<const Vec>(values_.data() + index(l, k) * dim_, dim_);
  }

 private:
  std::size_t index(int l, int k) const {
    return static_cast<std::size_t>(l) * num_agents_ + k;
  }

  int num_agents_;
  int dim_;
  int iteration_;
  std::vector<std::uint8_t> defined_;
  std::vector<double> values_;
};

// Inverse CDF of Laplace(0, b): u in (0,1) -> -b sgn(u - 1/2) ln(1 - 2|u - 1/2|).
inline double laplace_inv_cdf(double u, double b) {
  const double t = u - 0.5;
  if (t == 0.0) return 0.0;
  const double sign = t > 0 ? 1.0 : -1.0;
  return -b * sign * std::log1p(-2.0 * std::abs(t));
}

// M iid coordinates with density (1/2b) exp(-|x|/b), generated by inverse CDF.
inline Vec sample_laplace(double b, int dim, RngStream& rng) {
  if (b <= 0) {
    throw ZeroScale("sample_laplace: scale must be positive, got " +
                    std::to_string(b));
  }
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = laplace_inv_cdf(rng.uniform_open01(), b);
  return v;
}

// Graph-homomorphic construction: agent l draws one vector v_l from its own
// stream and sends it to every neighbor; its self entry is scaled by
// -(1 - a_ll)/a_ll so the weighted global sum vanishes identically.
inline PerturbationPlan homomorphic_plan(const CombinationMatrix& a, double b_v,
                                         int dim,
                                         std::span<RngStream> agent_streams,
                                         int iteration = 0) {
  if (b_v < 0) {
    throw ConfigParseError("homomorphic_plan: b_v must be nonnegative");
  }
  for (int l = 0; l < a.num_agents; ++l) {
    if (a.weights(l, l) <= 0.0) {
      throw ZeroSelfWeight("homomorphic_plan: a[" + std::to_string(l + 1) + "][" +
                           std::to_string(l + 1) + "] = 0");
    }
  }
  PerturbationPlan plan(a, dim, iteration);
  if (b_v == 0.0) return plan;  // all-zero plan, no draws consumed
  if (agent_streams.size() != static_cast<std::size_t>(a.num_agents)) {
    throw StructureMismatch("homomorphic_plan: expected one stream per agent");
  }
  for (int l = 0; l < a.num_agents; ++l) {
    const Vec v = sample_laplace(b_v, dim, agent_streams[l]);
    const double self = a.weights(l, l);
    for (int k = 0; k < a.num_agents; ++k) {
      if (!plan.defined(l, k)) continue;
      plan.entry(l, k) = (k == l) ? Vec(-(1.0 - self) / self * v) : v;
    }
  }
  return plan;
}

// Baseline iid scheme: agent l draws a single vector and broadcasts it
// unchanged to every neighbor, its own self message included.
inline PerturbationPlan iid_plan(const CombinationMatrix& a, double sigma_p2,
                                 int dim, std::span<RngStream> agent_streams,
                                 int iteration = 0) {
  if (sigma_p2 < 0) {
    throw ConfigParseError("iid_plan: sigma_p2 must be nonnegative");
  }
  PerturbationPlan plan(a, dim, iteration);
  if (sigma_p2 == 0.0) return plan;
  if (agent_streams.size() != static_cast<std::size_t>(a.num_agents)) {
    throw StructureMismatch("iid_plan: expected one stream per agent");
  }
  const double b = std::sqrt(sigma_p2 / 2.0);
  for (int l = 0; l < a.num_agents; ++l) {
    const Vec q = sample_laplace(b, dim, agent_streams[l]);
    for (int k = 0; k < a.num_agents; ++k) {
      if (plan.defined(l, k)) plan.entry(l, k) = q;
    }
  }
  return plan;
}

inline PerturbationPlan make_plan(const CombinationMatrix& a,
                                  const PerturbationScheme& scheme, int dim,
                                  std::span<RngStream> agent_streams,
                                  int iteration = 0) {
  switch (scheme.kind) {
    case PerturbationScheme::Kind::kNone:
      return PerturbationPlan(a, dim, iteration);
    case PerturbationScheme::Kind::kIid:
      return iid_plan(a, scheme.sigma_p2, dim, agent_streams, iteration);
    case PerturbationScheme::Kind::kGraphHomomorphic:
      return homomorphic_plan(a, scheme.b_v, dim, agent_streams, iteration);
  }
  return PerturbationPlan(a, dim, iteration);
}

// (1/K) sum_l sum_k a[l][k] q[l][k], the quantity the nullspace condition
// requires to vanish.
inline Vec weighted_plan_sum(const CombinationMatrix& a,
                             const PerturbationPlan& plan) {
  if (plan.num_agents() != a.num_agents) {
    throw StructureMismatch("weighted_plan_sum: plan built for K=" +
                            std::to_string(plan.num_agents()) + ", matrix has K=" +
                            std::to_string(a.num_agents));
  }
  Vec total = Vec::Zero(plan.dim());
  for (int l = 0; l < a.num_agents; ++l) {
    for (int k = 0; k < a.num_agents; ++k) {
      if (!plan.defined(l, k)) continue;
      const double w = a.weights(l, k);
      if (w != 0.0) total += w * plan.entry(l, k);
    }
  }
  return total / static_cast<double>(a.num_agents);
}

}  // namespace ghdiff

#endif  // GHDIFF_PERTURBATION_HPP
