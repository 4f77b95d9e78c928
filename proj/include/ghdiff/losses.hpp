#ifndef GHDIFF_LOSSES_HPP
#define GHDIFF_LOSSES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ghdiff/errors.hpp"
#include "ghdiff/rng.hpp"

namespace ghdiff {

using Vec = Eigen::VectorXd;

struct Sample {
  Vec features;
  double label = 0.0;  // +1/-1 for logistic; any real for least squares
};

enum class LossKind {
  kLeastSquares,
  kRidgeLogistic,
};

// Per-agent stochastic loss. `ridge` is only meaningful for the logistic
// variant. `smoothness` is a declared Lipschitz constant consumed by the
// analysis layer, never by the update itself.
struct LossModel {
  LossKind kind = LossKind::kRidgeLogistic;
  double ridge = 0.0;
  double clip_bound = 10.0;
  double smoothness = 1.0;
};

// Conditionally Gaussian feature source: label +1/-1 uniform, features
// N(mean_label, sigma_h2 * I).
struct DataSpec {
  Vec mean_plus;
  Vec mean_minus;
  double sigma_h2 = 1.0;
  int samples_per_agent_per_iter = 1;
  int eval_set_size = 2000;

  int dim() const { return static_cast<int>(mean_plus.size()); }
};

inline Sample draw_sample(const DataSpec& spec, RngStream& rng) {
  Sample s;
  s.label = rng.rademacher();
  const Vec& mean = s.label > 0 ? spec.mean_plus : spec.mean_minus;
  const double sigma = std::sqrt(spec.sigma_h2);
  s.features.resize(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    s.features[i] = mean[i] + sigma * rng.standard_normal();
  }
  return s;
}

inline std::vector<Sample> draw_samples(const DataSpec& spec, int count,
                                        RngStream& rng) {
  std::vector<Sample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(draw_sample(spec, rng));
  return out;
}

// Rescales g to norm `bound` when it exceeds it; otherwise unchanged.
inline Vec clip_to_norm(Vec g, double bound) {
  const double norm = g.norm();
  if (norm > bound) g *= bound / norm;
  return g;
}

// Per-sample loss. Least squares: 0.5 (label - h^T w)^2. Ridge logistic:
// ln(1 + exp(-label h^T w)) + (ridge/2) ||w||^2.
inline double sample_loss(const LossModel& model, const Vec& w, const Sample& s) {
  if (s.features.size() != w.size()) {
    throw DimensionMismatch("sample_loss: feature dim " +
                            std::to_string(s.features.size()) + " vs parameter dim " +
                            std::to_string(w.size()));
  }
  const double z = s.features.dot(w);
  switch (model.kind) {
    case LossKind::kLeastSquares: {
      const double r = s.label - z;
      return 0.5 * r * r;
    }
    case LossKind::kRidgeLogistic: {
      const double m = s.label * z;
      const double ll = m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
      return ll + 0.5 * model.ridge * w.squaredNorm();
    }
  }
  return 0.0;
}

inline Vec raw_gradient(const LossModel& model, const Vec& w, const Sample& s) {
  if (s.features.size() != w.size()) {
    throw DimensionMismatch("raw_gradient: feature dim " +
                            std::to_string(s.features.size()) + " vs parameter dim " +
                            std::to_string(w.size()));
  }
  const double z = s.features.dot(w);
  switch (model.kind) {
    case LossKind::kLeastSquares:
      return (-(s.label - z)) * s.features;
    case LossKind::kRidgeLogistic: {
      const double m = s.label * z;
      // -label h sigma(-m) + ridge w, with sigma computed stably
      const double factor = m > 0 ? std::exp(-m) / (1.0 + std::exp(-m))
                                  : 1.0 / (1.0 + std::exp(m));
      return (-s.label * factor) * s.features + model.ridge * w;
    }
  }
  return Vec::Zero(w.size());
}

inline Vec stochastic_gradient(const LossModel& model, const Vec& w,
                               const Sample& s) {
  return clip_to_norm(raw_gradient(model, w, s), model.clip_bound);
}

inline double empirical_risk(const LossModel& model, const Vec& w,
                             std::span<const Sample> eval_set) {
  if (eval_set.empty()) {
    throw EmptyEvalSet("empirical_risk: evaluation set is empty");
  }
  double total = 0.0;
  for (const Sample& s : eval_set) total += sample_loss(model, w, s);
  return total / static_cast<double>(eval_set.size());
}

// Exact gradient of the empirical risk over the evaluation set; no clipping.
inline Vec empirical_risk_gradient(const LossModel& model, const Vec& w,
                                   std::span<const Sample> eval_set) {
  if (eval_set.empty()) {
    throw EmptyEvalSet("empirical_risk_gradient: evaluation set is empty");
  }
  Vec total = Vec::Zero(w.size());
  for (const Sample& s : eval_set) total += raw_gradient(model, w, s);
  return total / static_cast<double>(eval_set.size());
}

// Declared smoothness from observed features: max ||h||^2 for least squares
// (per-sample Hessian h h^T), max ||h||^2 / 4 + ridge for logistic.
inline double smoothness_from_features(const LossModel& model,
                                       std::span<const Sample> eval_set) {
  if (eval_set.empty()) {
    throw EmptyEvalSet("smoothness_from_features: evaluation set is empty");
  }
  double max_sq = 0.0;
  for (const Sample& s : eval_set) {
    max_sq = std::max(max_sq, s.features.squaredNorm());
  }
  return model.kind == LossKind::kLeastSquares ? max_sq
                                               : max_sq / 4.0 + model.ridge;
}

}  // namespace ghdiff

#endif  // GHDIFF_LOSSES_HPP
