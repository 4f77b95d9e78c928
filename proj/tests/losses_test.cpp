#include "ghdiff/losses.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace ghdiff {
namespace {

Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const double x : values) v[i++] = x;
  return v;
}

DataSpec two_dim_spec() {
  DataSpec spec;
  spec.mean_plus = make_vec({1.0, 0.0});
  spec.mean_minus = make_vec({-1.0, 0.0});
  spec.sigma_h2 = 1.0;
  return spec;
}

TEST(DrawSample, DegenerateVarianceReturnsTheMean) {
  DataSpec spec = two_dim_spec();
  spec.sigma_h2 = 0.0;
  RngStream rng(42);
  for (int i = 0; i < 32; ++i) {
    const Sample s = draw_sample(spec, rng);
    if (s.label > 0) {
      EXPECT_DOUBLE_EQ(s.features[0], 1.0);
      EXPECT_DOUBLE_EQ(s.features[1], 0.0);
      return;
    }
  }
  FAIL() << "no positive label in 32 draws";
}

TEST(DrawSample, LabelsAreBalanced) {
  const DataSpec spec = two_dim_spec();
  RngStream rng(7);
  long long positives = 0;
  const long long n = 100000;
  for (long long i = 0; i < n; ++i) {
    if (draw_sample(spec, rng).label > 0) ++positives;
  }
  EXPECT_NEAR(static_cast<double>(positives) / n, 0.5, 0.01);
}

TEST(DrawSample, FeatureVarianceMatchesSpec) {
  DataSpec spec = two_dim_spec();
  spec.sigma_h2 = 2.5;
  RngStream rng(8);
  const long long n = 100000;
  Vec sum = Vec::Zero(2), sum_sq = Vec::Zero(2);
  for (long long i = 0; i < n; ++i) {
    const Sample s = draw_sample(spec, rng);
    const Vec& mean = s.label > 0 ? spec.mean_plus : spec.mean_minus;
    const Vec centered = s.features - mean;
    sum += centered;
    sum_sq += centered.cwiseProduct(centered);
  }
  for (int i = 0; i < 2; ++i) {
    const double mean = sum[i] / n;
    const double var = sum_sq[i] / n - mean * mean;
    EXPECT_NEAR(var, spec.sigma_h2, 0.03 * spec.sigma_h2);
  }
}

TEST(StochasticGradient, LeastSquaresAtOrigin) {
  LossModel model;
  model.kind = LossKind::kLeastSquares;
  model.clip_bound = 10.0;
  const Sample s{make_vec({1.0, 0.0}), 1.0};
  const Vec g = stochastic_gradient(model, make_vec({0.0, 0.0}), s);
  EXPECT_DOUBLE_EQ(g[0], -1.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
}

TEST(StochasticGradient, LogisticAtOriginHalvesTheFeature) {
  LossModel model;
  model.kind = LossKind::kRidgeLogistic;
  model.ridge = 0.0;
  model.clip_bound = 10.0;
  const Sample s{make_vec({2.0, 0.0}), 1.0};
  const Vec w = make_vec({0.0, 0.0});
  const Vec g = stochastic_gradient(model, w, s);
  EXPECT_DOUBLE_EQ(g[0], -1.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
  // finite-difference oracle at the same point
  const double h = 1e-6;
  Vec wp = w, wm = w;
  wp[0] += h;
  wm[0] -= h;
  const double fd = (sample_loss(model, wp, s) - sample_loss(model, wm, s)) / (2 * h);
  EXPECT_NEAR(g[0], fd, 1e-8);
}

TEST(StochasticGradient, ClipsToExactNorm) {
  LossModel model;
  model.kind = LossKind::kLeastSquares;
  model.clip_bound = 0.5;
  // residual -1 against h = (3,4) gives raw gradient (3,4) of norm 5
  const Sample s{make_vec({3.0, 4.0}), -1.0};
  const Vec w = make_vec({0.0, 0.0});
  const Vec g = stochastic_gradient(model, w, s);
  EXPECT_NEAR(g[0], 0.3, 1e-15);
  EXPECT_NEAR(g[1], 0.4, 1e-15);
  EXPECT_NEAR(g.norm(), 0.5, 1e-15);
}

TEST(StochasticGradient, DimensionMismatchThrows) {
  LossModel model;
  const Sample s{make_vec({1.0, 2.0, 3.0}), 1.0};
  EXPECT_THROW(stochastic_gradient(model, make_vec({0.0, 0.0}), s),
               DimensionMismatch);
}

TEST(EmpiricalRisk, LeastSquaresSingleSample) {
  LossModel model;
  model.kind = LossKind::kLeastSquares;
  const std::vector<Sample> eval = {{make_vec({1.0}), 2.0}};
  EXPECT_DOUBLE_EQ(empirical_risk(model, make_vec({0.0}), eval), 2.0);
}

TEST(EmpiricalRisk, LogisticAtOriginIsLogTwo) {
  LossModel model;
  model.kind = LossKind::kRidgeLogistic;
  model.ridge = 0.0;
  const std::vector<Sample> eval = {{make_vec({3.0, -1.0}), -1.0}};
  EXPECT_NEAR(empirical_risk(model, make_vec({0.0, 0.0}), eval), std::log(2.0),
              1e-15);
}

TEST(EmpiricalRisk, RidgeTermAddsHalfRhoNormSquared) {
  LossModel plain;
  plain.kind = LossKind::kRidgeLogistic;
  plain.ridge = 0.0;
  LossModel ridged = plain;
  ridged.ridge = 0.1;
  const std::vector<Sample> eval = {{make_vec({0.5, 1.5}), 1.0},
                                    {make_vec({-0.5, 0.25}), -1.0}};
  const Vec w = make_vec({2.0, 0.0});  // ||w||^2 = 4
  EXPECT_NEAR(empirical_risk(ridged, w, eval) - empirical_risk(plain, w, eval),
              0.2, 1e-15);
}

TEST(EmpiricalRisk, EmptyEvalSetThrows) {
  LossModel model;
  EXPECT_THROW(empirical_risk(model, make_vec({0.0}), {}), EmptyEvalSet);
}

TEST(LossProperties, ClippedNormNeverExceedsBound) {
  const DataSpec spec = two_dim_spec();
  RngStream rng(9);
  for (const LossKind kind : {LossKind::kLeastSquares, LossKind::kRidgeLogistic}) {
    LossModel model;
    model.kind = kind;
    model.ridge = kind == LossKind::kRidgeLogistic ? 0.3 : 0.0;
    model.clip_bound = 0.75;
    for (int trial = 0; trial < 2000; ++trial) {
      const Sample s = draw_sample(spec, rng);
      Vec w(2);
      w << 30.0 * (rng.uniform01() - 0.5), 30.0 * (rng.uniform01() - 0.5);
      EXPECT_LE(stochastic_gradient(model, w, s).norm(),
                model.clip_bound + 1e-12);
    }
  }
}

TEST(LossProperties, GradientMatchesCentralDifferences) {
  const DataSpec spec = two_dim_spec();
  RngStream rng(10);
  for (const LossKind kind : {LossKind::kLeastSquares, LossKind::kRidgeLogistic}) {
    LossModel model;
    model.kind = kind;
    model.ridge = kind == LossKind::kRidgeLogistic ? 0.1 : 0.0;
    model.clip_bound = 1e9;  // unclipped regime
    for (int trial = 0; trial < 100; ++trial) {
      const Sample s = draw_sample(spec, rng);
      Vec w(2);
      w << 4.0 * (rng.uniform01() - 0.5), 4.0 * (rng.uniform01() - 0.5);
      const Vec g = stochastic_gradient(model, w, s);
      Vec fd(2);
      const double h = 1e-5;
      for (int i = 0; i < 2; ++i) {
        Vec wp = w, wm = w;
        wp[i] += h;
        wm[i] -= h;
        fd[i] = (sample_loss(model, wp, s) - sample_loss(model, wm, s)) / (2 * h);
      }
      EXPECT_LE((g - fd).norm() / std::max(1.0, g.norm()), 1e-6);
    }
  }
}

TEST(LossProperties, LeastSquaresGradientStaysParallelToFeature) {
  const DataSpec spec = two_dim_spec();
  RngStream rng(11);
  LossModel model;
  model.kind = LossKind::kLeastSquares;
  model.clip_bound = 1e9;
  for (int trial = 0; trial < 500; ++trial) {
    const Sample s = draw_sample(spec, rng);
    Vec w(2);
    w << 10.0 * (rng.uniform01() - 0.5), 10.0 * (rng.uniform01() - 0.5);
    const Vec g = stochastic_gradient(model, w, s);
    const Vec unit = s.features.normalized();
    EXPECT_LE((g - g.dot(unit) * unit).norm(), 1e-12 * std::max(1.0, g.norm()));
  }
}

TEST(Smoothness, FromFeaturesUsesTheObservedMaximum) {
  std::vector<Sample> eval = {{make_vec({3.0, 4.0}), 1.0},
                              {make_vec({1.0, 0.0}), -1.0}};
  LossModel ls;
  ls.kind = LossKind::kLeastSquares;
  EXPECT_DOUBLE_EQ(smoothness_from_features(ls, eval), 25.0);
  LossModel logistic;
  logistic.kind = LossKind::kRidgeLogistic;
  logistic.ridge = 0.1;
  EXPECT_DOUBLE_EQ(smoothness_from_features(logistic, eval), 25.0 / 4.0 + 0.1);
}

}  // namespace
}  // namespace ghdiff
