#include "ghdiff/perturbation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ghdiff/graph.hpp"
#include "ghdiff/rng.hpp"

namespace ghdiff {
namespace {

std::vector<RngStream> agent_streams(std::uint64_t seed, int k) {
  std::vector<RngStream> streams;
  streams.reserve(k);
  for (int agent = 0; agent < k; ++agent) {
    streams.push_back(make_stream(seed, StreamPurpose::kPerturbation, agent));
  }
  return streams;
}

TEST(LaplaceInverseCdf, MedianIsZero) {
  EXPECT_DOUBLE_EQ(laplace_inv_cdf(0.5, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(laplace_inv_cdf(0.5, 7.0), 0.0);
}

TEST(LaplaceInverseCdf, KnownQuantiles) {
  EXPECT_DOUBLE_EQ(laplace_inv_cdf(0.75, 1.0), std::log(2.0));
  EXPECT_DOUBLE_EQ(laplace_inv_cdf(0.25, 1.0), -std::log(2.0));
  EXPECT_DOUBLE_EQ(laplace_inv_cdf(0.75, 2.0), 2.0 * std::log(2.0));
}

TEST(LaplaceSampler, MomentsMatchTheLaw) {
  RngStream rng(21);
  const long long n = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  for (long long i = 0; i < n; ++i) {
    const double x = laplace_inv_cdf(rng.uniform_open01(), 1.0);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 2.0, 0.04);  // sigma_v^2 = 2 b_v^2 with b_v = 1
}

TEST(LaplaceSampler, RejectsNonpositiveScale) {
  RngStream rng(1);
  EXPECT_THROW(sample_laplace(0.0, 3, rng), ZeroScale);
}

TEST(HomomorphicPlan, SelfEntryCancelsTheNeighborhood) {
  // diagonal 1/3 at the middle agent of a path: self coefficient is -2
  const CombinationMatrix a = metropolis_weights(Topology::path(3));
  ASSERT_NEAR(a.weights(1, 1), 1.0 / 3.0, 1e-15);
  auto streams = agent_streams(31, 3);
  const PerturbationPlan plan = homomorphic_plan(a, 1.0, 1, streams);
  const double v = plan.entry(1, 0)[0];
  EXPECT_DOUBLE_EQ(plan.entry(1, 2)[0], v);  // same draw to every neighbor
  EXPECT_NEAR(plan.entry(1, 1)[0], -2.0 * v, 1e-15 * std::abs(v));
  // the worked example: v = 0.6 maps to a self entry of -1.2
  const double self_coeff = plan.entry(1, 1)[0] / v;
  EXPECT_NEAR(self_coeff * 0.6, -1.2, 1e-14);
}

TEST(HomomorphicPlan, ZeroScaleGivesTheZeroPlan) {
  const CombinationMatrix a = metropolis_weights(Topology::ring(5));
  auto streams = agent_streams(32, 5);
  const PerturbationPlan plan = homomorphic_plan(a, 0.0, 4, streams);
  for (int l = 0; l < 5; ++l)
    for (int k = 0; k < 5; ++k)
      if (plan.defined(l, k)) {
        EXPECT_EQ(plan.entry(l, k).cwiseAbs().maxCoeff(), 0.0);
      }
}

TEST(HomomorphicPlan, TwoAgentWeightedSumVanishes) {
  const CombinationMatrix a = metropolis_weights(Topology::complete(2));
  auto streams = agent_streams(33, 2);
  const PerturbationPlan plan = homomorphic_plan(a, 1.0, 1, streams);
  EXPECT_LE(weighted_plan_sum(a, plan).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(HomomorphicPlan, RejectsZeroSelfWeight) {
  CombinationMatrix swap;
  swap.num_agents = 2;
  swap.weights = Eigen::MatrixXd::Zero(2, 2);
  swap.weights(0, 1) = 1.0;
  swap.weights(1, 0) = 1.0;
  swap.lambda2 = 1.0;
  auto streams = agent_streams(34, 2);
  EXPECT_THROW(homomorphic_plan(swap, 1.0, 2, streams), ZeroSelfWeight);
}

TEST(HomomorphicPlan, EntriesExistExactlyOnNeighborPairs) {
  const CombinationMatrix a = metropolis_weights(Topology::path(4));
  auto streams = agent_streams(35, 4);
  const PerturbationPlan plan = homomorphic_plan(a, 1.0, 2, streams);
  for (int l = 0; l < 4; ++l) {
    for (int k = 0; k < 4; ++k) {
      EXPECT_EQ(plan.defined(l, k), a.is_neighbor(l, k));
    }
  }
}

TEST(IidPlan, ZeroPowerGivesTheZeroPlan) {
  const CombinationMatrix a = metropolis_weights(Topology::ring(4));
  auto streams = agent_streams(36, 4);
  const PerturbationPlan plan = iid_plan(a, 0.0, 3, streams);
  for (int l = 0; l < 4; ++l)
    for (int k = 0; k < 4; ++k)
      if (plan.defined(l, k)) {
        EXPECT_EQ(plan.entry(l, k).cwiseAbs().maxCoeff(), 0.0);
      }
}

TEST(IidPlan, PowerTwoMeansUnitScale) {
  EXPECT_DOUBLE_EQ(PerturbationScheme::iid(2.0).laplace_scale(), 1.0);
  EXPECT_DOUBLE_EQ(PerturbationScheme::graph_homomorphic(1.5).laplace_scale(), 1.5);
  EXPECT_DOUBLE_EQ(PerturbationScheme::none().laplace_scale(), 0.0);
}

TEST(IidPlan, BroadcastsTheSameVectorToAllNeighbors) {
  const CombinationMatrix a = metropolis_weights(Topology::complete(2));
  auto streams = agent_streams(37, 2);
  const PerturbationPlan plan = iid_plan(a, 2.0, 3, streams);
  EXPECT_TRUE(
      (plan.entry(0, 1).array() == plan.entry(0, 0).array()).all());
  EXPECT_TRUE(
      (plan.entry(1, 0).array() == plan.entry(1, 1).array()).all());
}

TEST(WeightedPlanSum, SingleAgentReturnsItsOwnEntry) {
  const CombinationMatrix a = metropolis_weights(Topology::path(1));
  auto streams = agent_streams(38, 1);
  const PerturbationPlan plan = iid_plan(a, 2.0, 3, streams);
  const Vec sum = weighted_plan_sum(a, plan);
  EXPECT_TRUE((sum.array() == plan.entry(0, 0).array()).all());
}

TEST(WeightedPlanSum, HomomorphicPlansVanishOnRandomTopologies) {
  RngStream topo_rng = make_stream(39, StreamPurpose::kTopology, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 15; ++trial) {
    const int k = 3 + static_cast<int>(topo_rng.uniform01() * 15);
    const CombinationMatrix a = blend_self_loops(
        metropolis_weights(Topology::erdos_renyi_connected(k, 0.45, topo_rng)),
        0.05);
    auto streams = agent_streams(40 + trial, k);
    for (int iter = 0; iter < 25; ++iter) {
      const PerturbationPlan plan = homomorphic_plan(a, 1.0, 5, streams, iter);
      worst = std::max(worst, weighted_plan_sum(a, plan).cwiseAbs().maxCoeff());
    }
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(WeightedPlanSum, IidVarianceOnCompleteUniformGraph) {
  // complete K: Metropolis weights are uniformly 1/K, so the weighted sum is
  // the plain average of the per-agent draws; per-coordinate variance is
  // sigma_p2 / K.
  const int k = 5;
  const double sigma_p2 = 2.0;
  const CombinationMatrix a = metropolis_weights(Topology::complete(k));
  double sum_sq = 0.0;
  long long count = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    auto streams = agent_streams(100000 + rep, k);
    const PerturbationPlan plan = iid_plan(a, sigma_p2, 3, streams, rep);
    const Vec s = weighted_plan_sum(a, plan);
    sum_sq += s.squaredNorm();
    count += s.size();
  }
  const double var = sum_sq / static_cast<double>(count);
  EXPECT_NEAR(var, sigma_p2 / k, 0.05 * sigma_p2 / k);
}

TEST(PerturbationProperties, NeighborMessagePowerIsTwoBSquaredPerCoordinate) {
  const CombinationMatrix a = metropolis_weights(Topology::ring(6));
  const double b_v = 0.8;
  const int dim = 4;
  double sum_sq = 0.0;
  long long count = 0;
  auto streams = agent_streams(41, 6);
  for (int iter = 0; iter < 10000; ++iter) {
    const PerturbationPlan plan = homomorphic_plan(a, b_v, dim, streams, iter);
    for (int l = 0; l < 6; ++l) {
      for (int k = 0; k < 6; ++k) {
        if (k != l && plan.defined(l, k)) {
          sum_sq += plan.entry(l, k).squaredNorm();
          ++count;
        }
      }
    }
  }
  const double mean_power = sum_sq / static_cast<double>(count);
  EXPECT_NEAR(mean_power, 2.0 * b_v * b_v * dim, 0.05 * 2.0 * b_v * b_v * dim);
}

TEST(PerturbationProperties, IdenticalSeedsGiveIdenticalPlans) {
  const CombinationMatrix a = metropolis_weights(Topology::ring(5));
  auto first = agent_streams(42, 5);
  auto second = agent_streams(42, 5);
  const PerturbationPlan p1 = homomorphic_plan(a, 1.3, 4, first);
  const PerturbationPlan p2 = homomorphic_plan(a, 1.3, 4, second);
  for (int l = 0; l < 5; ++l)
    for (int k = 0; k < 5; ++k)
      if (p1.defined(l, k)) {
        EXPECT_TRUE((p1.entry(l, k).array() == p2.entry(l, k).array()).all());
      }
}

TEST(WeightedPlanSum, MismatchedPlanThrows) {
  const CombinationMatrix a = metropolis_weights(Topology::ring(5));
  const CombinationMatrix b = metropolis_weights(Topology::ring(4));
  auto streams = agent_streams(43, 4);
  const PerturbationPlan plan = iid_plan(b, 1.0, 2, streams);
  EXPECT_THROW(weighted_plan_sum(a, plan), StructureMismatch);
}

}  // namespace
}  // namespace ghdiff
