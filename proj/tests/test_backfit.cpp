#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "softsurv/backfit.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace softsurv;

namespace {

using testing_support::dense_log_marginal;

InputMatrix random_inputs(int n, int dim, RngStream& rng) {
  InputMatrix x(n, dim);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) x(i, j) = rng.uniform();
  }
  return x;
}

}  // namespace

TEST(TreeMarginal, MatchesDenseOracle) {
  RngStream rng(21);
  ForestHyper hyper = ForestHyper::defaults(1);
  for (int c = 0; c < 200; ++c) {
    const int n = 1 + static_cast<int>(rng.uniform_index(10));
    SoftTree t = sample_tree_prior(hyper, 2, rng);
    while (t.num_leaves() > 4) t = sample_tree_prior(hyper, 2, rng);
    t.bandwidth = 0.02 + rng.uniform();
    const InputMatrix x = random_inputs(n, 2, rng);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z(i) = 2.0 * sample_normal(rng);
    const double s = 0.1 + 2.0 * rng.uniform();
    EXPECT_NEAR(tree_log_marginal(t, x, z, s), dense_log_marginal(t, x, z, s), 1e-8);
  }
}

TEST(TreeMarginal, StumpScalarCase) {
  // One datum, stump: z ~ N(0, 1 + s^2).
  SoftTree t;
  InputMatrix x(1, 1);
  x(0, 0) = 0.5;
  Eigen::VectorXd z(1);
  z(0) = 1.3;
  const double s = 0.7;
  const double v = 1.0 + s * s;
  EXPECT_NEAR(tree_log_marginal(t, x, z, s), -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * 1.69 / v, 1e-13);
}

TEST(TreeMarginal, VanishingLeafScaleGivesStandardNormal) {
  RngStream rng(22);
  SoftTree t;
  t.grow(0, 0, 0.5);
  const InputMatrix x = random_inputs(6, 1, rng);
  Eigen::VectorXd z(6);
  for (int i = 0; i < 6; ++i) z(i) = sample_normal(rng);
  const double expect = -3.0 * std::log(2.0 * std::numbers::pi) - 0.5 * z.squaredNorm();
  EXPECT_NEAR(tree_log_marginal(t, x, z, 1e-7), expect, 1e-8);
}

TEST(LeafPosterior, DrawMomentsMatchConjugateForm) {
  // Stump: mu | r ~ N(sum r / (n + s^-2), 1 / (n + s^-2)).
  SoftTree t;
  InputMatrix x(4, 1);
  x.setConstant(0.5);
  Eigen::VectorXd r(4);
  r << 0.5, 1.0, -0.2, 0.9;
  const double s = 0.8;
  const LeafPosterior post = leaf_posterior(t, x, r, s);
  const double precision = 4.0 + 1.0 / (s * s);
  RngStream rng(23);
  std::vector<double> draws;
  for (int i = 0; i < 100000; ++i) draws.push_back(draw_leaf_means(post, rng)(0));
  const double sd = std::sqrt(1.0 / precision);
  EXPECT_NEAR(testing_support::mean(draws), 2.2 / precision, 4.0 * sd / std::sqrt(1e5));
  EXPECT_NEAR(testing_support::variance(draws), 1.0 / precision, 0.02 / precision);
}

TEST(Proposals, GrowFromStumpRatio) {
  const ForestHyper hyper = ForestHyper::defaults(50);
  SoftTree t;
  const StructuralProposal p = grow_proposal(t, 0, 0, 0.5, hyper);
  // prior: q0 (1 - q1)^2 / (1 - q0); proposal: 0.4 / 1 reverse over 1 / 1 forward.
  const double q0 = 0.95, q1 = 0.2375;
  EXPECT_NEAR(p.log_ratio, std::log(q0 * (1 - q1) * (1 - q1) / (1 - q0) * 0.4), 1e-12);
  EXPECT_NEAR(std::exp(p.log_ratio), 4.4186875, 1e-9);
  EXPECT_EQ(p.kind, MoveKind::Grow);
}

TEST(Proposals, PruneInvertsGrow) {
  const ForestHyper hyper = ForestHyper::defaults(10);
  SoftTree t;
  t.grow(0, 0, 0.5);
  t.grow(1, 1, 0.3);
  const StructuralProposal g = grow_proposal(t, 2, 0, 0.7, hyper);
  const int branch = g.tree.prunable_branches().back();
  const StructuralProposal p = prune_proposal(g.tree, branch, hyper);
  EXPECT_NEAR(g.log_ratio + p.log_ratio, 0.0, 1e-12);
  EXPECT_EQ(p.tree.num_leaves(), t.num_leaves());
}

TEST(Proposals, MoveMix) {
  SoftTree t;
  EXPECT_EQ(move_mix(t).grow, 1.0);
  t.grow(0, 0, 0.5);
  const MoveMix m = move_mix(t);
  EXPECT_EQ(m.grow, 0.4);
  EXPECT_EQ(m.prune, 0.4);
  EXPECT_EQ(m.change, 0.2);
}

TEST(Backfit, SweepOnZeroResponseShrinksFit) {
  RngStream rng(24);
  Forest f = Forest::stumps(ForestHyper::defaults(10), 2);
  const InputMatrix x = random_inputs(200, 2, rng);
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(200);
  for (int it = 0; it < 50; ++it) backfit_sweep(f, x, z, rng);
  double sq = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double v = evaluate(f, std::span<const double>(x.row(i).data(), 2));
    sq += v * v;
  }
  EXPECT_LT(sq / 200.0, 0.05);
}

TEST(Backfit, RecoversStepFunction) {
  RngStream rng(25);
  Forest f = Forest::stumps(ForestHyper::defaults(20), 2);
  const int n = 300;
  const InputMatrix x = random_inputs(n, 2, rng);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = (x(i, 1) > 0.5 ? 1.0 : -1.0) + sample_normal(rng);
  for (int it = 0; it < 200; ++it) backfit_sweep(f, x, z, rng);
  const double hi[2] = {0.5, 0.9};
  const double lo[2] = {0.5, 0.1};
  EXPECT_NEAR(evaluate(f, hi), 1.0, 0.4);
  EXPECT_NEAR(evaluate(f, lo), -1.0, 0.4);
}

TEST(Backfit, JointDistributionTest) {
  // Forward: (tree, z) from the prior; chain: sweep then z | tree.
  ForestHyper hyper = ForestHyper::defaults(1, 1.0);
  InputMatrix x(3, 2);
  x << 0.1, 0.8, 0.5, 0.2, 0.9, 0.6;
  auto features = [&](const Forest& f) {
    std::vector<double> out;
    for (int i = 0; i < 3; ++i) out.push_back(evaluate(f, std::span<const double>(x.row(i).data(), 2)));
    out.push_back(static_cast<double>(f.trees[0].num_leaves()));
    out.push_back(f.trees[0].bandwidth);
    return out;
  };
  auto draw_z = [&](const Forest& f, RngStream& rng) {
    Eigen::VectorXd z(3);
    for (int i = 0; i < 3; ++i) z(i) = evaluate(f, std::span<const double>(x.row(i).data(), 2)) + sample_normal(rng);
    return z;
  };
  RngStream rng(26);
  std::vector<std::vector<double>> fwd, chain;
  Forest f = Forest::stumps(hyper, 2);
  for (int i = 0; i < 100000; ++i) {
    f.trees[0] = sample_tree_prior(hyper, 2, rng);
    fwd.push_back(features(f));
  }
  Eigen::VectorXd z = draw_z(f, rng);
  for (int i = 0; i < 100000; ++i) {
    backfit_sweep(f, x, z, rng);
    chain.push_back(features(f));
    z = draw_z(f, rng);
  }
  for (std::size_t j = 0; j < fwd.front().size(); ++j) {
    for (int power : {1, 2}) {
      std::vector<double> a, b;
      for (const auto& v : fwd) a.push_back(std::pow(v[j], power));
      for (const auto& v : chain) b.push_back(std::pow(v[j], power));
      EXPECT_LT(std::abs(testing_support::geweke_z(a, b)), 4.0) << "feature " << j << " moment " << power;
    }
  }
}

TEST(Backfit, CountsWeightEvaluations) {
  RngStream rng(27);
  Forest f = Forest::stumps(ForestHyper::defaults(5), 2);
  const InputMatrix x = random_inputs(30, 2, rng);
  const Eigen::VectorXd z = Eigen::VectorXd::Ones(30);
  for (int it = 0; it < 20; ++it) {
    const SweepStats s = backfit_sweep(f, x, z, rng);
    EXPECT_GE(s.weight_evaluations, 2u * 5u * 30u);
    EXPECT_LE(s.weight_evaluations, 4u * 5u * 30u);
  }
}
