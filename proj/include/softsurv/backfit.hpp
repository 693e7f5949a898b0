#pragma once

// Bayesian backfitting for a soft-tree ensemble with unit-variance Gaussian
// responses. Leaf means are integrated out when comparing tree structures and
// bandwidths, so every move works on an L x L system (L = leaves), never on
// the n x n covariance.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "softsurv/distributions.hpp"
#include "softsurv/errors.hpp"
#include "softsurv/rng.hpp"
#include "softsurv/soft_tree.hpp"

namespace softsurv {

/// Gaussian conditional of a tree's leaf means given residuals.
struct LeafPosterior {
  Eigen::MatrixXd weights;             // n x L leaf-weight matrix
  Eigen::LLT<Eigen::MatrixXd> factor;  // of W'W + sigma_mu^-2 I
  Eigen::VectorXd projection;          // W' r
  double log_marginal = 0.0;
};

/// Fill the n x L matrix of leaf weights for every row of `inputs`.
inline Eigen::MatrixXd leaf_weight_matrix(const SoftTree& tree, const InputMatrix& inputs) {
  const auto n = inputs.rows();
  const auto leaves = static_cast<Eigen::Index>(tree.num_leaves());
  Eigen::MatrixXd w(n, leaves);
  if (tree.is_stump()) {
    w.setOnes();
    return w;
  }
  std::vector<int> leaf_nodes = tree.leaves();
  std::vector<double> mass(tree.num_nodes());
  for (Eigen::Index i = 0; i < n; ++i) {
    detail::node_mass(tree, std::span<const double>(inputs.row(i).data(), static_cast<std::size_t>(inputs.cols())), mass);
    for (Eigen::Index l = 0; l < leaves; ++l) w(i, l) = mass[leaf_nodes[l]];
  }
  return w;
}

inline LeafPosterior leaf_posterior(const SoftTree& tree, const InputMatrix& inputs,
                                    const Eigen::VectorXd& residual, double leaf_scale) {
  LeafPosterior post;
  post.weights = leaf_weight_matrix(tree, inputs);
  const auto leaves = post.weights.cols();
  const double prior_precision = 1.0 / (leaf_scale * leaf_scale);
  Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(leaves, leaves) * prior_precision;
  precision.selfadjointView<Eigen::Lower>().rankUpdate(post.weights.transpose());
  precision.triangularView<Eigen::Upper>() = precision.transpose();
  post.factor.compute(precision);
  if (post.factor.info() != Eigen::Success) {
    throw NumericalFailure("leaf posterior precision is not positive definite");
  }
  post.projection = post.weights.transpose() * residual;

  const Eigen::MatrixXd& lower = post.factor.matrixLLT();
  double log_det = 0.0;
  for (Eigen::Index l = 0; l < leaves; ++l) log_det += 2.0 * std::log(lower(l, l));
  const Eigen::VectorXd half = post.factor.matrixL().solve(post.projection);
  const auto n = static_cast<double>(inputs.rows());
  post.log_marginal = -0.5 * n * std::log(2.0 * std::numbers::pi) -
                      0.5 * (static_cast<double>(leaves) * std::log(leaf_scale * leaf_scale) + log_det) -
                      0.5 * (residual.squaredNorm() - half.squaredNorm());
  if (!std::isfinite(post.log_marginal)) throw NumericalFailure("tree marginal likelihood is not finite");
  return post;
}

/// log N(z; 0, I + sigma_mu^2 W W') for the tree's leaf-weight matrix W.
inline double tree_log_marginal(const SoftTree& tree, const InputMatrix& inputs, const Eigen::VectorXd& z,
                                double leaf_scale) {
  return leaf_posterior(tree, inputs, z, leaf_scale).log_marginal;
}

/// Draw leaf means from N(P^-1 W'r, P^-1).
inline Eigen::VectorXd draw_leaf_means(const LeafPosterior& post, RngStream& rng) {
  const auto leaves = post.weights.cols();
  Eigen::VectorXd noise(leaves);
  for (Eigen::Index l = 0; l < leaves; ++l) noise(l) = sample_normal(rng);
  Eigen::VectorXd mean = post.factor.solve(post.projection);
  return mean + post.factor.matrixU().solve(noise);
}

enum class MoveKind { Grow, Prune, Change };

/// A proposed structure together with log[prior ratio x reverse/forward
/// proposal ratio]; the likelihood ratio is added by the caller.
struct StructuralProposal {
  SoftTree tree;
  MoveKind kind = MoveKind::Change;
  double log_ratio = 0.0;
};

struct MoveMix {
  double grow;
  double prune;
  double change;
};

/// Grow/prune/change mix 0.4/0.4/0.2; a stump can only grow.
inline MoveMix move_mix(const SoftTree& tree) {
  if (tree.is_stump()) return {1.0, 0.0, 0.0};
  return {0.4, 0.4, 0.2};
}

namespace detail {

// log prior(after) - log prior(before) when a leaf at `depth` gets two leaf
// children (split rule drawn from its prior, so it cancels).
inline double grow_prior_log_ratio(const ForestHyper& hyper, int depth) {
  const double q = hyper.branch_probability(depth);
  const double q_child = hyper.branch_probability(depth + 1);
  return std::log(q) + 2.0 * std::log1p(-q_child) - std::log1p(-q);
}

}  // namespace detail

/// Grow at leaf node `leaf` with split (coord, cutpoint).
inline StructuralProposal grow_proposal(const SoftTree& tree, int leaf, int coord, double cutpoint,
                                        const ForestHyper& hyper) {
  StructuralProposal p{tree, MoveKind::Grow, 0.0};
  const int depth = tree.depth(leaf);
  const double forward = move_mix(tree).grow / static_cast<double>(tree.num_leaves());
  p.tree.grow(leaf, coord, cutpoint);
  const double reverse = move_mix(p.tree).prune / static_cast<double>(p.tree.prunable_branches().size());
  p.log_ratio = detail::grow_prior_log_ratio(hyper, depth) + std::log(reverse) - std::log(forward);
  return p;
}

/// Prune the (prunable) branch node `branch`.
inline StructuralProposal prune_proposal(const SoftTree& tree, int branch, const ForestHyper& hyper) {
  StructuralProposal p{tree, MoveKind::Prune, 0.0};
  const int depth = tree.depth(branch);
  const double forward = move_mix(tree).prune / static_cast<double>(tree.prunable_branches().size());
  p.tree.prune(branch);
  const double reverse = move_mix(p.tree).grow / static_cast<double>(p.tree.num_leaves());
  p.log_ratio = -detail::grow_prior_log_ratio(hyper, depth) + std::log(reverse) - std::log(forward);
  return p;
}

/// Redraw the split rule of branch node `branch` (symmetric, prior-drawn).
inline StructuralProposal change_proposal(const SoftTree& tree, int branch, int coord, double cutpoint) {
  StructuralProposal p{tree, MoveKind::Change, 0.0};
  p.tree.nodes.at(branch).coord = coord;
  p.tree.nodes.at(branch).cutpoint = cutpoint;
  return p;
}

inline StructuralProposal propose_structure(const SoftTree& tree, std::size_t dim, const ForestHyper& hyper,
                                            RngStream& rng) {
  const MoveMix mix = move_mix(tree);
  const double u = rng.uniform();
  if (u < mix.grow) {
    const auto leaves = tree.leaves();
    const int leaf = leaves[rng.uniform_index(leaves.size())];
    const int coord = static_cast<int>(rng.uniform_index(dim));
    const double cut = rng.uniform();
    return grow_proposal(tree, leaf, coord, cut, hyper);
  }
  if (u < mix.grow + mix.prune) {
    const auto candidates = tree.prunable_branches();
    return prune_proposal(tree, candidates[rng.uniform_index(candidates.size())], hyper);
  }
  const auto branches = tree.branches();
  const int branch = branches[rng.uniform_index(branches.size())];
  const int coord = static_cast<int>(rng.uniform_index(dim));
  const double cut = rng.uniform();
  return change_proposal(tree, branch, coord, cut);
}

struct SweepStats {
  std::uint64_t weight_evaluations = 0;  // (datum, tree) leaf-weight computations
  std::size_t structure_accepted = 0;
  std::size_t bandwidth_accepted = 0;
};

/// One backfitting pass over every tree, in place.
///
/// For each tree: subtract its fit from the working residual, try one
/// structural move and one bandwidth move (both with leaf means integrated
/// out), redraw the leaf means, and add the new fit back.
inline SweepStats backfit_sweep(Forest& forest, const InputMatrix& inputs, const Eigen::VectorXd& z,
                                RngStream& rng) {
  SweepStats stats;
  const auto n = inputs.rows();
  const auto num_trees = static_cast<Eigen::Index>(forest.trees.size());
  const ForestHyper& hyper = forest.hyper;
  const auto n_evals = static_cast<std::uint64_t>(n);

  Eigen::MatrixXd fits(n, num_trees);
  for (Eigen::Index t = 0; t < num_trees; ++t) {
    const SoftTree& tree = forest.trees[t];
    if (tree.is_stump()) {
      fits.col(t).setConstant(tree.nodes.front().mu);
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        fits(i, t) = evaluate(tree, std::span<const double>(inputs.row(i).data(), static_cast<std::size_t>(inputs.cols())));
      }
    }
    stats.weight_evaluations += n_evals;
  }
  Eigen::VectorXd total = fits.rowwise().sum();

  for (Eigen::Index t = 0; t < num_trees; ++t) {
    SoftTree& tree = forest.trees[t];
    const Eigen::VectorXd residual = z - (total - fits.col(t));

    LeafPosterior current = leaf_posterior(tree, inputs, residual, hyper.leaf_scale);
    stats.weight_evaluations += n_evals;

    StructuralProposal proposal = propose_structure(tree, forest.dim, hyper, rng);
    try {
      LeafPosterior candidate = leaf_posterior(proposal.tree, inputs, residual, hyper.leaf_scale);
      stats.weight_evaluations += n_evals;
      const double log_accept = candidate.log_marginal - current.log_marginal + proposal.log_ratio;
      if (std::log(rng.uniform()) < log_accept) {
        tree = std::move(proposal.tree);
        current = std::move(candidate);
        ++stats.structure_accepted;
      }
    } catch (const NumericalFailure&) {
      // Degenerate weights: reject.
    }

    // Bandwidth: independence proposal from its Gamma(1, r) prior.
    SoftTree alt = tree;
    alt.bandwidth = sample_gamma(1.0, hyper.bandwidth_rate, rng);
    if (!alt.is_stump()) {
      try {
        LeafPosterior candidate = leaf_posterior(alt, inputs, residual, hyper.leaf_scale);
        stats.weight_evaluations += n_evals;
        if (std::log(rng.uniform()) < candidate.log_marginal - current.log_marginal) {
          tree.bandwidth = alt.bandwidth;
          current = std::move(candidate);
          ++stats.bandwidth_accepted;
        }
      } catch (const NumericalFailure&) {
      }
    } else {
      // The likelihood of a stump does not depend on its bandwidth.
      tree.bandwidth = alt.bandwidth;
      ++stats.bandwidth_accepted;
    }

    const Eigen::VectorXd means = draw_leaf_means(current, rng);
    tree.set_leaf_means(means);
    const Eigen::VectorXd fit = current.weights * means;
    total += fit - fits.col(t);
    fits.col(t) = fit;
  }
  return stats;
}

}  // namespace softsurv
