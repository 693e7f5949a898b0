#pragma once

// Soft decision trees: every branch routes an input to both children, with the
// right child weighted by a logistic gate psi((x_j - c) / alpha) and the left
// child by 1 - psi. Leaf weights are products of gates along the root path and
// sum to one. As alpha -> 0 the tree becomes an ordinary hard-split tree with
// [x_j <= c] going left.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "softsurv/distributions.hpp"
#include "softsurv/errors.hpp"
#include "softsurv/input_scaler.hpp"
#include "softsurv/rng.hpp"
#include "softsurv/special.hpp"

namespace softsurv {

using InputMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ForestHyper {
  std::size_t num_trees = 50;
  double leaf_scale = 3.0 / (2.0 * std::sqrt(50.0));  // sigma_mu
  double branch_gamma = 0.95;
  double branch_beta = 2.0;
  double bandwidth_rate = 10.0;  // alpha_t ~ Gamma(1, bandwidth_rate)
  double leaf_scale_k = 2.0;

  /// Default prior for `trees` trees: sigma_mu = 3 / (k sqrt(T)).
  static ForestHyper defaults(std::size_t trees, double k = 2.0) {
    ForestHyper h;
    h.num_trees = trees;
    h.leaf_scale_k = k;
    h.leaf_scale = 3.0 / (k * std::sqrt(static_cast<double>(trees)));
    return h;
  }

  void validate() const {
    if (num_trees == 0) throw ConfigError("tree count must be positive");
    if (!(leaf_scale > 0.0)) throw ConfigError("leaf scale must be positive");
    if (!(branch_gamma >= 0.0) || !(branch_beta > 0.0)) throw ConfigError("branching prior must be nonnegative");
    if (!(bandwidth_rate > 0.0)) throw ConfigError("bandwidth rate must be positive");
  }

  /// Prior probability that a node at `depth` is a branch.
  double branch_probability(int depth) const {
    return branch_gamma * std::pow(1.0 + depth, -branch_beta);
  }
};

struct TreeNode {
  int left = -1;
  int right = -1;
  int parent = -1;
  int coord = 0;
  double cutpoint = 0.5;
  double mu = 0.0;

  bool is_leaf() const { return left < 0; }
};

/// Soft tree stored in preorder (node 0 is the root, a branch always precedes
/// its subtrees, left subtree before right).
struct SoftTree {
  std::vector<TreeNode> nodes{TreeNode{}};
  double bandwidth = 0.1;

  std::size_t num_nodes() const { return nodes.size(); }
  bool is_stump() const { return nodes.front().is_leaf(); }

  std::size_t num_leaves() const {
    std::size_t n = 0;
    for (const auto& node : nodes) n += node.is_leaf() ? 1 : 0;
    return n;
  }

  std::vector<int> leaves() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
      if (nodes[i].is_leaf()) out.push_back(i);
    }
    return out;
  }

  std::vector<int> branches() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
      if (!nodes[i].is_leaf()) out.push_back(i);
    }
    return out;
  }

  /// Branches whose children are both leaves (candidates for pruning).
  std::vector<int> prunable_branches() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
      const auto& n = nodes[i];
      if (!n.is_leaf() && nodes[n.left].is_leaf() && nodes[n.right].is_leaf()) out.push_back(i);
    }
    return out;
  }

  int depth(int node) const {
    int d = 0;
    for (int p = nodes[node].parent; p >= 0; p = nodes[p].parent) ++d;
    return d;
  }

  std::vector<double> leaf_means() const {
    std::vector<double> out;
    for (const auto& node : nodes) {
      if (node.is_leaf()) out.push_back(node.mu);
    }
    return out;
  }

  template <class Vec>
  void set_leaf_means(const Vec& means) {
    std::size_t k = 0;
    for (auto& node : nodes) {
      if (node.is_leaf()) node.mu = means[k++];
    }
  }

  /// Turn leaf `leaf` into a branch with two zero-mean leaf children.
  void grow(int leaf, int coord, double cutpoint) {
    if (!nodes.at(leaf).is_leaf()) throw std::logic_error("grow: node is not a leaf");
    const int left = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{.parent = leaf});
    nodes.push_back(TreeNode{.parent = leaf});
    nodes[leaf].left = left;
    nodes[leaf].right = left + 1;
    nodes[leaf].coord = coord;
    nodes[leaf].cutpoint = cutpoint;
    normalize();
  }

  /// Collapse a branch whose children are both leaves.
  void prune(int branch) {
    TreeNode& b = nodes.at(branch);
    if (b.is_leaf() || !nodes[b.left].is_leaf() || !nodes[b.right].is_leaf()) {
      throw std::logic_error("prune: node is not a prunable branch");
    }
    b.left = -1;
    b.right = -1;
    b.mu = 0.0;
    normalize();
  }

  /// Structural checks: proper binary tree, consistent parent links,
  /// cutpoints in [0, 1], positive bandwidth.
  bool is_valid() const {
    if (nodes.empty() || nodes.front().parent != -1 || !(bandwidth > 0.0)) return false;
    std::vector<int> seen(nodes.size(), 0);
    std::vector<int> stack{0};
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      if (i < 0 || i >= static_cast<int>(nodes.size()) || seen[i]++) return false;
      const TreeNode& n = nodes[i];
      if ((n.left < 0) != (n.right < 0)) return false;
      if (!n.is_leaf()) {
        if (n.cutpoint < 0.0 || n.cutpoint > 1.0) return false;
        const int size = static_cast<int>(nodes.size());
        if (n.left >= size || n.right >= size) return false;
        if (nodes[n.left].parent != i || nodes[n.right].parent != i) return false;
        stack.push_back(n.right);
        stack.push_back(n.left);
      }
    }
    for (int s : seen) {
      if (s != 1) return false;
    }
    return true;
  }

  /// Renumber reachable nodes in preorder.
  void normalize() {
    std::vector<TreeNode> out;
    out.reserve(nodes.size());
    struct Frame {
      int old_index;
      int new_parent;
      bool is_right;
    };
    std::vector<Frame> stack{{0, -1, false}};
    while (!stack.empty()) {
      const Frame f = stack.back();
      stack.pop_back();
      const int idx = static_cast<int>(out.size());
      TreeNode n = nodes[f.old_index];
      n.parent = f.new_parent;
      if (f.new_parent >= 0) {
        (f.is_right ? out[f.new_parent].right : out[f.new_parent].left) = idx;
      }
      const int old_left = n.left;
      const int old_right = n.right;
      if (!n.is_leaf()) {
        n.left = n.right = 0;  // patched when children are emitted
      }
      out.push_back(n);
      if (old_left >= 0) {
        stack.push_back({old_right, idx, true});
        stack.push_back({old_left, idx, false});
      }
    }
    nodes = std::move(out);
  }
};

/// psi(x; c, alpha) = 1 / (1 + exp(-(x - c) / alpha)).
inline double gate(double x, double cutpoint, double bandwidth) {
  return logistic((x - cutpoint) / bandwidth);
}

namespace detail {

// Routing mass reaching every node, written into `mass` (size num_nodes).
inline void node_mass(const SoftTree& tree, std::span<const double> input, std::span<double> mass) {
  mass[0] = 1.0;
  const auto& nodes = tree.nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const TreeNode& n = nodes[i];
    if (n.is_leaf()) continue;
    const double right = gate(input[n.coord], n.cutpoint, tree.bandwidth);
    mass[n.right] = mass[i] * right;
    mass[n.left] = mass[i] * (1.0 - right);
  }
}

inline std::vector<double>& scratch(std::size_t n) {
  thread_local std::vector<double> buffer;
  if (buffer.size() < n) buffer.resize(n);
  return buffer;
}

}  // namespace detail

/// Leaf weights phi_l(input) in preorder leaf order.
inline std::vector<double> leaf_weights(const SoftTree& tree, std::span<const double> input) {
  std::vector<double> mass(tree.num_nodes());
  detail::node_mass(tree, input, mass);
  std::vector<double> out;
  out.reserve(tree.num_leaves());
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (tree.nodes[i].is_leaf()) out.push_back(mass[i]);
  }
  return out;
}

/// g(input) = sum_l phi_l(input) mu_l for a single tree.
inline double evaluate(const SoftTree& tree, std::span<const double> input) {
  if (tree.is_stump()) return tree.nodes.front().mu;
  auto& mass = detail::scratch(tree.num_nodes());
  detail::node_mass(tree, input, mass);
  double out = 0.0;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (tree.nodes[i].is_leaf()) out += mass[i] * tree.nodes[i].mu;
  }
  return out;
}

struct Forest {
  std::vector<SoftTree> trees;
  ForestHyper hyper;
  std::size_t dim = 1;  // 1 + number of covariates

  /// T stumps with zero means and the given bandwidth.
  static Forest stumps(const ForestHyper& hyper, std::size_t dim, double bandwidth = 0.1) {
    Forest f;
    f.hyper = hyper;
    f.dim = dim;
    f.trees.assign(hyper.num_trees, SoftTree{});
    for (auto& t : f.trees) t.bandwidth = bandwidth;
    return f;
  }
};

/// l(input) on an already scaled input.
inline double evaluate(const Forest& forest, std::span<const double> input) {
  double out = 0.0;
  for (const auto& tree : forest.trees) out += evaluate(tree, input);
  return out;
}

/// l(t, x) on raw time and covariates.
inline double evaluate(const Forest& forest, double t, std::span<const double> x, const InputScaler& scaler) {
  if (t < 0.0) throw std::domain_error("evaluate: time must be nonnegative");
  const std::vector<double> input = scaler.scale(t, x);
  return evaluate(forest, input);
}

/// Draw a tree from the branching-process prior.
inline SoftTree sample_tree_prior(const ForestHyper& hyper, std::size_t dim, RngStream& rng) {
  SoftTree tree;
  tree.bandwidth = sample_gamma(1.0, hyper.bandwidth_rate, rng);
  std::vector<int> pending{0};
  while (!pending.empty()) {
    const int node = pending.back();
    pending.pop_back();
    const int d = tree.depth(node);
    if (rng.uniform() < hyper.branch_probability(d)) {
      const int coord = static_cast<int>(rng.uniform_index(dim));
      const double cut = rng.uniform();
      tree.nodes[node].coord = coord;
      tree.nodes[node].cutpoint = cut;
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back(TreeNode{.parent = node});
      tree.nodes.push_back(TreeNode{.parent = node});
      tree.nodes[node].left = left;
      tree.nodes[node].right = left + 1;
      pending.push_back(left + 1);
      pending.push_back(left);
    }
  }
  for (auto& node : tree.nodes) {
    if (node.is_leaf()) node.mu = hyper.leaf_scale * sample_normal(rng);
  }
  tree.normalize();
  return tree;
}

}  // namespace softsurv
