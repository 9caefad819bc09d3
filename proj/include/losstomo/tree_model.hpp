#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace losstomo {

// Node ids are dense 0..m. Node k > 0 is the head of link k, which connects
// parent(k) to k, so link ids and non-root node ids coincide.
using NodeId = std::uint32_t;

// A set of children of one node, kept sorted ascending.
using NodeSet = std::vector<NodeId>;

inline constexpr std::size_t kDefaultSubsetCap = 20;

// Rooted multicast tree. Node 0 is the source and has exactly one child;
// leaves are the receivers. Immutable after construction.
class Tree {
 public:
  // parents[k] is the parent of node k; parents[0] is ignored.
  // Throws ConfigError when the parent relation is not a tree rooted at 0
  // or node 0 does not have exactly one child.
  static Tree from_parents(std::vector<NodeId> parents);

  std::size_t node_count() const noexcept { return parent_.size(); }
  std::size_t link_count() const noexcept { return parent_.size() - 1; }

  bool contains(NodeId k) const noexcept { return k < parent_.size(); }
  NodeId parent(NodeId k) const;
  std::span<const NodeId> children(NodeId k) const;
  bool is_leaf(NodeId k) const { return children(k).empty(); }
  bool is_internal(NodeId k) const { return k != 0 && !is_leaf(k); }
  std::size_t depth(NodeId k) const;

  // Receivers in ascending id order. Column c of an observation matrix is
  // receivers()[c].
  const std::vector<NodeId>& receivers() const noexcept { return receivers_; }
  std::size_t receiver_column(NodeId leaf) const;
  // Receivers of the subtree rooted at k (k itself when k is a leaf).
  std::vector<NodeId> receivers_below(NodeId k) const;

  // Root first, children visited in ascending order.
  const std::vector<NodeId>& preorder() const noexcept { return preorder_; }

  // Internal nodes (excluding 0) with a single child. Their path rate cannot
  // be identified from receiver data; estimators refuse them.
  std::vector<NodeId> single_child_nodes() const;

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  Tree() = default;

  std::vector<NodeId> parent_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<NodeId> receivers_;
  std::vector<std::size_t> receiver_column_;
  std::vector<NodeId> preorder_;
};

// Per-link pass rates alpha_k, indexed by link id (entry 0 unused, fixed to 1).
class LossModel {
 public:
  // Throws ConfigError if the size does not match the tree or a rate lies
  // outside [0, 1]. A rate of 0 models a cut link.
  LossModel(const Tree& tree, std::vector<double> pass_rates);
  static LossModel uniform(const Tree& tree, double alpha);

  double pass_rate(NodeId link) const { return pass_rate_.at(link); }
  const std::vector<double>& pass_rates() const noexcept { return pass_rate_; }
  std::size_t link_count() const noexcept { return pass_rate_.size() - 1; }

 private:
  std::vector<double> pass_rate_;
};

// Model-derived path and subtree rates.
//   A_k     probability a probe reaches k
//   beta_k  probability a probe at k is seen by some receiver below k
//   gamma_k A_k * beta_k
class TrueRates {
 public:
  TrueRates(const Tree& tree, const LossModel& model);

  double path_rate(NodeId k) const { return path_.at(k); }
  double subtree_rate(NodeId k) const { return beta_.at(k); }
  double gamma(NodeId k) const { return gamma_.at(k); }
  double pass_rate(NodeId k) const { return alpha_.at(k); }

  // psi_k(x) = prod_{j in x} alpha_j beta_j: all subtrees in x see a probe
  // that reached k. Evaluated on demand.
  double all_observe(NodeId k, std::span<const NodeId> x) const;
  // beta_k(x) = 1 - prod_{j in x} (1 - alpha_j beta_j): some subtree in x
  // sees a probe that reached k.
  double any_observe(NodeId k, std::span<const NodeId> x) const;

  const Tree& tree() const noexcept { return tree_; }

 private:
  Tree tree_;
  std::vector<double> alpha_;
  std::vector<double> path_;
  std::vector<double> beta_;
  std::vector<double> gamma_;
};

struct TreeSpec {
  Tree tree;
  LossModel model;
};

// Tree-spec text: one line per non-root node, "<node-id> <parent-id> <pass-rate>".
// '#' starts a comment; blank lines are ignored. Throws ParseError naming the
// offending line.
TreeSpec parse_tree_spec(std::string_view text);
Tree parse_tree(std::string_view text);
TreeSpec load_tree_spec(const std::string& path);

// Canonical form: header comment, then records sorted by node id.
std::string dump_tree_spec(const Tree& tree, const LossModel& model);

// All size-`degree` subsets of children(k) in lexicographic order.
// Throws CapacityError when |d_k| exceeds `cap`, ConfigError on a leaf or a
// degree outside [1, |d_k|].
std::vector<NodeSet> descendant_subsets(const Tree& tree, NodeId k, std::size_t degree,
                                        std::size_t cap = kDefaultSubsetCap);

// Sorts x and checks it is a non-empty subset of children(k).
NodeSet normalize_child_subset(const Tree& tree, NodeId k, NodeSet x);

}  // namespace losstomo
