#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "losstomo/statistics.hpp"
#include "losstomo/tree_model.hpp"

namespace losstomo {

enum class EstimatorKind {
  Source,  // node 0, A_0 = 1 by definition
  Leaf,    // receiver, A_j = gamma_j
  Mle,     // full-correlation likelihood equation
  Rse,     // likelihood equation restricted to the subtrees in x
  Bwe,     // block of all i-wise correlations
  Ibe,     // single correlation x
  Merged,  // d_k split into two virtual subtrees
  Unidentified,  // single-child node, not estimable
};

// Two disjoint non-empty groups covering d_k.
struct Partition {
  NodeSet first;
  NodeSet second;
};

struct EstimatorTag {
  EstimatorTag() = default;
  explicit EstimatorTag(EstimatorKind k, NodeSet x = {}) : kind(k), subset(std::move(x)) {}

  EstimatorKind kind = EstimatorKind::Mle;
  NodeSet subset;          // Rse, Ibe
  std::size_t degree = 0;  // Bwe
  Partition partition;     // Merged

  // e.g. "mle", "rse{4,5}", "bwe(2)", "ibe{4,5}", "merged{4|5,6}", "leaf"
  std::string label() const;
};

class Flags {
 public:
  static constexpr std::uint8_t kClamped = 1;     // explicit value exceeded 1, reported as 1
  static constexpr std::uint8_t kDegenerate = 2;  // undefined on this data, value is NaN
  static constexpr std::uint8_t kMerged = 4;      // involves a single-child node

  constexpr Flags() = default;
  constexpr explicit Flags(std::uint8_t bits) : bits_(bits) {}

  constexpr bool clamped() const noexcept { return bits_ & kClamped; }
  constexpr bool degenerate() const noexcept { return bits_ & kDegenerate; }
  constexpr bool merged() const noexcept { return bits_ & kMerged; }
  constexpr bool none() const noexcept { return bits_ == 0; }
  constexpr std::uint8_t bits() const noexcept { return bits_; }
  constexpr Flags& operator|=(Flags other) noexcept {
    bits_ |= other.bits_;
    return *this;
  }
  friend constexpr Flags operator|(Flags a, Flags b) noexcept { return a |= b; }
  friend constexpr bool operator==(Flags, Flags) = default;

  // "clamped|degenerate", "" when none
  std::string to_string() const;
  std::vector<std::string> names() const;

 private:
  std::uint8_t bits_ = 0;
};

struct Estimate {
  NodeId node = 0;
  double value = 0.0;
  EstimatorTag estimator;
  Flags flags;
};

struct EstimateSet {
  std::vector<Estimate> path;    // indexed by node
  std::vector<double> link;      // alpha_hat, indexed by link (entry 0 unused)
  std::vector<Flags> link_flags;

  double path_rate(NodeId k) const { return path.at(k).value; }
  double pass_rate(NodeId k) const { return link.at(k); }
  double loss_rate(NodeId k) const { return 1.0 - link.at(k); }
};

// Original MLE: root A in (max gamma, 1] of
//   1 - gamma_k / A = prod_{j in d_k} (1 - gamma_j / A).
// Binary nodes use the closed form gamma_a gamma_b / (gamma_a + gamma_b - gamma_k).
Estimate mle_original(const RateSource& rates, NodeId k);
// Same equation with gamma_k replaced by n_k(x)/n and the product over x.
Estimate rse(const RateSource& rates, NodeId k, std::span<const NodeId> x);
// [sum_{x in S_k(i)} prod gamma_j / sum_{x in S_k(i)} I_k(x)/n]^{1/(i-1)}
Estimate bwe(const RateSource& rates, NodeId k, std::size_t degree);
// [prod_{j in x} gamma_j / (I_k(x)/n)]^{1/(|x|-1)}
Estimate ibe(const RateSource& rates, NodeId k, std::span<const NodeId> x);
// gamma_1 gamma_2 / (gamma_1 + gamma_2 - gamma_k) with gamma_g = n_k(group)/n.
Estimate merged_mle(const RateSource& rates, NodeId k, const Partition& partition);

// Explicit bisection on the likelihood equation of mle/rse, exposed so the
// binary closed form can be checked against it.
Estimate mle_bisection(const RateSource& rates, NodeId k);

inline constexpr double kRootTolerance = 1e-12;
inline constexpr int kMaxBisection = 200;

// Tree-wide estimator selection.
//   mle              original MLE
//   rse:<s>          RSE on the first s children (all when s >= |d_k|)
//   bwe:<i>          BWE of degree i (capped at |d_k|)
//   ibe              IBE on x = d_k
//   ibe-pair/ibe:<s> IBE on the first s children
//   merged           merged MLE, first child vs the rest
struct Method {
  EstimatorKind kind = EstimatorKind::Mle;
  std::size_t size = 0;  // 0 = all children where applicable

  std::string label() const;
};

// Throws ConfigError on an unknown name.
Method parse_method(std::string_view text);
std::vector<Method> parse_method_list(std::string_view comma_separated);

// Concrete estimator used by `method` at internal node k.
EstimatorTag resolve_method(const Tree& tree, NodeId k, const Method& method);
Estimate estimate_node(const RateSource& rates, NodeId k, const EstimatorTag& tag);

Partition default_partition(const Tree& tree, NodeId k);

// A_hat for every node, alpha_hat for every link. Single-child nodes are
// skipped and the link below them carries the product rate, flagged merged.
EstimateSet estimate_tree(const RateSource& rates, const Method& method);

// Loss model built from alpha_hat, for evaluating variance formulas at the
// estimates. Throws ConfigError if a link estimate is degenerate.
LossModel model_from_estimates(const Tree& tree, const EstimateSet& estimates);

}  // namespace losstomo
