#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "losstomo/bitvector.hpp"
#include "losstomo/probe_simulator.hpp"
#include "losstomo/tree_model.hpp"

namespace losstomo {

// The three rates every estimator consumes. Implemented by empirical
// statistics (counts / n) and by the exact model (for consistency checks).
class RateSource {
 public:
  virtual ~RateSource() = default;

  virtual const Tree& tree() const = 0;
  // gamma_k: some receiver below k sees the probe.
  virtual double gamma(NodeId k) const = 0;
  // n_k(x)/n: some receiver below some j in x sees the probe.
  virtual double union_rate(NodeId k, std::span<const NodeId> x) const = 0;
  // I_k(x)/n: for every j in x, some receiver below j sees the probe.
  virtual double intersection_rate(NodeId k, std::span<const NodeId> x) const = 0;
};

// Population values gamma_k, A_k beta_k(x), A_k psi_k(x) from a loss model.
class ModelRateSource final : public RateSource {
 public:
  explicit ModelRateSource(TrueRates rates) : rates_(std::move(rates)) {}

  const Tree& tree() const override { return rates_.tree(); }
  double gamma(NodeId k) const override { return rates_.gamma(k); }
  double union_rate(NodeId k, std::span<const NodeId> x) const override;
  double intersection_rate(NodeId k, std::span<const NodeId> x) const override;

  const TrueRates& rates() const noexcept { return rates_; }

 private:
  TrueRates rates_;
};

using Count = std::uint64_t;

// Sufficient statistics of one dataset. subtree_indicator(k) has bit i set
// when probe i was observed by at least one receiver below k. Counts are
// exact integers; read-only after construction and safe to query
// concurrently (the intersection memo is mutex-guarded).
class SubtreeStatistics final : public RateSource {
 public:
  SubtreeStatistics(const Tree& tree, const ObservationMatrix& obs);

  const Tree& tree() const override { return tree_; }
  std::size_t probe_count() const noexcept { return probes_; }
  const BitVector& subtree_indicator(NodeId k) const;

  // n_k(d_k): probes seen by some receiver below k.
  Count subtree_count(NodeId k) const;
  // n_k(x): probes seen below some member of x.
  Count group_count(NodeId k, std::span<const NodeId> x) const;
  // I_k(x): probes seen below every member of x. Memoized.
  Count intersection_count(NodeId k, std::span<const NodeId> x) const;
  // n_k(d_k) / n
  double gamma_hat(NodeId k) const;

  double gamma(NodeId k) const override { return gamma_hat(k); }
  double union_rate(NodeId k, std::span<const NodeId> x) const override;
  double intersection_rate(NodeId k, std::span<const NodeId> x) const override;

  std::size_t cached_intersections() const;

  static constexpr std::size_t kCacheCap = 1U << 16;

 private:
  NodeSet checked_subset(NodeId k, std::span<const NodeId> x) const;

  Tree tree_;
  std::size_t probes_;
  std::vector<BitVector> indicator_;
  std::vector<Count> counts_;

  mutable std::mutex cache_mutex_;
  mutable std::map<std::pair<NodeId, NodeSet>, Count> cache_;
};

// Alternating sum sum_{i=1}^{|d_k|} (-1)^{i-1} sum_{x in S_k(i)} I(x), with I
// supplied by the caller. Throws CapacityError above `cap` children.
std::int64_t inclusion_exclusion_sum(const Tree& tree, NodeId k,
                                     const std::function<Count(std::span<const NodeId>)>& intersection,
                                     std::size_t cap = kDefaultSubsetCap);

// True iff n_k(d_k) equals the inclusion-exclusion expansion over I_k(x).
bool inclusion_exclusion_check(const SubtreeStatistics& stats, NodeId k, std::size_t cap = kDefaultSubsetCap);

}  // namespace losstomo
