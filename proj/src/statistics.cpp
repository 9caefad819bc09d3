#include "losstomo/statistics.hpp"

#include <algorithm>

#include "losstomo/errors.hpp"

namespace losstomo {

double ModelRateSource::union_rate(NodeId k, std::span<const NodeId> x) const {
  return rates_.path_rate(k) * rates_.any_observe(k, x);
}

double ModelRateSource::intersection_rate(NodeId k, std::span<const NodeId> x) const {
  return rates_.path_rate(k) * rates_.all_observe(k, x);
}

SubtreeStatistics::SubtreeStatistics(const Tree& tree, const ObservationMatrix& obs)
    : tree_(tree), probes_(obs.probe_count()) {
  if (obs.receiver_ids() != tree.receivers())
    throw ConfigError("observation receivers do not match the tree's receivers");
  if (probes_ == 0) throw ConfigError("observation matrix has no probes");

  indicator_.assign(tree.node_count(), BitVector(probes_));
  const auto& order = tree.preorder();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId k = *it;
    const auto kids = tree.children(k);
    if (kids.empty()) {
      indicator_[k] = obs.column(tree.receiver_column(k));
    } else {
      for (NodeId j : kids) indicator_[k] |= indicator_[j];
    }
  }
  counts_.resize(tree.node_count());
  for (NodeId k = 0; k < tree.node_count(); ++k) counts_[k] = indicator_[k].count();
}

const BitVector& SubtreeStatistics::subtree_indicator(NodeId k) const {
  if (!tree_.contains(k)) throw std::out_of_range("unknown node " + std::to_string(k));
  return indicator_[k];
}

Count SubtreeStatistics::subtree_count(NodeId k) const {
  if (!tree_.contains(k)) throw std::out_of_range("unknown node " + std::to_string(k));
  return counts_[k];
}

NodeSet SubtreeStatistics::checked_subset(NodeId k, std::span<const NodeId> x) const {
  if (!tree_.contains(k)) throw std::out_of_range("unknown node " + std::to_string(k));
  return normalize_child_subset(tree_, k, NodeSet(x.begin(), x.end()));
}

Count SubtreeStatistics::group_count(NodeId k, std::span<const NodeId> x) const {
  const NodeSet set = checked_subset(k, x);
  if (set.size() == 1) return counts_[set.front()];
  BitVector acc = indicator_[set.front()];
  for (std::size_t i = 1; i < set.size(); ++i) acc |= indicator_[set[i]];
  return acc.count();
}

Count SubtreeStatistics::intersection_count(NodeId k, std::span<const NodeId> x) const {
  NodeSet set = checked_subset(k, x);
  if (set.size() == 1) return counts_[set.front()];

  auto key = std::make_pair(k, std::move(set));
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const NodeSet& members = key.second;
  BitVector acc = indicator_[members.front()];
  for (std::size_t i = 1; i < members.size(); ++i) acc &= indicator_[members[i]];
  const Count value = acc.count();
  {
    std::lock_guard lock(cache_mutex_);
    if (cache_.size() < kCacheCap) cache_.emplace(std::move(key), value);
  }
  return value;
}

double SubtreeStatistics::gamma_hat(NodeId k) const {
  return static_cast<double>(subtree_count(k)) / static_cast<double>(probes_);
}

double SubtreeStatistics::union_rate(NodeId k, std::span<const NodeId> x) const {
  return static_cast<double>(group_count(k, x)) / static_cast<double>(probes_);
}

double SubtreeStatistics::intersection_rate(NodeId k, std::span<const NodeId> x) const {
  return static_cast<double>(intersection_count(k, x)) / static_cast<double>(probes_);
}

std::size_t SubtreeStatistics::cached_intersections() const {
  std::lock_guard lock(cache_mutex_);
  return cache_.size();
}

std::int64_t inclusion_exclusion_sum(const Tree& tree, NodeId k,
                                     const std::function<Count(std::span<const NodeId>)>& intersection,
                                     std::size_t cap) {
  const std::size_t d = tree.children(k).size();
  std::int64_t total = 0;
  for (std::size_t i = 1; i <= d; ++i) {
    std::int64_t level = 0;
    for (const auto& x : descendant_subsets(tree, k, i, cap)) level += static_cast<std::int64_t>(intersection(x));
    total += (i % 2 == 1) ? level : -level;
  }
  return total;
}

bool inclusion_exclusion_check(const SubtreeStatistics& stats, NodeId k, std::size_t cap) {
  if (!stats.tree().is_internal(k)) throw ConfigError("node " + std::to_string(k) + " is not internal");
  const auto expansion = inclusion_exclusion_sum(
      stats.tree(), k, [&](std::span<const NodeId> x) { return stats.intersection_count(k, x); }, cap);
  return expansion == static_cast<std::int64_t>(stats.subtree_count(k));
}

}  // namespace losstomo
