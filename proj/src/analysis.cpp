#include "losstomo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "losstomo/errors.hpp"
#include "losstomo/parallel.hpp"
#include "losstomo/probe_simulator.hpp"
#include "losstomo/statistics.hpp"

namespace losstomo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

NodeSet checked(const TrueRates& rates, NodeId k, std::span<const NodeId> x) {
  NodeSet set = normalize_child_subset(rates.tree(), k, NodeSet(x.begin(), x.end()));
  if (set.size() < 2) throw ConfigError("correlation subsets need at least two members");
  return set;
}

double binomial(std::size_t n, std::size_t k) {
  double out = 1.0;
  for (std::size_t i = 1; i <= k; ++i) out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(out);
}

}  // namespace

double fisher_from_delta(double path_rate, double delta) {
  const double denom = path_rate * (1.0 - path_rate * delta);
  if (denom <= kSingularity) throw SingularityError("Fisher information is singular (A(1 - A delta) ~ 0)");
  return delta / denom;
}

double crb_from_delta(double path_rate, double delta) {
  if (delta <= kSingularity) throw SingularityError("variance formula is singular (delta ~ 0)");
  return path_rate * (1.0 - path_rate * delta) / delta;
}

double fisher_ibe(const TrueRates& rates, NodeId k, std::span<const NodeId> x) {
  const NodeSet set = checked(rates, k, x);
  return fisher_from_delta(rates.path_rate(k), rates.all_observe(k, set));
}

double fisher_mle(const TrueRates& rates, NodeId k, std::span<const NodeId> x) {
  const NodeSet set = checked(rates, k, x);
  return fisher_from_delta(rates.path_rate(k), rates.any_observe(k, set));
}

double fisher_mle(const TrueRates& rates, NodeId k) {
  if (rates.tree().children(k).size() < 2) throw ConfigError("node needs at least two children");
  return fisher_from_delta(rates.path_rate(k), rates.subtree_rate(k));
}

double variance_delta(const TrueRates& rates, NodeId k, const EstimatorTag& tag) {
  switch (tag.kind) {
    case EstimatorKind::Leaf: return 1.0;
    case EstimatorKind::Mle:
    case EstimatorKind::Merged: return rates.subtree_rate(k);
    case EstimatorKind::Rse: return rates.any_observe(k, checked(rates, k, tag.subset));
    case EstimatorKind::Ibe: return rates.all_observe(k, checked(rates, k, tag.subset));
    case EstimatorKind::Bwe: throw ConfigError("BWE has no closed-form variance; use bwe_information_range");
    default: throw ConfigError("no variance formula for estimator '" + tag.label() + "'");
  }
}

double crb_variance(const TrueRates& rates, NodeId k, const EstimatorTag& tag) {
  if (tag.kind == EstimatorKind::Merged) return merged_mle_variance(rates, k, tag.partition);
  return crb_from_delta(rates.path_rate(k), variance_delta(rates, k, tag));
}

double merged_mle_variance(const TrueRates& rates, NodeId k, const Partition& partition) {
  const NodeSet first = normalize_child_subset(rates.tree(), k, partition.first);
  const NodeSet second = normalize_child_subset(rates.tree(), k, partition.second);
  if (first.size() + second.size() != rates.tree().children(k).size())
    throw ConfigError("partition does not cover the children of node " + std::to_string(k));

  const double merged_beta = 1.0 - (1.0 - rates.any_observe(k, first)) * (1.0 - rates.any_observe(k, second));
  if (std::abs(merged_beta - rates.subtree_rate(k)) > 1e-12)
    throw std::logic_error("merged subtree rate differs from beta_k");
  return crb_from_delta(rates.path_rate(k), merged_beta);
}

std::vector<Partition> all_bipartitions(const Tree& tree, NodeId k, std::size_t cap) {
  const auto kids = tree.children(k);
  if (kids.size() < 2) throw ConfigError("node " + std::to_string(k) + " has fewer than two children");
  if (kids.size() > cap) throw CapacityError("too many children to enumerate bipartitions");
  std::vector<Partition> out;
  const std::size_t d = kids.size();
  // the first child always sits in `first`; mask picks the rest of `first`
  for (std::uint64_t mask = 0; mask + 1 < (std::uint64_t{1} << (d - 1)); ++mask) {
    Partition p;
    p.first.push_back(kids[0]);
    for (std::size_t i = 1; i < d; ++i) ((mask >> (i - 1)) & 1U ? p.first : p.second).push_back(kids[i]);
    out.push_back(std::move(p));
  }
  return out;
}

InformationRange bwe_information_range(const TrueRates& rates, NodeId k, std::size_t degree) {
  const std::size_t d = rates.tree().children(k).size();
  if (degree < 2 || degree > d)
    throw ConfigError("BWE degree " + std::to_string(degree) + " outside [2, " + std::to_string(d) + "]");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& x : descendant_subsets(rates.tree(), k, degree)) {
    const double info = fisher_ibe(rates, k, x);
    lo = std::min(lo, info);
    hi = std::max(hi, info);
  }
  return InformationRange{lo, binomial(d, degree) * hi};
}

std::vector<VarianceReport> monte_carlo(const Tree& tree, const LossModel& model, const MonteCarloConfig& config) {
  if (config.replications < 2) throw ConfigError("Monte-Carlo needs at least two replications");
  if (config.probes == 0) throw ConfigError("probe count must be at least 1");
  if (config.methods.empty()) throw ConfigError("no estimator methods given");

  struct Cell {
    NodeId node;
    Method method;
    EstimatorTag tag;
  };
  std::vector<Cell> cells;
  for (NodeId k = 1; k < tree.node_count(); ++k) {
    if (tree.children(k).size() < 2) continue;
    for (const auto& m : config.methods) cells.push_back(Cell{k, m, resolve_method(tree, k, m)});
  }

  const std::size_t reps = config.replications;
  // values[c * reps + r]; NaN marks an excluded (degenerate) replication
  std::vector<double> values(cells.size() * reps, kNaN);
  const std::size_t workers = config.threads == 0 ? worker_count() : config.threads;
  parallel_for(reps, workers, [&](std::size_t r) {
    const auto sim = simulate(tree, model, config.probes, replication_seed(config.seed, r), SimulateOptions{false, 1});
    const SubtreeStatistics stats(tree, sim.observations);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const Estimate e = estimate_node(stats, cells[c].node, cells[c].tag);
      if (!e.flags.degenerate()) values[c * reps + r] = e.value;
    }
  });

  const TrueRates truth(tree, model);
  std::vector<VarianceReport> out;
  out.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    VarianceReport rep;
    rep.node = cells[c].node;
    rep.estimator = cells[c].method.label();
    rep.replications = reps;
    rep.n = config.probes;
    if (cells[c].tag.kind == EstimatorKind::Bwe) {
      rep.crb_single_obs = kNaN;
    } else {
      try {
        rep.crb_single_obs = crb_variance(truth, cells[c].node, cells[c].tag);
      } catch (const SingularityError&) {
        rep.crb_single_obs = kNaN;
      }
    }
    rep.crb_n = rep.crb_single_obs / static_cast<double>(config.probes);

    // fixed-order reduction keeps reports bitwise reproducible
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double v = values[c * reps + r];
      if (std::isnan(v)) continue;
      sum += v;
      ++used;
    }
    rep.excluded = reps - used;
    rep.mc_mean = used > 0 ? sum / static_cast<double>(used) : kNaN;
    double ss = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double v = values[c * reps + r];
      if (!std::isnan(v)) ss += (v - rep.mc_mean) * (v - rep.mc_mean);
    }
    rep.mc_variance = used > 1 ? ss / static_cast<double>(used - 1) : kNaN;
    out.push_back(std::move(rep));
  }
  return out;
}

}  // namespace losstomo
