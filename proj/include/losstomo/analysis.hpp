#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "losstomo/estimators.hpp"
#include "losstomo/tree_model.hpp"

namespace losstomo {

// Per-observation Fisher information delta / (A (1 - A delta)) of a
// Bernoulli observation with success rate A * delta. Throws SingularityError
// when A (1 - A delta) <= 1e-15.
double fisher_from_delta(double path_rate, double delta);
// Per-observation variance A (1 - A delta) / delta = A/delta - A^2. Throws
// SingularityError when delta <= 1e-15.
double crb_from_delta(double path_rate, double delta);

inline constexpr double kSingularity = 1e-15;

// IBE on x: delta = psi_k(x). x must have at least two members.
double fisher_ibe(const TrueRates& rates, NodeId k, std::span<const NodeId> x);
// Original MLE (x = d_k) and RSE on x: delta = beta_k(x).
double fisher_mle(const TrueRates& rates, NodeId k, std::span<const NodeId> x);
double fisher_mle(const TrueRates& rates, NodeId k);

// The delta entering the variance formula for `tag` at node k:
// beta_k for mle and merged, beta_k(x) for rse, psi_k(x) for ibe, 1 for a
// leaf (direct measurement). Throws ConfigError for bwe, which has no
// closed form.
double variance_delta(const TrueRates& rates, NodeId k, const EstimatorTag& tag);
double crb_variance(const TrueRates& rates, NodeId k, const EstimatorTag& tag);

// beta_k(zeta) = 1 - prod_{q in zeta} (1 - beta_k(q)) for the two groups,
// checked against beta_k to 1e-12 (std::logic_error otherwise), then
// A (1 - A beta) / beta.
double merged_mle_variance(const TrueRates& rates, NodeId k, const Partition& partition);

// Every bipartition of d_k into two non-empty groups, each listed once
// (the group holding the first child comes first).
std::vector<Partition> all_bipartitions(const Tree& tree, NodeId k, std::size_t cap = kDefaultSubsetCap);

struct InformationRange {
  double low = 0.0;
  double high = 0.0;
};

// Bracket for the information of BWE of degree i: low is the smallest IBE
// information over S_k(i), high is C(|d_k|, i) times the largest.
InformationRange bwe_information_range(const TrueRates& rates, NodeId k, std::size_t degree);

struct VarianceReport {
  NodeId node = 0;
  std::string estimator;       // method label, e.g. "mle", "ibe-pair"
  double crb_single_obs = 0.0; // NaN where no closed form exists (bwe)
  double crb_n = 0.0;
  double mc_mean = 0.0;
  double mc_variance = 0.0;
  std::size_t replications = 0;
  std::size_t excluded = 0;    // degenerate replications, left out of mean/variance
  std::size_t n = 0;
};

struct MonteCarloConfig {
  std::size_t probes = 1000;
  std::size_t replications = 100;
  std::uint64_t seed = 1;
  std::vector<Method> methods;
  std::size_t threads = 0;  // 0 = worker_count()
};

// Runs R experiments (replication r seeded with seed + r) and reports, for
// every identifiable internal node and method, the sample mean and unbiased
// sample variance of the estimates next to the variance formula at the true
// model. Results do not depend on the thread count.
std::vector<VarianceReport> monte_carlo(const Tree& tree, const LossModel& model, const MonteCarloConfig& config);

}  // namespace losstomo
