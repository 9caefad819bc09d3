// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails. Statistical criteria use fixed seeds.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "losstomo/analysis.hpp"
#include "losstomo/estimators.hpp"
#include "losstomo/probe_simulator.hpp"
#include "losstomo/statistics.hpp"
#include "oracles.hpp"

using namespace losstomo;
namespace t = losstomo::testing;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(const char* id, const char* name, const std::function<Verdict()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s criterion %s: %s (%s) [%.2fs]\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str(), secs);
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// The five estimator families at node k: mle, rse, bwe, ibe and merged, over
// every subset, degree and bipartition.
std::vector<Estimate> five_families(const RateSource& rates, NodeId k) {
  const Tree& tree = rates.tree();
  const auto kids = tree.children(k);
  std::vector<Estimate> out{mle_original(rates, k)};
  for (const auto& x : t::power_set(kids, 2)) {
    out.push_back(rse(rates, k, x));
    out.push_back(ibe(rates, k, x));
  }
  for (std::size_t i = 2; i <= kids.size(); ++i) out.push_back(bwe(rates, k, i));
  for (const auto& p : all_bipartitions(tree, k)) out.push_back(merged_mle(rates, k, p));
  return out;
}

Verdict example_variances() {
  const double a = 0.99;
  const Tree tree = t::star_tree(3);
  const TrueRates rates(tree, LossModel::uniform(tree, a));
  const double got[4] = {crb_from_delta(rates.path_rate(1), 1.0),
                         crb_variance(rates, 1, EstimatorTag(EstimatorKind::Mle)),
                         crb_variance(rates, 1, EstimatorTag(EstimatorKind::Ibe, {2, 3})),
                         crb_variance(rates, 1, EstimatorTag(EstimatorKind::Ibe, {2, 3, 4}))};
  const double want[4] = {a - a * a, 1 / (3 * (1 - a) + a * a) - a * a, 1 / a - a * a, 1 / (a * a) - a * a};
  double worst = 0;
  for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  return {worst <= 1e-12, fmt("%.4f %.4f %.4f %.4f, max error %.1e", got[0], got[1], got[2], got[3], worst)};
}

Verdict fisher_consistency() {
  std::mt19937_64 rng(2024);
  const Tree tree = t::binary_tree();
  double worst = 0;
  std::size_t checks = 0;
  for (int m = 0; m < 12; ++m) {
    const LossModel model = t::random_model(tree, rng, 0.7, 1.0);
    const TrueRates truth(tree, model);
    const ModelRateSource recursion(truth);
    const t::EnumeratedRates brute(tree, model);
    for (NodeId k = 1; k < tree.node_count(); ++k) {
      if (!tree.is_internal(k)) continue;
      for (const RateSource* src : {static_cast<const RateSource*>(&recursion), static_cast<const RateSource*>(&brute)})
        for (const auto& e : five_families(*src, k)) {
          worst = std::max(worst, std::abs(e.value - truth.path_rate(k)));
          ++checks;
        }
    }
  }
  return {worst <= 1e-10, fmt("12 models, %zu estimates, max |A_hat - A| = %.1e", checks, worst)};
}

Verdict brute_force_oracle() {
  std::mt19937_64 rng(77);
  std::vector<Tree> trees{t::binary_tree(), t::star_tree(5)};
  for (int i = 0; i < 3; ++i) trees.push_back(t::random_tree(rng, 18, 4, true));
  trees.push_back(t::random_tree(rng, 24, 5));
  double worst = 0;
  std::size_t max_links = 0;
  for (const Tree& tree : trees) {
    max_links = std::max(max_links, tree.link_count());
    const LossModel model = t::random_model(tree, rng, 0.5, 1.0);
    const TrueRates truth(tree, model);
    const t::EnumeratedRates brute(tree, model);
    for (NodeId k = 1; k < tree.node_count(); ++k) {
      worst = std::max(worst, std::abs(brute.gamma(k) - truth.gamma(k)));
      if (tree.is_leaf(k)) continue;
      for (const auto& x : t::power_set(tree.children(k)))
        worst = std::max(worst,
                         std::abs(brute.intersection_rate(k, x) - truth.path_rate(k) * truth.all_observe(k, x)));
    }
  }
  return {worst <= 1e-12, fmt("%zu trees up to %zu links, max error %.1e", trees.size(), max_links, worst)};
}

Verdict inclusion_exclusion() {
  std::mt19937_64 rng(99);
  std::size_t nodes = 0, bad = 0;
  for (int d = 0; d < 100; ++d) {
    const Tree tree = t::random_tree(rng, 10 + d % 20, 2 + d % 5, d % 3 == 0);
    const LossModel model = t::random_model(tree, rng, 0.3, 1.0);
    const SubtreeStatistics stats(tree, simulate(tree, model, 200 + 37 * d, rng()).observations);
    for (NodeId k = 1; k < tree.node_count(); ++k) {
      if (!tree.is_internal(k)) continue;
      ++nodes;
      if (!inclusion_exclusion_check(stats, k)) ++bad;
    }
  }
  return {bad == 0, fmt("100 datasets, %zu internal nodes, %zu mismatches", nodes, bad)};
}

// Shared Monte-Carlo run for criteria 5 and 6a.
std::vector<VarianceReport> binary_run() {
  const Tree tree = t::binary_tree();
  MonteCarloConfig cfg{1000, 2000, 20240501, parse_method_list("ibe-pair,ibe,bwe:2,merged,mle"), 0};
  return monte_carlo(tree, LossModel::uniform(tree, 0.95), cfg);
}

const VarianceReport& find(const std::vector<VarianceReport>& reps, NodeId k, const std::string& label) {
  for (const auto& r : reps)
    if (r.node == k && r.estimator == label) return r;
  throw std::runtime_error("no report for " + label);
}

Verdict unbiasedness(const std::vector<VarianceReport>& reps) {
  const double a1 = 0.95;
  bool ok = true;
  std::string detail;
  for (const char* label : {"ibe-pair", "ibe", "bwe:2", "merged"}) {
    const auto& r = find(reps, 1, label);
    const double used = static_cast<double>(r.replications - r.excluded);
    const double band = 4 * std::sqrt(r.mc_variance / used);
    const double bias = std::abs(r.mc_mean - a1);
    ok = ok && bias <= band;
    detail += fmt("%s |bias| %.1e <= %.1e; ", label, bias, band);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Verdict crb_attainment(const std::vector<VarianceReport>& reps) {
  const auto& r = find(reps, 1, "mle");
  const double ratio = static_cast<double>(r.n) * r.mc_variance / r.crb_single_obs;
  return {std::abs(ratio - 1.0) <= 0.2,
          fmt("n*var %.5f vs bound %.5f, ratio %.3f", r.n * r.mc_variance, r.crb_single_obs, ratio)};
}

Verdict ibe_to_mle_ratio() {
  const Tree tree = t::star_tree(3);
  MonteCarloConfig cfg{10000, 2000, 4242, parse_method_list("mle,ibe"), 0};
  const auto reps = monte_carlo(tree, LossModel::uniform(tree, 0.99), cfg);
  const auto& mle = find(reps, 1, "mle");
  const auto& ibe_all = find(reps, 1, "ibe");
  const double ratio = ibe_all.mc_variance / mle.mc_variance;
  return {ratio >= 3.0 && ratio <= 5.0,
          fmt("var(ibe)/var(mle) = %.3f, n*var mle %.5f ibe %.5f; formula ratio %.3f", ratio, 1e4 * mle.mc_variance,
              1e4 * ibe_all.mc_variance, ibe_all.crb_single_obs / mle.crb_single_obs)};
}

Verdict structural_equalities() {
  std::mt19937_64 rng(555);
  std::size_t bwe_ibe = 0, rse_mle = 0, closed = 0, merged = 0;
  double worst_rse = 0, worst_closed = 0, worst_merged = 0;
  bool bitwise = true;
  for (int d = 0; d < 60; ++d) {
    const Tree tree = t::star_tree(2 + d % 5);
    const LossModel model = t::random_model(tree, rng, 0.5, 1.0);
    const SubtreeStatistics s(tree, simulate(tree, model, 2000, rng()).observations);
    const auto kids = tree.children(1);
    const Estimate b = bwe(s, 1, kids.size());
    const Estimate i = ibe(s, 1, kids);
    bitwise = bitwise && (b.value == i.value || (std::isnan(b.value) && std::isnan(i.value))) && b.flags == i.flags;
    ++bwe_ibe;
    worst_rse = std::max(worst_rse, std::abs(rse(s, 1, kids).value - mle_original(s, 1).value));
    ++rse_mle;
    if (kids.size() == 2) {
      worst_closed = std::max(worst_closed, std::abs(mle_original(s, 1).value - mle_bisection(s, 1).value));
      ++closed;
    }
    const TrueRates truth(tree, model);
    const double reference = merged_mle_variance(truth, 1, default_partition(tree, 1));
    for (const auto& p : all_bipartitions(tree, 1)) {
      worst_merged = std::max(worst_merged, std::abs(merged_mle_variance(truth, 1, p) - reference));
      ++merged;
    }
  }
  const bool ok = bitwise && worst_rse <= 1e-9 && worst_closed <= 1e-9 && worst_merged <= 1e-12;
  return {ok, fmt("bwe==ibe bitwise %s (%zu); rse-mle %.1e (%zu); closed-bisection %.1e (%zu); merged var %.1e (%zu)",
                  bitwise ? "yes" : "no", bwe_ibe, worst_rse, rse_mle, worst_closed, closed, worst_merged, merged)};
}

Verdict efficiency_order() {
  const Tree tree = t::star_tree(4);
  const TrueRates rates(tree, LossModel::uniform(tree, 0.9));
  const auto sets = t::power_set(tree.children(1), 2);
  std::size_t chains = 0;
  bool strict = true;
  double best = 0, worst = INFINITY;
  std::size_t best_size = 0, worst_size = 0;
  for (const auto& x : sets) {
    const double fx = fisher_ibe(rates, 1, x);
    if (fx > best) best = fx, best_size = x.size();
    if (fx < worst) worst = fx, worst_size = x.size();
    for (const auto& y : sets)
      if (t::strict_subset(x, y)) {
        ++chains;
        strict = strict && fisher_ibe(rates, 1, y) < fx;
      }
  }
  const bool ok = strict && best_size == 2 && worst_size == 4;
  return {ok, fmt("%zu pairs x<y strictly decreasing: %s; max at |x|=%zu, min at |x|=%zu", chains,
                  strict ? "yes" : "no", best_size, worst_size)};
}

}  // namespace

int main() {
  criterion("1", "closed-form variances of the three-receiver example", example_variances);
  criterion("2", "Fisher consistency of mle/rse/bwe/ibe/merged on the depth-4 binary tree", fisher_consistency);
  criterion("3", "exhaustive outcome enumeration matches A_k psi_k(x) and gamma_k", brute_force_oracle);
  criterion("4", "inclusion-exclusion identity on simulated datasets", inclusion_exclusion);

  // criteria 5 and 6a share one run, made on first use
  std::vector<VarianceReport> reps;
  auto needs_run = [&](auto fn) {
    return [&, fn]() -> Verdict {
      if (reps.empty()) reps = binary_run();
      return fn(reps);
    };
  };
  criterion("5", "unbiasedness at node 1 (n=1000, R=2000)", needs_run(unbiasedness));
  criterion("6a", "MLE variance within 20% of its bound at node 1", needs_run(crb_attainment));
  criterion("6b", "IBE(d_k)/MLE variance ratio in [3, 5] (alpha=0.99, n=1e4, R=2000)", ibe_to_mle_ratio);
  criterion("7", "structural equalities", structural_equalities);
  criterion("8", "efficiency partial order of IBE on a 4-child node", efficiency_order);

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
