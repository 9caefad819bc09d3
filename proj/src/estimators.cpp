#include "losstomo/estimators.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "losstomo/errors.hpp"

namespace losstomo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string join(const NodeSet& set, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i != 0) out += sep;
    out += std::to_string(set[i]);
  }
  return out;
}

void require_estimable(const Tree& tree, NodeId k) {
  if (!tree.contains(k)) throw std::out_of_range("unknown node " + std::to_string(k));
  if (!tree.is_internal(k)) throw ConfigError("node " + std::to_string(k) + " is not an internal node");
  if (tree.children(k).size() < 2)
    throw ConfigError("node " + std::to_string(k) + " has a single child; its path rate is not identifiable");
}

Estimate degenerate(NodeId k, EstimatorTag tag) {
  return Estimate{k, kNaN, std::move(tag), Flags(Flags::kDegenerate)};
}

// Clamp explicit values above 1; zero or non-finite values are degenerate.
Estimate finish_explicit(NodeId k, EstimatorTag tag, double value) {
  if (!(value > 0.0) || !std::isfinite(value)) return degenerate(k, std::move(tag));
  if (value > 1.0) return Estimate{k, 1.0, std::move(tag), Flags(Flags::kClamped)};
  return Estimate{k, value, std::move(tag), Flags{}};
}

// (numerator / denominator)^(1/(degree-1)), shared by BWE and IBE so that the
// two agree bit for bit on a singleton block.
Estimate explicit_power(NodeId k, EstimatorTag tag, double numerator, double denominator, std::size_t degree) {
  if (!(denominator > 0.0)) return degenerate(k, std::move(tag));
  const double ratio = numerator / denominator;
  const double value = degree == 2 ? ratio : std::pow(ratio, 1.0 / static_cast<double>(degree - 1));
  return finish_explicit(k, std::move(tag), value);
}

// Root of h(A) = (1 - observed/A) - prod_j (1 - gamma_j/A) on
// (max(observed, gamma_j) + 1e-15, 1]. If h(1) < 0 the root lies above 1 and
// the boundary value 1 is reported as clamped.
Estimate solve_likelihood(NodeId k, EstimatorTag tag, double observed, std::span<const double> gammas) {
  if (!(observed > 0.0)) return degenerate(k, std::move(tag));
  for (double g : gammas)
    if (!(g > 0.0)) return degenerate(k, std::move(tag));

  auto h = [&](double a) {
    double prod = 1.0;
    for (double g : gammas) prod *= 1.0 - g / a;
    return (1.0 - observed / a) - prod;
  };
  const double at_one = h(1.0);
  if (at_one == 0.0) return Estimate{k, 1.0, std::move(tag), Flags{}};
  if (at_one < 0.0) return Estimate{k, 1.0, std::move(tag), Flags(Flags::kClamped)};

  double lo = std::max(observed, *std::max_element(gammas.begin(), gammas.end())) + 1e-15;
  double hi = 1.0;
  if (lo >= hi || h(lo) > 0.0) return Estimate{k, lo >= hi ? 1.0 : lo, std::move(tag), Flags(Flags::kDegenerate)};
  for (int iter = 0; iter < kMaxBisection && hi - lo > kRootTolerance; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (h(mid) > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return Estimate{k, 0.5 * (lo + hi), std::move(tag), Flags{}};
}

std::vector<double> child_gammas(const RateSource& rates, std::span<const NodeId> x) {
  std::vector<double> out;
  out.reserve(x.size());
  for (NodeId j : x) out.push_back(rates.gamma(j));
  return out;
}

Estimate binary_closed_form(NodeId k, EstimatorTag tag, double gamma_a, double gamma_b, double gamma_k) {
  if (!(gamma_a > 0.0) || !(gamma_b > 0.0)) return degenerate(k, std::move(tag));
  const double denom = gamma_a + gamma_b - gamma_k;
  if (!(denom > 0.0)) return degenerate(k, std::move(tag));
  return finish_explicit(k, std::move(tag), gamma_a * gamma_b / denom);
}

}  // namespace

std::string EstimatorTag::label() const {
  switch (kind) {
    case EstimatorKind::Source: return "source";
    case EstimatorKind::Leaf: return "leaf";
    case EstimatorKind::Mle: return "mle";
    case EstimatorKind::Rse: return "rse{" + join(subset) + "}";
    case EstimatorKind::Bwe: return "bwe(" + std::to_string(degree) + ")";
    case EstimatorKind::Ibe: return "ibe{" + join(subset) + "}";
    case EstimatorKind::Merged: return "merged{" + join(partition.first) + "|" + join(partition.second) + "}";
    case EstimatorKind::Unidentified: return "unidentified";
  }
  return "?";
}

std::vector<std::string> Flags::names() const {
  std::vector<std::string> out;
  if (clamped()) out.emplace_back("clamped");
  if (degenerate()) out.emplace_back("degenerate");
  if (merged()) out.emplace_back("merged");
  return out;
}

std::string Flags::to_string() const {
  std::string out;
  for (const auto& name : names()) {
    if (!out.empty()) out += '|';
    out += name;
  }
  return out;
}

Estimate mle_original(const RateSource& rates, NodeId k) {
  const Tree& tree = rates.tree();
  require_estimable(tree, k);
  const auto kids = tree.children(k);
  if (kids.size() == 2)
    return binary_closed_form(k, EstimatorTag{EstimatorKind::Mle}, rates.gamma(kids[0]), rates.gamma(kids[1]),
                              rates.gamma(k));
  return solve_likelihood(k, EstimatorTag{EstimatorKind::Mle}, rates.gamma(k), child_gammas(rates, kids));
}

Estimate mle_bisection(const RateSource& rates, NodeId k) {
  const Tree& tree = rates.tree();
  require_estimable(tree, k);
  return solve_likelihood(k, EstimatorTag{EstimatorKind::Mle}, rates.gamma(k),
                          child_gammas(rates, tree.children(k)));
}

Estimate rse(const RateSource& rates, NodeId k, std::span<const NodeId> x) {
  const Tree& tree = rates.tree();
  require_estimable(tree, k);
  NodeSet set = normalize_child_subset(tree, k, NodeSet(x.begin(), x.end()));
  if (set.size() < 2) throw ConfigError("RSE needs at least two subtrees");
  if (set.size() > kDefaultSubsetCap) throw CapacityError("RSE subset above the cap");
  const double observed = rates.union_rate(k, set);
  auto gammas = child_gammas(rates, set);
  EstimatorTag tag{EstimatorKind::Rse, std::move(set)};
  return solve_likelihood(k, std::move(tag), observed, gammas);
}

Estimate bwe(const RateSource& rates, NodeId k, std::size_t degree) {
  const Tree& tree = rates.tree();
  require_estimable(tree, k);
  const std::size_t d = tree.children(k).size();
  if (degree < 2 || degree > d)
    throw ConfigError("BWE degree " + std::to_string(degree) + " outside [2, " + std::to_string(d) + "]");

  EstimatorTag tag{EstimatorKind::Bwe};
  tag.degree = degree;
  double predicted = 0.0;
  double observed = 0.0;
  for (const auto& x : descendant_subsets(tree, k, degree)) {
    double prod = 1.0;
    for (NodeId j : x) prod *= rates.gamma(j);
    predicted += prod;
    observed += rates.intersection_rate(k, x);
  }
  return explicit_power(k, std::move(tag), predicted, observed, degree);
}

Estimate ibe(const RateSource& rates, NodeId k, std::span<const NodeId> x) {
  const Tree& tree = rates.tree();
  require_estimable(tree, k);
  NodeSet set = normalize_child_subset(tree, k, NodeSet(x.begin(), x.end()));
  if (set.size() < 2) throw ConfigError("IBE needs at least two subtrees");

  double predicted = 0.0;
  double prod = 1.0;
  for (NodeId j : set) prod *= rates.gamma(j);
  predicted += prod;
  double observed = 0.0;
  observed += rates.intersection_rate(k, set);
  const std::size_t degree = set.size();
  return explicit_power(k, EstimatorTag{EstimatorKind::Ibe, std::move(set)}, predicted, observed, degree);
}

Estimate merged_mle(const RateSource& rates, NodeId k, const Partition& partition) {
  const Tree& tree = rates.tree();
  require_estimable(tree, k);
  Partition p{normalize_child_subset(tree, k, partition.first), normalize_child_subset(tree, k, partition.second)};
  NodeSet all;
  std::set_union(p.first.begin(), p.first.end(), p.second.begin(), p.second.end(), std::back_inserter(all));
  const auto kids = tree.children(k);
  if (all.size() != p.first.size() + p.second.size())
    throw ConfigError("merged MLE groups of node " + std::to_string(k) + " overlap");
  if (!std::equal(all.begin(), all.end(), kids.begin(), kids.end()))
    throw ConfigError("merged MLE groups do not cover all children of node " + std::to_string(k));

  const double g1 = rates.union_rate(k, p.first);
  const double g2 = rates.union_rate(k, p.second);
  const double gk = rates.gamma(k);
  EstimatorTag tag{EstimatorKind::Merged};
  tag.partition = std::move(p);
  return binary_closed_form(k, std::move(tag), g1, g2, gk);
}

std::string Method::label() const {
  switch (kind) {
    case EstimatorKind::Mle: return "mle";
    case EstimatorKind::Merged: return "merged";
    case EstimatorKind::Rse: return "rse:" + std::to_string(size);
    case EstimatorKind::Bwe: return "bwe:" + std::to_string(size);
    case EstimatorKind::Ibe:
      if (size == 0) return "ibe";
      if (size == 2) return "ibe-pair";
      return "ibe:" + std::to_string(size);
    default: return "?";
  }
}

Method parse_method(std::string_view text) {
  auto size_after = [&](std::string_view prefix) -> std::size_t {
    const auto rest = text.substr(prefix.size());
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), v);
    if (ec != std::errc{} || ptr != rest.data() + rest.size() || v < 2)
      throw ConfigError("bad method '" + std::string(text) + "': size must be an integer >= 2");
    return v;
  };
  if (text == "mle") return {EstimatorKind::Mle, 0};
  if (text == "merged") return {EstimatorKind::Merged, 0};
  if (text == "ibe") return {EstimatorKind::Ibe, 0};
  if (text == "ibe-pair") return {EstimatorKind::Ibe, 2};
  if (text == "rse") return {EstimatorKind::Rse, 2};
  if (text == "bwe") return {EstimatorKind::Bwe, 2};
  if (text.starts_with("ibe:")) return {EstimatorKind::Ibe, size_after("ibe:")};
  if (text.starts_with("rse:")) return {EstimatorKind::Rse, size_after("rse:")};
  if (text.starts_with("bwe:")) return {EstimatorKind::Bwe, size_after("bwe:")};
  throw ConfigError("unknown method '" + std::string(text) +
                    "' (expected mle, rse[:s], bwe[:i], ibe, ibe-pair, ibe:s, merged)");
}

std::vector<Method> parse_method_list(std::string_view comma_separated) {
  std::vector<Method> out;
  while (!comma_separated.empty()) {
    const auto comma = comma_separated.find(',');
    const auto item = comma_separated.substr(0, comma);
    if (!item.empty()) out.push_back(parse_method(item));
    comma_separated = comma == std::string_view::npos ? std::string_view{} : comma_separated.substr(comma + 1);
  }
  if (out.empty()) throw ConfigError("method list is empty");
  return out;
}

Partition default_partition(const Tree& tree, NodeId k) {
  const auto kids = tree.children(k);
  if (kids.size() < 2) throw ConfigError("node " + std::to_string(k) + " cannot be partitioned");
  return Partition{NodeSet{kids.front()}, NodeSet(kids.begin() + 1, kids.end())};
}

EstimatorTag resolve_method(const Tree& tree, NodeId k, const Method& method) {
  require_estimable(tree, k);
  const auto kids = tree.children(k);
  auto leading = [&](std::size_t s) {
    const std::size_t count = (s == 0 || s > kids.size()) ? kids.size() : s;
    return NodeSet(kids.begin(), kids.begin() + static_cast<std::ptrdiff_t>(count));
  };
  EstimatorTag tag{method.kind};
  switch (method.kind) {
    case EstimatorKind::Mle: break;
    case EstimatorKind::Rse:
    case EstimatorKind::Ibe: tag.subset = leading(method.size); break;
    case EstimatorKind::Bwe: tag.degree = std::min(method.size == 0 ? 2 : method.size, kids.size()); break;
    case EstimatorKind::Merged: tag.partition = default_partition(tree, k); break;
    default: throw ConfigError("method cannot be applied to internal nodes");
  }
  return tag;
}

Estimate estimate_node(const RateSource& rates, NodeId k, const EstimatorTag& tag) {
  switch (tag.kind) {
    case EstimatorKind::Mle: return mle_original(rates, k);
    case EstimatorKind::Rse: return rse(rates, k, tag.subset);
    case EstimatorKind::Bwe: return bwe(rates, k, tag.degree);
    case EstimatorKind::Ibe: return ibe(rates, k, tag.subset);
    case EstimatorKind::Merged: return merged_mle(rates, k, tag.partition);
    default: throw ConfigError("estimator '" + tag.label() + "' cannot be applied to node " + std::to_string(k));
  }
}

EstimateSet estimate_tree(const RateSource& rates, const Method& method) {
  const Tree& tree = rates.tree();
  const std::size_t nodes = tree.node_count();
  EstimateSet out;
  out.path.resize(nodes);
  out.link.assign(nodes, kNaN);
  out.link_flags.assign(nodes, Flags{});

  out.path[0] = Estimate{0, 1.0, EstimatorTag{EstimatorKind::Source}, Flags{}};
  out.link[0] = 1.0;
  for (NodeId k = 1; k < nodes; ++k) {
    const auto kids = tree.children(k);
    if (kids.empty()) {
      const double g = rates.gamma(k);
      out.path[k] = Estimate{k, g, EstimatorTag{EstimatorKind::Leaf}, g > 0.0 ? Flags{} : Flags(Flags::kDegenerate)};
    } else if (kids.size() == 1) {
      out.path[k] = Estimate{k, kNaN, EstimatorTag{EstimatorKind::Unidentified}, Flags(Flags::kMerged)};
    } else {
      out.path[k] = estimate_node(rates, k, resolve_method(tree, k, method));
    }
  }

  for (NodeId k = 1; k < nodes; ++k) {
    if (out.path[k].estimator.kind == EstimatorKind::Unidentified) {
      out.link_flags[k] = Flags(Flags::kMerged);
      continue;
    }
    NodeId above = tree.parent(k);
    Flags flags;
    while (out.path[above].estimator.kind == EstimatorKind::Unidentified) {
      above = tree.parent(above);
      flags |= Flags(Flags::kMerged);
    }
    const double upper = out.path[above].value;
    const double lower = out.path[k].value;
    double alpha = lower / upper;
    if (out.path[k].flags.degenerate() || out.path[above].flags.degenerate() || !std::isfinite(alpha)) {
      flags |= Flags(Flags::kDegenerate);
      alpha = kNaN;
    } else if (alpha > 1.0) {
      flags |= Flags(Flags::kClamped);
      alpha = 1.0;
    }
    out.link[k] = alpha;
    out.link_flags[k] = flags;
  }
  return out;
}

LossModel model_from_estimates(const Tree& tree, const EstimateSet& estimates) {
  std::vector<double> alpha(tree.node_count(), 1.0);
  for (NodeId k = 1; k < tree.node_count(); ++k) {
    const Flags f = estimates.link_flags.at(k);
    if (estimates.path.at(k).estimator.kind == EstimatorKind::Unidentified) {
      alpha[k] = 1.0;  // the chain's rate is carried by the link below
      continue;
    }
    if (f.degenerate() || !std::isfinite(estimates.link.at(k)))
      throw ConfigError("link " + std::to_string(k) + " has no usable estimate");
    alpha[k] = estimates.link[k];
  }
  return LossModel(tree, std::move(alpha));
}

}  // namespace losstomo
