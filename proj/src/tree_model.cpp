#include "losstomo/tree_model.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "losstomo/errors.hpp"

namespace losstomo {

Tree Tree::from_parents(std::vector<NodeId> parents) {
  if (parents.size() < 2) throw ConfigError("tree needs at least one link");
  const std::size_t count = parents.size();

  Tree tree;
  tree.parent_ = std::move(parents);
  tree.parent_[0] = 0;
  tree.children_.assign(count, {});
  for (NodeId k = 1; k < count; ++k) {
    const NodeId p = tree.parent_[k];
    if (p >= count)
      throw ConfigError("node " + std::to_string(k) + " has unknown parent " + std::to_string(p));
    if (p == k) throw ConfigError("node " + std::to_string(k) + " is its own parent");
    tree.children_[p].push_back(k);
  }
  if (tree.children_[0].size() != 1)
    throw ConfigError("node 0 must have exactly one child, found " +
                      std::to_string(tree.children_[0].size()));

  // Reachability from 0 rules out cycles: a node on a cycle never gets visited.
  std::vector<NodeId> stack{0};
  while (!stack.empty()) {
    const NodeId k = stack.back();
    stack.pop_back();
    tree.preorder_.push_back(k);
    const auto& kids = tree.children_[k];
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
  }
  if (tree.preorder_.size() != count) {
    std::vector<bool> seen(count, false);
    for (NodeId k : tree.preorder_) seen[k] = true;
    const auto bad = static_cast<NodeId>(std::find(seen.begin(), seen.end(), false) - seen.begin());
    throw ConfigError("node " + std::to_string(bad) + " is not reachable from node 0 (cycle)");
  }

  tree.receiver_column_.assign(count, static_cast<std::size_t>(-1));
  for (NodeId k = 1; k < count; ++k) {
    if (tree.children_[k].empty()) {
      tree.receiver_column_[k] = tree.receivers_.size();
      tree.receivers_.push_back(k);
    }
  }
  return tree;
}

NodeId Tree::parent(NodeId k) const {
  if (k == 0 || !contains(k)) throw std::out_of_range("no parent for node " + std::to_string(k));
  return parent_[k];
}

std::span<const NodeId> Tree::children(NodeId k) const {
  if (!contains(k)) throw std::out_of_range("unknown node " + std::to_string(k));
  return children_[k];
}

std::size_t Tree::depth(NodeId k) const {
  if (!contains(k)) throw std::out_of_range("unknown node " + std::to_string(k));
  std::size_t d = 0;
  for (; k != 0; k = parent_[k]) ++d;
  return d;
}

std::size_t Tree::receiver_column(NodeId leaf) const {
  if (!contains(leaf) || receiver_column_[leaf] == static_cast<std::size_t>(-1))
    throw std::out_of_range("node " + std::to_string(leaf) + " is not a receiver");
  return receiver_column_[leaf];
}

std::vector<NodeId> Tree::receivers_below(NodeId k) const {
  if (!contains(k)) throw std::out_of_range("unknown node " + std::to_string(k));
  std::vector<NodeId> out;
  std::vector<NodeId> stack{k};
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    if (v != 0 && children_[v].empty()) out.push_back(v);
    for (NodeId c : children_[v]) stack.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<NodeId> Tree::single_child_nodes() const {
  std::vector<NodeId> out;
  for (NodeId k = 1; k < node_count(); ++k)
    if (children_[k].size() == 1) out.push_back(k);
  return out;
}

LossModel::LossModel(const Tree& tree, std::vector<double> pass_rates)
    : pass_rate_(std::move(pass_rates)) {
  if (pass_rate_.size() != tree.node_count())
    throw ConfigError("loss model has " + std::to_string(pass_rate_.size()) +
                      " entries, tree has " + std::to_string(tree.node_count()) + " nodes");
  pass_rate_[0] = 1.0;
  for (std::size_t k = 1; k < pass_rate_.size(); ++k) {
    const double a = pass_rate_[k];
    if (!(a >= 0.0 && a <= 1.0))
      throw ConfigError("pass rate of link " + std::to_string(k) + " outside [0, 1]");
  }
}

LossModel LossModel::uniform(const Tree& tree, double alpha) {
  return LossModel(tree, std::vector<double>(tree.node_count(), alpha));
}

TrueRates::TrueRates(const Tree& tree, const LossModel& model)
    : tree_(tree),
      alpha_(model.pass_rates()),
      path_(tree.node_count(), 1.0),
      beta_(tree.node_count(), 1.0),
      gamma_(tree.node_count(), 1.0) {
  if (model.link_count() != tree.link_count())
    throw ConfigError("loss model does not cover the tree");
  const auto& order = tree.preorder();
  for (NodeId k : order)
    if (k != 0) path_[k] = path_[tree.parent(k)] * alpha_[k];
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId k = *it;
    const auto kids = tree.children(k);
    if (kids.empty()) {
      beta_[k] = 1.0;
    } else {
      double miss = 1.0;
      for (NodeId j : kids) miss *= 1.0 - alpha_[j] * beta_[j];
      beta_[k] = 1.0 - miss;
    }
    gamma_[k] = path_[k] * beta_[k];
  }
}

double TrueRates::all_observe(NodeId /*k*/, std::span<const NodeId> x) const {
  double psi = 1.0;
  for (NodeId j : x) psi *= alpha_.at(j) * beta_.at(j);
  return psi;
}

double TrueRates::any_observe(NodeId /*k*/, std::span<const NodeId> x) const {
  double miss = 1.0;
  for (NodeId j : x) miss *= 1.0 - alpha_.at(j) * beta_.at(j);
  return 1.0 - miss;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

TreeSpec parse_tree_spec(std::string_view text) {
  struct Record {
    NodeId parent;
    double rate;
    std::size_t line;
  };
  std::map<NodeId, Record> records;

  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    std::vector<std::string_view> tokens;
    while (!line.empty()) {
      const auto sep = line.find_first_of(" \t");
      tokens.push_back(line.substr(0, sep));
      line = sep == std::string_view::npos ? std::string_view{} : trim(line.substr(sep));
    }
    if (tokens.size() != 3)
      throw ParseError(line_no, "expected '<node-id> <parent-id> <pass-rate>'");

    NodeId id = 0;
    NodeId parent = 0;
    double rate = 0.0;
    if (!parse_number(tokens[0], id)) throw ParseError(line_no, "bad node id '" + std::string(tokens[0]) + "'");
    if (!parse_number(tokens[1], parent))
      throw ParseError(line_no, "bad parent id '" + std::string(tokens[1]) + "'");
    if (!parse_number(tokens[2], rate) || !(rate >= 0.0 && rate <= 1.0))
      throw ParseError(line_no, "bad pass rate '" + std::string(tokens[2]) + "'");
    if (id == 0) throw ParseError(line_no, "node 0 is the root and cannot have a parent");
    if (id == parent) throw ParseError(line_no, "node " + std::to_string(id) + " is its own parent (cycle)");
    if (!records.emplace(id, Record{parent, rate, line_no}).second)
      throw ParseError(line_no, "duplicate node id " + std::to_string(id));
  }
  if (records.empty()) throw ParseError(0, "empty tree spec");

  const std::size_t count = records.size() + 1;
  if (records.rbegin()->first != records.size()) {
    NodeId expected = 1;
    for (const auto& [id, rec] : records) {
      if (id != expected)
        throw ParseError(rec.line, "node ids must be dense 0.." + std::to_string(count - 1) +
                                       "; node " + std::to_string(expected) + " is missing");
      ++expected;
    }
  }

  std::vector<NodeId> parents(count, 0);
  std::vector<double> rates(count, 1.0);
  std::size_t root_children = 0;
  for (const auto& [id, rec] : records) {
    if (rec.parent >= count)
      throw ParseError(rec.line, "orphan node " + std::to_string(id) + ": parent " +
                                     std::to_string(rec.parent) + " does not exist");
    if (rec.parent == 0) ++root_children;
    parents[id] = rec.parent;
    rates[id] = rec.rate;
  }
  if (root_children != 1)
    throw ParseError(0, "node 0 must have exactly one child, found " + std::to_string(root_children));

  try {
    Tree tree = Tree::from_parents(std::move(parents));
    LossModel model(tree, std::move(rates));
    return TreeSpec{std::move(tree), std::move(model)};
  } catch (const ParseError&) {
    throw;
  } catch (const ConfigError& e) {
    throw ParseError(0, e.what());
  }
}

Tree parse_tree(std::string_view text) { return parse_tree_spec(text).tree; }

TreeSpec load_tree_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open tree spec '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_tree_spec(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + e.what());
  }
}

std::string dump_tree_spec(const Tree& tree, const LossModel& model) {
  std::string out = "# node parent pass-rate\n";
  char buf[64];
  for (NodeId k = 1; k < tree.node_count(); ++k) {
    std::snprintf(buf, sizeof buf, "%u %u %.17g\n", k, tree.parent(k), model.pass_rate(k));
    out += buf;
  }
  return out;
}

std::vector<NodeSet> descendant_subsets(const Tree& tree, NodeId k, std::size_t degree, std::size_t cap) {
  const auto kids = tree.children(k);
  if (kids.empty()) throw ConfigError("node " + std::to_string(k) + " has no descendants");
  if (kids.size() > cap)
    throw CapacityError("node " + std::to_string(k) + " has " + std::to_string(kids.size()) +
                        " descendants, above the subset cap of " + std::to_string(cap));
  if (degree < 1 || degree > kids.size())
    throw ConfigError("subset degree " + std::to_string(degree) + " outside [1, " +
                      std::to_string(kids.size()) + "]");

  std::vector<NodeSet> out;
  std::vector<std::size_t> idx(degree);
  for (std::size_t i = 0; i < degree; ++i) idx[i] = i;
  const std::size_t d = kids.size();
  while (true) {
    NodeSet x;
    x.reserve(degree);
    for (std::size_t i : idx) x.push_back(kids[i]);
    out.push_back(std::move(x));
    // advance to the next combination in lexicographic order
    std::size_t pos = degree;
    while (pos > 0 && idx[pos - 1] == d - degree + pos - 1) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t i = pos; i < degree; ++i) idx[i] = idx[i - 1] + 1;
  }
  return out;
}

NodeSet normalize_child_subset(const Tree& tree, NodeId k, NodeSet x) {
  if (x.empty()) throw ConfigError("empty subset of d_" + std::to_string(k));
  std::sort(x.begin(), x.end());
  if (std::adjacent_find(x.begin(), x.end()) != x.end())
    throw ConfigError("subset of d_" + std::to_string(k) + " has repeated members");
  const auto kids = tree.children(k);
  for (NodeId j : x)
    if (std::find(kids.begin(), kids.end(), j) == kids.end())
      throw ConfigError("node " + std::to_string(j) + " is not a child of node " + std::to_string(k));
  return x;
}

}  // namespace losstomo
