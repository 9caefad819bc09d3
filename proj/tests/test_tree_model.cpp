#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "losstomo/errors.hpp"
#include "losstomo/tree_model.hpp"
#include "oracles.hpp"

using namespace losstomo;
using losstomo::testing::binary_tree;
using losstomo::testing::random_model;
using losstomo::testing::random_tree;
using losstomo::testing::star_tree;

TEST(TreeParse, SingleLink) {
  const TreeSpec spec = parse_tree_spec("1 0 0.9\n");
  EXPECT_EQ(spec.tree.node_count(), 2U);
  EXPECT_EQ(spec.tree.receivers(), std::vector<NodeId>{1});
  EXPECT_DOUBLE_EQ(spec.model.pass_rate(1), 0.9);
  const TrueRates rates(spec.tree, spec.model);
  EXPECT_DOUBLE_EQ(rates.path_rate(1), 0.9);
  EXPECT_DOUBLE_EQ(rates.gamma(1), 0.9);
}

TEST(TreeParse, BinaryTreeReceiversAreEightToFifteen) {
  std::string text = "# depth-4 binary tree\n\n1 0 0.95\n";
  for (int k = 2; k < 16; ++k) text += std::to_string(k) + " " + std::to_string(k / 2) + " 0.95  # link\n";
  const Tree tree = parse_tree(text);
  std::vector<NodeId> expect;
  for (NodeId k = 8; k < 16; ++k) expect.push_back(k);
  EXPECT_EQ(tree.receivers(), expect);
  EXPECT_EQ(tree, binary_tree());
  EXPECT_EQ(tree.depth(8), 4U);
}

TEST(TreeParse, DataFilesLoad) {
  const TreeSpec bin = load_tree_spec(LOSSTOMO_DATA_DIR "/binary_depth4.tree");
  EXPECT_EQ(bin.tree, binary_tree());
  const TreeSpec three = load_tree_spec(LOSSTOMO_DATA_DIR "/three_receivers.tree");
  EXPECT_EQ(three.tree, star_tree(3));
}

TEST(TreeParse, RecordOrderDoesNotMatter) {
  EXPECT_EQ(parse_tree("3 1 1\n1 0 1\n2 1 1\n"), star_tree(2));
}

TEST(TreeParse, RootWithTwoChildrenRejected) {
  EXPECT_THROW(parse_tree("1 0 1\n2 0 1\n"), ParseError);
}

TEST(TreeParse, DuplicateIdRejected) {
  EXPECT_THROW(parse_tree("1 0 1\n2 1 1\n2 1 1\n3 1 1\n"), ParseError);
}

TEST(TreeParse, CycleRejected) {
  EXPECT_THROW(parse_tree("1 0 1\n2 3 1\n3 2 1\n"), ParseError);
  EXPECT_THROW(parse_tree("1 0 1\n2 2 1\n"), ParseError);
}

TEST(TreeParse, OrphanAndGapsRejected) {
  EXPECT_THROW(parse_tree("1 0 1\n2 9 1\n"), ParseError);
  EXPECT_THROW(parse_tree("1 0 1\n3 1 1\n"), ParseError);
  EXPECT_THROW(parse_tree("0 0 1\n1 0 1\n"), ParseError);
  EXPECT_THROW(parse_tree("# nothing\n"), ParseError);
}

TEST(TreeParse, MalformedLineNamesLine) {
  try {
    parse_tree("1 0 1\n2 1 one\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2U);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_tree("1 0\n"), ParseError);
  EXPECT_THROW(parse_tree("1 0 1 7\n"), ParseError);
  EXPECT_THROW(parse_tree("1 0 1.5\n"), ParseError);
  EXPECT_THROW(parse_tree("1 0 -0.1\n"), ParseError);
  EXPECT_THROW(parse_tree("x 0 1\n"), ParseError);
}

TEST(TreeParse, DumpIsCanonicalAndRoundTrips) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const Tree tree = random_tree(rng, 12, 4, true);
    const LossModel model = random_model(tree, rng, 0.5, 1.0);
    const std::string text = dump_tree_spec(tree, model);
    const TreeSpec back = parse_tree_spec(text);
    EXPECT_EQ(back.tree, tree);
    EXPECT_EQ(back.model.pass_rates(), model.pass_rates());
    EXPECT_EQ(dump_tree_spec(back.tree, back.model), text);
  }
}

TEST(Tree, FromParentsValidates) {
  EXPECT_THROW(Tree::from_parents({0}), ConfigError);
  EXPECT_THROW(Tree::from_parents({0, 0, 0}), ConfigError);
  EXPECT_THROW(Tree::from_parents({0, 0, 5}), ConfigError);
  EXPECT_NO_THROW(Tree::from_parents({0, 0, 1, 1}));
}

TEST(Tree, Accessors) {
  const Tree tree = binary_tree();
  EXPECT_EQ(tree.parent(9), 4U);
  EXPECT_THROW(static_cast<void>(tree.parent(0)), std::out_of_range);
  EXPECT_TRUE(tree.is_internal(1));
  EXPECT_FALSE(tree.is_internal(0));
  EXPECT_TRUE(tree.is_leaf(15));
  EXPECT_EQ(tree.receivers_below(2), (std::vector<NodeId>{8, 9, 10, 11}));
  EXPECT_EQ(tree.receivers_below(12), (std::vector<NodeId>{12}));
  EXPECT_EQ(tree.preorder().front(), 0U);
  EXPECT_EQ(tree.preorder().size(), 16U);
  EXPECT_TRUE(tree.single_child_nodes().empty());
  EXPECT_EQ(Tree::from_parents({0, 0, 1, 2, 2}).single_child_nodes(), std::vector<NodeId>{1});
}

TEST(LossModel, Validates) {
  const Tree tree = star_tree(2);
  EXPECT_THROW(LossModel(tree, {1, 0.5}), ConfigError);
  EXPECT_THROW(LossModel(tree, {1, 0.5, 1.2, 0.5}), ConfigError);
  EXPECT_DOUBLE_EQ(LossModel(tree, {0.2, 0.5, 0.5, 0.5}).pass_rate(0), 1.0);
}

// Hand recursion on the depth-4 binary tree: leaves beta = 1, level-3 nodes see two leaf links,
// and so on up to node 1.
TEST(TrueRates, BinaryTreeHandRecursion) {
  const double a = 0.99;
  const Tree tree = binary_tree();
  const TrueRates rates(tree, LossModel::uniform(tree, a));
  const double b3 = 1 - (1 - a) * (1 - a);
  const double b2 = 1 - (1 - a * b3) * (1 - a * b3);
  const double b1 = 1 - (1 - a * b2) * (1 - a * b2);
  EXPECT_NEAR(rates.subtree_rate(12), 1.0, 1e-15);
  EXPECT_NEAR(rates.subtree_rate(5), b3, 1e-14);
  EXPECT_NEAR(rates.subtree_rate(3), b2, 1e-14);
  EXPECT_NEAR(rates.subtree_rate(1), b1, 1e-14);
  EXPECT_NEAR(rates.path_rate(9), a * a * a * a, 1e-15);
  EXPECT_NEAR(rates.gamma(2), a * a * b2, 1e-14);
  EXPECT_NEAR(rates.all_observe(1, NodeSet{2, 3}), a * b2 * a * b2, 1e-14);
  EXPECT_NEAR(rates.any_observe(1, NodeSet{2, 3}), b1, 1e-14);
}

TEST(TrueRates, LosslessTreeIsAllOnes) {
  const Tree tree = binary_tree();
  const TrueRates rates(tree, LossModel::uniform(tree, 1.0));
  for (NodeId k = 0; k < tree.node_count(); ++k) {
    EXPECT_EQ(rates.path_rate(k), 1.0);
    EXPECT_EQ(rates.subtree_rate(k), 1.0);
    EXPECT_EQ(rates.gamma(k), 1.0);
  }
}

TEST(TrueRates, RecursionIdentitiesOnRandomModels) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    const Tree tree = random_tree(rng, 20, 4, true);
    const TrueRates rates(tree, random_model(tree, rng, 0.3, 1.0));
    for (NodeId k = 1; k < tree.node_count(); ++k) {
      EXPECT_NEAR(rates.path_rate(k), rates.path_rate(tree.parent(k)) * rates.pass_rate(k), 1e-15);
      EXPECT_NEAR(rates.gamma(k), rates.path_rate(k) * rates.subtree_rate(k), 1e-15);
      if (tree.is_leaf(k)) continue;
      double miss = 1.0;
      for (NodeId j : tree.children(k)) miss *= 1.0 - rates.pass_rate(j) * rates.subtree_rate(j);
      EXPECT_NEAR(rates.subtree_rate(k), 1.0 - miss, 1e-14);
      const auto kids = tree.children(k);
      // psi over all children is the smallest over every subset
      const double psi_all = rates.all_observe(k, kids);
      for (const auto& x : losstomo::testing::power_set(kids))
        EXPECT_LE(psi_all, rates.all_observe(k, x) + 1e-15);
    }
  }
}

// Replacing a leaf link by a two-link chain with a lossy extra link lowers
// beta at every ancestor of that leaf.
TEST(TrueRates, DeeperSubtreeLowersBeta) {
  const Tree shallow = Tree::from_parents({0, 0, 1, 1, 2, 2});
  const Tree deep = Tree::from_parents({0, 0, 1, 1, 2, 2, 3});
  const TrueRates a(shallow, LossModel(shallow, {1, 0.9, 0.9, 0.9, 0.9, 0.9}));
  const TrueRates b(deep, LossModel(deep, {1, 0.9, 0.9, 0.9, 0.9, 0.9, 0.8}));
  EXPECT_LT(b.subtree_rate(3), a.subtree_rate(3));
  EXPECT_LT(b.subtree_rate(1), a.subtree_rate(1));
  EXPECT_EQ(b.subtree_rate(2), a.subtree_rate(2));
}

TEST(Subsets, PairsAndTriplesInLexicographicOrder) {
  const Tree tree = star_tree(4);  // children 2..5
  const auto pairs = descendant_subsets(tree, 1, 2);
  const std::vector<NodeSet> expect{{2, 3}, {2, 4}, {2, 5}, {3, 4}, {3, 5}, {4, 5}};
  EXPECT_EQ(pairs, expect);
  EXPECT_EQ(descendant_subsets(tree, 1, 3).size(), 4U);
  EXPECT_EQ(descendant_subsets(tree, 1, 4), (std::vector<NodeSet>{{2, 3, 4, 5}}));
  EXPECT_EQ(descendant_subsets(Tree::from_parents({0, 0, 1, 1}), 1, 2), (std::vector<NodeSet>{{2, 3}}));
}

TEST(Subsets, Errors) {
  const Tree tree = star_tree(4);
  EXPECT_THROW(descendant_subsets(tree, 1, 0), ConfigError);
  EXPECT_THROW(descendant_subsets(tree, 1, 5), ConfigError);
  EXPECT_THROW(descendant_subsets(tree, 3, 1), ConfigError);
  EXPECT_THROW(descendant_subsets(star_tree(21), 1, 2), CapacityError);
  EXPECT_NO_THROW(descendant_subsets(star_tree(21), 1, 2, 21));
  EXPECT_THROW(normalize_child_subset(tree, 1, {2, 2}), ConfigError);
  EXPECT_THROW(normalize_child_subset(tree, 1, {}), ConfigError);
  EXPECT_THROW(normalize_child_subset(tree, 1, {2, 0}), ConfigError);
  EXPECT_EQ(normalize_child_subset(tree, 1, {5, 2}), (NodeSet{2, 5}));
}
