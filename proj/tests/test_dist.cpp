#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace singleworld;
using swtest::r;

TEST(Rational, ParsesFractionsIntegersAndDecimalsExactly) {
  EXPECT_EQ(parse_rational("3/12"), Rational(1, 4));
  EXPECT_EQ(parse_rational("0.125"), Rational(1, 8));
  EXPECT_EQ(parse_rational("-2"), Rational(-2));
  EXPECT_EQ(parse_rational(".5"), Rational(1, 2));
  EXPECT_EQ(parse_rational("0.1") * 10, Rational(1));
  EXPECT_THROW(parse_rational("1/0"), ParseError);
  EXPECT_THROW(parse_rational("abc"), ParseError);
  EXPECT_THROW(parse_rational("1/"), ParseError);
  EXPECT_EQ(to_string(Rational(6, 8)), "3/4");
  EXPECT_EQ(to_string(Rational(4, 2)), "2");
}

TEST(Dist, RejectsBadTables) {
  EXPECT_THROW(FiniteDistribution({{"A", 2}}, {r("1/2"), r("1/4")}), InvalidDistribution);
  EXPECT_THROW(FiniteDistribution({{"A", 2}}, {r("3/2"), r("-1/2")}), InvalidDistribution);
  EXPECT_THROW(FiniteDistribution({{"A", 2}, {"A", 2}}, std::vector<Rational>(4, r("1/4"))), InvalidDistribution);
}

TEST(Dist, CellBoundIsEnforced) {
  std::size_t saved = max_cells();
  set_max_cells(8);
  EXPECT_THROW(CellSpace({{"A", 2}, {"B", 2}, {"C", 2}, {"D", 2}}), CellBoundExceeded);
  EXPECT_NO_THROW(CellSpace({{"A", 2}, {"B", 2}, {"C", 2}}));
  set_max_cells(saved);
}

TEST(Dist, MarginalOfUniformIsUniform) {
  auto d = FiniteDistribution::product({{"A", 2}, {"B", 2}}, {{r("1/2"), r("1/2")}, {r("1/2"), r("1/2")}});
  auto m = marginal(d, {"A"});
  EXPECT_EQ(m.masses(), (std::vector<Rational>{r("1/2"), r("1/2")}));
  EXPECT_EQ(marginal(d, {"A", "B"}), d);
  EXPECT_THROW(marginal(d, {"Q"}), UnknownVariable);
}

TEST(Dist, ChainMarginalOfCIsOneHalf) {
  auto m = marginal(swtest::chain_joint(), {"C"});
  // Oracle: direct sum over the eight cells.
  Rational oracle = 0;
  auto joint = swtest::chain_joint();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) oracle += joint.at(std::vector<int>{a, b, 1});
  EXPECT_EQ(oracle, r("1/2"));
  EXPECT_EQ(m.at(std::vector<int>{1}), oracle);
}

TEST(Dist, ConditionalMarksZeroRowsUndefined) {
  auto d = FiniteDistribution::from_entries({{"A", 2}, {"B", 2}}, {{{0, 0}, r("1")}});
  auto t = conditional(d, {"B"}, {"A"});
  ASSERT_TRUE(t.rows[0].has_value());
  EXPECT_EQ(*t.rows[0], (std::vector<Rational>{r("1"), r("0")}));
  EXPECT_FALSE(t.rows[1].has_value());
  EXPECT_EQ(t.undefined_count(), 1u);
  EXPECT_THROW(conditional(d, {"A"}, {"A"}), InvalidQuery);
}

TEST(Dist, ConditionalOfIndependentsIsMarginal) {
  auto d = FiniteDistribution::product({{"X", 3}, {"Y", 2}},
                                       {{r("1/6"), r("1/3"), r("1/2")}, {r("1/5"), r("4/5")}});
  auto t = conditional(d, {"Y"}, {"X"});
  for (const auto& row : t.rows) EXPECT_EQ(*row, (std::vector<Rational>{r("1/5"), r("4/5")}));
}

TEST(Dist, DependsOnlyOn) {
  std::vector<ContextRow> constant{{{0}, std::vector<Rational>{r("1/2"), r("1/2")}},
                                   {{1}, std::vector<Rational>{r("1/2"), r("1/2")}}};
  EXPECT_TRUE(depends_only_on(constant, std::vector<int>{}).holds);

  std::vector<ContextRow> varying{{{0}, std::vector<Rational>{r("3/4"), r("1/4")}},
                                  {{1}, std::vector<Rational>{r("1/4"), r("3/4")}},
                                  {{2}, std::nullopt}};
  auto with_a = depends_only_on(varying, std::vector<int>{0});
  EXPECT_TRUE(with_a.holds);
  EXPECT_EQ(with_a.skipped, 1u);
  auto without = depends_only_on(varying, std::vector<int>{});
  EXPECT_FALSE(without.holds);
  ASSERT_TRUE(without.witness.has_value());
  EXPECT_EQ(*without.witness, std::make_pair(std::size_t{0}, std::size_t{1}));
}

TEST(Dist, DocumentRoundTrip) {
  auto d = parse_distribution(Json::parse(
      R"({"variables":{"B":2,"A":3},"entries":[{"cell":[0,1],"p":"1/4"},{"cell":[1,2],"p":0.75}]})"));
  EXPECT_EQ(d.names(), (std::vector<std::string>{"B", "A"}));
  EXPECT_EQ(d.at(std::vector<int>{1, 2}), r("3/4"));
  auto text = serialize_distribution(d).dump();
  EXPECT_EQ(text, R"({"variables":{"B":2,"A":3},"entries":[{"cell":[0,1],"p":"1/4"},{"cell":[1,2],"p":"3/4"}]})");
  EXPECT_EQ(parse_distribution(Json::parse(text)), d);
  EXPECT_THROW(parse_distribution(Json::parse(R"({"variables":{"A":2},"entries":[{"cell":[0],"p":"1/2"}]})")),
               ParseError);
  EXPECT_THROW(parse_distribution(Json::parse(R"({"variables":{"A":2},"entries":[{"cell":[5],"p":"1"}]})")),
               ParseError);
}

TEST(DistProperty, ChainRuleAndMarginalComposition) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    Dag dag = swtest::random_dag(rng, 4, 2);
    std::vector<int> cards(dag.size(), 2);
    cards[0] = 3;
    auto joint = swtest::joint_from_cpts(dag, cards, swtest::random_cpts(dag, cards, rng));
    // Chain rule: the product of p(X_i | X_pre(i)) recovers the joint.
    std::vector<std::string> order = dag.order_names();
    auto ordered = joint.reordered(order);
    std::vector<ConditionalTable> factors;
    for (std::size_t k = 0; k < order.size(); ++k) {
      factors.push_back(conditional(ordered, {order[k]}, {order.begin(), order.begin() + static_cast<long>(k)}));
    }
    for (std::size_t idx = 0; idx < ordered.size(); ++idx) {
      auto cell = ordered.space().decode(idx);
      Rational prod = 1;
      for (std::size_t k = 0; k < order.size(); ++k) {
        std::vector<int> given(cell.begin(), cell.begin() + static_cast<long>(k));
        std::size_t g = factors[k].given_space().encode(given);
        prod *= (*factors[k].rows[g])[static_cast<std::size_t>(cell[k])];
      }
      EXPECT_EQ(prod, ordered.mass(idx));
    }
    auto s = marginal(joint, {order[2], order[0], order[1]});
    EXPECT_EQ(marginal(s, {order[1], order[0]}), marginal(joint, {order[1], order[0]}));
  }
}
