#include <gtest/gtest.h>

#include <random>
#include <set>

#include "support.hpp"

using namespace singleworld;
using swtest::chain_dag;
using swtest::fig2_dag;
using swtest::r;

namespace {

/// V = A = {B} with the given observed and fixed-value marginals.
CounterfactualFamily single_target(const std::vector<Rational>& observed, const std::vector<Rational>& at0,
                                   const std::vector<Rational>& at1) {
  Dag d = Dag::create({"B"}, {}, {"B"});
  CounterfactualFamily fam(d, {2}, Scope::nested);
  fam.set_member(Regime{std::nullopt}, FiniteDistribution({{"B", 2}}, observed));
  fam.set_member(Regime{0}, FiniteDistribution({{"B", 2}}, at0));
  fam.set_member(Regime{1}, FiniteDistribution({{"B", 2}}, at1));
  return fam;
}

CounterfactualFamily point_mass_family() {
  return single_target({r("1/2"), r("1/2")}, {r("1"), r("0")}, {r("0"), r("1")});
}

swtest::Cpts fig2_cpts(std::mt19937_64& rng, const std::vector<int>& cards) {
  return swtest::random_cpts(fig2_dag(), cards, rng);
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

/// Chain A -> B with target A whose intervened members ignore the fixed
/// value: B(a) follows the natural value of A instead.
CounterfactualFamily natural_value_family() {
  Dag d = Dag::create({"A", "B"}, {{"A", "B"}}, {"A"});
  auto p = FiniteDistribution({{"A", 2}, {"B", 2}}, {r("3/8"), r("1/8"), r("1/8"), r("3/8")});
  CounterfactualFamily fam(d, {2, 2}, Scope::nested);
  for (const auto& key : fam.required_keys()) fam.set_member(key, p);
  return fam;
}

}  // namespace

TEST(Family, RegimeEnumerationPutsIdleFirst) {
  auto keys = enumerate_regimes({2, 2}, true);
  ASSERT_EQ(keys.size(), 9u);
  EXPECT_EQ(keys[0], (Regime{std::nullopt, std::nullopt}));
  EXPECT_EQ(keys[1], (Regime{std::nullopt, 0}));
  EXPECT_EQ(keys[3], (Regime{0, std::nullopt}));
  EXPECT_EQ(enumerate_regimes({3}, false).size(), 3u);
  EXPECT_EQ(enumerate_regimes({}, true).size(), 1u);
}

TEST(Family, ChainInterventionOnA) {
  Dag d = chain_dag();
  auto built = build_ffrcistg(d, swtest::chain_joint());
  EXPECT_TRUE(built.observed_markov.holds);
  auto c = marginal(built.family.member(VertexAssignment{{"A", 1}}), {"C"});
  // Oracle: 3/4 * 2/3 + 1/4 * 1/3.
  Rational oracle = r("3/4") * r("2/3") + r("1/4") * r("1/3");
  EXPECT_EQ(oracle, r("7/12"));
  EXPECT_EQ(c.at(std::vector<int>{1}), oracle);
  EXPECT_EQ(built.family.member(built.family.observational_key()), swtest::chain_joint());
}

TEST(Family, PositivityFailureIsNotIdentified) {
  // p(A=0) = 0, so p(B | A=0) is undefined and needed under A=0.
  auto p = FiniteDistribution::from_entries({{"A", 2}, {"B", 2}, {"C", 2}},
                                            {{{1, 0, 0}, r("1/4")}, {{1, 1, 1}, r("3/4")}});
  try {
    gformula_member(chain_dag(), p, Regime{0, std::nullopt});
    FAIL();
  } catch (const NotIdentified& e) {
    EXPECT_EQ(e.vertex(), "B");
    EXPECT_EQ(e.cell(), (VertexAssignment{{"A", 0}}));
  }
  EXPECT_THROW(build_ffrcistg(chain_dag(), p), NotIdentified);
  EXPECT_NO_THROW(gformula_member(chain_dag(), p, Regime{1, std::nullopt}));
}

TEST(Family, DistributionalConsistencyExamples) {
  auto ok = single_target({r("1/2"), r("1/2")}, {r("1/2"), r("1/2")}, {r("1/2"), r("1/2")});
  EXPECT_TRUE(check_distributional_consistency(ok).holds);
  auto bad = check_distributional_consistency(point_mass_family());
  EXPECT_FALSE(bad.holds);
  ASSERT_FALSE(bad.witnesses.empty());
  EXPECT_EQ(bad.witnesses[0]["target"], "B");
  EXPECT_EQ(bad.witnesses[0]["cell"]["B"], 0);
  EXPECT_EQ(bad.witnesses[0]["lhs"], "1");
  EXPECT_EQ(bad.witnesses[0]["rhs"], "1/2");
  EXPECT_FALSE(swtest::consistency_oracle(point_mass_family()));
}

TEST(Family, ConsistencyNeedsNestedScopeAndAllMembers) {
  Dag d = Dag::create({"B"}, {}, {"B"});
  CounterfactualFamily plain(d, {2}, Scope::interventional);
  EXPECT_THROW(check_distributional_consistency(plain), PreconditionError);
  CounterfactualFamily partial(d, {2}, Scope::nested);
  partial.set_member(Regime{0}, FiniteDistribution({{"B", 2}}, {r("1"), r("0")}));
  try {
    check_distributional_consistency(partial);
    FAIL();
  } catch (const IncompleteFamily& e) {
    EXPECT_NE(std::string(e.what()).find("{}"), std::string::npos);
  }
}

TEST(Family, VectorConsistency) {
  auto fam = build_ffrcistg(chain_dag(), swtest::chain_joint()).family;
  auto both = check_vector_consistency(fam, {"A", "B"}, {});
  EXPECT_TRUE(both.holds);
  EXPECT_EQ(both.checked, 8u);
  EXPECT_TRUE(check_vector_consistency(fam, {}, {"A"}).holds);
  EXPECT_FALSE(check_vector_consistency(point_mass_family(), {"B"}, {}).holds);
  EXPECT_THROW(check_vector_consistency(fam, {"C"}, {}), NotATarget);
  EXPECT_THROW(check_vector_consistency(fam, {"A"}, {"A"}), PreconditionError);
}

TEST(Family, ConditionalConsistency) {
  std::mt19937_64 rng(1);
  std::vector<int> cards(5, 2);
  auto fam = build_ffrcistg(fig2_dag(), swtest::joint_from_cpts(fig2_dag(), cards, fig2_cpts(rng, cards))).family;
  auto rep = check_conditional_consistency(fam, {"X0"}, {"X1"}, {"Y"}, {"Z"});
  EXPECT_TRUE(rep.holds);
  EXPECT_GT(rep.checked, 0u);
  // Degenerate W: agrees with the vector form.
  EXPECT_TRUE(check_conditional_consistency(fam, {"X0"}, {}, {"H", "Z", "X1", "Y"}, {}).holds);
  EXPECT_THROW(check_conditional_consistency(point_mass_family(), {"B"}, {}, {}, {}), PreconditionError);
  EXPECT_THROW(check_conditional_consistency(fam, {"X0"}, {}, {"X0"}, {}), PreconditionError);
}

TEST(Family, ConditionalConsistencySkipsUndefinedRows) {
  // Only rows with B=b are compared; the others are undefined in the
  // b-member and never looked at.
  Dag d = Dag::create({"B", "Y"}, {{"B", "Y"}}, {"B"});
  CounterfactualFamily two(d, {2, 2}, Scope::nested);
  auto p = FiniteDistribution({{"B", 2}, {"Y", 2}}, {r("1/4"), r("1/4"), r("1/8"), r("3/8")});
  two.set_member(Regime{std::nullopt}, p);
  two.set_member(Regime{0}, FiniteDistribution({{"B", 2}, {"Y", 2}}, {r("1/2"), r("1/2"), r("0"), r("0")}));
  two.set_member(Regime{1}, FiniteDistribution({{"B", 2}, {"Y", 2}}, {r("0"), r("0"), r("1/4"), r("3/4")}));
  auto rep = check_conditional_consistency(two, {"B"}, {}, {"Y"}, {});
  EXPECT_TRUE(rep.holds);
  EXPECT_EQ(rep.checked, 2u);
  EXPECT_EQ(rep.skipped, 0u);
}

TEST(Family, ReduceInterventions) {
  std::mt19937_64 rng(2);
  std::vector<int> cards(5, 2);
  Dag d = fig2_dag().with_targets({"X0", "Y"});
  auto fam = build_ffrcistg(d, swtest::joint_from_cpts(d, cards, swtest::random_cpts(d, cards, rng))).family;
  std::vector<std::string> all = d.names();
  // Y is childless, so its fixed value never reaches V.
  auto childless = reduce_interventions(fam, {"Y"}, {"X0"}, all, ReductionMode::joint);
  EXPECT_EQ(childless.status, ImplicationReport::Status::conclusion_holds);
  auto cond = reduce_interventions(fam, {"Y"}, {}, {"Y", "Z"}, ReductionMode::conditional, {"H"});
  EXPECT_EQ(cond.status, ImplicationReport::Status::conclusion_holds);
  // X0 has children: the premise fails and no conclusion is claimed.
  auto parent = reduce_interventions(fam, {"X0"}, {}, all, ReductionMode::joint);
  EXPECT_EQ(parent.status, ImplicationReport::Status::premise_failed);
  EXPECT_FALSE(parent.conclusion.has_value());
  EXPECT_TRUE(parent.consistent());
  // B must lie inside W.
  EXPECT_THROW(reduce_interventions(fam, {"Y"}, {}, {"Z"}, ReductionMode::conditional, {"H"}), PreconditionError);
  EXPECT_THROW(reduce_interventions(fam, {"Y"}, {}, {"Y"}, ReductionMode::conditional, {}), PreconditionError);
}

TEST(Family, ReduceInterventionsFlagsInconsistentFamily) {
  // Fixed values are ignored by every member, so the premise holds, but
  // the (b)-members differ from the observed one.
  auto fam = single_target({r("1/2"), r("1/2")}, {r("1/3"), r("2/3")}, {r("1/3"), r("2/3")});
  auto rep = reduce_interventions(fam, {"B"}, {}, {"B"}, ReductionMode::joint);
  EXPECT_EQ(rep.status, ImplicationReport::Status::conclusion_violated);
  EXPECT_EQ(to_json(rep)["verdict"], "violated");
}

TEST(Family, Fig2LocalMarkovMatchesFactorizationSets) {
  std::mt19937_64 rng(3);
  std::vector<int> cards(5, 2);
  auto fam = build_ffrcistg(fig2_dag(), swtest::joint_from_cpts(fig2_dag(), cards, fig2_cpts(rng, cards))).family;
  auto rep = check_swig_local_markov(fam);
  EXPECT_TRUE(rep.holds);
  ASSERT_EQ(rep.vertices.size(), 5u);
  auto rows = factorization_statements(fig2_dag());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto* v = rep.vertex(rows[k].vertex);
    ASSERT_NE(v, nullptr);
    EXPECT_EQ(as_set(v->depends_on), as_set(rows[k].depends)) << rows[k].vertex;
  }
}

TEST(Family, MutatedOutcomeKernelFailsAtY) {
  std::mt19937_64 rng(4);
  std::vector<int> cards(5, 2);
  Dag d = fig2_dag();
  auto cpts = fig2_cpts(rng, cards);
  auto fam = swtest::oracle_family(d, cards, cpts);
  // Under x0=1 only, Y's conditional table is replaced.
  auto altered = cpts;
  int y = d.index("Y");
  for (auto& row : altered.table[static_cast<std::size_t>(y)]) row = {r("1/7"), r("6/7")};
  for (const auto& key : enumerate_regimes({2, 2}, false)) {
    if (*key[0] == 1) fam.set_member(key, swtest::gformula_oracle(d, cards, altered, assignment_from_regime(d, key)));
  }
  auto rep = check_swig_local_markov(fam);
  EXPECT_FALSE(rep.holds);
  for (const auto& v : rep.vertices) EXPECT_EQ(v.holds, v.vertex != "Y") << v.vertex;
  const auto* yv = rep.vertex("Y");
  ASSERT_TRUE(yv->witness.has_value());
  const auto& ctx = (*yv->witness)["contexts"];
  std::vector<std::string> differing;
  for (const auto& [key, value] : ctx[0].items()) {
    if (ctx[1][key] != value) differing.push_back(key);
  }
  EXPECT_EQ(differing, (std::vector<std::string>{"x0"}));
  EXPECT_EQ(yv->failing_components, (std::vector<std::string>{"causal Markov"}));
}

TEST(Family, IgnorabilityViolationIsLabeled) {
  auto fam = natural_value_family();
  EXPECT_TRUE(check_distributional_consistency(fam).holds);
  auto rep = check_swig_local_markov(fam);
  EXPECT_FALSE(rep.holds);
  const auto* b = rep.vertex("B");
  ASSERT_NE(b, nullptr);
  EXPECT_FALSE(b->holds);
  EXPECT_EQ(b->failing_components, (std::vector<std::string>{"ignorability"}));
  EXPECT_TRUE(rep.vertex("A")->holds);
  EXPECT_FALSE(check_complete_graph_markov(fam).holds);

  auto chain = kernel_chain_check(fam, "B", Regime{1});
  EXPECT_FALSE(chain.holds());
  EXPECT_EQ(chain.first_failure(), std::optional<std::size_t>{4});
  EXPECT_TRUE(chain.steps[0].holds && chain.steps[1].holds && chain.steps[2].holds);
}

TEST(Family, NoTargetsReducesToObservedMarkov) {
  Dag d = chain_dag().with_targets({});
  auto built = build_ffrcistg(d, swtest::chain_joint());
  EXPECT_EQ(built.family.members().size(), 1u);
  EXPECT_TRUE(check_swig_local_markov(built.family).holds);
  EXPECT_TRUE(check_distributional_consistency(built.family).holds);
}

TEST(Family, ObservedMarkov) {
  auto indep = FiniteDistribution::product({{"A", 2}, {"B", 2}, {"C", 2}},
                                           {{r("1/2"), r("1/2")}, {r("1/3"), r("2/3")}, {r("1/5"), r("4/5")}});
  Dag empty = Dag::create({"A", "B", "C"}, {}, {});
  EXPECT_TRUE(check_observed_markov(indep, empty).holds);
  EXPECT_TRUE(check_observed_markov(swtest::chain_joint(), chain_dag()).holds);
  auto rep = check_observed_markov(swtest::chain_joint(), empty);
  EXPECT_FALSE(rep.holds);
  EXPECT_FALSE(rep.vertex("B")->holds);
  EXPECT_TRUE(rep.vertex("A")->holds);
  EXPECT_THROW(check_observed_markov(marginal(indep, {"A"}), empty), PreconditionError);
}

TEST(Family, NonMarkovInputStillBuildsWithWarning) {
  Dag empty = Dag::create({"A", "B", "C"}, {}, {"A"});
  auto built = build_ffrcistg(empty, swtest::chain_joint());
  EXPECT_FALSE(built.observed_markov.holds);
  EXPECT_EQ(built.family.members().size(), 3u);
}

TEST(Family, NoFutureEffect) {
  auto fam = build_ffrcistg(chain_dag(), swtest::chain_joint()).family;
  EXPECT_TRUE(check_no_future_effect(fam, "B").holds);
  EXPECT_TRUE(check_no_future_effect(fam, "C").holds);
  // B(a, b) with the fixed b leaking back into A.
  auto broken = fam;
  auto bumped = swtest::perturbed(fam.member(Regime{0, 1}), 0, r("1/3"));
  broken.set_member(Regime{0, 1}, bumped);
  auto rep = check_no_future_effect(broken, "A");
  EXPECT_FALSE(rep.holds);
  EXPECT_EQ(rep.witnesses[0]["regime"], (OrderedJson{{"A", 0}, {"B", 1}}));
}

TEST(Family, KernelChainOnCompleteGraphIsTrivialInLastSteps) {
  std::mt19937_64 rng(6);
  Dag d = fig2_dag().completed();
  std::vector<int> cards(5, 2);
  auto fam = build_ffrcistg(d, swtest::joint_from_cpts(d, cards, swtest::random_cpts(d, cards, rng))).family;
  for (const auto& a : enumerate_regimes({2, 2}, false)) {
    auto chain = kernel_chain_check(fam, "Y", a);
    EXPECT_TRUE(chain.holds());
  }
  EXPECT_TRUE(kernel_chain_check_all(fam).holds);
}

TEST(Family, DocumentRoundTrip) {
  auto fam = build_ffrcistg(chain_dag(), swtest::chain_joint()).family;
  auto doc = serialize_family(fam);
  auto back = parse_family(Json::parse(doc.dump()));
  EXPECT_EQ(back.scope(), Scope::nested);
  EXPECT_EQ(back.members(), fam.members());
  EXPECT_EQ(doc["members"][0]["intervention"], OrderedJson::object());

  auto text = R"({"graph":{"vertices":["B"],"targets":["B"]},"cardinalities":{"B":2},
    "members":[{"intervention":{"B":0},"dist":{"variables":{"B":2},"entries":[{"cell":[0],"p":"1"}]}},
               {"intervention":{"B":1},"dist":{"variables":{"B":2},"entries":[{"cell":[1],"p":"1"}]}}]})";
  auto plain = parse_family(Json::parse(text));
  EXPECT_EQ(plain.scope(), Scope::interventional);
  EXPECT_NO_THROW(plain.require_complete());
  EXPECT_THROW(parse_family(Json::parse(R"({"graph":{"vertices":["B"]},"members":[
    {"intervention":{},"dist":{"variables":{"Q":2},"entries":[{"cell":[0],"p":"1"}]}}]})")),
               UnknownVertex);
  EXPECT_THROW(parse_family(Json::parse(R"({"graph":{"vertices":["B"],"targets":["B"]},"members":[
    {"intervention":{"B":0},"dist":{"variables":{"B":2},"entries":[{"cell":[0],"p":"1"}]}},
    {"intervention":{"B":0},"dist":{"variables":{"B":2},"entries":[{"cell":[0],"p":"1"}]}}]})")),
               ParseError);
}

// ---- properties over random graphs -------------------------------------------

TEST(FamilyProperty, BuiltFamiliesMatchOracleAndPassEveryCheck) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    Dag d = swtest::random_dag(rng, 2 + static_cast<int>(rng() % 3), 2);
    std::vector<int> cards(d.size(), 2);
    if (rng() % 2) cards[0] = 3;
    auto cpts = swtest::random_cpts(d, cards, rng);
    auto built = build_ffrcistg(d, swtest::joint_from_cpts(d, cards, cpts));
    ASSERT_TRUE(built.observed_markov.holds);
    const auto& fam = built.family;
    for (const auto& key : fam.required_keys()) {
      auto oracle = swtest::gformula_oracle(d, cards, cpts, assignment_from_regime(d, key));
      EXPECT_EQ(fam.member(key), oracle.reordered(d.order_names()));
    }
    EXPECT_TRUE(swtest::consistency_oracle(fam));
    EXPECT_TRUE(check_distributional_consistency(fam).holds);
    EXPECT_TRUE(check_swig_local_markov(fam).holds);
    EXPECT_TRUE(check_complete_graph_markov(fam).holds);
    for (const auto& v : d.names()) EXPECT_TRUE(check_no_future_effect(fam, v).holds);
    EXPECT_TRUE(kernel_chain_check_all(fam).holds);
    EXPECT_TRUE(check_observed_markov(fam.member(fam.observational_key()), d).holds);
  }
}

namespace {

std::vector<std::vector<std::string>> subsets(const std::vector<std::string>& pool) {
  std::vector<std::vector<std::string>> out;
  for (unsigned mask = 0; mask < (1u << pool.size()); ++mask) {
    std::vector<std::string> s;
    for (std::size_t k = 0; k < pool.size(); ++k)
      if (mask & (1u << k)) s.push_back(pool[k]);
    out.push_back(s);
  }
  return out;
}

bool disjoint(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  for (const auto& x : a)
    if (std::find(b.begin(), b.end(), x) != b.end()) return false;
  return true;
}

}  // namespace

TEST(FamilyProperty, ConsistencyImpliesVectorAndConditionalForms) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 4; ++trial) {
    Dag d = swtest::random_dag(rng, 3 + static_cast<int>(rng() % 2), 2);
    std::vector<int> cards(d.size(), 2);
    auto fam = swtest::oracle_family(d, cards, swtest::random_cpts(d, cards, rng));
    ASSERT_TRUE(check_distributional_consistency(fam).holds);
    auto targets = subsets(d.target_names());
    auto vertices = subsets(d.names());
    for (const auto& B : targets)
      for (const auto& C : targets) {
        if (!disjoint(B, C)) continue;
        EXPECT_TRUE(check_vector_consistency(fam, B, C).holds);
        for (const auto& Y : vertices) {
          if (Y.empty() || !disjoint(Y, B)) continue;
          for (const auto& W : vertices) {
            if (!disjoint(W, B) || !disjoint(W, Y)) continue;
            EXPECT_TRUE(check_conditional_consistency(fam, B, C, Y, W).holds);
          }
        }
      }
  }
}

TEST(FamilyProperty, TwoGraphCheckOnSparserGraph) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 15; ++trial) {
    Dag g = swtest::random_dag(rng, 3 + static_cast<int>(rng() % 2), 2);
    std::vector<int> cards(g.size(), 2);
    auto p = swtest::joint_from_cpts(g, cards, swtest::random_cpts(g, cards, rng));
    auto fam = build_ffrcistg(g.completed(), p).family;
    ASSERT_TRUE(check_complete_graph_markov(fam).holds);
    ASSERT_TRUE(fam.member(fam.observational_key()).strictly_positive());
    ASSERT_TRUE(check_observed_markov(fam.member(fam.observational_key()), g).holds);
    EXPECT_TRUE(check_swig_local_markov(fam, g).holds);
  }
}

TEST(FamilyProperty, SingleEntryMutationsAreDetected) {
  std::mt19937_64 rng(24);
  int mutations = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Dag d = swtest::random_dag(rng, 2 + static_cast<int>(rng() % 3), 2);
    std::vector<int> cards(d.size(), 2);
    auto fam = build_ffrcistg(d, swtest::joint_from_cpts(d, cards, swtest::random_cpts(d, cards, rng))).family;
    auto keys = fam.required_keys();
    const auto& key = keys[rng() % keys.size()];
    auto mutated = fam;
    const auto& m = fam.member(key);
    mutated.set_member(key, swtest::perturbed(m, rng() % m.size(), r("1/5")));
    bool caught = !check_distributional_consistency(mutated).holds || !check_swig_local_markov(mutated).holds;
    EXPECT_TRUE(caught) << describe_regime(d, key);
    EXPECT_EQ(caught, !swtest::consistency_oracle(mutated) || !check_swig_local_markov(mutated).holds);
    ++mutations;
  }
  EXPECT_EQ(mutations, 20);
}
