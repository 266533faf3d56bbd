#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "singleworld/dist.hpp"
#include "singleworld/errors.hpp"
#include "singleworld/family.hpp"
#include "singleworld/graph.hpp"
#include "singleworld/report.hpp"
#include "singleworld/separation.hpp"
#include "singleworld/swig.hpp"

namespace singleworld {

// ---- augmented diagrams -------------------------------------------------------

/// Edge of an augmented diagram. Contextual edges leave a target and are
/// owned by that target's indicator slot.
struct AugmentedEdge {
  int tail;
  int head;
  std::optional<int> owner;
};

/// Base graph plus one regime indicator per target. Node ids: vertex v is
/// node v, indicator slot s is node size()+s.
struct AugmentedDiagram {
  Dag base;
  std::vector<std::string> indicators;
  std::vector<AugmentedEdge> edges;

  std::size_t node_count() const { return base.size() + indicators.size(); }
  int indicator_node(std::size_t slot) const { return static_cast<int>(base.size() + slot); }
  bool is_indicator(int node) const { return node >= static_cast<int>(base.size()); }
  const std::string& node_name(int node) const {
    return is_indicator(node) ? indicators.at(static_cast<std::size_t>(node) - base.size()) : base.name(node);
  }
};

inline std::vector<std::string> default_indicator_names(const Dag& dag) {
  std::vector<std::string> out;
  for (int t : dag.targets()) out.push_back(indicator_name(dag.name(t)));
  return out;
}

inline AugmentedDiagram augment(const Dag& dag, std::vector<std::string> names = {}) {
  if (names.empty()) names = default_indicator_names(dag);
  if (names.size() != dag.targets().size()) throw PreconditionError("one indicator name per target is required");
  AugmentedDiagram d{dag, std::move(names), {}};
  for (auto [t, h] : dag.edges()) {
    int slot = dag.target_slot(t);
    d.edges.push_back({t, h, slot >= 0 ? std::optional<int>(slot) : std::nullopt});
  }
  for (std::size_t s = 0; s < dag.targets().size(); ++s) {
    for (int c : dag.children(dag.targets()[s])) d.edges.push_back({d.indicator_node(s), c, std::nullopt});
  }
  return d;
}

/// Graph under a regime: active indicators drop the contextual edges they
/// own and act as fixed nodes; idle indicators are isolated.
inline NodeGraph instantiate_regime(const AugmentedDiagram& d, const std::vector<bool>& active) {
  if (active.size() != d.indicators.size()) throw PreconditionError("one entry per indicator is required");
  NodeGraph g;
  for (std::size_t v = 0; v < d.base.size(); ++v) g.add_node(d.base.name(static_cast<int>(v)), false);
  for (const auto& n : d.indicators) g.add_node(n, true);
  for (const auto& e : d.edges) {
    if (e.owner && active[static_cast<std::size_t>(*e.owner)]) continue;
    if (d.is_indicator(e.tail) && !active[static_cast<std::size_t>(e.tail) - d.base.size()]) continue;
    g.add_edge(e.tail, e.head);
  }
  return g;
}

inline NodeGraph instantiate_regime(const AugmentedDiagram& d, const Regime& f) {
  std::vector<bool> active;
  for (const auto& x : f) active.push_back(x.has_value());
  return instantiate_regime(d, active);
}

inline std::string to_dot(const AugmentedDiagram& d) {
  std::string out = "digraph augmented {\n";
  for (int v : d.base.order()) {
    const auto& n = d.base.name(v);
    out += "  " + detail::dot_quote(n) + " [label=" + detail::dot_quote(n) + ", shape=ellipse];\n";
  }
  for (std::size_t s = 0; s < d.indicators.size(); ++s) {
    const auto& n = d.indicators[s];
    out += "  " + detail::dot_quote(n) + " [label=" + detail::dot_quote(n) + ", shape=box];\n";
  }
  for (const auto& e : d.edges) {
    out += "  " + detail::dot_quote(d.node_name(e.tail)) + " -> " + detail::dot_quote(d.node_name(e.head));
    out += e.owner ? " [style=dashed];\n" : ";\n";
  }
  return out + "}\n";
}

inline OrderedJson to_json(const AugmentedDiagram& d) {
  OrderedJson j;
  j["vertices"] = d.base.order_names();
  j["indicators"] = d.indicators;
  OrderedJson edges = OrderedJson::array();
  for (const auto& e : d.edges) {
    OrderedJson je;
    je["from"] = d.node_name(e.tail);
    je["to"] = d.node_name(e.head);
    if (e.owner) je["contextual"] = d.indicators[static_cast<std::size_t>(*e.owner)];
    edges.push_back(std::move(je));
  }
  j["edges"] = edges;
  return j;
}

/// The augmented local Markov property as one d-separation per vertex,
/// each checked on the diagram with every indicator active.
inline std::vector<SeparationStatement> augmented_statements(const Dag& dag) {
  AugmentedDiagram d = augment(dag);
  NodeGraph g = instantiate_regime(d, std::vector<bool>(d.indicators.size(), true));
  std::string context = d.indicators.empty() ? "" : "[" + detail::join(d.indicators, ",") + " != idle]";
  std::vector<SeparationStatement> out;
  for (int i : dag.order()) {
    auto sets = detail::local_sets(dag, i);
    SeparationStatement st;
    st.vertex = dag.name(i);
    st.context = context;
    std::vector<int> y, z;
    for (int u : sets.random_sep) {
      st.separated_from.push_back(dag.name(u));
      y.push_back(u);
    }
    for (int t : sets.fixed_sep) {
      auto slot = static_cast<std::size_t>(dag.target_slot(t));
      st.separated_from.push_back(d.indicators[slot]);
      y.push_back(d.indicator_node(slot));
    }
    for (int u : sets.random_given) {
      st.given.push_back(dag.name(u));
      z.push_back(u);
    }
    for (int t : sets.fixed_given) {
      auto slot = static_cast<std::size_t>(dag.target_slot(t));
      st.given.push_back(d.indicators[slot]);
      z.push_back(d.indicator_node(slot));
    }
    st.verified = d_separated(g, {i}, y, z).separated;
    out.push_back(std::move(st));
  }
  return out;
}

// ---- kernels --------------------------------------------------------------------

/// A non-stochastic regime variable. Values are indices 0..card-1, shown
/// as `values`. The target link is what ties the indicator to a vertex.
struct Indicator {
  std::string name;
  int card = 0;
  std::optional<int> target;
  std::vector<int> values;

  int shown(int idx) const { return values.empty() ? idx : values.at(static_cast<std::size_t>(idx)); }
  int index_of(int shown_value) const {
    if (values.empty()) return shown_value >= 0 && shown_value < card ? shown_value : -1;
    auto it = std::find(values.begin(), values.end(), shown_value);
    return it == values.end() ? -1 : static_cast<int>(it - values.begin());
  }
};

/// Distributions over V indexed by regime assignments from an explicit
/// regime space. Members are stored over V in ≺ order.
class RegimeKernel {
 public:
  RegimeKernel() = default;
  RegimeKernel(Dag dag, std::vector<int> cards, std::vector<Indicator> indicators, std::vector<Regime> space)
      : dag_(std::move(dag)), cards_(std::move(cards)), indicators_(std::move(indicators)), space_(std::move(space)) {
    if (cards_.size() != dag_.size()) throw PreconditionError("one cardinality per vertex is required");
    std::set<std::string> seen;
    for (const auto& ind : indicators_) {
      if (ind.card < 1) throw PreconditionError("indicator " + ind.name + " needs a positive cardinality");
      if (dag_.contains(ind.name) || !seen.insert(ind.name).second) {
        throw PreconditionError("indicator name " + ind.name + " clashes with another variable");
      }
    }
    std::set<Regime> unique;
    for (const auto& f : space_) {
      if (f.size() != indicators_.size()) throw PreconditionError("regime has the wrong number of coordinates");
      for (std::size_t s = 0; s < f.size(); ++s) {
        if (f[s] && (*f[s] < 0 || *f[s] >= indicators_[s].card)) {
          throw PreconditionError("regime value out of range for " + indicators_[s].name);
        }
      }
      if (!unique.insert(f).second) throw PreconditionError("regime listed twice in the regime space");
    }
  }

  /// Indicators F_<target> for every target over the given space (the full
  /// product with idle when none is given).
  static RegimeKernel for_targets(const Dag& dag, std::vector<int> cards, std::optional<std::vector<Regime>> space = {}) {
    std::vector<Indicator> inds;
    std::vector<int> tcards;
    for (int t : dag.targets()) {
      inds.push_back({indicator_name(dag.name(t)), cards.at(static_cast<std::size_t>(t)), t, {}});
      tcards.push_back(cards.at(static_cast<std::size_t>(t)));
    }
    auto s = space ? *space : enumerate_regimes(tcards, true);
    return RegimeKernel(dag, std::move(cards), std::move(inds), std::move(s));
  }

  const Dag& dag() const { return dag_; }
  const std::vector<int>& cards() const { return cards_; }
  int card(int v) const { return cards_.at(static_cast<std::size_t>(v)); }
  const std::vector<Indicator>& indicators() const { return indicators_; }
  const std::vector<Regime>& space() const { return space_; }
  const std::map<Regime, FiniteDistribution>& members() const { return members_; }

  std::vector<int> indicator_cards() const {
    std::vector<int> out;
    for (const auto& i : indicators_) out.push_back(i.card);
    return out;
  }

  /// Slot of an indicator, looked up by indicator name or target name.
  int slot(std::string_view name) const {
    for (std::size_t s = 0; s < indicators_.size(); ++s) {
      if (indicators_[s].name == name) return static_cast<int>(s);
      if (indicators_[s].target && dag_.name(*indicators_[s].target) == name) return static_cast<int>(s);
    }
    return -1;
  }

  bool in_space(const Regime& f) const { return std::find(space_.begin(), space_.end(), f) != space_.end(); }

  bool full_product() const {
    auto full = enumerate_regimes(indicator_cards(), true);
    return std::set<Regime>(full.begin(), full.end()) == std::set<Regime>(space_.begin(), space_.end());
  }

  std::vector<Variable> variables() const { return detail::vertex_vars(dag_, cards_, dag_.order()); }

  std::string describe(const Regime& f) const {
    std::string out = "(";
    for (std::size_t s = 0; s < f.size(); ++s) {
      if (s) out += ", ";
      out += indicators_[s].name + "=" + (f[s] ? std::to_string(indicators_[s].shown(*f[s])) : "idle");
    }
    return out + ")";
  }

  OrderedJson regime_json(const Regime& f) const {
    OrderedJson j = OrderedJson::object();
    for (std::size_t s = 0; s < f.size(); ++s) {
      j[indicators_[s].name] = f[s] ? OrderedJson(indicators_[s].shown(*f[s])) : OrderedJson(nullptr);
    }
    return j;
  }

  void set_member(const Regime& f, const FiniteDistribution& d) {
    if (!in_space(f)) throw PreconditionError("regime " + describe(f) + " is not in the regime space");
    auto expected = variables();
    std::vector<std::string> names;
    for (const auto& v : expected) names.push_back(v.name);
    if (d.vars().size() != expected.size()) {
      throw InvalidDistribution("member " + describe(f) + " must range over exactly the vertices");
    }
    FiniteDistribution ordered = d.reordered(names);
    if (ordered.vars() != expected) throw InvalidDistribution("member " + describe(f) + " has mismatched cardinalities");
    members_.insert_or_assign(f, std::move(ordered));
  }

  const FiniteDistribution& member(const Regime& f) const {
    auto it = members_.find(f);
    if (it == members_.end()) throw IncompleteKernel("missing member " + describe(f));
    return it->second;
  }

  void require_complete() const {
    for (const auto& f : space_) member(f);
  }

  Regime idle() const { return Regime(indicators_.size()); }

  /// Indicators whose slot s is linked to target dag.targets()[s].
  bool target_aligned() const {
    if (indicators_.size() != dag_.targets().size()) return false;
    for (std::size_t s = 0; s < indicators_.size(); ++s) {
      if (indicators_[s].target != dag_.targets()[s]) return false;
    }
    return true;
  }

 private:
  Dag dag_;
  std::vector<int> cards_;
  std::vector<Indicator> indicators_;
  std::vector<Regime> space_;
  std::map<Regime, FiniteDistribution> members_;
};

/// Member (D, d) becomes regime f with f_i = d_i on D and idle elsewhere.
inline RegimeKernel family_to_kernel(const CounterfactualFamily& fam) {
  fam.require_complete();
  RegimeKernel k = RegimeKernel::for_targets(fam.dag(), fam.cards(), fam.required_keys());
  for (const auto& f : k.space()) k.set_member(f, fam.member(f));
  return k;
}

inline CounterfactualFamily kernel_to_family(const RegimeKernel& k) {
  if (!k.target_aligned()) throw NotConvertible("kernel indicators are not one per target");
  std::set<Regime> space(k.space().begin(), k.space().end());
  auto nested = enumerate_regimes(k.indicator_cards(), true);
  auto plain = enumerate_regimes(k.indicator_cards(), false);
  Scope scope;
  if (space == std::set<Regime>(nested.begin(), nested.end())) {
    scope = Scope::nested;
  } else if (space == std::set<Regime>(plain.begin(), plain.end())) {
    scope = Scope::interventional;
  } else {
    throw NotConvertible("regime space is not a product space; a family cannot express it");
  }
  k.require_complete();
  CounterfactualFamily fam(k.dag(), k.cards(), scope);
  for (const auto& [f, d] : k.members()) fam.set_member(f, d);
  return fam;
}

/// p(V | F_i = b, F_C = c) at cells with X_i = b equals p(V | F_i idle,
/// F_C = c). Pairs whose fixed regime lies outside the space are skipped
/// and listed.
inline CheckReport check_kernel_consistency(const RegimeKernel& k) {
  CheckReport rep("kernel-consistency");
  OrderedJson untested = OrderedJson::array();
  const Dag& dag = k.dag();
  for (std::size_t s = 0; s < k.indicators().size(); ++s) {
    const auto& ind = k.indicators()[s];
    if (!ind.target) throw PreconditionError("indicator " + ind.name + " has no target");
    int t = *ind.target;
    auto pos = static_cast<std::size_t>(dag.rank(t));
    for (const Regime& f : k.space()) {
      if (f[s]) continue;
      const auto& rhs = k.member(f);
      for (int b = 0; b < ind.card; ++b) {
        Regime fb = f;
        fb[s] = b;
        if (!k.in_space(fb)) {
          ++rep.skipped;
          if (untested.size() < CheckReport::witness_limit) {
            untested.push_back(OrderedJson{{"indicator", ind.name}, {"regime", k.regime_json(fb)}});
          }
          continue;
        }
        const auto& lhs = k.member(fb);
        for (std::size_t idx = 0; idx < lhs.size(); ++idx) {
          if (lhs.space().state(idx, pos) != b) continue;
          ++rep.checked;
          if (lhs.mass(idx) == rhs.mass(idx)) continue;
          OrderedJson w;
          w["indicator"] = ind.name;
          w["context"] = k.regime_json(f);
          w["cell"] = detail::cell_json(lhs.space(), idx);
          w["lhs"] = to_string(lhs.mass(idx));
          w["rhs"] = to_string(rhs.mass(idx));
          rep.violate(std::move(w));
        }
      }
    }
  }
  if (!untested.empty()) rep.details["untested_pairs"] = untested;
  return rep;
}

/// Distribution under the regime that sets target i to the value it would
/// take anyway, stitched cell by cell from the members F_i = v_i.
struct NaturalValueResult {
  std::vector<Variable> vars;
  std::vector<Rational> mass;
  bool matches_idle = true;
  std::optional<std::size_t> first_mismatch;

  std::optional<FiniteDistribution> distribution() const {
    Rational total = 0;
    for (const auto& m : mass) total += m;
    if (total != 1) return std::nullopt;
    return FiniteDistribution(vars, mass);
  }
};

inline NaturalValueResult natural_value_regime(const RegimeKernel& k, std::string_view target, const Regime& context) {
  int s = k.slot(target);
  if (s < 0 || !k.indicators()[static_cast<std::size_t>(s)].target) {
    throw NotATarget(std::string(target) + " has no target-linked indicator");
  }
  if (context.size() != k.indicators().size()) throw PreconditionError("context has the wrong number of coordinates");
  auto slot = static_cast<std::size_t>(s);
  Regime base = context;
  base[slot] = std::nullopt;
  auto pos = static_cast<std::size_t>(k.dag().rank(*k.indicators()[slot].target));
  NaturalValueResult out;
  out.vars = k.variables();
  CellSpace space(out.vars);
  out.mass.resize(space.size());
  std::vector<const FiniteDistribution*> by_value;
  for (int b = 0; b < k.indicators()[slot].card; ++b) {
    Regime f = base;
    f[slot] = b;
    by_value.push_back(&k.member(f));
  }
  const auto& idle = k.member(base);
  for (std::size_t idx = 0; idx < space.size(); ++idx) {
    out.mass[idx] = by_value[static_cast<std::size_t>(space.state(idx, pos))]->mass(idx);
    if (out.mass[idx] != idle.mass(idx) && out.matches_idle) {
      out.matches_idle = false;
      out.first_mismatch = idx;
    }
  }
  return out;
}

/// Local Markov property over regimes with every indicator active.
inline CheckReport check_augmented_markov(const RegimeKernel& k, const Dag& g) {
  if (!k.target_aligned()) throw PreconditionError("kernel indicators are not one per target");
  CounterfactualFamily fam(k.dag(), k.cards(), Scope::interventional);
  for (const auto& f : enumerate_regimes(k.indicator_cards(), false)) {
    if (!k.in_space(f)) throw IncompleteKernel("regime space lacks " + k.describe(f));
    fam.set_member(f, k.member(f));
  }
  std::vector<std::string> names;
  for (const auto& ind : k.indicators()) names.push_back(ind.name);
  return detail::local_markov(fam, g, names, "augmented-markov");
}

inline CheckReport check_augmented_markov(const RegimeKernel& k) { return check_augmented_markov(k, k.dag()); }

/// Against the completed graph only ignorability is imposed.
inline CheckReport check_complete_graph_augmented_markov(const RegimeKernel& k) {
  auto rep = check_augmented_markov(k, k.dag().completed());
  rep.name = "complete-graph-augmented-markov";
  return rep;
}

// ---- extended conditional independence ------------------------------------------

/// left ⊥ right | given, restricted to regimes where the `non_idle`
/// indicators are active and the `fixed` ones take the given values.
struct EciStatement {
  std::vector<std::string> left;
  std::vector<std::string> right;
  std::vector<std::string> given;
  std::vector<std::string> non_idle;
  std::map<std::string, int> fixed;
};

inline std::string render(const EciStatement& st) {
  std::string out = detail::join(st.left, ", ") + " _||_ " + (st.right.empty() ? "{}" : detail::join(st.right, ", "));
  std::vector<std::string> cond = st.given;
  if (!st.non_idle.empty()) cond.push_back(detail::join(st.non_idle, ",") + " != idle");
  for (const auto& [k, v] : st.fixed) cond.push_back(k + "=" + std::to_string(v));
  if (!cond.empty()) out += " | " + detail::join(cond, ", ");
  return out;
}

inline void validate_eci(const RegimeKernel& k, const EciStatement& st) {
  if (st.left.empty()) throw IllFormedEci("left side is empty: " + render(st));
  std::set<std::string> seen, indicators_seen;
  auto visit = [&](const std::string& n, bool left) {
    bool ind = k.slot(n) >= 0 && !k.dag().contains(n);
    if (!ind && !k.dag().contains(n)) throw UnknownVariable("unknown variable " + n + " in " + render(st));
    if (ind && left) throw IllFormedEci("non-stochastic " + n + " on the left of " + render(st));
    if (!seen.insert(n).second) throw IllFormedEci(n + " appears twice in " + render(st));
    if (ind) indicators_seen.insert(k.indicators()[static_cast<std::size_t>(k.slot(n))].name);
  };
  for (const auto& n : st.left) visit(n, true);
  for (const auto& n : st.right) visit(n, false);
  for (const auto& n : st.given) visit(n, false);
  for (const auto& n : st.non_idle) {
    if (k.slot(n) < 0 || k.dag().contains(n)) throw IllFormedEci(n + " is not a regime indicator");
  }
  for (const auto& [n, v] : st.fixed) {
    int s = k.slot(n);
    if (s < 0 || k.dag().contains(n)) throw IllFormedEci(n + " is not a regime indicator");
    if (k.indicators()[static_cast<std::size_t>(s)].index_of(v) < 0) throw IllFormedEci("bad value for " + n);
    indicators_seen.insert(k.indicators()[static_cast<std::size_t>(s)].name);
  }
  for (const auto& ind : k.indicators()) {
    if (!indicators_seen.count(ind.name)) {
      throw IllFormedEci("indicator " + ind.name + " must appear on the right or in the conditioning set of " +
                         render(st));
    }
  }
}

/// Evaluates an ECI by enumeration over the regimes it covers: the
/// conditional of the left set given the stochastic right and given sets
/// may depend only on the given coordinates.
inline CheckReport check_eci(const RegimeKernel& k, const EciStatement& st) {
  validate_eci(k, st);
  CheckReport rep(render(st));
  std::vector<std::size_t> f_given, f_right;
  std::vector<std::string> s_given, s_right;
  for (const auto& n : st.given) {
    if (k.dag().contains(n)) {
      s_given.push_back(n);
    } else {
      f_given.push_back(static_cast<std::size_t>(k.slot(n)));
    }
  }
  for (const auto& n : st.right) {
    if (k.dag().contains(n)) {
      s_right.push_back(n);
    } else {
      f_right.push_back(static_cast<std::size_t>(k.slot(n)));
    }
  }
  std::vector<std::string> cond = s_given;
  cond.insert(cond.end(), s_right.begin(), s_right.end());

  std::vector<Regime> covered;
  for (const auto& f : k.space()) {
    bool ok = true;
    for (const auto& n : st.non_idle) ok = ok && f[static_cast<std::size_t>(k.slot(n))].has_value();
    for (const auto& [n, v] : st.fixed) {
      auto s = static_cast<std::size_t>(k.slot(n));
      ok = ok && f[s] == k.indicators()[s].index_of(v);
    }
    if (ok) covered.push_back(f);
  }

  // Context: given indicators, right indicators, then the stochastic
  // conditioning cell. Idle is encoded as -1.
  std::vector<ContextRow> rows;
  std::vector<Regime> row_regime;
  std::optional<CellSpace> cspace;
  for (const auto& f : covered) {
    auto table = conditional(k.member(f), st.left, cond);
    CellSpace gs = table.given_space();
    if (!cspace) cspace = gs;
    for (std::size_t g = 0; g < gs.size(); ++g) {
      std::vector<int> ctx;
      for (auto s : f_given) ctx.push_back(f[s] ? *f[s] : -1);
      for (auto s : f_right) ctx.push_back(f[s] ? *f[s] : -1);
      auto cell = gs.decode(g);
      ctx.insert(ctx.end(), cell.begin(), cell.end());
      rows.push_back({std::move(ctx), table.rows[g]});
      row_regime.push_back(f);
    }
  }
  std::vector<int> proj;
  for (std::size_t c = 0; c < f_given.size(); ++c) proj.push_back(static_cast<int>(c));
  std::size_t offset = f_given.size() + f_right.size();
  for (std::size_t c = 0; c < s_given.size(); ++c) proj.push_back(static_cast<int>(offset + c));
  auto res = depends_only_on(rows, proj);
  rep.checked = rows.size() - res.skipped;
  rep.skipped = res.skipped;
  rep.details["regimes"] = covered.size();
  if (!res.holds) {
    OrderedJson w;
    OrderedJson sides = OrderedJson::array();
    for (std::size_t r : {res.witness->first, res.witness->second}) {
      OrderedJson side;
      side["regime"] = k.regime_json(row_regime[r]);
      OrderedJson cell = OrderedJson::object();
      for (std::size_t c = 0; c < cond.size(); ++c) cell[cond[c]] = rows[r].context[offset + c];
      side["given"] = cell;
      side["row"] = detail::row_json(*rows[r].row);
      sides.push_back(std::move(side));
    }
    w["pair"] = sides;
    rep.violate(std::move(w));
  }
  return rep;
}

/// The local statements of the diagram with every edge drawn solid: no
/// context-specific independences.
inline std::vector<EciStatement> solid_eci_statements(const AugmentedDiagram& d) {
  const Dag& dag = d.base;
  std::vector<EciStatement> out;
  for (int i : dag.order()) {
    std::vector<std::string> parents;
    std::set<int> pa(dag.parents(i).begin(), dag.parents(i).end());
    std::set<std::size_t> fpa;
    for (std::size_t s = 0; s < d.indicators.size(); ++s) {
      const auto& ch = dag.children(dag.targets()[s]);
      if (std::find(ch.begin(), ch.end(), i) != ch.end()) fpa.insert(s);
    }
    EciStatement st;
    st.left = {dag.name(i)};
    for (int u : dag.predecessors(i)) (pa.count(u) ? st.given : st.right).push_back(dag.name(u));
    for (std::size_t s = 0; s < d.indicators.size(); ++s) (fpa.count(s) ? st.given : st.right).push_back(d.indicators[s]);
    out.push_back(std::move(st));
  }
  return out;
}

// ---- Dawid's conditions A and B -----------------------------------------------------

struct DawidAB {
  /// A: T* ⊥ F_T.
  CheckReport a;
  /// B: Y ⊥ T*, F_T | T.
  CheckReport b;
  /// The two halves of B over realizable (F_T, T*) pairs: consistency
  /// p(Y | T*=t, F_T=t) = p(Y | T=t, F_T idle), and ignorability
  /// p(Y | T*=t, F_T=t) = p(Y | T*=s, F_T=t).
  CheckReport consistency;
  CheckReport ignorability;
  /// Y ⊥ F_T | T, the form without the natural value.
  CheckReport without_natural;

  bool holds() const { return a.holds && b.holds; }
};

inline DawidAB check_dawid_AB(const RegimeKernel& k, const std::string& natural, const std::string& applied,
                              const std::vector<std::string>& outcome) {
  if (k.indicators().size() != 1) throw PreconditionError("Dawid's conditions need a single regime indicator");
  const std::string& f = k.indicators()[0].name;
  DawidAB out;
  out.a = check_eci(k, {{natural}, {f}, {}, {}, {}});
  out.a.name = "A: " + out.a.name;
  out.b = check_eci(k, {outcome, {natural, f}, {applied}, {}, {}});
  out.b.name = "B: " + out.b.name;
  out.without_natural = check_eci(k, {outcome, {f}, {applied}, {}, {}});
  out.consistency = CheckReport("consistency");
  out.ignorability = CheckReport("ignorability");
  int card = k.indicators()[0].card;
  auto idle = conditional(k.member(k.idle()), outcome, {natural, applied});
  CellSpace gs = idle.given_space();
  for (int t = 0; t < card; ++t) {
    auto fixed = conditional(k.member(Regime{t}), outcome, {natural, applied});
    const auto& here = fixed.rows[gs.encode(std::vector<int>{t, t})];
    const auto& obs = idle.rows[gs.encode(std::vector<int>{t, t})];
    if (!here || !obs) {
      ++out.consistency.skipped;
    } else {
      ++out.consistency.checked;
      if (*here != *obs) {
        out.consistency.violate(OrderedJson{{"t", t}, {"fixed", detail::row_json(*here)}, {"idle", detail::row_json(*obs)}});
      }
    }
    for (int s = 0; s < k.card(k.dag().index(natural)); ++s) {
      if (s == t) continue;
      const auto& other = fixed.rows[gs.encode(std::vector<int>{s, t})];
      if (!here || !other) {
        ++out.ignorability.skipped;
        continue;
      }
      ++out.ignorability.checked;
      if (*here != *other) {
        out.ignorability.violate(OrderedJson{{"t", t},
                                             {"natural", OrderedJson::array({t, s})},
                                             {"rows", OrderedJson::array({detail::row_json(*here), detail::row_json(*other)})}});
      }
    }
  }
  return out;
}

inline OrderedJson to_json(const DawidAB& r) {
  OrderedJson j;
  j["check"] = "dawid-ab";
  j["verdict"] = r.holds() ? "holds" : "violated";
  j["A"] = to_json(r.a);
  j["B"] = to_json(r.b);
  j["consistency"] = to_json(r.consistency);
  j["ignorability"] = to_json(r.ignorability);
  j["without_natural"] = to_json(r.without_natural);
  return j;
}

/// Adds the applied treatment as an explicit column: the single target is
/// renamed `natural`, and `applied` equals the fixed value when the
/// indicator is active and the natural value otherwise.
inline RegimeKernel with_applied_treatment(const RegimeKernel& k, const std::string& natural,
                                          const std::string& applied, const std::string& indicator) {
  if (!k.target_aligned() || k.indicators().size() != 1) throw PreconditionError("kernel needs a single target");
  const Dag& dag = k.dag();
  int t = dag.targets()[0];
  auto rename = [&](int v) { return v == t ? natural : dag.name(v); };
  std::vector<std::string> names, order;
  std::vector<std::pair<std::string, std::string>> edges;
  for (int v : dag.order()) {
    order.push_back(rename(v));
    if (v == t) order.push_back(applied);
  }
  for (std::size_t v = 0; v < dag.size(); ++v) {
    names.push_back(rename(static_cast<int>(v)));
    if (static_cast<int>(v) == t) names.push_back(applied);
  }
  for (auto [a, b] : dag.edges()) edges.emplace_back(a == t ? applied : rename(a), rename(b));
  edges.emplace_back(natural, applied);
  Dag nd = Dag::create(names, edges, {natural}, order);
  std::vector<int> cards(nd.size());
  for (std::size_t v = 0; v < dag.size(); ++v) cards[static_cast<std::size_t>(nd.index(rename(static_cast<int>(v))))] = k.card(static_cast<int>(v));
  int tc = k.card(t);
  cards[static_cast<std::size_t>(nd.index(applied))] = tc;
  std::vector<Indicator> inds{{indicator, tc, nd.index(natural), {}}};
  RegimeKernel out(nd, cards, inds, k.space());
  auto npos = static_cast<std::size_t>(nd.rank(nd.index(natural)));
  auto apos = static_cast<std::size_t>(nd.rank(nd.index(applied)));
  for (const auto& f : k.space()) {
    const auto& old = k.member(f);
    CellSpace space(out.variables());
    std::vector<Rational> mass(space.size());
    for (std::size_t idx = 0; idx < space.size(); ++idx) {
      auto cell = space.decode(idx);
      int nat = cell[npos];
      int app = cell[apos];
      if (app != (f[0] ? *f[0] : nat)) continue;
      cell.erase(cell.begin() + static_cast<long>(apos));
      mass[idx] = old.at(cell);
    }
    out.set_member(f, FiniteDistribution(out.variables(), mass));
  }
  return out;
}

// ---- intersection counterexample -----------------------------------------------------

struct IntersectionCounterexample {
  RegimeKernel kernel;
  /// Y ⊥ A | B, X
  CheckReport given_b;
  /// Y ⊥ B | A, X
  CheckReport given_a;
  /// Y ⊥ A, B | X
  CheckReport joint;
  /// Opposite-corner regimes and their differing rows.
  OrderedJson witness;

  bool reproduced() const { return given_b.holds && given_a.holds && !joint.holds; }
};

/// Kernel q(x, y | a, b) on the sign-sharing space {-2,-1}² ∪ {1,2}²:
/// negative pairs use p_minus, positive pairs p_plus.
inline IntersectionCounterexample build_intersection_counterexample(const FiniteDistribution& p_minus,
                                                                     const FiniteDistribution& p_plus) {
  if (p_minus.vars().size() != 2 || p_minus.vars() != p_plus.vars()) {
    throw PreconditionError("both distributions must range over the same (X, Y)");
  }
  const std::string x = p_minus.vars()[0].name;
  const std::string y = p_minus.vars()[1].name;
  auto cm = conditional(p_minus, {y}, {x});
  auto cp = conditional(p_plus, {y}, {x});
  std::optional<std::size_t> differing;
  for (std::size_t g = 0; g < cm.rows.size() && !differing; ++g) {
    if (cm.rows[g] && cp.rows[g] && *cm.rows[g] != *cp.rows[g]) differing = g;
  }
  if (!differing) throw NotACounterexample("p_minus(Y|X) and p_plus(Y|X) agree on every defined row");

  Dag dag = Dag::create({x, y}, {{x, y}}, {});
  std::vector<int> signs{-2, -1, 1, 2};
  std::vector<Indicator> inds{{"A", 4, std::nullopt, signs}, {"B", 4, std::nullopt, signs}};
  std::vector<Regime> space;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      if ((a < 2) == (b < 2)) space.push_back({a, b});
  RegimeKernel k(dag, {p_minus.vars()[0].card, p_minus.vars()[1].card}, inds, space);
  for (const auto& f : space) k.set_member(f, *f[0] < 2 ? p_minus : p_plus);

  IntersectionCounterexample out{k, check_eci(k, {{y}, {"A"}, {"B", x}, {}, {}}),
                                 check_eci(k, {{y}, {"B"}, {"A", x}, {}, {}}), check_eci(k, {{y}, {"A", "B"}, {x}, {}, {}}),
                                 {}};
  Regime lo{0, 0}, hi{3, 3};
  out.witness["given"] = detail::cell_json(cm.given_space(), *differing);
  out.witness["regimes"] = OrderedJson::array({k.regime_json(lo), k.regime_json(hi)});
  out.witness["rows"] = OrderedJson::array({detail::row_json(*cm.rows[*differing]), detail::row_json(*cp.rows[*differing])});
  return out;
}

inline OrderedJson to_json(const IntersectionCounterexample& c) {
  OrderedJson j;
  j["demo"] = "intersection";
  j["verdict"] = c.reproduced() ? "holds" : "violated";
  j["regime_space"] = OrderedJson::array();
  for (const auto& f : c.kernel.space()) j["regime_space"].push_back(c.kernel.regime_json(f));
  j["given_b"] = to_json(c.given_b);
  j["given_a"] = to_json(c.given_a);
  j["joint"] = to_json(c.joint);
  j["witness"] = c.witness;
  return j;
}

// ---- constrained regime spaces ------------------------------------------------------

struct MoveToIdleReport {
  bool holds = true;
  /// One idle-reduction path per non-idle regime, in space order.
  std::vector<std::vector<Regime>> sequences;
  std::optional<Regime> blocking;
};

/// Every non-idle regime can drop one active coordinate to idle and stay
/// in the space. Earlier coordinates are tried first.
inline MoveToIdleReport check_move_to_idle(const std::vector<Regime>& space) {
  if (space.empty()) throw NoIdleRegime("regime space is empty");
  std::set<Regime> in(space.begin(), space.end());
  Regime idle(space.front().size());
  if (!in.count(idle)) throw NoIdleRegime("regime space lacks the all-idle regime");
  auto step = [&](const Regime& f) -> std::optional<Regime> {
    for (std::size_t s = 0; s < f.size(); ++s) {
      if (!f[s]) continue;
      Regime g = f;
      g[s] = std::nullopt;
      if (in.count(g)) return g;
    }
    return std::nullopt;
  };
  MoveToIdleReport out;
  for (const auto& f : space) {
    if (f == idle) continue;
    if (!step(f)) {
      out.holds = false;
      out.blocking = f;
      out.sequences.clear();
      return out;
    }
  }
  for (const auto& f : space) {
    if (f == idle) continue;
    std::vector<Regime> seq{f};
    while (seq.back() != idle) seq.push_back(*step(seq.back()));
    out.sequences.push_back(std::move(seq));
  }
  return out;
}

inline OrderedJson regime_array_json(const Regime& f) {
  OrderedJson j = OrderedJson::array();
  for (const auto& x : f) j.push_back(x ? OrderedJson(*x) : OrderedJson(nullptr));
  return j;
}

/// Regimes print as arrays of indices, or of shown values when a kernel
/// is given.
inline OrderedJson to_json(const MoveToIdleReport& r, const RegimeKernel* k = nullptr) {
  auto show = [&](const Regime& f) {
    if (!k) return regime_array_json(f);
    OrderedJson j = OrderedJson::array();
    for (std::size_t s = 0; s < f.size(); ++s) {
      j.push_back(f[s] ? OrderedJson(k->indicators()[s].shown(*f[s])) : OrderedJson(nullptr));
    }
    return j;
  };
  OrderedJson j;
  j["check"] = "move-to-idle";
  j["verdict"] = r.holds ? "holds" : "violated";
  if (r.blocking) j["witnesses"] = OrderedJson::array({OrderedJson{{"blocking", show(*r.blocking)}}});
  OrderedJson seqs = OrderedJson::array();
  for (const auto& s : r.sequences) {
    OrderedJson path = OrderedJson::array();
    for (const auto& f : s) path.push_back(show(f));
    seqs.push_back(std::move(path));
  }
  if (r.holds) j["sequences"] = seqs;
  return j;
}

struct JointIndependenceReport {
  enum class Status { precondition_failed, premise_failed, conclusion_holds, conclusion_violated };
  Status status = Status::precondition_failed;
  MoveToIdleReport move_to_idle;
  /// W ⊥ F_i | F_{A\{i}}, one per indicator.
  std::vector<CheckReport> per_coordinate;
  /// W ⊥ F_A, checked only when every per-coordinate statement holds.
  std::optional<CheckReport> joint;
};

inline std::string to_string(JointIndependenceReport::Status s) {
  switch (s) {
    case JointIndependenceReport::Status::precondition_failed: return "precondition-failed";
    case JointIndependenceReport::Status::premise_failed: return "premise-failed";
    case JointIndependenceReport::Status::conclusion_holds: return "conclusion-holds";
    case JointIndependenceReport::Status::conclusion_violated: return "conclusion-violated";
  }
  return "precondition-failed";
}

inline JointIndependenceReport derive_joint_independence(const RegimeKernel& k, const std::vector<std::string>& W) {
  JointIndependenceReport out;
  out.move_to_idle = check_move_to_idle(k.space());
  if (!out.move_to_idle.holds) return out;
  std::vector<std::string> all;
  for (const auto& ind : k.indicators()) all.push_back(ind.name);
  bool premise = true;
  for (const auto& name : all) {
    EciStatement st{W, {name}, {}, {}, {}};
    for (const auto& other : all)
      if (other != name) st.given.push_back(other);
    out.per_coordinate.push_back(check_eci(k, st));
    premise = premise && out.per_coordinate.back().holds;
  }
  if (!premise) {
    out.status = JointIndependenceReport::Status::premise_failed;
    return out;
  }
  out.joint = check_eci(k, {W, all, {}, {}, {}});
  out.status = out.joint->holds ? JointIndependenceReport::Status::conclusion_holds
                                : JointIndependenceReport::Status::conclusion_violated;
  return out;
}

inline OrderedJson to_json(const JointIndependenceReport& r, const RegimeKernel* k = nullptr) {
  OrderedJson j;
  j["check"] = "joint-independence";
  j["status"] = to_string(r.status);
  j["verdict"] = r.status == JointIndependenceReport::Status::conclusion_holds ||
                         r.status == JointIndependenceReport::Status::premise_failed
                     ? "holds"
                     : "violated";
  j["move_to_idle"] = to_json(r.move_to_idle, k);
  OrderedJson per = OrderedJson::array();
  for (const auto& p : r.per_coordinate) per.push_back(to_json(p));
  j["per_coordinate"] = per;
  if (r.joint) j["joint"] = to_json(*r.joint);
  return j;
}

// ---- front door -------------------------------------------------------------------

/// Parameters of the front-door kernels: p(H=1), p(T*=1 | h),
/// p(M=1 | t), p(Y=1 | m, h), and the chance that an active regime
/// leaves the applied treatment at its natural value.
struct FrontdoorParams {
  Rational h;
  std::array<Rational, 2> natural;
  std::array<Rational, 2> mediator;
  std::array<std::array<Rational, 2>, 2> outcome;
  Rational slip;
};

namespace detail {

inline std::vector<Rational> bernoulli(const Rational& p1) { return {1 - p1, p1}; }

inline FiniteDistribution frontdoor_observed(const FrontdoorParams& p) {
  std::vector<Rational> mass;
  for (int h = 0; h < 2; ++h)
    for (int t = 0; t < 2; ++t)
      for (int m = 0; m < 2; ++m)
        for (int y = 0; y < 2; ++y) {
          mass.push_back(bernoulli(p.h)[h] * bernoulli(p.natural[h])[t] * bernoulli(p.mediator[t])[m] *
                         bernoulli(p.outcome[m][h])[y]);
        }
  return FiniteDistribution({{"H", 2}, {"T", 2}, {"M", 2}, {"Y", 2}}, mass);
}

}  // namespace detail

/// H -> T* -> T -> M -> Y with H -> Y; F_T acts on the applied treatment T.
inline Dag frontdoor_natural_dag() {
  return Dag::create({"H", "T*", "T", "M", "Y"}, {{"H", "T*"}, {"T*", "T"}, {"T", "M"}, {"M", "Y"}, {"H", "Y"}},
                     {"T*"});
}

/// Kernel over (H, T*, T, M, Y) built from the mechanisms. Idle keeps
/// T = T*; an active regime sets T to its value except with probability
/// `slip`, when T keeps the natural value.
inline RegimeKernel frontdoor_kernel(const FrontdoorParams& p) {
  RegimeKernel k = RegimeKernel::for_targets(frontdoor_natural_dag(), {2, 2, 2, 2, 2});
  std::vector<Indicator> inds{{"F_T", 2, k.dag().index("T*"), {}}};
  k = RegimeKernel(k.dag(), k.cards(), inds, k.space());
  for (const auto& f : k.space()) {
    CellSpace space(k.variables());
    std::vector<Rational> mass(space.size());
    for (std::size_t idx = 0; idx < space.size(); ++idx) {
      auto c = space.decode(idx);  // H, T*, T, M, Y
      int h = c[0], n = c[1], t = c[2], m = c[3], y = c[4];
      Rational tp = 0;
      if (!f[0]) {
        tp = t == n ? 1 : 0;
      } else {
        if (t == *f[0]) tp += 1 - p.slip;
        if (t == n) tp += p.slip;
      }
      mass[idx] = detail::bernoulli(p.h)[h] * detail::bernoulli(p.natural[h])[n] * tp *
                  detail::bernoulli(p.mediator[t])[m] * detail::bernoulli(p.outcome[m][h])[y];
    }
    k.set_member(f, FiniteDistribution(k.variables(), mass));
  }
  return k;
}

struct FrontdoorDemo {
  AugmentedDiagram diagram;
  FrontdoorParams params;
  /// From the g-formula family of the front-door graph with the applied
  /// treatment added.
  RegimeKernel deterministic;
  /// Same mechanisms, but an active regime sometimes leaves the applied
  /// treatment at its natural value.
  RegimeKernel noisy;
  std::vector<EciStatement> solid;
  std::vector<CheckReport> deterministic_solid;
  std::vector<CheckReport> noisy_solid;
  EciStatement specific;
  CheckReport deterministic_specific;
  CheckReport noisy_specific;
  /// Y and F_T d-separated given M with F_T active.
  bool separated = false;
  std::size_t candidates_tried = 0;

  bool reproduced() const {
    auto all = [](const std::vector<CheckReport>& v) {
      return std::all_of(v.begin(), v.end(), [](const CheckReport& r) { return r.holds; });
    };
    return separated && all(deterministic_solid) && all(noisy_solid) && deterministic_specific.holds &&
           !noisy_specific.holds;
  }
};

/// Parameters are the first point of a small grid where the noisy kernel
/// breaks the context-specific independence.
inline FrontdoorDemo frontdoor_demo() {
  FrontdoorDemo out;
  Dag base = Dag::create({"H", "T", "M", "Y"}, {{"H", "T"}, {"T", "M"}, {"M", "Y"}, {"H", "Y"}}, {"T"});
  out.diagram = augment(frontdoor_natural_dag(), {"F_T"});
  out.solid = solid_eci_statements(out.diagram);
  out.specific = EciStatement{{"Y"}, {"F_T"}, {"M"}, {"F_T"}, {}};
  const Dag& d = out.diagram.base;
  NodeGraph active = instantiate_regime(out.diagram, std::vector<bool>{true});
  out.separated = d_separated(active, {d.index("Y")}, {out.diagram.indicator_node(0)}, {d.index("M")}).separated;

  const std::vector<Rational> grid{Rational(1, 4), Rational(1, 3), Rational(1, 2), Rational(2, 3), Rational(3, 4)};
  for (std::size_t code = 0;; ++code) {
    // Each parameter starts at a different grid point so the first
    // candidates are not degenerate.
    std::size_t c = code;
    std::size_t shift = 0;
    auto pick = [&] {
      Rational v = grid[(c + shift++) % grid.size()];
      c /= grid.size();
      return v;
    };
    FrontdoorParams p;
    p.slip = pick();
    p.h = pick();
    p.natural = {pick(), pick()};
    p.mediator = {pick(), pick()};
    p.outcome = {{{pick(), pick()}, {pick(), pick()}}};
    if (c != 0) throw Error("front-door search exhausted its grid");
    ++out.candidates_tried;
    RegimeKernel noisy = frontdoor_kernel(p);
    auto verdict = check_eci(noisy, out.specific);
    if (verdict.holds) continue;
    out.params = p;
    out.noisy = std::move(noisy);
    out.noisy_specific = std::move(verdict);
    break;
  }
  auto fam = build_ffrcistg(base, detail::frontdoor_observed(out.params)).family;
  out.deterministic = with_applied_treatment(family_to_kernel(fam), "T*", "T", "F_T");
  out.deterministic_specific = check_eci(out.deterministic, out.specific);
  for (const auto& st : out.solid) {
    out.deterministic_solid.push_back(check_eci(out.deterministic, st));
    out.noisy_solid.push_back(check_eci(out.noisy, st));
  }
  return out;
}

inline OrderedJson to_json(const FrontdoorDemo& d) {
  OrderedJson j;
  j["demo"] = "frontdoor";
  j["verdict"] = d.reproduced() ? "holds" : "violated";
  j["separated_given_M"] = d.separated;
  j["candidates_tried"] = d.candidates_tried;
  OrderedJson p;
  p["H"] = to_string(d.params.h);
  p["T*|H"] = OrderedJson::array({to_string(d.params.natural[0]), to_string(d.params.natural[1])});
  p["M|T"] = OrderedJson::array({to_string(d.params.mediator[0]), to_string(d.params.mediator[1])});
  p["Y|M,H"] = OrderedJson::array({OrderedJson::array({to_string(d.params.outcome[0][0]), to_string(d.params.outcome[0][1])}),
                                   OrderedJson::array({to_string(d.params.outcome[1][0]), to_string(d.params.outcome[1][1])})});
  p["slip"] = to_string(d.params.slip);
  j["parameters"] = p;
  OrderedJson solid = OrderedJson::array();
  for (std::size_t k = 0; k < d.solid.size(); ++k) {
    solid.push_back(OrderedJson{{"statement", render(d.solid[k])},
                                {"deterministic", d.deterministic_solid[k].holds ? "holds" : "violated"},
                                {"noisy", d.noisy_solid[k].holds ? "holds" : "violated"}});
  }
  j["solid_statements"] = solid;
  j["specific_statement"] = render(d.specific);
  j["deterministic_specific"] = to_json(d.deterministic_specific);
  j["noisy_specific"] = to_json(d.noisy_specific);
  return j;
}

// ---- documents ----------------------------------------------------------------------

/// {"graph", "cardinalities", "regime_space" (optional), "members"}.
/// Regime objects are keyed by target or indicator name; null or a
/// missing key is idle.
inline RegimeKernel parse_kernel(const Json& doc, const std::string& base_dir = ".") {
  if (!doc.is_object() || !doc.contains("graph") || !doc.contains("members")) {
    throw ParseError("kernel document needs \"graph\" and \"members\"");
  }
  Dag dag;
  const Json& jg = doc.at("graph");
  if (jg.is_string()) {
    std::filesystem::path path = jg.get<std::string>();
    if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
    dag = parse_dag(detail::parse_json_text(detail::read_file(path.string())));
  } else {
    dag = parse_dag(jg);
  }
  const Json& jm = doc.at("members");
  if (!jm.is_array()) throw ParseError("\"members\" must be an array");
  std::vector<int> cards(dag.size(), 0);
  if (doc.contains("cardinalities")) {
    const Json& jc = doc.at("cardinalities");
    if (!jc.is_object()) throw ParseError("\"cardinalities\" must be an object");
    for (const auto& [k, v] : jc.items()) {
      if (!v.is_number_integer() || v.get<int>() < 1) throw ParseError("bad cardinality for " + k);
      cards[static_cast<std::size_t>(dag.index(k))] = v.get<int>();
    }
  }
  std::vector<FiniteDistribution> dists;
  for (const auto& m : jm) {
    if (!m.is_object() || !m.contains("dist")) throw ParseError("each member needs \"dist\"");
    dists.push_back(parse_distribution(m.at("dist")));
    for (const auto& var : dists.back().vars()) {
      if (!dag.contains(var.name)) throw UnknownVertex("member variable " + var.name + " is not a vertex");
      auto& c = cards[static_cast<std::size_t>(dag.index(var.name))];
      if (c == 0) c = var.card;
    }
  }
  for (std::size_t v = 0; v < cards.size(); ++v) {
    if (cards[v] == 0) throw ParseError("no cardinality for " + dag.name(static_cast<int>(v)));
  }
  RegimeKernel shape = RegimeKernel::for_targets(dag, cards);
  auto read_regime = [&](const Json& j) {
    Regime f(dag.targets().size());
    if (j.is_array()) {
      if (j.size() != f.size()) throw ParseError("regime array has the wrong length");
      for (std::size_t s = 0; s < f.size(); ++s) {
        if (j[s].is_null()) continue;
        if (!j[s].is_number_integer()) throw ParseError("regime values must be integers or null");
        f[s] = j[s].get<int>();
      }
    } else if (j.is_object()) {
      for (const auto& [k, v] : j.items()) {
        int s = shape.slot(k);
        if (s < 0) throw NotATarget(k + " is not an intervention target");
        if (v.is_null()) continue;
        if (!v.is_number_integer()) throw ParseError("regime value for " + k + " must be an integer or null");
        f[static_cast<std::size_t>(s)] = v.get<int>();
      }
    } else {
      throw ParseError("a regime must be an array or an object");
    }
    return f;
  };
  std::optional<std::vector<Regime>> space;
  if (doc.contains("regime_space") && !doc.at("regime_space").is_null()) {
    const Json& js = doc.at("regime_space");
    if (!js.is_array()) throw ParseError("\"regime_space\" must be an array");
    space.emplace();
    for (const auto& f : js) space->push_back(read_regime(f));
  }
  RegimeKernel k = [&] {
    try {
      return RegimeKernel::for_targets(dag, cards, space);
    } catch (const PreconditionError& e) {
      throw ParseError(e.what());
    }
  }();
  for (std::size_t n = 0; n < dists.size(); ++n) {
    Regime f = jm[n].contains("regime") ? read_regime(jm[n].at("regime")) : k.idle();
    if (k.members().count(f)) throw ParseError("member " + k.describe(f) + " listed twice");
    try {
      k.set_member(f, dists[n]);
    } catch (const InvalidDistribution& e) {
      throw ParseError(e.what());
    } catch (const PreconditionError& e) {
      throw ParseError(e.what());
    } catch (const UnknownVariable& e) {
      throw ParseError(e.what());
    }
  }
  return k;
}

inline RegimeKernel parse_kernel_file(const std::string& path) {
  auto base = std::filesystem::path(path).parent_path().string();
  return parse_kernel(detail::parse_json_text(detail::read_file(path)), base.empty() ? "." : base);
}

inline OrderedJson serialize_kernel(const RegimeKernel& k) {
  if (!k.target_aligned()) throw NotConvertible("only target-linked kernels have a document form");
  OrderedJson j;
  j["graph"] = serialize_dag(k.dag());
  OrderedJson cards = OrderedJson::object();
  for (int v : k.dag().order()) cards[k.dag().name(v)] = k.card(v);
  j["cardinalities"] = cards;
  OrderedJson space = OrderedJson::array();
  for (const auto& f : k.space()) space.push_back(regime_array_json(f));
  j["regime_space"] = space;
  OrderedJson members = OrderedJson::array();
  for (const auto& f : k.space()) {
    if (!k.members().count(f)) continue;
    OrderedJson m;
    OrderedJson reg = OrderedJson::object();
    for (std::size_t s = 0; s < f.size(); ++s) {
      reg[k.dag().name(k.dag().targets()[s])] = f[s] ? OrderedJson(*f[s]) : OrderedJson(nullptr);
    }
    m["regime"] = reg;
    m["dist"] = serialize_distribution(k.member(f));
    members.push_back(std::move(m));
  }
  j["members"] = members;
  return j;
}

}  // namespace singleworld
