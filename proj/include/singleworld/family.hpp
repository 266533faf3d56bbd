#pragma once

#include <algorithm>
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
#include "singleworld/graph.hpp"
#include "singleworld/report.hpp"

namespace singleworld {

/// Which intervention sets a family carries: only D = A, or every D ⊆ A.
enum class Scope { interventional, nested };

inline std::string to_string(Scope s) { return s == Scope::interventional ? "interventional" : "nested"; }

/// Every regime over the given target cardinalities in lexicographic order.
/// With idle slots allowed, idle sorts before 0 in each slot.
inline std::vector<Regime> enumerate_regimes(const std::vector<int>& target_cards, bool allow_idle) {
  std::vector<Regime> out;
  Regime cur(target_cards.size());
  std::function<void(std::size_t)> rec = [&](std::size_t s) {
    if (s == target_cards.size()) {
      out.push_back(cur);
      return;
    }
    if (allow_idle) {
      cur[s] = std::nullopt;
      rec(s + 1);
    }
    for (int v = 0; v < target_cards[s]; ++v) {
      cur[s] = v;
      rec(s + 1);
    }
    cur[s] = std::nullopt;
  };
  rec(0);
  return out;
}

/// "{X0=0, X1=1}", skipping idle slots.
inline std::string describe_regime(const Dag& dag, const Regime& r) {
  std::string out = "{";
  bool first = true;
  for (std::size_t s = 0; s < r.size(); ++s) {
    if (!r[s]) continue;
    if (!first) out += ", ";
    first = false;
    out += dag.name(dag.targets()[s]) + "=" + std::to_string(*r[s]);
  }
  return out + "}";
}

inline OrderedJson regime_to_json(const Dag& dag, const Regime& r) {
  OrderedJson j = OrderedJson::object();
  for (std::size_t s = 0; s < r.size(); ++s) {
    if (r[s]) j[dag.name(dag.targets()[s])] = *r[s];
  }
  return j;
}

namespace detail {

inline OrderedJson cell_json(const CellSpace& space, std::size_t idx) {
  OrderedJson j = OrderedJson::object();
  auto cell = space.decode(idx);
  for (std::size_t k = 0; k < cell.size(); ++k) j[space.vars()[k].name] = cell[k];
  return j;
}

inline OrderedJson row_json(const std::vector<Rational>& row) {
  OrderedJson j = OrderedJson::array();
  for (const auto& x : row) j.push_back(to_string(x));
  return j;
}

inline std::vector<Variable> vertex_vars(const Dag& dag, const std::vector<int>& cards, const std::vector<int>& vs) {
  std::vector<Variable> out;
  for (int v : vs) out.push_back({dag.name(v), cards.at(static_cast<std::size_t>(v))});
  return out;
}

}  // namespace detail

/// A family of counterfactual distributions p(V(d)), one per regime.
/// Members are stored over V in ≺ order, named by vertex.
class CounterfactualFamily {
 public:
  CounterfactualFamily() = default;
  CounterfactualFamily(Dag dag, std::vector<int> cards, Scope scope)
      : dag_(std::move(dag)), cards_(std::move(cards)), scope_(scope) {
    if (cards_.size() != dag_.size()) throw PreconditionError("one cardinality per vertex is required");
    for (std::size_t v = 0; v < cards_.size(); ++v) {
      if (cards_[v] < 1) throw PreconditionError("cardinality of " + dag_.name(static_cast<int>(v)) + " must be positive");
    }
  }

  const Dag& dag() const { return dag_; }
  const std::vector<int>& cards() const { return cards_; }
  int card(int v) const { return cards_.at(static_cast<std::size_t>(v)); }
  Scope scope() const { return scope_; }
  const std::map<Regime, FiniteDistribution>& members() const { return members_; }

  std::vector<int> target_cards() const {
    std::vector<int> out;
    for (int t : dag_.targets()) out.push_back(card(t));
    return out;
  }

  /// Keys the scope requires, in enumeration order.
  std::vector<Regime> required_keys() const {
    return enumerate_regimes(target_cards(), scope_ == Scope::nested);
  }

  std::vector<Variable> variables() const { return detail::vertex_vars(dag_, cards_, dag_.order()); }

  /// Adds or replaces a member; variables may come in any order.
  void set_member(const Regime& key, const FiniteDistribution& d) {
    if (key.size() != dag_.targets().size()) throw PreconditionError("regime has the wrong number of slots");
    for (std::size_t s = 0; s < key.size(); ++s) {
      if (key[s] && (*key[s] < 0 || *key[s] >= card(dag_.targets()[s]))) {
        throw PreconditionError("value out of range in " + describe_regime(dag_, key));
      }
    }
    if (scope_ == Scope::interventional && std::any_of(key.begin(), key.end(), [](const auto& x) { return !x; })) {
      throw PreconditionError("member " + describe_regime(dag_, key) + " needs every target fixed");
    }
    auto expected = variables();
    std::vector<std::string> names;
    for (const auto& v : expected) names.push_back(v.name);
    if (d.vars().size() != expected.size()) {
      throw InvalidDistribution("member " + describe_regime(dag_, key) + " must range over exactly the vertices");
    }
    FiniteDistribution ordered = d.reordered(names);
    if (ordered.vars() != expected) {
      throw InvalidDistribution("member " + describe_regime(dag_, key) + " has mismatched cardinalities");
    }
    members_.insert_or_assign(key, std::move(ordered));
  }

  bool has(const Regime& key) const { return members_.count(key) > 0; }

  const FiniteDistribution& member(const Regime& key) const {
    auto it = members_.find(key);
    if (it == members_.end()) throw IncompleteFamily("missing member " + describe_regime(dag_, key));
    return it->second;
  }

  const FiniteDistribution& member(const VertexAssignment& a) const { return member(regime_from_assignment(dag_, a)); }

  void require_complete() const {
    for (const auto& key : required_keys()) member(key);
  }

  Regime observational_key() const { return Regime(dag_.targets().size()); }

 private:
  Dag dag_;
  std::vector<int> cards_;
  Scope scope_ = Scope::nested;
  std::map<Regime, FiniteDistribution> members_;
};

namespace detail {

inline std::vector<int> target_slots(const Dag& dag, const std::vector<std::string>& names, const char* what) {
  std::vector<int> out;
  for (const auto& n : names) {
    int slot = dag.target_slot(dag.index(n));
    if (slot < 0) throw NotATarget(std::string(what) + ": " + n + " is not an intervention target");
    if (std::find(out.begin(), out.end(), slot) != out.end()) {
      throw PreconditionError(std::string(what) + ": " + n + " listed twice");
    }
    out.push_back(slot);
  }
  return out;
}

inline void require_vertices(const Dag& dag, const std::vector<std::string>& names) {
  for (const auto& n : names) dag.index(n);
}

inline void require_disjoint_sets(const std::vector<std::string>& a, const std::vector<std::string>& b,
                                  const char* what) {
  for (const auto& x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) throw PreconditionError(std::string(what) + " share " + x);
  }
}

/// Product of cardinalities over slots, enumerated lexicographically.
inline std::vector<std::vector<int>> value_grid(const std::vector<int>& cards) {
  std::vector<std::vector<int>> out;
  CellSpace space([&] {
    std::vector<Variable> vs;
    for (std::size_t k = 0; k < cards.size(); ++k) vs.push_back({"#" + std::to_string(k), cards[k]});
    return vs;
  }());
  for (std::size_t idx = 0; idx < space.size(); ++idx) out.push_back(space.decode(idx));
  return out;
}

inline Regime with_values(Regime base, const std::vector<int>& slots, const std::vector<int>& values) {
  for (std::size_t k = 0; k < slots.size(); ++k) base[static_cast<std::size_t>(slots[k])] = values[k];
  return base;
}

inline std::vector<int> slot_cards(const CounterfactualFamily& fam, const std::vector<int>& slots) {
  std::vector<int> out;
  for (int s : slots) out.push_back(fam.card(fam.dag().targets()[static_cast<std::size_t>(s)]));
  return out;
}

inline OrderedJson values_json(const Dag& dag, const std::vector<int>& slots, const std::vector<int>& values) {
  OrderedJson j = OrderedJson::object();
  for (std::size_t k = 0; k < slots.size(); ++k) j[dag.name(dag.targets()[static_cast<std::size_t>(slots[k])])] = values[k];
  return j;
}

}  // namespace detail

/// Pointwise consistency: fixing B_i to the value it would take anyway
/// leaves the joint unchanged, for every B_i and every context C.
inline CheckReport check_distributional_consistency(const CounterfactualFamily& fam) {
  if (fam.scope() != Scope::nested) throw PreconditionError("distributional consistency needs every (D, d) member");
  CheckReport rep("distributional-consistency");
  const Dag& dag = fam.dag();
  auto keys = fam.required_keys();
  for (std::size_t s = 0; s < dag.targets().size(); ++s) {
    int bi = dag.targets()[s];
    auto pos = static_cast<std::size_t>(dag.rank(bi));
    for (const Regime& r : keys) {
      if (r[s]) continue;
      const auto& rhs = fam.member(r);
      for (int b = 0; b < fam.card(bi); ++b) {
        Regime rb = r;
        rb[s] = b;
        const auto& lhs = fam.member(rb);
        for (std::size_t idx = 0; idx < lhs.size(); ++idx) {
          if (lhs.space().state(idx, pos) != b) continue;
          ++rep.checked;
          if (lhs.mass(idx) == rhs.mass(idx)) continue;
          OrderedJson w;
          w["target"] = dag.name(bi);
          w["context"] = regime_to_json(dag, r);
          w["cell"] = detail::cell_json(lhs.space(), idx);
          w["lhs"] = to_string(lhs.mass(idx));
          w["rhs"] = to_string(rhs.mass(idx));
          rep.violate(std::move(w));
        }
      }
    }
  }
  return rep;
}

/// p(V(b,c)) and p(V(c)) agree on every cell where X_B = b.
inline CheckReport check_vector_consistency(const CounterfactualFamily& fam, const std::vector<std::string>& B,
                                            const std::vector<std::string>& C) {
  const Dag& dag = fam.dag();
  auto bs = detail::target_slots(dag, B, "B");
  auto cs = detail::target_slots(dag, C, "C");
  detail::require_disjoint_sets(B, C, "B and C");
  CheckReport rep("vector-consistency");
  std::vector<std::size_t> bpos;
  for (const auto& n : B) bpos.push_back(static_cast<std::size_t>(dag.rank(dag.index(n))));
  for (const auto& c : detail::value_grid(detail::slot_cards(fam, cs))) {
    Regime rc = detail::with_values(fam.observational_key(), cs, c);
    const auto& rhs = fam.member(rc);
    for (const auto& b : detail::value_grid(detail::slot_cards(fam, bs))) {
      Regime rbc = detail::with_values(rc, bs, b);
      const auto& lhs = fam.member(rbc);
      for (std::size_t idx = 0; idx < lhs.size(); ++idx) {
        bool match = true;
        for (std::size_t k = 0; k < bpos.size() && match; ++k) match = lhs.space().state(idx, bpos[k]) == b[k];
        if (!match) continue;
        ++rep.checked;
        if (lhs.mass(idx) == rhs.mass(idx)) continue;
        OrderedJson w;
        w["b"] = detail::values_json(dag, bs, b);
        w["c"] = detail::values_json(dag, cs, c);
        w["cell"] = detail::cell_json(lhs.space(), idx);
        w["lhs"] = to_string(lhs.mass(idx));
        w["rhs"] = to_string(rhs.mass(idx));
        rep.violate(std::move(w));
      }
    }
  }
  return rep;
}

/// p(Y(b,c) | B(b,c)=b, W(b,c)=w) = p(Y(c) | B(c)=b, W(c)=w) on rows
/// defined on both sides.
inline CheckReport check_conditional_consistency(const CounterfactualFamily& fam, const std::vector<std::string>& B,
                                                 const std::vector<std::string>& C,
                                                 const std::vector<std::string>& Y,
                                                 const std::vector<std::string>& W) {
  const Dag& dag = fam.dag();
  if (Y.empty()) throw PreconditionError("Y must be non-empty");
  auto bs = detail::target_slots(dag, B, "B");
  auto cs = detail::target_slots(dag, C, "C");
  detail::require_vertices(dag, Y);
  detail::require_vertices(dag, W);
  detail::require_disjoint_sets(B, C, "B and C");
  detail::require_disjoint_sets(Y, W, "Y and W");
  detail::require_disjoint_sets(Y, B, "Y and B");
  detail::require_disjoint_sets(W, B, "W and B");
  CheckReport rep("conditional-consistency");
  std::vector<std::string> given = B;
  given.insert(given.end(), W.begin(), W.end());
  for (const auto& c : detail::value_grid(detail::slot_cards(fam, cs))) {
    Regime rc = detail::with_values(fam.observational_key(), cs, c);
    auto rhs = conditional(fam.member(rc), Y, given);
    CellSpace gspace = rhs.given_space();
    for (const auto& b : detail::value_grid(detail::slot_cards(fam, bs))) {
      auto lhs = conditional(fam.member(detail::with_values(rc, bs, b)), Y, given);
      for (std::size_t g = 0; g < gspace.size(); ++g) {
        bool match = true;
        for (std::size_t k = 0; k < b.size() && match; ++k) match = gspace.state(g, k) == b[k];
        if (!match) continue;
        if (!lhs.rows[g] || !rhs.rows[g]) {
          ++rep.skipped;
          continue;
        }
        ++rep.checked;
        if (*lhs.rows[g] == *rhs.rows[g]) continue;
        OrderedJson w;
        w["b"] = detail::values_json(dag, bs, b);
        w["c"] = detail::values_json(dag, cs, c);
        w["given"] = detail::cell_json(gspace, g);
        w["lhs"] = detail::row_json(*lhs.rows[g]);
        w["rhs"] = detail::row_json(*rhs.rows[g]);
        rep.violate(std::move(w));
      }
    }
  }
  return rep;
}

enum class ReductionMode { joint, conditional };

/// If the (b,c)-indexed tables over W do not vary with b, they equal the
/// c-member's table. In conditional mode the tables are p(Y | W).
inline ImplicationReport reduce_interventions(const CounterfactualFamily& fam, const std::vector<std::string>& B,
                                              const std::vector<std::string>& C, const std::vector<std::string>& W,
                                              ReductionMode mode, const std::vector<std::string>& Y = {}) {
  const Dag& dag = fam.dag();
  auto bs = detail::target_slots(dag, B, "B");
  auto cs = detail::target_slots(dag, C, "C");
  detail::require_vertices(dag, W);
  detail::require_disjoint_sets(B, C, "B and C");
  for (const auto& b : B) {
    if (std::find(W.begin(), W.end(), b) == W.end()) {
      throw PreconditionError("B must be contained in W; " + b + " is not");
    }
  }
  if (mode == ReductionMode::conditional) {
    if (Y.empty()) throw PreconditionError("conditional mode needs a non-empty Y");
    detail::require_vertices(dag, Y);
    detail::require_disjoint_sets(Y, W, "Y and W");
  }
  auto bgrid = detail::value_grid(detail::slot_cards(fam, bs));
  auto cgrid = detail::value_grid(detail::slot_cards(fam, cs));

  // Rows of the table at (b, c), one per conditioning cell (a single row
  // holding the whole marginal in joint mode).
  auto table = [&](const Regime& key) {
    const auto& m = fam.member(key);
    std::vector<std::optional<std::vector<Rational>>> rows;
    if (mode == ReductionMode::joint) {
      rows.emplace_back(marginal(m, W).masses());
    } else {
      rows = conditional(m, Y, W).rows;
    }
    return rows;
  };

  CheckReport premise("premise");
  for (const auto& c : cgrid) {
    Regime rc = detail::with_values(fam.observational_key(), cs, c);
    std::vector<ContextRow> rows;
    for (const auto& b : bgrid) {
      auto t = table(detail::with_values(rc, bs, b));
      for (std::size_t g = 0; g < t.size(); ++g) {
        std::vector<int> ctx = b;
        ctx.push_back(static_cast<int>(g));
        rows.push_back({std::move(ctx), std::move(t[g])});
      }
    }
    std::vector<int> proj{static_cast<int>(bs.size())};
    auto res = depends_only_on(rows, proj);
    premise.skipped += res.skipped;
    premise.checked += rows.size();
    if (!res.holds) {
      auto [i, j] = *res.witness;
      std::vector<int> bi(rows[i].context.begin(), rows[i].context.end() - 1);
      std::vector<int> bj(rows[j].context.begin(), rows[j].context.end() - 1);
      OrderedJson w;
      w["c"] = detail::values_json(dag, cs, c);
      w["b"] = OrderedJson::array({detail::values_json(dag, bs, bi), detail::values_json(dag, bs, bj)});
      if (mode == ReductionMode::conditional) {
        w["given"] = detail::cell_json(conditional(fam.member(rc), Y, W).given_space(),
                                       static_cast<std::size_t>(rows[i].context.back()));
      }
      premise.violate(std::move(w));
    }
  }

  return implication(std::move(premise), [&] {
    CheckReport out("conclusion");
    for (const auto& c : cgrid) {
      Regime rc = detail::with_values(fam.observational_key(), cs, c);
      auto rhs = table(rc);
      for (const auto& b : bgrid) {
        auto lhs = table(detail::with_values(rc, bs, b));
        for (std::size_t g = 0; g < lhs.size(); ++g) {
          if (!lhs[g] || !rhs[g]) {
            ++out.skipped;
            continue;
          }
          ++out.checked;
          if (*lhs[g] == *rhs[g]) continue;
          OrderedJson w;
          w["b"] = detail::values_json(dag, bs, b);
          w["c"] = detail::values_json(dag, cs, c);
          if (mode == ReductionMode::conditional) {
            w["given"] = detail::cell_json(conditional(fam.member(rc), Y, W).given_space(), g);
          }
          w["lhs"] = detail::row_json(*lhs[g]);
          w["rhs"] = detail::row_json(*rhs[g]);
          out.violate(std::move(w));
        }
      }
    }
    return out;
  });
}

namespace detail {

/// Context family for vertex i: contexts are (a, w_pre(i)) with a over the
/// family's targets and w over pre(i) under the given graph's order.
struct LocalContexts {
  std::vector<std::string> names;
  std::vector<ContextRow> rows;
  std::size_t fixed_count = 0;
};

inline LocalContexts local_contexts(const CounterfactualFamily& fam, const Dag& g, int i,
                                    const std::vector<Regime>& keys, const std::vector<std::string>& fixed_names) {
  LocalContexts out;
  out.names = fixed_names;
  out.fixed_count = out.names.size();
  auto pre = g.predecessors(i);
  std::vector<std::string> pre_names = g.to_names(pre);
  for (const auto& n : pre_names) out.names.push_back(n);
  for (const Regime& a : keys) {
    auto table = conditional(fam.member(a), {g.name(i)}, pre_names);
    CellSpace gs = table.given_space();
    for (std::size_t w = 0; w < gs.size(); ++w) {
      std::vector<int> ctx;
      for (const auto& x : a) ctx.push_back(*x);
      auto cell = gs.decode(w);
      ctx.insert(ctx.end(), cell.begin(), cell.end());
      out.rows.push_back({std::move(ctx), table.rows[w]});
    }
  }
  return out;
}

inline OrderedJson context_json(const LocalContexts& lc, const ContextRow& row) {
  OrderedJson j = OrderedJson::object();
  for (std::size_t k = 0; k < lc.names.size(); ++k) j[lc.names[k]] = row.context[k];
  return j;
}

inline OrderedJson pair_json(const LocalContexts& lc, std::pair<std::size_t, std::size_t> w) {
  const auto& r1 = lc.rows[w.first];
  const auto& r2 = lc.rows[w.second];
  OrderedJson j;
  j["contexts"] = OrderedJson::array({context_json(lc, r1), context_json(lc, r2)});
  j["rows"] = OrderedJson::array({row_json(*r1.row), row_json(*r2.row)});
  return j;
}

inline void require_same_vertices(const CounterfactualFamily& fam, const Dag& g) {
  const Dag& dag = fam.dag();
  std::set<std::string> a(dag.names().begin(), dag.names().end());
  std::set<std::string> b(g.names().begin(), g.names().end());
  if (a != b) throw PreconditionError("graph and family have different vertex sets");
  if (dag.target_names() != g.target_names()) throw PreconditionError("graph and family have different targets");
}

}  // namespace detail

namespace detail {

/// Core of the local Markov checks; fixed_names names the fixed-value
/// coordinates (one per target) in reports.
inline CheckReport local_markov(const CounterfactualFamily& fam, const Dag& g,
                                const std::vector<std::string>& fixed_names, std::string name) {
  require_same_vertices(fam, g);
  const Dag& dag = fam.dag();
  auto keys = enumerate_regimes(fam.target_cards(), false);
  for (const auto& k : keys) fam.member(k);
  CheckReport rep(std::move(name));
  for (int gi : g.order()) {
    auto lc = local_contexts(fam, g, gi, keys, fixed_names);
    auto pre = g.predecessors(gi);
    const auto& pa = g.parents(gi);
    auto in_pa = [&](int v) { return std::find(pa.begin(), pa.end(), v) != pa.end(); };

    std::vector<int> proj;
    std::vector<int> time_order, causal, assoc, ignor;
    for (std::size_t s = 0; s < dag.targets().size(); ++s) {
      int t = g.index(dag.name(dag.targets()[s]));
      int coord = static_cast<int>(s);
      if (in_pa(t)) {
        proj.push_back(coord);
      } else if (!g.precedes(t, gi)) {
        time_order.push_back(coord);
      } else {
        causal.push_back(coord);
      }
    }
    for (std::size_t k = 0; k < pre.size(); ++k) {
      int coord = static_cast<int>(lc.fixed_count + k);
      int v = pre[k];
      bool target = g.is_target(v);
      if (in_pa(v) && !target) {
        proj.push_back(coord);
      } else if (in_pa(v)) {
        ignor.push_back(coord);
      } else {
        assoc.push_back(coord);
      }
    }
    std::sort(proj.begin(), proj.end());
    auto res = depends_only_on(lc.rows, proj);
    VertexVerdict verdict;
    verdict.vertex = g.name(gi);
    verdict.holds = res.holds;
    verdict.skipped = res.skipped;
    for (int c : proj) verdict.depends_on.push_back(lc.names[static_cast<std::size_t>(c)]);
    if (!res.holds) {
      verdict.witness = detail::pair_json(lc, *res.witness);
      std::vector<std::pair<std::string, std::vector<int>>> parts{{"time order", time_order},
                                                                  {"causal Markov", causal},
                                                                  {"associational Markov", assoc},
                                                                  {"ignorability", ignor}};
      for (const auto& [label, part] : parts) {
        if (part.empty()) continue;
        std::vector<int> others;
        for (int c = 0; c < static_cast<int>(lc.names.size()); ++c) {
          if (std::find(part.begin(), part.end(), c) == part.end()) others.push_back(c);
        }
        if (!depends_only_on(lc.rows, others).holds) verdict.failing_components.push_back(label);
      }
    }
    rep.add_vertex(std::move(verdict));
  }
  return rep;
}

}  // namespace detail

/// For each vertex i, p(X_i(a) | X_pre(i)(a) = w) may depend only on the
/// fixed values of intervened parents and the natural values of the other
/// parents. Failing vertices are labeled with the parts of the property
/// that fail on their own.
inline CheckReport check_swig_local_markov(const CounterfactualFamily& fam, const Dag& g) {
  std::vector<std::string> symbols;
  for (int t : fam.dag().targets()) symbols.push_back(fixed_symbol(fam.dag().name(t)));
  return detail::local_markov(fam, g, symbols, "swig-local-markov");
}

inline CheckReport check_swig_local_markov(const CounterfactualFamily& fam) {
  return check_swig_local_markov(fam, fam.dag());
}

/// Ordered local Markov property of a plain distribution.
inline CheckReport check_observed_markov(const FiniteDistribution& p, const Dag& dag) {
  std::set<std::string> vs(dag.names().begin(), dag.names().end());
  auto names = p.names();
  if (std::set<std::string>(names.begin(), names.end()) != vs || names.size() != vs.size()) {
    throw PreconditionError("distribution must range over exactly the graph's vertices");
  }
  CheckReport rep("observed-markov");
  for (int i : dag.order()) {
    auto pre = dag.predecessors(i);
    auto table = conditional(p, {dag.name(i)}, dag.to_names(pre));
    CellSpace gs = table.given_space();
    std::vector<ContextRow> rows;
    for (std::size_t w = 0; w < gs.size(); ++w) rows.push_back({gs.decode(w), table.rows[w]});
    std::vector<int> proj;
    for (std::size_t k = 0; k < pre.size(); ++k) {
      if (dag.has_edge(pre[k], i)) proj.push_back(static_cast<int>(k));
    }
    auto res = depends_only_on(rows, proj);
    VertexVerdict v;
    v.vertex = dag.name(i);
    v.holds = res.holds;
    v.skipped = res.skipped;
    for (int c : proj) v.depends_on.push_back(gs.vars()[static_cast<std::size_t>(c)].name);
    if (!res.holds) {
      auto [a, b] = *res.witness;
      OrderedJson w;
      w["contexts"] = OrderedJson::array({detail::cell_json(gs, a), detail::cell_json(gs, b)});
      w["rows"] = OrderedJson::array({detail::row_json(*rows[a].row), detail::row_json(*rows[b].row)});
      v.witness = std::move(w);
    }
    rep.add_vertex(std::move(v));
  }
  return rep;
}

/// Interventions after k leave the joint of X_1..X_k unchanged.
inline CheckReport check_no_future_effect(const CounterfactualFamily& fam, std::string_view k) {
  const Dag& dag = fam.dag();
  int kv = dag.index(k);
  std::vector<std::string> prefix;
  for (int v : dag.order()) {
    prefix.push_back(dag.name(v));
    if (v == kv) break;
  }
  CheckReport rep("no-future-effect");
  for (const Regime& a : enumerate_regimes(fam.target_cards(), false)) {
    Regime past = a;
    for (std::size_t s = 0; s < past.size(); ++s) {
      if (!dag.precedes(dag.targets()[s], kv)) past[s] = std::nullopt;
    }
    auto lhs = marginal(fam.member(a), prefix);
    auto rhs = marginal(fam.member(past), prefix);
    for (std::size_t idx = 0; idx < lhs.size(); ++idx) {
      ++rep.checked;
      if (lhs.mass(idx) == rhs.mass(idx)) continue;
      OrderedJson w;
      w["regime"] = regime_to_json(dag, a);
      w["cell"] = detail::cell_json(lhs.space(), idx);
      w["lhs"] = to_string(lhs.mass(idx));
      w["rhs"] = to_string(rhs.mass(idx));
      rep.violate(std::move(w));
    }
  }
  return rep;
}

/// The four successive equalities reducing p(X_i(a) | X_pre(i)(a)) to
/// p(X_i(a_pa) | X_{pa\A}(a_pa)).
struct ChainReport {
  std::string vertex;
  Regime regime;
  std::vector<CheckReport> steps;

  bool holds() const {
    return std::all_of(steps.begin(), steps.end(), [](const CheckReport& s) { return s.holds; });
  }
  std::optional<std::size_t> first_failure() const {
    for (std::size_t k = 0; k < steps.size(); ++k) {
      if (!steps[k].holds) return k + 1;
    }
    return std::nullopt;
  }
};

inline ChainReport kernel_chain_check(const CounterfactualFamily& fam, std::string_view vertex, const Regime& a) {
  if (fam.scope() != Scope::nested) throw PreconditionError("the kernel chain needs every (D, d) member");
  const Dag& dag = fam.dag();
  int i = dag.index(vertex);
  if (a.size() != dag.targets().size() || std::any_of(a.begin(), a.end(), [](const auto& x) { return !x; })) {
    throw PreconditionError("the kernel chain needs a full regime over the targets");
  }
  auto pre = dag.predecessors(i);
  const auto& pa = dag.parents(i);
  auto in_pa = [&](int v) { return std::find(pa.begin(), pa.end(), v) != pa.end(); };
  Regime past = a, parents = a;
  for (std::size_t s = 0; s < a.size(); ++s) {
    int t = dag.targets()[s];
    if (!dag.precedes(t, i)) past[s] = std::nullopt;
    if (!in_pa(t)) parents[s] = std::nullopt;
  }
  std::vector<int> pa_sorted(pa.begin(), pa.end());
  std::sort(pa_sorted.begin(), pa_sorted.end(), [&](int x, int y) { return dag.precedes(x, y); });
  std::vector<int> pa_free;
  for (int v : pa_sorted) {
    if (!dag.is_target(v)) pa_free.push_back(v);
  }
  std::vector<std::string> target{dag.name(i)};
  auto t14 = conditional(fam.member(a), target, dag.to_names(pre));
  auto t15 = conditional(fam.member(past), target, dag.to_names(pre));
  auto t16 = conditional(fam.member(parents), target, dag.to_names(pre));
  auto t17 = conditional(fam.member(parents), target, dag.to_names(pa_sorted));
  auto t18 = conditional(fam.member(parents), target, dag.to_names(pa_free));
  CellSpace pre_space = t14.given_space();
  CellSpace pa_space = t17.given_space();
  CellSpace free_space = t18.given_space();

  auto sub_index = [&](const std::vector<int>& cell, const std::vector<int>& subset, const CellSpace& space) {
    std::vector<int> sub;
    for (int v : subset) {
      auto k = static_cast<std::size_t>(std::find(pre.begin(), pre.end(), v) - pre.begin());
      sub.push_back(cell[k]);
    }
    return space.encode(sub);
  };

  ChainReport out;
  out.vertex = dag.name(i);
  out.regime = a;
  const char* names[] = {"drop-future-targets", "drop-non-parent-targets", "condition-on-parents",
                         "drop-intervened-parents"};
  for (const char* n : names) out.steps.emplace_back(n);
  auto compare = [&](CheckReport& rep, const std::optional<std::vector<Rational>>& l,
                     const std::optional<std::vector<Rational>>& r, std::size_t w) {
    if (!l || !r) {
      ++rep.skipped;
      return;
    }
    ++rep.checked;
    if (*l == *r) return;
    OrderedJson j;
    j["given"] = detail::cell_json(pre_space, w);
    j["lhs"] = detail::row_json(*l);
    j["rhs"] = detail::row_json(*r);
    rep.violate(std::move(j));
  };
  for (std::size_t w = 0; w < pre_space.size(); ++w) {
    auto cell = pre_space.decode(w);
    std::size_t wp = sub_index(cell, pa_sorted, pa_space);
    std::size_t wf = sub_index(cell, pa_free, free_space);
    compare(out.steps[0], t14.rows[w], t15.rows[w], w);
    compare(out.steps[1], t15.rows[w], t16.rows[w], w);
    compare(out.steps[2], t16.rows[w], t17.rows[wp], w);
    compare(out.steps[3], t17.rows[wp], t18.rows[wf], w);
  }
  return out;
}

inline OrderedJson to_json(const ChainReport& r, const Dag& dag) {
  OrderedJson j;
  j["check"] = "kernel-chain";
  j["verdict"] = r.holds() ? "holds" : "violated";
  j["vertex"] = r.vertex;
  j["regime"] = regime_to_json(dag, r.regime);
  if (auto f = r.first_failure()) j["first_failing_step"] = *f;
  OrderedJson steps = OrderedJson::array();
  for (std::size_t k = 0; k < r.steps.size(); ++k) {
    OrderedJson s = to_json(r.steps[k]);
    s["step"] = k + 1;
    steps.push_back(std::move(s));
  }
  j["steps"] = steps;
  return j;
}

/// Every vertex and every full regime, folded into one report.
inline CheckReport kernel_chain_check_all(const CounterfactualFamily& fam) {
  CheckReport rep("kernel-chain");
  for (int i : fam.dag().order()) {
    for (const Regime& a : enumerate_regimes(fam.target_cards(), false)) {
      auto chain = kernel_chain_check(fam, fam.dag().name(i), a);
      for (std::size_t k = 0; k < chain.steps.size(); ++k) {
        CheckReport step = chain.steps[k];
        for (auto& w : step.witnesses) {
          OrderedJson tagged;
          tagged["vertex"] = chain.vertex;
          tagged["regime"] = regime_to_json(fam.dag(), a);
          tagged["step"] = k + 1;
          for (const auto& [key, v] : w.items()) tagged[key] = v;
          w = std::move(tagged);
        }
        rep.absorb(step);
      }
    }
  }
  return rep;
}

/// Local Markov property against the complete graph over ≺: only time
/// order and ignorability are imposed.
inline CheckReport check_complete_graph_markov(const CounterfactualFamily& fam) {
  auto rep = check_swig_local_markov(fam, fam.dag().completed());
  rep.name = "complete-graph-markov";
  return rep;
}

/// Extended g-formula over precomputed factors p(X_i | X_pa(i)).
class GFormula {
 public:
  GFormula(const Dag& dag, const FiniteDistribution& p) : dag_(dag) {
    std::set<std::string> vs(dag.names().begin(), dag.names().end());
    auto names = p.names();
    if (std::set<std::string>(names.begin(), names.end()) != vs || names.size() != vs.size()) {
      throw PreconditionError("distribution must range over exactly the graph's vertices");
    }
    ordered_ = p.reordered(dag.order_names());
    cards_.resize(dag.size());
    for (int v : dag.order()) cards_[static_cast<std::size_t>(v)] = ordered_.vars()[static_cast<std::size_t>(dag.rank(v))].card;
    for (std::size_t v = 0; v < dag.size(); ++v) {
      std::vector<int> pa = dag.parents(static_cast<int>(v));
      std::sort(pa.begin(), pa.end(), [&](int x, int y) { return dag.precedes(x, y); });
      parents_.push_back(pa);
      factors_.push_back(conditional(ordered_, {dag.name(static_cast<int>(v))}, dag.to_names(pa)));
    }
  }

  const std::vector<int>& cards() const { return cards_; }
  const FiniteDistribution& observed() const { return ordered_; }

  /// p(V(d)) over V in ≺ order. Throws NotIdentified when a factor row
  /// with zero-mass conditioning cell is needed.
  FiniteDistribution member(const Regime& regime) const {
    const auto& order = dag_.order();
    std::vector<Variable> vars = ordered_.vars();
    CellSpace space(vars);
    std::vector<Rational> mass(space.size());
    std::vector<int> cell(order.size());
    std::function<void(std::size_t, const Rational&)> rec = [&](std::size_t k, const Rational& partial) {
      if (k == order.size()) {
        mass[space.encode(cell)] = partial;
        return;
      }
      int v = order[k];
      const auto& pa = parents_[static_cast<std::size_t>(v)];
      std::vector<int> pv;
      for (int p : pa) {
        int slot = dag_.target_slot(p);
        if (slot >= 0 && regime[static_cast<std::size_t>(slot)]) {
          pv.push_back(*regime[static_cast<std::size_t>(slot)]);
        } else {
          pv.push_back(cell[static_cast<std::size_t>(dag_.rank(p))]);
        }
      }
      const auto& table = factors_[static_cast<std::size_t>(v)];
      const auto& row = table.rows[table.given_space().encode(pv)];
      if (!row) {
        VertexAssignment where;
        std::string text;
        for (std::size_t j = 0; j < pa.size(); ++j) {
          where[dag_.name(pa[j])] = pv[j];
          text += (j ? ", " : "") + dag_.name(pa[j]) + "=" + std::to_string(pv[j]);
        }
        throw NotIdentified(dag_.name(v), where,
                            "not identified: p(" + dag_.name(v) + " | " + text +
                                ") is needed but its conditioning cell has probability zero");
      }
      for (int x = 0; x < cards_[static_cast<std::size_t>(v)]; ++x) {
        Rational m = partial * (*row)[static_cast<std::size_t>(x)];
        if (m == 0) continue;
        cell[k] = x;
        rec(k + 1, m);
      }
    };
    rec(0, Rational(1));
    return FiniteDistribution(std::move(vars), std::move(mass));
  }

 private:
  Dag dag_;
  FiniteDistribution ordered_;
  std::vector<int> cards_;
  std::vector<std::vector<int>> parents_;
  std::vector<ConditionalTable> factors_;
};

inline FiniteDistribution gformula_member(const Dag& dag, const FiniteDistribution& p, const Regime& regime) {
  return GFormula(dag, p).member(regime);
}

struct FfrcistgBuild {
  CounterfactualFamily family;
  /// Markov check of p against the graph; a failure is a warning only.
  CheckReport observed_markov;
};

/// The nested family given by the extended g-formula for every (D, d).
inline FfrcistgBuild build_ffrcistg(const Dag& dag, const FiniteDistribution& p) {
  GFormula g(dag, p);
  FfrcistgBuild out{CounterfactualFamily(dag, g.cards(), Scope::nested), check_observed_markov(p, dag)};
  for (const Regime& key : out.family.required_keys()) out.family.set_member(key, g.member(key));
  return out;
}

// ---- documents --------------------------------------------------------------

/// {"graph": <graph or path>, "cardinalities": {...}, "members": [...]}.
/// Graph paths are resolved against base_dir.
inline CounterfactualFamily parse_family(const Json& doc, const std::string& base_dir = ".") {
  if (!doc.is_object() || !doc.contains("graph") || !doc.contains("members")) {
    throw ParseError("family document needs \"graph\" and \"members\"");
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
  std::vector<std::pair<Regime, FiniteDistribution>> parsed;
  for (const auto& m : jm) {
    if (!m.is_object() || !m.contains("dist")) throw ParseError("each member needs \"dist\"");
    VertexAssignment a;
    if (m.contains("intervention")) {
      const Json& ji = m.at("intervention");
      if (!ji.is_object()) throw ParseError("\"intervention\" must be an object");
      for (const auto& [k, v] : ji.items()) {
        if (!v.is_number_integer()) throw ParseError("intervention value for " + k + " must be an integer");
        a[k] = v.get<int>();
      }
    }
    parsed.emplace_back(regime_from_assignment(dag, a), parse_distribution(m.at("dist")));
  }
  std::vector<int> cards(dag.size(), 0);
  if (doc.contains("cardinalities")) {
    const Json& jc = doc.at("cardinalities");
    if (!jc.is_object()) throw ParseError("\"cardinalities\" must be an object");
    for (const auto& [k, v] : jc.items()) {
      if (!v.is_number_integer() || v.get<int>() < 1) throw ParseError("bad cardinality for " + k);
      cards[static_cast<std::size_t>(dag.index(k))] = v.get<int>();
    }
  }
  for (const auto& [key, d] : parsed) {
    for (const auto& var : d.vars()) {
      if (!dag.contains(var.name)) throw UnknownVertex("member variable " + var.name + " is not a vertex");
      auto& c = cards[static_cast<std::size_t>(dag.index(var.name))];
      if (c == 0) c = var.card;
    }
  }
  for (std::size_t v = 0; v < cards.size(); ++v) {
    if (cards[v] == 0) throw ParseError("no cardinality for " + dag.name(static_cast<int>(v)));
  }
  bool nested = dag.targets().empty();
  for (const auto& [key, d] : parsed) {
    if (std::any_of(key.begin(), key.end(), [](const auto& x) { return !x; })) nested = true;
  }
  CounterfactualFamily fam(dag, cards, nested ? Scope::nested : Scope::interventional);
  for (const auto& [key, d] : parsed) {
    if (fam.has(key)) throw ParseError("member " + describe_regime(dag, key) + " listed twice");
    try {
      fam.set_member(key, d);
    } catch (const InvalidDistribution& e) {
      throw ParseError(e.what());
    } catch (const UnknownVariable& e) {
      throw ParseError(e.what());
    }
  }
  return fam;
}

inline CounterfactualFamily parse_family_file(const std::string& path) {
  auto base = std::filesystem::path(path).parent_path().string();
  return parse_family(detail::parse_json_text(detail::read_file(path)), base.empty() ? "." : base);
}

inline OrderedJson serialize_family(const CounterfactualFamily& fam) {
  OrderedJson j;
  j["graph"] = serialize_dag(fam.dag());
  OrderedJson cards = OrderedJson::object();
  for (int v : fam.dag().order()) cards[fam.dag().name(v)] = fam.card(v);
  j["cardinalities"] = cards;
  OrderedJson members = OrderedJson::array();
  for (const Regime& key : fam.required_keys()) {
    if (!fam.has(key)) continue;
    OrderedJson m;
    m["intervention"] = regime_to_json(fam.dag(), key);
    m["dist"] = serialize_distribution(fam.member(key));
    members.push_back(std::move(m));
  }
  j["members"] = members;
  return j;
}

}  // namespace singleworld
