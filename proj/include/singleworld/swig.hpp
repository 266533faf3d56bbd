#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "singleworld/errors.hpp"
#include "singleworld/graph.hpp"
#include "singleworld/separation.hpp"

namespace singleworld {

enum class Labeling { uniform, temporal, ancestral };

inline Labeling parse_labeling(std::string_view text) {
  if (text == "uniform") return Labeling::uniform;
  if (text == "temporal") return Labeling::temporal;
  if (text == "ancestral") return Labeling::ancestral;
  throw ParseError("unknown labeling scheme '" + std::string(text) + "'");
}

inline std::string to_string(Labeling scheme) {
  switch (scheme) {
    case Labeling::uniform: return "uniform";
    case Labeling::temporal: return "temporal";
    case Labeling::ancestral: return "ancestral";
  }
  return "uniform";
}

namespace detail {

inline std::string join(const std::vector<std::string>& items, std::string_view sep = ",") {
  std::string out;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (k) out += sep;
    out += items[k];
  }
  return out;
}

inline std::string labeled(const std::string& vertex, const std::vector<std::string>& args) {
  if (args.empty()) return vertex;
  return vertex + "(" + join(args) + ")";
}

}  // namespace detail

/// Single-world intervention graph obtained by splitting every target into
/// a random half (keeping the in-edges) and a fixed half (taking the
/// out-edges).
///
/// Node indices: random half of vertex v is node v; the fixed half of the
/// target in slot s is node size() + s. Nodes are identified internally by
/// their uniform label; the scheme only changes display labels.
class Swig {
 public:
  static Swig build(const Dag& dag, Regime values, Labeling scheme) {
    if (values.size() != dag.targets().size()) throw InvalidQuery("regime length does not match targets");
    Swig s;
    s.dag_ = dag;
    s.values_ = std::move(values);
    s.scheme_ = scheme;
    const std::size_t n = dag.size();
    std::vector<std::string> all_symbols;
    for (int t : dag.targets()) all_symbols.push_back(fixed_symbol(dag.name(t)));
    for (std::size_t v = 0; v < n; ++v) {
      s.graph_.add_node(detail::labeled(dag.name(static_cast<int>(v)), all_symbols), false);
    }
    for (int t : dag.targets()) s.graph_.add_node(fixed_symbol(dag.name(t)), true);
    for (auto [tail, head] : dag.edges()) {
      int from = dag.is_target(tail) ? s.fixed_node(tail) : tail;
      s.graph_.add_edge(from, head);
    }
    s.compute_arguments();
    return s;
  }

  const Dag& dag() const { return dag_; }
  Labeling scheme() const { return scheme_; }
  const Regime& values() const { return values_; }
  const NodeGraph& graph() const { return graph_; }

  std::size_t node_count() const { return graph_.size(); }
  bool is_fixed(int node) const { return graph_.fixed(node); }
  /// Base vertex of a node.
  int vertex_of(int node) const {
    if (!is_fixed(node)) return node;
    return dag_.targets().at(static_cast<std::size_t>(node) - dag_.size());
  }
  int random_node(int vertex) const { return vertex; }
  int fixed_node(int vertex) const {
    int slot = dag_.target_slot(vertex);
    if (slot < 0) throw NotATarget("'" + dag_.name(vertex) + "' is not an intervention target");
    return static_cast<int>(dag_.size()) + slot;
  }

  /// Targets whose fixed values label the random node under `scheme`.
  const std::vector<int>& label_targets(int node, Labeling scheme) const {
    return args_.at(static_cast<std::size_t>(scheme)).at(static_cast<std::size_t>(node));
  }

  /// Display label: "C(a,b)" for random nodes, "a=0" (or "a" when the
  /// value is symbolic) for fixed nodes.
  std::string label(int node, std::optional<Labeling> scheme = std::nullopt) const {
    int v = vertex_of(node);
    if (is_fixed(node)) {
      const auto& value = values_.at(static_cast<std::size_t>(dag_.target_slot(v)));
      std::string sym = fixed_symbol(dag_.name(v));
      return value ? sym + "=" + std::to_string(*value) : sym;
    }
    std::vector<std::string> syms;
    for (int t : label_targets(node, scheme.value_or(scheme_))) syms.push_back(fixed_symbol(dag_.name(t)));
    return detail::labeled(dag_.name(v), syms);
  }

  /// Stable identifier used in DOT and JSON output.
  std::string node_id(int node) const {
    return is_fixed(node) ? "fixed:" + dag_.name(vertex_of(node)) : dag_.name(node);
  }

  /// Resolves a query reference: a vertex name ("Y"), a label in any
  /// scheme ("Y(x0,x1)", "C(b)"), "fixed:X0", "fixed:F_X0" or a bare
  /// fixed symbol ("x0") that does not clash with a vertex name.
  int resolve(std::string_view ref) const {
    constexpr std::string_view prefix = "fixed:";
    if (ref.substr(0, prefix.size()) == prefix) {
      std::string base(ref.substr(prefix.size()));
      if (!dag_.contains(base) && base.rfind("F_", 0) == 0 && dag_.contains(base.substr(2))) {
        base = base.substr(2);
      }
      if (!dag_.contains(base) || !dag_.is_target(dag_.index(base))) {
        throw UnknownNode("no fixed node for '" + std::string(ref) + "'");
      }
      return fixed_node(dag_.index(base));
    }
    if (dag_.contains(ref)) return random_node(dag_.index(ref));
    for (std::size_t node = 0; node < dag_.size(); ++node) {
      for (Labeling scheme : {Labeling::uniform, Labeling::temporal, Labeling::ancestral}) {
        if (label(static_cast<int>(node), scheme) == ref) return static_cast<int>(node);
      }
    }
    for (int t : dag_.targets()) {
      if (fixed_symbol(dag_.name(t)) == ref) return fixed_node(t);
    }
    throw UnknownNode("unknown node '" + std::string(ref) + "'");
  }

  /// Nodes in display order: for each vertex in the total order, its random
  /// half followed by its fixed half.
  std::vector<int> display_order() const {
    std::vector<int> out;
    for (int v : dag_.order()) {
      out.push_back(random_node(v));
      if (dag_.is_target(v)) out.push_back(fixed_node(v));
    }
    return out;
  }

  /// Edges in display order (by rank of tail vertex, then head).
  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> out;
    for (auto [tail, head] : dag_.edges()) out.emplace_back(dag_.is_target(tail) ? fixed_node(tail) : tail, head);
    return out;
  }

 private:
  void compute_arguments() {
    const std::size_t total = graph_.size();
    for (auto& a : args_) a.assign(total, {});
    for (std::size_t node = 0; node < dag_.size(); ++node) {
      int v = static_cast<int>(node);
      args_[static_cast<std::size_t>(Labeling::uniform)][node] = dag_.targets();
      for (int t : dag_.targets()) {
        if (dag_.precedes(t, v)) args_[static_cast<std::size_t>(Labeling::temporal)][node].push_back(t);
      }
    }
    // Ancestral: fixed halves that still reach the random node.
    for (int t : dag_.targets()) {
      std::vector<bool> reach(total, false);
      std::vector<int> stack{fixed_node(t)};
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int c : graph_.children(u)) {
          if (!reach[c]) {
            reach[c] = true;
            stack.push_back(c);
          }
        }
      }
      for (std::size_t node = 0; node < dag_.size(); ++node) {
        if (reach[node]) args_[static_cast<std::size_t>(Labeling::ancestral)][node].push_back(t);
      }
    }
  }

  Dag dag_;
  Regime values_;
  Labeling scheme_ = Labeling::uniform;
  NodeGraph graph_;
  std::array<std::vector<std::vector<int>>, 3> args_;
};

/// Splits every target. Unassigned targets keep a symbolic fixed value.
inline Swig split(const Dag& dag, const VertexAssignment& assignment, Labeling scheme) {
  return Swig::build(dag, regime_from_assignment(dag, assignment), scheme);
}

inline Swig split(const Dag& dag, const Regime& values, Labeling scheme) {
  return Swig::build(dag, values, scheme);
}

inline std::vector<int> resolve_all(const Swig& swig, const std::vector<std::string>& refs) {
  std::vector<int> out;
  for (const auto& r : refs) out.push_back(swig.resolve(r));
  return out;
}

/// d-separation in the SWIG; node references as accepted by Swig::resolve.
inline SeparationResult d_separated(const Swig& swig, const std::vector<std::string>& x,
                                    const std::vector<std::string>& y, const std::vector<std::string>& z) {
  return d_separated(swig.graph(), resolve_all(swig, x), resolve_all(swig, y), resolve_all(swig, z));
}

// ---- output -----------------------------------------------------------------

namespace detail {

inline std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline std::string to_dot(const Swig& swig) {
  std::ostringstream out;
  out << "digraph swig {\n";
  for (int node : swig.display_order()) {
    out << "  " << detail::dot_quote(swig.node_id(node)) << " [label=" << detail::dot_quote(swig.label(node))
        << ", shape=" << (swig.is_fixed(node) ? "box" : "ellipse") << "];\n";
  }
  for (auto [tail, head] : swig.edges()) {
    out << "  " << detail::dot_quote(swig.node_id(tail)) << " -> " << detail::dot_quote(swig.node_id(head))
        << ";\n";
  }
  out << "}\n";
  return out.str();
}

inline OrderedJson to_json(const Swig& swig) {
  OrderedJson doc;
  doc["scheme"] = to_string(swig.scheme());
  OrderedJson nodes = OrderedJson::array();
  for (int node : swig.display_order()) {
    OrderedJson n;
    n["id"] = swig.node_id(node);
    n["kind"] = swig.is_fixed(node) ? "fixed" : "random";
    n["vertex"] = swig.dag().name(swig.vertex_of(node));
    n["label"] = swig.label(node);
    if (swig.is_fixed(node)) {
      const auto& value = swig.values().at(static_cast<std::size_t>(swig.dag().target_slot(swig.vertex_of(node))));
      n["value"] = value ? OrderedJson(*value) : OrderedJson(nullptr);
    }
    nodes.push_back(std::move(n));
  }
  doc["nodes"] = nodes;
  OrderedJson edges = OrderedJson::array();
  for (auto [tail, head] : swig.edges()) edges.push_back({swig.node_id(tail), swig.node_id(head)});
  doc["edges"] = edges;
  return doc;
}

// ---- local Markov listings -------------------------------------------------

/// One factorization term p(X_i(a) | X_pre(i)(a)) together with the
/// arguments it may depend on. Random arguments use vertex names, fixed
/// arguments use lower-case symbols.
struct FactorizationStatement {
  std::string vertex;
  std::string term;
  std::vector<std::string> depends;
  std::vector<std::string> ignorable;
};

/// vertex _||_ separated_from | given (under `context`), with the verdict
/// of the corresponding graphical check.
struct SeparationStatement {
  std::string vertex;
  std::vector<std::string> separated_from;
  std::vector<std::string> given;
  std::string context;
  bool verified = false;
};

enum class MarkovFormat { factorization, separation };

namespace detail {

/// Random and fixed pieces of the local statement for vertex i, as vertex
/// indices: left/right partition of pre(i) and A.
struct LocalSets {
  std::vector<int> random_sep;  // pre(i) \ (pa(i) \ A)
  std::vector<int> fixed_sep;   // A \ pa(i)
  std::vector<int> random_given;  // pa(i) \ A
  std::vector<int> fixed_given;   // A ∩ pa(i)
};

inline LocalSets local_sets(const Dag& dag, int i) {
  LocalSets s;
  const auto& pa = dag.parents(i);
  auto is_parent = [&](int u) { return std::find(pa.begin(), pa.end(), u) != pa.end(); };
  for (int u : dag.predecessors(i)) {
    if (is_parent(u) && !dag.is_target(u)) {
      s.random_given.push_back(u);
    } else {
      s.random_sep.push_back(u);
    }
  }
  for (int t : dag.targets()) {
    if (is_parent(t)) {
      s.fixed_given.push_back(t);
    } else {
      s.fixed_sep.push_back(t);
    }
  }
  return s;
}

}  // namespace detail

inline std::vector<FactorizationStatement> factorization_statements(const Dag& dag) {
  std::vector<std::string> syms;
  for (int t : dag.targets()) syms.push_back(fixed_symbol(dag.name(t)));
  auto cf = [&](int v) { return detail::labeled(dag.name(v), syms); };
  std::vector<FactorizationStatement> out;
  for (int i : dag.order()) {
    FactorizationStatement st;
    st.vertex = dag.name(i);
    std::vector<std::string> cond;
    for (int u : dag.predecessors(i)) cond.push_back(cf(u));
    st.term = "p(" + cf(i) + (cond.empty() ? "" : " | " + detail::join(cond, ", ")) + ")";
    auto sets = detail::local_sets(dag, i);
    for (int p : dag.parents(i)) {
      st.depends.push_back(dag.is_target(p) ? fixed_symbol(dag.name(p)) : dag.name(p));
    }
    for (int u : sets.random_sep) st.ignorable.push_back(dag.name(u));
    for (int t : sets.fixed_sep) st.ignorable.push_back(fixed_symbol(dag.name(t)));
    out.push_back(std::move(st));
  }
  return out;
}

/// The SWIG local Markov property as one d-separation per vertex, each
/// checked on the uniformly labeled SWIG.
inline std::vector<SeparationStatement> swig_separation_statements(const Dag& dag) {
  Swig swig = split(dag, Regime(dag.targets().size()), Labeling::uniform);
  std::vector<SeparationStatement> out;
  for (int i : dag.order()) {
    auto sets = detail::local_sets(dag, i);
    SeparationStatement st;
    st.vertex = dag.name(i);
    std::vector<int> x{swig.random_node(i)}, y, z;
    for (int u : sets.random_sep) {
      st.separated_from.push_back(dag.name(u));
      y.push_back(swig.random_node(u));
    }
    for (int t : sets.fixed_sep) {
      st.separated_from.push_back(fixed_symbol(dag.name(t)));
      y.push_back(swig.fixed_node(t));
    }
    for (int u : sets.random_given) {
      st.given.push_back(dag.name(u));
      z.push_back(swig.random_node(u));
    }
    for (int t : sets.fixed_given) {
      st.given.push_back(fixed_symbol(dag.name(t)));
      z.push_back(swig.fixed_node(t));
    }
    st.verified = d_separated(swig.graph(), x, y, z).separated;
    out.push_back(std::move(st));
  }
  return out;
}

inline OrderedJson to_json(const FactorizationStatement& st) {
  OrderedJson j;
  j["vertex"] = st.vertex;
  j["term"] = st.term;
  j["depends_on"] = st.depends;
  j["ignorable"] = st.ignorable;
  return j;
}

inline OrderedJson to_json(const SeparationStatement& st) {
  OrderedJson j;
  j["vertex"] = st.vertex;
  j["separated_from"] = st.separated_from;
  j["given"] = st.given;
  if (!st.context.empty()) j["context"] = st.context;
  j["verified"] = st.verified;
  return j;
}

inline std::string render(const FactorizationStatement& st) {
  return st.term + "  depends on {" + detail::join(st.depends, ", ") + "}";
}

inline std::string render(const SeparationStatement& st) {
  std::string out = st.vertex + " _||_ " + (st.separated_from.empty() ? "{}" : detail::join(st.separated_from, ", "));
  if (!st.given.empty()) out += " | " + detail::join(st.given, ", ");
  if (!st.context.empty()) out += (st.given.empty() ? " | " : ", ") + st.context;
  return out;
}

}  // namespace singleworld
