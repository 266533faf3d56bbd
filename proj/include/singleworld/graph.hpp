#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "singleworld/errors.hpp"

namespace singleworld {

/// Documents keep their key order so that variable declarations are read
/// in the order they are written.
using Json = nlohmann::ordered_json;
using OrderedJson = nlohmann::ordered_json;

/// Per-target intervention values, positionally aligned with
/// Dag::targets() (i.e. targets listed in the order of the DAG). A
/// disengaged coordinate means "not intervened" (the idle regime).
using Regime = std::vector<std::optional<int>>;

/// Vertex -> state index. Used for interventions and partial cells.
using VertexAssignment = std::map<std::string, int>;

/// A DAG over opaque vertex names with a distinguished set of
/// intervention targets and a fixed topological order.
///
/// Vertices are addressed by their index in the declaration list; every
/// adjacency list and every derived set is sorted by position in the
/// order, not by index, so listings follow the order directly.
class Dag {
 public:
  Dag() = default;

  /// Validates and builds. When `order` is absent the order is computed by
  /// Kahn's algorithm, breaking ties lexicographically on vertex names.
  static Dag create(std::vector<std::string> vertices,
                    const std::vector<std::pair<std::string, std::string>>& edges,
                    const std::vector<std::string>& targets,
                    const std::optional<std::vector<std::string>>& order = std::nullopt) {
    Dag dag;
    dag.names_ = std::move(vertices);
    const std::size_t n = dag.names_.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (dag.names_[i].empty()) throw ParseError("vertex names must be non-empty");
      if (!dag.lookup_.emplace(dag.names_[i], static_cast<int>(i)).second) {
        throw ParseError("duplicate vertex '" + dag.names_[i] + "'");
      }
    }
    dag.parents_.assign(n, {});
    dag.children_.assign(n, {});
    std::set<std::pair<int, int>> seen;
    for (const auto& [tail, head] : edges) {
      int t = dag.index(tail);
      int h = dag.index(head);
      if (t == h) throw CyclicGraph("self-loop on '" + tail + "'");
      if (!seen.emplace(t, h).second) continue;
      dag.parents_[h].push_back(t);
      dag.children_[t].push_back(h);
    }
    if (auto cycle = dag.find_cycle()) {
      std::string text;
      for (int v : *cycle) text += dag.names_[v] + " -> ";
      text += dag.names_[cycle->front()];
      throw CyclicGraph("cycle detected: " + text);
    }

    if (order) {
      if (order->size() != n) throw InvalidOrder("order must list every vertex exactly once");
      std::vector<bool> used(n, false);
      for (const auto& name : *order) {
        int v = dag.index(name);
        if (used[v]) throw InvalidOrder("vertex '" + name + "' repeated in order");
        used[v] = true;
        dag.order_.push_back(v);
      }
    } else {
      dag.order_ = dag.kahn_order();
    }
    dag.rank_.assign(n, 0);
    for (std::size_t pos = 0; pos < n; ++pos) dag.rank_[dag.order_[pos]] = static_cast<int>(pos);
    for (std::size_t v = 0; v < n; ++v) {
      for (int p : dag.parents_[v]) {
        if (dag.rank_[p] >= dag.rank_[v]) {
          throw InvalidOrder("order is not topological: '" + dag.names_[p] + "' -> '" +
                             dag.names_[v] + "'");
        }
      }
    }
    auto by_rank = [&dag](int a, int b) { return dag.rank_[a] < dag.rank_[b]; };
    for (std::size_t v = 0; v < n; ++v) {
      std::sort(dag.parents_[v].begin(), dag.parents_[v].end(), by_rank);
      std::sort(dag.children_[v].begin(), dag.children_[v].end(), by_rank);
    }

    dag.target_slot_.assign(n, -1);
    std::vector<bool> is_target(n, false);
    for (const auto& t : targets) is_target[dag.index(t)] = true;
    for (int v : dag.order_) {
      if (is_target[v]) {
        dag.target_slot_[v] = static_cast<int>(dag.targets_.size());
        dag.targets_.push_back(v);
      }
    }
    return dag;
  }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(int v) const { return names_.at(static_cast<std::size_t>(v)); }

  int index(std::string_view name) const {
    auto it = lookup_.find(std::string(name));
    if (it == lookup_.end()) throw UnknownVertex("unknown vertex '" + std::string(name) + "'");
    return it->second;
  }
  bool contains(std::string_view name) const { return lookup_.count(std::string(name)) > 0; }

  const std::vector<int>& parents(int v) const { return parents_.at(static_cast<std::size_t>(v)); }
  const std::vector<int>& children(int v) const { return children_.at(static_cast<std::size_t>(v)); }
  bool has_edge(int tail, int head) const {
    const auto& ch = children(tail);
    return std::find(ch.begin(), ch.end(), head) != ch.end();
  }

  /// Vertices listed in the total order.
  const std::vector<int>& order() const { return order_; }
  int rank(int v) const { return rank_.at(static_cast<std::size_t>(v)); }
  bool precedes(int a, int b) const { return rank(a) < rank(b); }

  /// Targets in the total order; Regime coordinates follow this list.
  const std::vector<int>& targets() const { return targets_; }
  bool is_target(int v) const { return target_slot(v) >= 0; }
  /// Position of `v` within targets(), or -1.
  int target_slot(int v) const { return target_slot_.at(static_cast<std::size_t>(v)); }

  /// {u : u precedes v}, in order.
  std::vector<int> predecessors(int v) const {
    return {order_.begin(), order_.begin() + rank(v)};
  }

  /// Proper ancestors of v, in order.
  std::vector<int> ancestors(int v) const {
    std::vector<bool> mark(size(), false);
    std::vector<int> stack{v};
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int p : parents(u)) {
        if (!mark[p]) {
          mark[p] = true;
          stack.push_back(p);
        }
      }
    }
    std::vector<int> out;
    for (int u : order_) {
      if (mark[u]) out.push_back(u);
    }
    return out;
  }

  /// Edges sorted by (rank of tail, rank of head).
  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> out;
    for (int t : order_) {
      for (int h : children(t)) out.emplace_back(t, h);
    }
    return out;
  }
  std::size_t edge_count() const {
    std::size_t total = 0;
    for (const auto& ch : children_) total += ch.size();
    return total;
  }

  /// Same vertices, order and targets, but with every forward pair joined.
  Dag completed() const {
    std::vector<std::pair<std::string, std::string>> all;
    for (std::size_t i = 0; i < order_.size(); ++i) {
      for (std::size_t j = i + 1; j < order_.size(); ++j) {
        all.emplace_back(names_[order_[i]], names_[order_[j]]);
      }
    }
    return create(names_, all, target_names(), order_names());
  }

  /// Same graph with a different target set.
  Dag with_targets(const std::vector<std::string>& targets) const {
    return create(names_, edge_names(), targets, order_names());
  }

  std::vector<std::string> target_names() const { return to_names(targets_); }
  std::vector<std::string> order_names() const { return to_names(order_); }
  std::vector<std::pair<std::string, std::string>> edge_names() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (auto [t, h] : edges()) out.emplace_back(names_[t], names_[h]);
    return out;
  }
  std::vector<std::string> to_names(const std::vector<int>& vs) const {
    std::vector<std::string> out;
    out.reserve(vs.size());
    for (int v : vs) out.push_back(names_.at(static_cast<std::size_t>(v)));
    return out;
  }

  friend bool operator==(const Dag& a, const Dag& b) {
    return a.names_ == b.names_ && a.order_ == b.order_ && a.targets_ == b.targets_ &&
           a.parents_ == b.parents_;
  }

 private:
  std::optional<std::vector<int>> find_cycle() const {
    const std::size_t n = size();
    std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
    std::vector<int> stack;
    std::function<std::optional<std::vector<int>>(int)> visit =
        [&](int v) -> std::optional<std::vector<int>> {
      state[v] = 1;
      stack.push_back(v);
      for (int c : children_[v]) {
        if (state[c] == 1) {
          auto start = std::find(stack.begin(), stack.end(), c);
          return std::vector<int>(start, stack.end());
        }
        if (state[c] == 0) {
          if (auto found = visit(c)) return found;
        }
      }
      stack.pop_back();
      state[v] = 2;
      return std::nullopt;
    };
    for (std::size_t v = 0; v < n; ++v) {
      if (state[v] == 0) {
        if (auto found = visit(static_cast<int>(v))) return found;
      }
    }
    return std::nullopt;
  }

  std::vector<int> kahn_order() const {
    const std::size_t n = size();
    std::vector<std::size_t> indegree(n);
    for (std::size_t v = 0; v < n; ++v) indegree[v] = parents_[v].size();
    auto later = [this](int a, int b) { return names_[a] > names_[b]; };
    std::priority_queue<int, std::vector<int>, decltype(later)> ready(later);
    for (std::size_t v = 0; v < n; ++v) {
      if (indegree[v] == 0) ready.push(static_cast<int>(v));
    }
    std::vector<int> out;
    while (!ready.empty()) {
      int v = ready.top();
      ready.pop();
      out.push_back(v);
      for (int c : children_[v]) {
        if (--indegree[c] == 0) ready.push(c);
      }
    }
    return out;
  }

  std::vector<std::string> names_;
  std::map<std::string, int> lookup_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
  std::vector<int> order_;
  std::vector<int> rank_;
  std::vector<int> targets_;
  std::vector<int> target_slot_;
};

enum class Relation { parents, predecessors, ancestors, children };

/// Named relative query; result listed in the order of the DAG.
inline std::vector<std::string> relatives(const Dag& dag, std::string_view v, Relation kind) {
  int idx = dag.index(v);
  switch (kind) {
    case Relation::parents: return dag.to_names(dag.parents(idx));
    case Relation::predecessors: return dag.to_names(dag.predecessors(idx));
    case Relation::ancestors: return dag.to_names(dag.ancestors(idx));
    case Relation::children: return dag.to_names(dag.children(idx));
  }
  return {};
}

namespace detail {

inline std::vector<std::string> string_list(const Json& j, const char* field) {
  if (!j.is_array()) throw ParseError(std::string("'") + field + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& item : j) {
    if (!item.is_string()) throw ParseError(std::string("'") + field + "' must contain strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

inline Json parse_json_text(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace detail

/// Builds a Dag from the graph document
/// {"vertices": [...], "edges": [[tail, head], ...], "targets": [...], "order": [...]}.
/// "targets" and "order" are optional.
inline Dag parse_dag(const Json& doc) {
  if (!doc.is_object()) throw ParseError("graph document must be an object");
  if (!doc.contains("vertices")) throw ParseError("graph document lacks 'vertices'");
  auto vertices = detail::string_list(doc.at("vertices"), "vertices");
  std::vector<std::pair<std::string, std::string>> edges;
  if (doc.contains("edges")) {
    const Json& e = doc.at("edges");
    if (!e.is_array()) throw ParseError("'edges' must be an array");
    for (const auto& pair : e) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
        throw ParseError("each edge must be a [tail, head] pair of names");
      }
      edges.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
    }
  }
  std::vector<std::string> targets;
  if (doc.contains("targets")) targets = detail::string_list(doc.at("targets"), "targets");
  std::optional<std::vector<std::string>> order;
  if (doc.contains("order") && !doc.at("order").is_null()) {
    order = detail::string_list(doc.at("order"), "order");
  }
  return Dag::create(std::move(vertices), edges, targets, order);
}

inline Dag parse_dag_text(std::string_view text) { return parse_dag(detail::parse_json_text(text)); }

/// Canonical field order: vertices, edges, targets, order.
inline OrderedJson serialize_dag(const Dag& dag) {
  OrderedJson doc;
  doc["vertices"] = dag.names();
  OrderedJson edges = OrderedJson::array();
  for (const auto& [t, h] : dag.edge_names()) edges.push_back({t, h});
  doc["edges"] = edges;
  doc["targets"] = dag.target_names();
  doc["order"] = dag.order_names();
  return doc;
}

/// Lower-case symbol used for a target's fixed value ("X0" -> "x0").
inline std::string fixed_symbol(std::string_view vertex) {
  std::string out(vertex);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Name of the regime indicator attached to a target ("T" -> "F_T").
inline std::string indicator_name(std::string_view vertex) { return "F_" + std::string(vertex); }

/// Converts a name -> value map over targets into a Regime. Keys must be
/// targets; unlisted targets stay idle.
inline Regime regime_from_assignment(const Dag& dag, const VertexAssignment& assignment) {
  Regime out(dag.targets().size());
  for (const auto& [name, value] : assignment) {
    int v = dag.index(name);
    int slot = dag.target_slot(v);
    if (slot < 0) throw NotATarget("'" + name + "' is not an intervention target");
    out[static_cast<std::size_t>(slot)] = value;
  }
  return out;
}

inline VertexAssignment assignment_from_regime(const Dag& dag, const Regime& regime) {
  VertexAssignment out;
  for (std::size_t s = 0; s < regime.size(); ++s) {
    if (regime[s]) out[dag.name(dag.targets()[s])] = *regime[s];
  }
  return out;
}

/// "X0=0,X1=1" -> {X0:0, X1:1}. Empty text yields an empty map.
inline VertexAssignment parse_assignment(std::string_view text) {
  VertexAssignment out;
  std::string s(text);
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto trim = [](std::string x) {
      x.erase(0, x.find_first_not_of(" \t"));
      x.erase(x.find_last_not_of(" \t") + 1);
      return x;
    };
    item = trim(item);
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw ParseError("assignment '" + item + "' lacks '='");
    std::string key = trim(item.substr(0, eq));
    std::string value = trim(item.substr(eq + 1));
    if (key.empty() || value.empty() ||
        value.find_first_not_of("0123456789") != std::string::npos || value.size() > 9) {
      throw ParseError("malformed assignment '" + item + "'");
    }
    if (!out.emplace(key, std::stoi(value)).second) {
      throw ParseError("vertex '" + key + "' assigned twice");
    }
  }
  return out;
}

}  // namespace singleworld
