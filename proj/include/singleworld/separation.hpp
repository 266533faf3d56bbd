#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "singleworld/errors.hpp"

namespace singleworld {

/// Directed graph whose nodes are either random or fixed. Fixed nodes have
/// no parents and block every path they sit on as an intermediate.
class NodeGraph {
 public:
  int add_node(std::string name, bool fixed) {
    names_.push_back(std::move(name));
    fixed_.push_back(fixed);
    parents_.emplace_back();
    children_.emplace_back();
    return static_cast<int>(names_.size()) - 1;
  }

  void add_edge(int tail, int head) {
    if (fixed_.at(static_cast<std::size_t>(head))) {
      throw InvalidQuery("fixed node '" + names_[head] + "' cannot have a parent");
    }
    children_.at(static_cast<std::size_t>(tail)).push_back(head);
    parents_.at(static_cast<std::size_t>(head)).push_back(tail);
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(int v) const { return names_.at(static_cast<std::size_t>(v)); }
  bool fixed(int v) const { return fixed_.at(static_cast<std::size_t>(v)); }
  const std::vector<int>& parents(int v) const { return parents_.at(static_cast<std::size_t>(v)); }
  const std::vector<int>& children(int v) const { return children_.at(static_cast<std::size_t>(v)); }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& c : children_) n += c.size();
    return n;
  }

  std::optional<int> find(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<int>(it - names_.begin());
  }

 private:
  std::vector<std::string> names_;
  std::vector<bool> fixed_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
};

struct SeparationResult {
  bool separated = true;
  /// A d-connecting path from x to y, by node name, when not separated.
  std::vector<std::string> witness;
};

namespace detail {

inline std::vector<bool> ancestral_closure(const NodeGraph& g, const std::vector<bool>& seed) {
  std::vector<bool> mark = seed;
  std::vector<int> stack;
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (seed[v]) stack.push_back(static_cast<int>(v));
  }
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int p : g.parents(v)) {
      if (!mark[p]) {
        mark[p] = true;
        stack.push_back(p);
      }
    }
  }
  return mark;
}

/// Depth-first search over simple paths, extending only while the prefix
/// stays active. Used to produce a readable witness once reachability has
/// established that one exists.
class WitnessSearch {
 public:
  WitnessSearch(const NodeGraph& g, const std::vector<bool>& in_z, const std::vector<bool>& anc_z,
                const std::vector<bool>& in_y)
      : g_(g), in_z_(in_z), anc_z_(anc_z), in_y_(in_y), on_path_(g.size(), false) {}

  std::optional<std::vector<int>> from(int x) {
    path_ = {x};
    on_path_[x] = true;
    bool found = extend(false);
    on_path_[x] = false;
    if (found) return path_;
    return std::nullopt;
  }

 private:
  bool passable(int cur, bool arrived_into_cur, bool leaving_to_parent) const {
    if (g_.fixed(cur)) return false;
    if (arrived_into_cur && leaving_to_parent) return anc_z_[cur];
    return !in_z_[cur];
  }

  bool extend(bool arrived_into_cur) {
    int cur = path_.back();
    if (path_.size() > 1 && in_y_[cur]) return true;
    auto move = [&](int next, bool to_parent) {
      if (on_path_[next]) return false;
      if (path_.size() > 1 && !passable(cur, arrived_into_cur, to_parent)) return false;
      path_.push_back(next);
      on_path_[next] = true;
      if (extend(!to_parent)) return true;
      on_path_[next] = false;
      path_.pop_back();
      return false;
    };
    for (int p : g_.parents(cur)) {
      if (move(p, true)) return true;
    }
    for (int c : g_.children(cur)) {
      if (move(c, false)) return true;
    }
    return false;
  }

  const NodeGraph& g_;
  const std::vector<bool>& in_z_;
  const std::vector<bool>& anc_z_;
  const std::vector<bool>& in_y_;
  std::vector<bool> on_path_;
  std::vector<int> path_;
};

}  // namespace detail

/// d-separation of x and y given z, with fixed nodes never acting as
/// intermediates. Fixed nodes listed in z are ignored. The three sets must
/// be pairwise disjoint.
inline SeparationResult d_separated(const NodeGraph& g, const std::vector<int>& x, const std::vector<int>& y,
                                    const std::vector<int>& z) {
  const std::size_t n = g.size();
  std::vector<int> owner(n, -1);
  auto claim = [&](const std::vector<int>& set, int tag) {
    for (int v : set) {
      if (v < 0 || static_cast<std::size_t>(v) >= n) throw UnknownNode("node index out of range");
      if (owner[v] != -1 && owner[v] != tag) {
        throw InvalidQuery("node '" + g.name(v) + "' appears in more than one query set");
      }
      owner[v] = tag;
    }
  };
  claim(x, 0);
  claim(y, 1);
  claim(z, 2);

  std::vector<bool> in_z(n, false), in_y(n, false);
  for (int v : z) {
    if (!g.fixed(v)) in_z[v] = true;
  }
  for (int v : y) in_y[v] = true;
  const std::vector<bool> anc_z = detail::ancestral_closure(g, in_z);

  // Reachability over (node, arrived-from-child?) states.
  enum Dir { up = 0, down = 1 };
  std::vector<std::array<bool, 2>> seen(n, {false, false});
  std::vector<std::pair<int, int>> queue;
  for (int v : x) {
    seen[v][up] = true;
    queue.emplace_back(v, up);
  }
  std::vector<bool> is_x(n, false);
  for (int v : x) is_x[v] = true;
  bool connected = false;
  for (std::size_t head = 0; head < queue.size() && !connected; ++head) {
    auto [v, dir] = queue[head];
    if (in_y[v]) {
      connected = true;
      break;
    }
    if (g.fixed(v) && !is_x[v]) continue;
    auto push = [&](int w, int d) {
      if (!seen[w][d]) {
        seen[w][d] = true;
        queue.emplace_back(w, d);
      }
    };
    if (dir == up) {
      if (in_z[v]) continue;
      for (int p : g.parents(v)) push(p, up);
      for (int c : g.children(v)) push(c, down);
    } else {
      if (!in_z[v]) {
        for (int c : g.children(v)) push(c, down);
      }
      if (anc_z[v]) {
        for (int p : g.parents(v)) push(p, up);
      }
    }
  }

  SeparationResult result;
  if (!connected) return result;
  result.separated = false;
  detail::WitnessSearch search(g, in_z, anc_z, in_y);
  for (int v : x) {
    if (auto path = search.from(v)) {
      for (int u : *path) result.witness.push_back(g.name(u));
      break;
    }
  }
  return result;
}

}  // namespace singleworld
