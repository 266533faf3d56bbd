#pragma once

// Shared fixtures, seeded generators and brute-force oracles for the test
// suites. Oracles here deliberately avoid the library's own algorithms.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "singleworld/singleworld.hpp"

namespace swtest {

using namespace singleworld;

inline Dag chain_dag() { return Dag::create({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}}, {"A", "B"}); }

inline Dag fig2_dag() {
  return Dag::create({"H", "X0", "Z", "X1", "Y"},
                     {{"H", "X1"}, {"H", "Z"}, {"X0", "Z"}, {"Z", "Y"}, {"Z", "X1"}, {"X1", "Y"}},
                     {"X0", "X1"});
}

inline Rational r(const char* text) { return parse_rational(text); }

/// Chain A->B->C with p(A=1)=1/2, p(B=1|A)=1/4,3/4, p(C=1|B)=1/3,2/3.
inline FiniteDistribution chain_joint() {
  std::vector<Rational> pa{r("1/2"), r("1/2")};
  std::vector<std::vector<Rational>> pb{{r("3/4"), r("1/4")}, {r("1/4"), r("3/4")}};
  std::vector<std::vector<Rational>> pc{{r("2/3"), r("1/3")}, {r("1/3"), r("2/3")}};
  std::vector<Rational> mass;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) mass.push_back(pa[a] * pb[a][b] * pc[b][c]);
  return FiniteDistribution({{"A", 2}, {"B", 2}, {"C", 2}}, mass);
}

/// Conditional probability tables indexed [vertex][parent cell][state],
/// parent cells in lexicographic order of the parent list (rank order).
struct Cpts {
  std::vector<std::vector<std::vector<Rational>>> table;
};

inline std::size_t parent_cell(const Dag& dag, int v, const std::vector<int>& full, const std::vector<int>& cards) {
  std::size_t idx = 0;
  for (int p : dag.parents(v)) idx = idx * static_cast<std::size_t>(cards[p]) + static_cast<std::size_t>(full[p]);
  return idx;
}

/// Random strictly positive rational CPTs with small denominators.
inline Cpts random_cpts(const Dag& dag, const std::vector<int>& cards, std::mt19937_64& rng) {
  Cpts c;
  c.table.resize(dag.size());
  std::uniform_int_distribution<int> weight(1, 6);
  for (std::size_t v = 0; v < dag.size(); ++v) {
    std::size_t rows = 1;
    for (int p : dag.parents(static_cast<int>(v))) rows *= static_cast<std::size_t>(cards[p]);
    for (std::size_t row = 0; row < rows; ++row) {
      std::vector<int> w(static_cast<std::size_t>(cards[v]));
      int total = 0;
      for (auto& x : w) total += (x = weight(rng));
      std::vector<Rational> dist;
      for (int x : w) dist.emplace_back(x, total);
      c.table[v].push_back(dist);
    }
  }
  return c;
}

/// Joint over vertices in declaration order, by direct product of CPTs.
inline FiniteDistribution joint_from_cpts(const Dag& dag, const std::vector<int>& cards, const Cpts& c) {
  std::vector<Variable> vars;
  for (std::size_t v = 0; v < dag.size(); ++v) vars.push_back({dag.name(static_cast<int>(v)), cards[v]});
  CellSpace space(vars);
  std::vector<Rational> mass(space.size());
  for (std::size_t idx = 0; idx < space.size(); ++idx) {
    auto cell = space.decode(idx);
    Rational m = 1;
    for (std::size_t v = 0; v < dag.size(); ++v) {
      m *= c.table[v][parent_cell(dag, static_cast<int>(v), cell, cards)][static_cast<std::size_t>(cell[v])];
    }
    mass[idx] = m;
  }
  return FiniteDistribution(vars, mass);
}

/// Brute-force extended g-formula straight from CPTs: intervened parents
/// take their fixed values inside each factor.
inline FiniteDistribution gformula_oracle(const Dag& dag, const std::vector<int>& cards, const Cpts& c,
                                          const VertexAssignment& intervention) {
  std::vector<Variable> vars;
  for (std::size_t v = 0; v < dag.size(); ++v) vars.push_back({dag.name(static_cast<int>(v)), cards[v]});
  CellSpace space(vars);
  std::vector<Rational> mass(space.size());
  for (std::size_t idx = 0; idx < space.size(); ++idx) {
    auto cell = space.decode(idx);
    auto parent_values = cell;
    for (const auto& [name, value] : intervention) parent_values[dag.index(name)] = value;
    Rational m = 1;
    for (std::size_t v = 0; v < dag.size(); ++v) {
      m *= c.table[v][parent_cell(dag, static_cast<int>(v), parent_values, cards)][static_cast<std::size_t>(cell[v])];
    }
    mass[idx] = m;
  }
  return FiniteDistribution(vars, mass);
}

/// Moves extra mass delta onto one cell and renormalizes.
inline FiniteDistribution perturbed(const FiniteDistribution& d, std::size_t idx, const Rational& delta) {
  std::vector<Rational> mass = d.masses();
  mass[idx] += delta;
  for (auto& m : mass) m /= (1 + delta);
  return FiniteDistribution(d.vars(), mass);
}

/// Nested family whose members come straight from gformula_oracle.
inline CounterfactualFamily oracle_family(const Dag& dag, const std::vector<int>& cards, const Cpts& c) {
  CounterfactualFamily fam(dag, cards, Scope::nested);
  for (const auto& key : fam.required_keys()) {
    fam.set_member(key, gformula_oracle(dag, cards, c, assignment_from_regime(dag, key)));
  }
  return fam;
}

/// Pointwise consistency by direct lookup: for each member with target t
/// idle and each value b, compare cells with t=b against the member with
/// t fixed to b.
inline bool consistency_oracle(const CounterfactualFamily& fam) {
  const Dag& dag = fam.dag();
  for (const auto& [key, base] : fam.members()) {
    auto a = assignment_from_regime(dag, key);
    for (int t : dag.targets()) {
      if (a.count(dag.name(t))) continue;
      for (int b = 0; b < fam.card(t); ++b) {
        auto ab = a;
        ab[dag.name(t)] = b;
        const auto& fixed = fam.member(ab);
        for (std::size_t idx = 0; idx < base.size(); ++idx) {
          auto cell = base.space().decode(idx);
          if (cell[static_cast<std::size_t>(base.space().position(dag.name(t)))] != b) continue;
          if (fixed.at(cell) != base.at(cell)) return false;
        }
      }
    }
  }
  return true;
}

/// CPTs read off a joint over vertices in declaration order by direct
/// summation. Rows whose parent cell has zero mass become uniform.
inline Cpts cpts_from_joint(const Dag& dag, const std::vector<int>& cards, const FiniteDistribution& p) {
  Cpts c;
  c.table.resize(dag.size());
  CellSpace space(p.vars());
  for (std::size_t v = 0; v < dag.size(); ++v) {
    std::size_t rows = 1;
    for (int q : dag.parents(static_cast<int>(v))) rows *= static_cast<std::size_t>(cards[q]);
    std::vector<std::vector<Rational>> joint(rows, std::vector<Rational>(static_cast<std::size_t>(cards[v])));
    for (std::size_t idx = 0; idx < space.size(); ++idx) {
      auto cell = space.decode(idx);
      joint[parent_cell(dag, static_cast<int>(v), cell, cards)][static_cast<std::size_t>(cell[v])] += p.mass(idx);
    }
    for (auto& row : joint) {
      Rational total = 0;
      for (const auto& m : row) total += m;
      for (auto& m : row) m = total == 0 ? Rational(1, static_cast<long>(row.size())) : m / total;
    }
    c.table[v] = std::move(joint);
  }
  return c;
}

/// A family is a valid FFRCISTG for dag when its observational member
/// factorizes over dag and every member is the g-formula of that member.
inline bool valid_family_oracle(const CounterfactualFamily& fam) {
  const Dag& dag = fam.dag();
  std::vector<std::string> declared;
  for (std::size_t v = 0; v < dag.size(); ++v) declared.push_back(dag.name(static_cast<int>(v)));
  auto p = fam.member(fam.observational_key()).reordered(declared);
  auto c = cpts_from_joint(dag, fam.cards(), p);
  if (joint_from_cpts(dag, fam.cards(), c).masses() != p.masses()) return false;
  for (const auto& [key, d] : fam.members()) {
    auto want = gformula_oracle(dag, fam.cards(), c, assignment_from_regime(dag, key));
    if (d.reordered(declared).masses() != want.masses()) return false;
  }
  return true;
}

/// Random DAG on n vertices named V0..V{n-1}: a random permutation fixes the
/// topological order, each forward pair is an edge with probability 1/2.
inline Dag random_dag(std::mt19937_64& rng, int n, int max_targets) {
  std::vector<std::string> names;
  for (int k = 0; k < n; ++k) names.push_back("V" + std::to_string(k));
  std::vector<std::string> perm = names;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::pair<std::string, std::string>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng)) edges.emplace_back(perm[i], perm[j]);
  std::uniform_int_distribution<int> count(1, std::min(max_targets, n));
  std::vector<std::string> pool = names;
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(static_cast<std::size_t>(count(rng)));
  return Dag::create(names, edges, pool, perm);
}

// ---- d-separation oracle ----------------------------------------------------

inline bool has_edge(const NodeGraph& g, int a, int b) {
  const auto& ch = g.children(a);
  return std::find(ch.begin(), ch.end(), b) != ch.end();
}

/// Activeness of one path straight from the definition: every collider has
/// a descendant in z, every other intermediate is outside z, and no
/// intermediate is fixed. Fixed members of z are ignored.
inline bool path_active(const NodeGraph& g, const std::vector<int>& path, const std::set<int>& z) {
  std::set<int> zr;
  for (int v : z)
    if (!g.fixed(v)) zr.insert(v);
  for (std::size_t k = 1; k + 1 < path.size(); ++k) {
    int a = path[k - 1], m = path[k], b = path[k + 1];
    if (g.fixed(m)) return false;
    if (has_edge(g, a, m) && has_edge(g, b, m)) {
      std::set<int> desc{m};
      std::vector<int> stack{m};
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int c : g.children(u))
          if (desc.insert(c).second) stack.push_back(c);
      }
      if (std::none_of(desc.begin(), desc.end(), [&](int d) { return zr.count(d) > 0; })) return false;
    } else if (zr.count(m)) {
      return false;
    }
  }
  return true;
}

/// Enumerates every simple path between x and y in the skeleton and tests
/// each one with path_active.
inline bool dsep_oracle(const NodeGraph& g, const std::set<int>& x, const std::set<int>& y, const std::set<int>& z) {
  const int n = static_cast<int>(g.size());
  std::vector<int> path;
  std::vector<bool> on(static_cast<std::size_t>(n), false);
  std::function<bool(int)> dfs = [&](int u) {
    if (path.size() > 1 && y.count(u)) return path_active(g, path, z);
    for (int w = 0; w < n; ++w) {
      if (on[w] || !(has_edge(g, u, w) || has_edge(g, w, u))) continue;
      on[w] = true;
      path.push_back(w);
      if (dfs(w)) return true;
      path.pop_back();
      on[w] = false;
    }
    return false;
  };
  for (int s : x) {
    path = {s};
    std::fill(on.begin(), on.end(), false);
    on[s] = true;
    if (dfs(s)) return false;
  }
  return true;
}

/// A witness (by node name) must be a simple path from x to y that is
/// active given z.
inline bool witness_is_active(const NodeGraph& g, const std::vector<std::string>& witness, const std::set<int>& x,
                              const std::set<int>& y, const std::set<int>& z) {
  if (witness.size() < 2) return false;
  std::vector<int> path;
  for (const auto& name : witness) {
    auto id = g.find(name);
    if (!id) return false;
    path.push_back(*id);
  }
  if (!x.count(path.front()) || !y.count(path.back())) return false;
  if (std::set<int>(path.begin(), path.end()).size() != path.size()) return false;
  for (std::size_t k = 0; k + 1 < path.size(); ++k)
    if (!has_edge(g, path[k], path[k + 1]) && !has_edge(g, path[k + 1], path[k])) return false;
  return path_active(g, path, z);
}

}  // namespace swtest
