#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "singleworld/errors.hpp"
#include "singleworld/graph.hpp"
#include "singleworld/rational.hpp"

namespace singleworld {

struct Variable {
  std::string name;
  int card = 2;

  friend bool operator==(const Variable&, const Variable&) = default;
};

namespace detail {

inline std::size_t& cell_bound_storage() {
  static std::size_t bound = [] {
    if (const char* env = std::getenv("SINGLEWORLD_MAX_CELLS")) {
      char* end = nullptr;
      unsigned long long v = std::strtoull(env, &end, 10);
      if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::size_t{1} << 20;
  }();
  return bound;
}

}  // namespace detail

/// Largest product space a table may span. Defaults to 2^20 cells and can
/// be overridden through SINGLEWORLD_MAX_CELLS.
inline std::size_t max_cells() { return detail::cell_bound_storage(); }
inline void set_max_cells(std::size_t bound) { detail::cell_bound_storage() = bound; }

/// Dense row-major index over a list of finite variables. The first
/// variable is the most significant, so linear order is lexicographic.
class CellSpace {
 public:
  CellSpace() = default;
  explicit CellSpace(std::vector<Variable> vars) : vars_(std::move(vars)) {
    std::set<std::string> seen;
    std::size_t total = 1;
    strides_.assign(vars_.size(), 1);
    for (std::size_t k = vars_.size(); k-- > 0;) {
      if (vars_[k].card < 1) {
        throw InvalidDistribution("variable '" + vars_[k].name + "' needs a positive cardinality");
      }
      strides_[k] = total;
      if (total > max_cells() / static_cast<std::size_t>(vars_[k].card)) {
        throw CellBoundExceeded("product space exceeds the bound of " +
                                std::to_string(max_cells()) + " cells");
      }
      total *= static_cast<std::size_t>(vars_[k].card);
    }
    for (const auto& v : vars_) {
      if (!seen.insert(v.name).second) throw InvalidDistribution("duplicate variable '" + v.name + "'");
    }
    size_ = total;
  }

  const std::vector<Variable>& vars() const { return vars_; }
  std::size_t size() const { return size_; }
  std::size_t arity() const { return vars_.size(); }

  int position(std::string_view name) const {
    for (std::size_t k = 0; k < vars_.size(); ++k) {
      if (vars_[k].name == name) return static_cast<int>(k);
    }
    throw UnknownVariable("unknown variable '" + std::string(name) + "'");
  }
  bool has(std::string_view name) const {
    return std::any_of(vars_.begin(), vars_.end(), [&](const Variable& v) { return v.name == name; });
  }

  std::size_t encode(std::span<const int> cell) const {
    if (cell.size() != vars_.size()) throw InvalidDistribution("cell arity mismatch");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < cell.size(); ++k) {
      if (cell[k] < 0 || cell[k] >= vars_[k].card) {
        throw InvalidDistribution("state " + std::to_string(cell[k]) + " out of range for '" +
                                  vars_[k].name + "'");
      }
      idx += static_cast<std::size_t>(cell[k]) * strides_[k];
    }
    return idx;
  }
  std::vector<int> decode(std::size_t idx) const {
    std::vector<int> cell(vars_.size());
    for (std::size_t k = 0; k < vars_.size(); ++k) {
      cell[k] = static_cast<int>((idx / strides_[k]) % static_cast<std::size_t>(vars_[k].card));
    }
    return cell;
  }
  int state(std::size_t idx, std::size_t k) const {
    return static_cast<int>((idx / strides_[k]) % static_cast<std::size_t>(vars_[k].card));
  }

  friend bool operator==(const CellSpace& a, const CellSpace& b) { return a.vars_ == b.vars_; }

 private:
  std::vector<Variable> vars_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 1;
};

/// Exact joint probability table. Masses are non-negative and sum to one.
class FiniteDistribution {
 public:
  FiniteDistribution() = default;

  FiniteDistribution(std::vector<Variable> vars, std::vector<Rational> mass)
      : space_(std::move(vars)), mass_(std::move(mass)) {
    if (mass_.size() != space_.size()) throw InvalidDistribution("mass table size mismatch");
    Rational total = 0;
    for (const auto& m : mass_) {
      if (m < 0) throw InvalidDistribution("negative probability");
      total += m;
    }
    if (total != 1) throw InvalidDistribution("total mass is " + to_string(total) + ", not 1");
  }

  /// Sparse construction; omitted cells carry zero mass.
  static FiniteDistribution from_entries(std::vector<Variable> vars,
                                         const std::vector<std::pair<std::vector<int>, Rational>>& entries) {
    CellSpace space(vars);
    std::vector<Rational> mass(space.size());
    std::vector<bool> set(space.size(), false);
    for (const auto& [cell, p] : entries) {
      std::size_t idx = space.encode(cell);
      if (set[idx]) throw InvalidDistribution("cell listed twice");
      set[idx] = true;
      mass[idx] = p;
    }
    return FiniteDistribution(std::move(vars), std::move(mass));
  }

  /// Product of independent marginals, one per variable.
  static FiniteDistribution product(const std::vector<Variable>& vars,
                                    const std::vector<std::vector<Rational>>& marginals) {
    CellSpace space(vars);
    std::vector<Rational> mass(space.size(), Rational(1));
    for (std::size_t idx = 0; idx < space.size(); ++idx) {
      for (std::size_t k = 0; k < vars.size(); ++k) mass[idx] *= marginals.at(k).at(space.state(idx, k));
    }
    return FiniteDistribution(vars, std::move(mass));
  }

  const CellSpace& space() const { return space_; }
  const std::vector<Variable>& vars() const { return space_.vars(); }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& v : vars()) out.push_back(v.name);
    return out;
  }
  std::size_t size() const { return mass_.size(); }
  const Rational& mass(std::size_t idx) const { return mass_.at(idx); }
  const Rational& at(std::span<const int> cell) const { return mass_.at(space_.encode(cell)); }
  const std::vector<Rational>& masses() const { return mass_; }

  bool strictly_positive() const {
    return std::all_of(mass_.begin(), mass_.end(), [](const Rational& m) { return m > 0; });
  }

  /// Same distribution with variables permuted into `names` order.
  FiniteDistribution reordered(const std::vector<std::string>& names) const;

  friend bool operator==(const FiniteDistribution& a, const FiniteDistribution& b) {
    return a.space_ == b.space_ && a.mass_ == b.mass_;
  }

 private:
  CellSpace space_;
  std::vector<Rational> mass_;
};

namespace detail {

/// Positions of `names` within `space`, in the order given.
inline std::vector<int> positions(const CellSpace& space, const std::vector<std::string>& names) {
  std::vector<int> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(space.position(n));
  return out;
}

inline std::vector<Variable> select(const CellSpace& space, const std::vector<int>& pos) {
  std::vector<Variable> out;
  for (int p : pos) out.push_back(space.vars()[static_cast<std::size_t>(p)]);
  return out;
}

/// Linear index in the sub-space spanned by `pos` of the full cell `idx`.
inline std::size_t project(const CellSpace& full, std::size_t idx, const std::vector<int>& pos,
                           const CellSpace& sub) {
  std::size_t out = 0;
  std::size_t stride = 1;
  for (std::size_t k = pos.size(); k-- > 0;) {
    out += static_cast<std::size_t>(full.state(idx, static_cast<std::size_t>(pos[k]))) * stride;
    stride *= static_cast<std::size_t>(sub.vars()[k].card);
  }
  return out;
}

inline void require_disjoint(const std::vector<std::string>& a, const std::vector<std::string>& b,
                             const char* what) {
  for (const auto& x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) {
      throw InvalidQuery(std::string(what) + ": variable '" + x + "' appears on both sides");
    }
  }
}

inline void require_unique(const std::vector<std::string>& names) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw InvalidQuery("variable '" + n + "' listed twice");
  }
}

}  // namespace detail

/// Sums out every variable not in `keep`. Result variables follow the
/// order of `keep`.
inline FiniteDistribution marginal(const FiniteDistribution& d, const std::vector<std::string>& keep) {
  detail::require_unique(keep);
  auto pos = detail::positions(d.space(), keep);
  CellSpace sub(detail::select(d.space(), pos));
  std::vector<Rational> mass(sub.size());
  for (std::size_t idx = 0; idx < d.size(); ++idx) {
    mass[detail::project(d.space(), idx, pos, sub)] += d.mass(idx);
  }
  return FiniteDistribution(sub.vars(), std::move(mass));
}

inline FiniteDistribution FiniteDistribution::reordered(const std::vector<std::string>& names) const {
  if (names.size() != vars().size()) throw InvalidQuery("reorder must list every variable");
  return marginal(*this, names);
}

/// p(target | given). Rows whose conditioning cell has zero mass are
/// left disengaged (undefined).
struct ConditionalTable {
  std::vector<Variable> target;
  std::vector<Variable> given;
  /// Indexed by the given-cell linear index; each row is a distribution
  /// over target cells in linear order.
  std::vector<std::optional<std::vector<Rational>>> rows;

  std::size_t undefined_count() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r; }));
  }
  CellSpace target_space() const { return CellSpace(target); }
  CellSpace given_space() const { return CellSpace(given); }
};

inline ConditionalTable conditional(const FiniteDistribution& d, const std::vector<std::string>& target,
                                    const std::vector<std::string>& given) {
  detail::require_unique(target);
  detail::require_unique(given);
  detail::require_disjoint(target, given, "conditional");
  auto tpos = detail::positions(d.space(), target);
  auto gpos = detail::positions(d.space(), given);
  CellSpace tspace(detail::select(d.space(), tpos));
  CellSpace gspace(detail::select(d.space(), gpos));
  std::vector<std::vector<Rational>> joint(gspace.size(), std::vector<Rational>(tspace.size()));
  std::vector<Rational> denom(gspace.size());
  for (std::size_t idx = 0; idx < d.size(); ++idx) {
    const Rational& m = d.mass(idx);
    if (m == 0) continue;
    std::size_t g = detail::project(d.space(), idx, gpos, gspace);
    std::size_t t = detail::project(d.space(), idx, tpos, tspace);
    joint[g][t] += m;
    denom[g] += m;
  }
  ConditionalTable table{tspace.vars(), gspace.vars(), {}};
  table.rows.resize(gspace.size());
  for (std::size_t g = 0; g < gspace.size(); ++g) {
    if (denom[g] == 0) continue;
    for (auto& v : joint[g]) v /= denom[g];
    table.rows[g] = std::move(joint[g]);
  }
  return table;
}

/// One context of a conditional family: the context cell and its row.
struct ContextRow {
  std::vector<int> context;
  std::optional<std::vector<Rational>> row;
};

/// Conditional distributions indexed by context cells, plus the names of
/// the context coordinates (used when reporting witnesses).
struct ContextFamily {
  std::vector<std::string> context_names;
  std::vector<ContextRow> rows;
};

struct DependenceResult {
  bool holds = true;
  std::size_t skipped = 0;
  /// Indices into the family's rows of the first violating pair.
  std::optional<std::pair<std::size_t, std::size_t>> witness;
};

namespace detail {

/// Looks for a violating partner of row `k` that differs from it in a
/// single context coordinate, preferring earlier coordinates. Such a pair
/// shows exactly which argument the row depends on.
inline std::optional<std::pair<std::size_t, std::size_t>> adjacent_violation(std::span<const ContextRow> rows,
                                                                             std::size_t k) {
  const auto& ck = rows[k].context;
  std::optional<std::pair<std::size_t, std::size_t>> best;
  std::size_t best_coord = ck.size();
  for (std::size_t m = 0; m < rows.size(); ++m) {
    if (m == k || !rows[m].row || rows[m].context.size() != ck.size()) continue;
    std::size_t diff = 0, coord = 0;
    for (std::size_t j = 0; j < ck.size(); ++j) {
      if (rows[m].context[j] != ck[j]) {
        ++diff;
        coord = j;
      }
    }
    if (diff != 1 || coord >= best_coord || *rows[m].row == *rows[k].row) continue;
    best_coord = coord;
    best = std::make_pair(std::min(m, k), std::max(m, k));
  }
  return best;
}

}  // namespace detail

/// True iff any two contexts that agree on the `projection` coordinates
/// carry equal rows. Undefined rows are skipped and counted. The witness
/// is taken at the first violation in enumeration order; when possible it
/// is narrowed to a pair of contexts differing in one coordinate.
inline DependenceResult depends_only_on(std::span<const ContextRow> rows, std::span<const int> projection) {
  DependenceResult result;
  std::map<std::vector<int>, std::size_t> first;
  std::optional<std::size_t> offender;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& entry = rows[k];
    if (!entry.row) {
      ++result.skipped;
      continue;
    }
    std::vector<int> key;
    key.reserve(projection.size());
    for (int p : projection) key.push_back(entry.context.at(static_cast<std::size_t>(p)));
    auto [it, inserted] = first.emplace(std::move(key), k);
    if (inserted) continue;
    if (*rows[it->second].row != *entry.row && result.holds) {
      result.holds = false;
      result.witness = std::make_pair(it->second, k);
      offender = k;
    }
  }
  if (offender) {
    // The partner must agree on the projection, so only a non-projected
    // coordinate may differ.
    if (auto adj = detail::adjacent_violation(rows, *offender)) {
      const auto& a = rows[adj->first].context;
      const auto& b = rows[adj->second].context;
      bool same_projection = std::all_of(projection.begin(), projection.end(), [&](int p) {
        return a.at(static_cast<std::size_t>(p)) == b.at(static_cast<std::size_t>(p));
      });
      if (same_projection) result.witness = adj;
    }
  }
  return result;
}

inline DependenceResult depends_only_on(const ContextFamily& family, std::span<const int> projection) {
  return depends_only_on(std::span<const ContextRow>(family.rows), projection);
}

/// Projection positions of the named context coordinates.
inline std::vector<int> projection_of(const ContextFamily& family, const std::vector<std::string>& names) {
  std::vector<int> out;
  for (const auto& n : names) {
    auto it = std::find(family.context_names.begin(), family.context_names.end(), n);
    if (it == family.context_names.end()) throw UnknownVariable("unknown context coordinate '" + n + "'");
    out.push_back(static_cast<int>(it - family.context_names.begin()));
  }
  return out;
}

// ---- distribution document ------------------------------------------------

namespace detail {

inline Rational rational_from_json(const Json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (j.is_number_unsigned()) return Rational(j.get<unsigned long long>());
  if (j.is_number_float()) return parse_rational(j.dump());
  throw ParseError("probability must be a \"num/den\" string or a number");
}

}  // namespace detail

/// Parses {"variables": {"A":2,...}, "entries": [{"cell":[0,1],"p":"1/4"},...]}.
/// "variables" is read in document order; an array of [name, card] pairs is
/// also accepted.
inline FiniteDistribution parse_distribution(const Json& doc) {
  if (!doc.is_object() || !doc.contains("variables") || !doc.contains("entries")) {
    throw ParseError("distribution document needs 'variables' and 'entries'");
  }
  std::vector<Variable> vars;
  const Json& jv = doc.at("variables");
  auto card_of = [](const Json& c, const std::string& name) {
    if (!c.is_number_integer() || c.get<long long>() < 1 || c.get<long long>() > 1'000'000) {
      throw ParseError("cardinality of '" + name + "' must be a positive integer");
    }
    return static_cast<int>(c.get<long long>());
  };
  if (jv.is_object()) {
    for (const auto& [name, c] : jv.items()) vars.push_back({name, card_of(c, name)});
  } else if (jv.is_array()) {
    for (const auto& pair : jv) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string()) {
        throw ParseError("'variables' entries must be [name, cardinality]");
      }
      vars.push_back({pair[0].get<std::string>(), card_of(pair[1], pair[0].get<std::string>())});
    }
  } else {
    throw ParseError("'variables' must be an object or an array");
  }
  const Json& je = doc.at("entries");
  if (!je.is_array()) throw ParseError("'entries' must be an array");
  std::vector<std::pair<std::vector<int>, Rational>> entries;
  for (const auto& e : je) {
    if (!e.is_object() || !e.contains("cell") || !e.contains("p") || !e.at("cell").is_array()) {
      throw ParseError("each entry needs 'cell' and 'p'");
    }
    std::vector<int> cell;
    for (const auto& s : e.at("cell")) {
      if (!s.is_number_integer()) throw ParseError("cell states must be integers");
      cell.push_back(static_cast<int>(s.get<long long>()));
    }
    entries.emplace_back(std::move(cell), detail::rational_from_json(e.at("p")));
  }
  try {
    return FiniteDistribution::from_entries(std::move(vars), entries);
  } catch (const InvalidDistribution& e) {
    throw ParseError(std::string("invalid distribution: ") + e.what());
  }
}

/// Emits every non-zero cell in lexicographic order with reduced fractions.
inline OrderedJson serialize_distribution(const FiniteDistribution& d) {
  OrderedJson doc;
  OrderedJson vars = OrderedJson::object();
  for (const auto& v : d.vars()) vars[v.name] = v.card;
  doc["variables"] = vars;
  OrderedJson entries = OrderedJson::array();
  for (std::size_t idx = 0; idx < d.size(); ++idx) {
    if (d.mass(idx) == 0) continue;
    OrderedJson e;
    e["cell"] = d.space().decode(idx);
    e["p"] = to_string(d.mass(idx));
    entries.push_back(std::move(e));
  }
  doc["entries"] = entries;
  return doc;
}

}  // namespace singleworld
