#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "singleworld/decision.hpp"
#include "singleworld/dist.hpp"
#include "singleworld/errors.hpp"
#include "singleworld/family.hpp"
#include "singleworld/graph.hpp"
#include "singleworld/report.hpp"
#include "singleworld/swig.hpp"

namespace singleworld::cli {

enum class Verdict { holds, violated, error };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::violated: return "violated";
    case Verdict::error: return "error";
  }
  return "error";
}

/// `report` always carries a top-level "verdict"; `output` is what goes to
/// standard output (a JSON line unless a text format was requested).
struct CommandResult {
  Verdict verdict = Verdict::holds;
  OrderedJson report = OrderedJson::object();
  std::string output;
  std::string message;

  int exit_code() const { return verdict == Verdict::holds ? 0 : verdict == Verdict::violated ? 1 : 2; }
};

namespace detail {

inline Verdict verdict_of(bool holds) { return holds ? Verdict::holds : Verdict::violated; }

inline CommandResult finish(std::string command, Verdict v, OrderedJson body, std::optional<std::string> text = {}) {
  CommandResult r;
  r.verdict = v;
  r.report["command"] = std::move(command);
  r.report["verdict"] = to_string(v);
  for (auto& [k, val] : body.items()) r.report[k] = val;
  r.output = text ? *text : r.report.dump() + "\n";
  return r;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline Dag load_graph(const std::string& path) {
  return parse_dag(singleworld::detail::parse_json_text(singleworld::detail::read_file(path)));
}

inline FiniteDistribution load_distribution(const std::string& path) {
  return parse_distribution(singleworld::detail::parse_json_text(singleworld::detail::read_file(path)));
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

}  // namespace detail

/// Runs a command body, turning library errors into an error result.
template <class F>
CommandResult guarded(const std::string& command, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    CommandResult r;
    r.verdict = Verdict::error;
    r.message = e.what();
    r.report["command"] = command;
    r.report["verdict"] = "error";
    r.report["message"] = r.message;
    r.output = r.report.dump() + "\n";
    return r;
  }
}

// ---- split / dsep / markov --------------------------------------------------------

struct SplitOptions {
  std::string graph;
  std::string assign;
  std::string labeling = "uniform";
  std::string format = "dot";
};

inline CommandResult cmd_split(const SplitOptions& o) {
  return guarded("split", [&] {
    Dag dag = detail::load_graph(o.graph);
    Swig swig = split(dag, parse_assignment(o.assign), parse_labeling(o.labeling));
    if (o.format == "dot") return detail::finish("split", Verdict::holds, {}, to_dot(swig));
    if (o.format != "json") throw InvalidQuery("unknown format '" + o.format + "'");
    return detail::finish("split", Verdict::holds, OrderedJson{{"swig", to_json(swig)}});
  });
}

struct DsepOptions {
  std::string graph;
  std::string assign;
  std::string x, y, z;
};

inline CommandResult cmd_dsep(const DsepOptions& o) {
  return guarded("dsep", [&] {
    Dag dag = detail::load_graph(o.graph);
    Swig swig = split(dag, parse_assignment(o.assign), Labeling::uniform);
    auto x = detail::split_list(o.x), y = detail::split_list(o.y), z = detail::split_list(o.z);
    if (x.empty() || y.empty()) throw InvalidQuery("--x and --y must name at least one node");
    auto res = d_separated(swig, x, y, z);
    OrderedJson body{{"x", x}, {"y", y}, {"z", z}, {"separated", res.separated}};
    if (!res.separated) body["witnesses"] = OrderedJson::array({OrderedJson{{"path", res.witness}}});
    return detail::finish("dsep", detail::verdict_of(res.separated), body);
  });
}

struct MarkovOptions {
  std::string graph;
  std::string side = "swig";
  std::string format = "table";
};

inline CommandResult cmd_markov(const MarkovOptions& o) {
  return guarded("markov", [&] {
    Dag dag = detail::load_graph(o.graph);
    if (o.side != "swig" && o.side != "augmented") throw InvalidQuery("unknown side '" + o.side + "'");
    if (o.format != "table" && o.format != "json") throw InvalidQuery("unknown format '" + o.format + "'");
    auto statements = o.side == "swig" ? swig_separation_statements(dag) : augmented_statements(dag);
    bool all = std::all_of(statements.begin(), statements.end(), [](const auto& s) { return s.verified; });
    OrderedJson body{{"side", o.side}};
    OrderedJson js = OrderedJson::array();
    for (const auto& s : statements) js.push_back(to_json(s));
    body["statements"] = js;
    if (o.side == "swig") {
      OrderedJson fs = OrderedJson::array();
      for (const auto& f : factorization_statements(dag)) fs.push_back(to_json(f));
      body["factorization"] = fs;
    }
    if (o.format == "json") return detail::finish("markov", detail::verdict_of(all), body);
    std::string text;
    if (o.side == "swig") {
      for (const auto& f : factorization_statements(dag)) text += render(f) + "\n";
      text += "\n";
    }
    for (const auto& s : statements) text += render(s) + (s.verified ? "" : "   [not d-separated]") + "\n";
    return detail::finish("markov", detail::verdict_of(all), body, text);
  });
}

// ---- check ---------------------------------------------------------------------------

struct CheckOptions {
  std::string family;
  std::string kernel;
  std::string mode = "all";
  /// Dawid's conditions: natural-value column, applied column, outcomes.
  std::string natural;
  std::string applied;
  std::string outcome;
};

namespace detail {

inline OrderedJson family_checks(const CounterfactualFamily& fam, const std::string& mode, bool& holds) {
  OrderedJson checks = OrderedJson::array();
  auto add = [&](const CheckReport& r) {
    holds = holds && r.holds;
    checks.push_back(to_json(r));
  };
  bool all = mode == "all";
  bool nested = fam.scope() == Scope::nested;
  if (mode == "consistency" || (all && nested)) add(check_distributional_consistency(fam));
  if (mode == "swig-markov" || all) add(check_swig_local_markov(fam));
  if (mode == "observed-markov" || (all && nested)) {
    add(check_observed_markov(fam.member(fam.observational_key()), fam.dag()));
  }
  if (mode == "complete-graph" || all) add(check_complete_graph_markov(fam));
  if (mode == "augmented-markov") add(check_augmented_markov(family_to_kernel(fam)));
  if (all && nested) {
    CheckReport future("no-future-effect");
    for (int v : fam.dag().order()) future.absorb(check_no_future_effect(fam, fam.dag().name(v)));
    add(future);
    add(kernel_chain_check_all(fam));
  }
  return checks;
}

inline OrderedJson kernel_checks(const RegimeKernel& k, const CheckOptions& o, bool& holds) {
  OrderedJson checks = OrderedJson::array();
  auto add = [&](const CheckReport& r) {
    holds = holds && r.holds;
    checks.push_back(to_json(r));
  };
  const std::string& mode = o.mode;
  bool all = mode == "all";
  bool has_idle = k.in_space(k.idle());
  if (mode == "consistency" || all) add(check_kernel_consistency(k));
  if (mode == "augmented-markov" || all) add(check_augmented_markov(k));
  if (mode == "observed-markov" || (all && has_idle)) add(check_observed_markov(k.member(k.idle()), k.dag()));
  if (mode == "complete-graph" || all) add(check_complete_graph_augmented_markov(k));
  if (mode == "swig-markov") add(check_swig_local_markov(kernel_to_family(k)));
  if (mode == "dawid-ab") {
    if (o.natural.empty() || o.applied.empty() || o.outcome.empty()) {
      throw InvalidQuery("dawid-ab needs --natural, --applied and --outcome");
    }
    auto res = check_dawid_AB(k, o.natural, o.applied, split_list(o.outcome));
    holds = holds && res.holds();
    checks.push_back(to_json(res));
  }
  return checks;
}

}  // namespace detail

inline CommandResult cmd_check(const CheckOptions& o) {
  return guarded("check", [&] {
    static const std::vector<std::string> modes{"consistency",    "swig-markov", "augmented-markov", "observed-markov",
                                                "complete-graph", "dawid-ab",    "all"};
    if (std::find(modes.begin(), modes.end(), o.mode) == modes.end()) {
      throw InvalidQuery("unknown mode '" + o.mode + "'");
    }
    if (o.family.empty() == o.kernel.empty()) throw InvalidQuery("give exactly one of --family and --kernel");
    bool holds = true;
    OrderedJson body{{"mode", o.mode}};
    if (!o.family.empty()) {
      if (o.mode == "dawid-ab") throw InvalidQuery("dawid-ab needs a kernel");
      auto fam = parse_family_file(o.family);
      fam.require_complete();
      body["input"] = "family";
      body["checks"] = detail::family_checks(fam, o.mode, holds);
    } else {
      auto k = parse_kernel_file(o.kernel);
      k.require_complete();
      body["input"] = "kernel";
      body["checks"] = detail::kernel_checks(k, o, holds);
    }
    return detail::finish("check", detail::verdict_of(holds), body);
  });
}

// ---- gformula ---------------------------------------------------------------------------

struct GformulaOptions {
  std::string graph;
  std::string dist;
  std::string intervene;
  std::string out;
};

inline CommandResult cmd_gformula(const GformulaOptions& o) {
  return guarded("gformula", [&] {
    Dag dag = detail::load_graph(o.graph);
    FiniteDistribution p = detail::load_distribution(o.dist);
    auto assignment = parse_assignment(o.intervene);
    Regime regime = regime_from_assignment(dag, assignment);
    OrderedJson body{{"intervene", assignment}};
    FiniteDistribution member;
    try {
      member = assignment.empty() ? p : gformula_member(dag, p, regime);
    } catch (const NotIdentified& e) {
      body["witnesses"] = OrderedJson::array({OrderedJson{{"vertex", e.vertex()}, {"cell", e.cell()}}});
      body["message"] = e.what();
      return detail::finish("gformula", Verdict::violated, body);
    }
    auto doc = serialize_distribution(member);
    if (!o.out.empty()) {
      detail::write_file(o.out, doc.dump(2) + "\n");
      body["out"] = o.out;
    } else {
      body["distribution"] = doc;
    }
    return detail::finish("gformula", Verdict::holds, body);
  });
}

// ---- demo -----------------------------------------------------------------------------

/// Indicators show 1 and 2; the second coordinate only completes a
/// treatment the first one started.
inline RegimeKernel completion_demo_kernel() {
  Dag d = Dag::create({"W", "Z"}, {}, {});
  std::vector<Indicator> inds{{"F_1", 2, std::nullopt, {1, 2}}, {"F_2", 2, std::nullopt, {1, 2}}};
  std::vector<Regime> space{{std::nullopt, std::nullopt}, {0, std::nullopt}, {1, std::nullopt}, {0, 0}, {1, 1}};
  RegimeKernel k(d, {2, 2}, inds, space);
  for (const auto& f : space) {
    Rational z = f[0] ? Rational(*f[0] + 1, 3) : Rational(1, 2);
    k.set_member(f, FiniteDistribution::product({{"W", 2}, {"Z", 2}}, {{Rational(2, 3), Rational(1, 3)}, {1 - z, z}}));
  }
  return k;
}

inline CommandResult cmd_demo(const std::string& name) {
  return guarded("demo", [&] {
    if (name == "intersection") {
      auto pair = [](Rational y1) {
        Rational h(1, 2);
        return FiniteDistribution({{"X", 2}, {"Y", 2}}, {h * (1 - y1), h * y1, h * (1 - y1), h * y1});
      };
      auto c = build_intersection_counterexample(pair(Rational(3, 10)), pair(Rational(7, 10)));
      auto body = to_json(c);
      body.erase("verdict");
      return detail::finish("demo", detail::verdict_of(c.reproduced()), body);
    }
    if (name == "frontdoor") {
      auto d = frontdoor_demo();
      auto body = to_json(d);
      body.erase("verdict");
      return detail::finish("demo", detail::verdict_of(d.reproduced()), body);
    }
    if (name == "move-to-idle") {
      auto k = completion_demo_kernel();
      auto ok = check_move_to_idle(k.space());
      auto bad = check_move_to_idle({{std::nullopt, std::nullopt}, {0, 0}});
      auto joint = derive_joint_independence(k, {"W"});
      bool reproduced = ok.holds && !bad.holds && joint.status == JointIndependenceReport::Status::conclusion_holds;
      OrderedJson body{{"demo", "move-to-idle"}};
      OrderedJson space = OrderedJson::array();
      for (const auto& f : k.space()) space.push_back(k.regime_json(f));
      body["regime_space"] = space;
      body["completion_space"] = to_json(ok, &k);
      body["diagonal_only_space"] = to_json(bad, &k);
      body["joint_independence"] = to_json(joint, &k);
      return detail::finish("demo", detail::verdict_of(reproduced), body);
    }
    throw InvalidQuery("unknown demo '" + name + "'");
  });
}

}  // namespace singleworld::cli
