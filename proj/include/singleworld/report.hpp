#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "singleworld/graph.hpp"

namespace singleworld {

/// Verdict for one vertex of a local Markov check.
struct VertexVerdict {
  std::string vertex;
  bool holds = true;
  /// Context coordinates the conditional may depend on.
  std::vector<std::string> depends_on;
  std::size_t skipped = 0;
  /// First violating pair of contexts and their rows.
  std::optional<OrderedJson> witness;
  /// Named parts of the property that fail on their own.
  std::vector<std::string> failing_components;
};

/// Outcome of an exhaustive equality or dependence check. Witnesses are
/// recorded in enumeration order, so the first one is the minimal one.
struct CheckReport {
  static constexpr std::size_t witness_limit = 8;

  std::string name;
  bool holds = true;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::size_t violations = 0;
  std::vector<OrderedJson> witnesses;
  std::vector<VertexVerdict> vertices;
  OrderedJson details = OrderedJson::object();

  CheckReport() = default;
  explicit CheckReport(std::string n) : name(std::move(n)) {}

  void violate(OrderedJson witness) {
    holds = false;
    ++violations;
    if (witnesses.size() < witness_limit) witnesses.push_back(std::move(witness));
  }

  void add_vertex(VertexVerdict v) {
    if (!v.holds) {
      OrderedJson w;
      w["vertex"] = v.vertex;
      if (v.witness) w["pair"] = *v.witness;
      if (!v.failing_components.empty()) w["components"] = v.failing_components;
      violate(std::move(w));
    }
    skipped += v.skipped;
    ++checked;
    vertices.push_back(std::move(v));
  }

  /// Folds a sub-check into this one.
  void absorb(const CheckReport& sub) {
    holds = holds && sub.holds;
    checked += sub.checked;
    skipped += sub.skipped;
    violations += sub.violations;
    for (const auto& w : sub.witnesses) {
      if (witnesses.size() >= witness_limit) break;
      OrderedJson tagged = w;
      if (!sub.name.empty() && tagged.is_object() && !tagged.contains("check")) {
        OrderedJson front;
        front["check"] = sub.name;
        for (const auto& [k, v] : tagged.items()) front[k] = v;
        tagged = std::move(front);
      }
      witnesses.push_back(std::move(tagged));
    }
  }

  const VertexVerdict* vertex(std::string_view name_) const {
    for (const auto& v : vertices) {
      if (v.vertex == name_) return &v;
    }
    return nullptr;
  }
};

inline OrderedJson to_json(const VertexVerdict& v) {
  OrderedJson j;
  j["vertex"] = v.vertex;
  j["holds"] = v.holds;
  j["depends_on"] = v.depends_on;
  j["skipped"] = v.skipped;
  if (v.witness) j["witness"] = *v.witness;
  if (!v.failing_components.empty()) j["failing_components"] = v.failing_components;
  return j;
}

inline OrderedJson to_json(const CheckReport& r) {
  OrderedJson j;
  j["check"] = r.name;
  j["verdict"] = r.holds ? "holds" : "violated";
  j["checked"] = r.checked;
  j["skipped"] = r.skipped;
  j["violations"] = r.violations;
  if (!r.witnesses.empty()) j["witnesses"] = r.witnesses;
  if (!r.vertices.empty()) {
    OrderedJson vs = OrderedJson::array();
    for (const auto& v : r.vertices) vs.push_back(to_json(v));
    j["vertices"] = vs;
  }
  if (!r.details.empty()) j["details"] = r.details;
  return j;
}

/// Checks of the form "if premise then conclusion".
struct ImplicationReport {
  enum class Status { premise_failed, conclusion_holds, conclusion_violated };

  Status status = Status::premise_failed;
  CheckReport premise;
  std::optional<CheckReport> conclusion;

  bool consistent() const { return status != Status::conclusion_violated; }
};

inline std::string to_string(ImplicationReport::Status s) {
  switch (s) {
    case ImplicationReport::Status::premise_failed: return "premise-failed";
    case ImplicationReport::Status::conclusion_holds: return "conclusion-holds";
    case ImplicationReport::Status::conclusion_violated: return "conclusion-violated";
  }
  return "premise-failed";
}

inline ImplicationReport implication(CheckReport premise, const std::function<CheckReport()>& conclusion) {
  ImplicationReport out;
  out.premise = std::move(premise);
  if (!out.premise.holds) {
    out.status = ImplicationReport::Status::premise_failed;
    return out;
  }
  out.conclusion = conclusion();
  out.status = out.conclusion->holds ? ImplicationReport::Status::conclusion_holds
                                     : ImplicationReport::Status::conclusion_violated;
  return out;
}

inline OrderedJson to_json(const ImplicationReport& r) {
  OrderedJson j;
  j["status"] = to_string(r.status);
  j["verdict"] = r.status == ImplicationReport::Status::conclusion_violated ? "violated" : "holds";
  j["premise"] = to_json(r.premise);
  if (r.conclusion) j["conclusion"] = to_json(*r.conclusion);
  return j;
}

}  // namespace singleworld
