#include "treecnn/train/report.hpp"

#include <algorithm>

#include "json.hpp"
#include "treecnn/common/error.hpp"

namespace treecnn {

namespace {

using json = nlohmann::ordered_json;

json node_json(NodeId n) { return n == kNoNode ? json(nullptr) : json(n); }
NodeId node_from(const json& j) { return j.is_null() ? kNoNode : j.get<NodeId>(); }

}  // namespace

double AccuracyResult::percent() const {
  return total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

double AccuracyResult::percent_over(std::span<const ClassLabel> classes) const {
  std::size_t c = 0, t = 0;
  for (const auto& pc : per_class)
    if (std::find(classes.begin(), classes.end(), pc.label) != classes.end()) {
      c += pc.correct;
      t += pc.total;
    }
  return t ? 100.0 * static_cast<double>(c) / static_cast<double>(t) : 0.0;
}

std::optional<double> StageReport::normalized_effort() const {
  if (effort_reference == 0) return std::nullopt;
  return static_cast<double>(effort) / static_cast<double>(effort_reference);
}

std::string report_to_text(const StageReport& r) {
  json j;
  j["format"] = "treecnn-stage-report";
  j["version"] = 1;
  j["stage"] = r.stage;
  j["model"] = r.model;
  j["new_classes"] = r.new_classes;
  j["classes"] = r.classes;
  json plans = json::array();
  for (const auto& p : r.plans) plans.push_back(json::parse(plan_to_text(p)));
  j["plans"] = plans;
  json retrained = json::array();
  for (const auto& t : r.retrained)
    retrained.push_back({{"node", node_json(t.node)},
                         {"role", t.role},
                         {"fresh", t.fresh},
                         {"outputs", t.outputs},
                         {"weights", t.weights},
                         {"samples", t.samples}});
  j["retrained"] = retrained;
  j["effort"] = r.effort;
  j["effort_reference"] = r.effort_reference;
  j["normalized_effort"] = r.normalized_effort() ? json(*r.normalized_effort()) : json(nullptr);
  json per_class = json::array();
  for (const auto& c : r.accuracy.per_class)
    per_class.push_back({{"class", c.label}, {"correct", c.correct}, {"total", c.total}});
  j["accuracy"] = {{"percent", r.accuracy.percent()},
                   {"correct", r.accuracy.correct},
                   {"total", r.accuracy.total},
                   {"per_class", per_class}};
  if (r.topology) {
    const auto& t = *r.topology;
    j["topology"] = {{"nodes", t.nodes},
                     {"branches", t.branches},
                     {"leaves", t.leaves},
                     {"depth", t.depth},
                     {"weights", t.weights}};
  } else {
    j["topology"] = nullptr;
  }
  j["snapshot"] = r.snapshot;
  return j.dump(2) + "\n";
}

StageReport report_from_text(std::string_view text) {
  try {
    const auto j = json::parse(text);
    if (j.at("format") != "treecnn-stage-report") throw FormatError("report: not a stage report");
    if (j.at("version") != 1) throw FormatError("report: unsupported version");
    StageReport r;
    r.stage = j.at("stage").get<std::size_t>();
    r.model = j.at("model").get<std::string>();
    r.new_classes = j.at("new_classes").get<std::vector<ClassLabel>>();
    r.classes = j.at("classes").get<std::vector<ClassLabel>>();
    for (const auto& p : j.at("plans")) r.plans.push_back(plan_from_text(p.dump()));
    for (const auto& t : j.at("retrained"))
      r.retrained.push_back({node_from(t.at("node")), t.at("role").get<std::string>(), t.at("fresh").get<bool>(),
                             t.at("outputs").get<std::size_t>(), t.at("weights").get<std::uint64_t>(),
                             t.at("samples").get<std::uint64_t>()});
    r.effort = j.at("effort").get<std::uint64_t>();
    r.effort_reference = j.at("effort_reference").get<std::uint64_t>();
    const auto& a = j.at("accuracy");
    r.accuracy.correct = a.at("correct").get<std::size_t>();
    r.accuracy.total = a.at("total").get<std::size_t>();
    for (const auto& c : a.at("per_class"))
      r.accuracy.per_class.push_back(
          {c.at("class").get<ClassLabel>(), c.at("correct").get<std::size_t>(), c.at("total").get<std::size_t>()});
    if (const auto& t = j.at("topology"); !t.is_null())
      r.topology = TopologySummary{t.at("nodes").get<std::size_t>(), t.at("branches").get<std::size_t>(),
                                   t.at("leaves").get<std::size_t>(), t.at("depth").get<std::size_t>(),
                                   t.at("weights").get<std::uint64_t>()};
    r.snapshot = j.at("snapshot").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

}  // namespace treecnn
