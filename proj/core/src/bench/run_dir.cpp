#include "treecnn/bench/run_dir.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "treecnn/common/error.hpp"

namespace treecnn::bench {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string three_digits(std::size_t n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", n);
  return buf;
}

json entries_json(const std::vector<StageEntry>& v) {
  json a = json::array();
  for (const auto& e : v)
    a.push_back({{"index", e.index}, {"report", e.report}, {"effort", e.effort}, {"accuracy", e.accuracy}});
  return a;
}

std::vector<StageEntry> entries_from(const json& a) {
  std::vector<StageEntry> v;
  for (const auto& e : a)
    v.push_back({e.at("index").get<std::size_t>(), e.at("report").get<std::string>(),
                 e.at("effort").get<std::uint64_t>(), e.at("accuracy").get<double>()});
  return v;
}

json counts_json(const std::map<ClassLabel, std::size_t>& m) {
  json a = json::array();
  for (const auto& [c, n] : m) a.push_back({c, n});
  return a;
}

std::map<ClassLabel, std::size_t> counts_from(const json& a) {
  std::map<ClassLabel, std::size_t> m;
  for (const auto& e : a) m[e.at(0).get<ClassLabel>()] = e.at(1).get<std::size_t>();
  return m;
}

const char* kPendingSuffix = ".pending";

}  // namespace

namespace layout {

fs::path manifest(const fs::path& run) { return run / "manifest.json"; }
fs::path stage_dir(const fs::path& run, std::size_t stage) { return run / "stages" / three_digits(stage); }
std::string stage_report(std::size_t stage) { return "stages/" + three_digits(stage) + "/report.json"; }
std::string stage_snapshot(std::size_t stage) { return "stages/" + three_digits(stage) + "/tree.snapshot"; }
std::string stage_dot(std::size_t stage) { return "stages/" + three_digits(stage) + "/topology.dot"; }
std::string node_checkpoint(NodeId node) { return "checkpoints/" + std::to_string(node) + ".bin"; }

std::string baseline_dir_name(std::optional<FineTuneMode> mode) {
  if (!mode) return "initial";
  std::string s(to_string(*mode));
  s[1] = '-';
  return s;
}

std::string baseline_report(std::optional<FineTuneMode> mode, std::size_t stage) {
  return "baseline/" + baseline_dir_name(mode) + "/" + three_digits(stage) + "/report.json";
}

std::string baseline_checkpoint(std::optional<FineTuneMode> mode) {
  return "checkpoints/baseline-" + baseline_dir_name(mode) + ".bin";
}

}  // namespace layout

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw FormatError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string manifest_to_text(const Manifest& m) {
  json j;
  j["format"] = "treecnn-run-manifest";
  j["version"] = 1;
  j["run_id"] = m.run_id;
  j["config"] = json::parse(to_text(m.config));
  j["image_shape"] = m.image_shape;
  j["train_counts"] = counts_json(m.train_counts);
  j["test_counts"] = counts_json(m.test_counts);
  j["class_names"] = m.class_names;
  j["effort_reference"] = m.effort_reference;
  j["stages"] = entries_json(m.stages);
  json b = json::object();
  for (const auto& [k, v] : m.baseline) b[k] = entries_json(v);
  j["baseline"] = b;
  return j.dump(2) + "\n";
}

Manifest manifest_from_text(std::string_view text) {
  try {
    const auto j = json::parse(text);
    if (j.at("format") != "treecnn-run-manifest") throw FormatError("manifest: wrong format tag");
    if (j.at("version") != 1) throw FormatError("manifest: unsupported version");
    Manifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.config = parse_run_config(j.at("config").dump());
    m.image_shape = j.at("image_shape").get<Shape>();
    m.train_counts = counts_from(j.at("train_counts"));
    m.test_counts = counts_from(j.at("test_counts"));
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.effort_reference = j.at("effort_reference").get<std::uint64_t>();
    m.stages = entries_from(j.at("stages"));
    for (const auto& [k, v] : j.at("baseline").items()) m.baseline[k] = entries_from(v);
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
}

Manifest read_manifest(const fs::path& run) {
  const auto path = layout::manifest(run);
  if (!fs::exists(path)) throw FormatError("missing " + path.string());
  return manifest_from_text(read_file(path));
}

void write_manifest(const fs::path& run, const Manifest& m) { write_file_atomic(layout::manifest(run), manifest_to_text(m)); }

void commit_stage(const fs::path& run, const StageCommit& c) {
  json marker;
  marker["report"] = c.report;
  json names = json::array();
  for (const auto& [name, bytes] : c.checkpoints) names.push_back(name);
  marker["checkpoints"] = names;
  const auto marker_path = run / "checkpoints" / (fs::path(c.report).parent_path().string() + kPendingSuffix);
  fs::create_directories(marker_path.parent_path());
  write_file_atomic(marker_path, marker.dump());

  for (const auto& [name, bytes] : c.checkpoints) write_file_atomic(run / (name + ".next"), bytes);
  for (const auto& [name, text] : c.files) write_file_atomic(run / name, text);
  write_file_atomic(run / c.report, c.report_text);
  for (const auto& [name, bytes] : c.checkpoints) fs::rename(run / (name + ".next"), run / name);
  fs::remove(marker_path);
}

std::size_t recover_run(const fs::path& run) {
  const auto dir = run / "checkpoints";
  if (!fs::exists(dir)) return 0;
  std::vector<fs::path> markers;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.path().extension() == kPendingSuffix) markers.push_back(e.path());
  for (const auto& m : markers) {
    const auto j = json::parse(read_file(m));
    const auto report = run / j.at("report").get<std::string>();
    const bool committed = fs::exists(report);
    for (const auto& name : j.at("checkpoints")) {
      const auto final_path = run / name.get<std::string>();
      const auto next = fs::path(final_path.string() + ".next");
      if (!fs::exists(next)) continue;
      if (committed) {
        fs::rename(next, final_path);
      } else {
        fs::remove(next);
      }
    }
    if (!committed) fs::remove_all(report.parent_path());
    fs::remove(m);
  }
  return markers.size();
}

}  // namespace treecnn::bench
