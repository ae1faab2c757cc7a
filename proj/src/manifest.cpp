#include "divforge/manifest.hpp"

#include <json.hpp>

#include <cmath>
#include <unordered_set>

#include "divforge/corpus.hpp"

namespace divforge {

using nlohmann::json;

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kMacro:
      return "macro";
    case Strategy::kMeso:
      return "meso";
    case Strategy::kMicro:
      return "micro";
  }
  return "micro";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "macro") return Strategy::kMacro;
  if (s == "meso") return Strategy::kMeso;
  if (s == "micro") return Strategy::kMicro;
  throw PreconditionError("unknown strategy '" + std::string(s) + "' (expected macro|meso|micro)");
}

double diversity_percent(double value, double lo, double hi) {
  if (!(hi > lo)) throw PreconditionError("diversity scale needs hi > lo");
  return 100.0 * (value - lo) / (hi - lo);
}

std::string to_json(const SeriesManifest& m) {
  json j;
  j["strategy"] = std::string(to_string(m.strategy));
  j["component"] = std::string(to_string(m.component));
  j["size"] = m.size;
  j["seed"] = m.seed;
  j["parameters"] = m.parameters;
  json points = json::array();
  for (const auto& p : m.points) {
    points.push_back({{"diversity_value", p.diversity_value},
                      {"diversity_percent", p.diversity_percent},
                      {"sample_ids", p.sample_ids}});
  }
  j["points"] = std::move(points);
  return j.dump(2) + "\n";
}

SeriesManifest manifest_from_json(std::string_view text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw PreconditionError("manifest is not a JSON object");
  try {
    SeriesManifest m;
    m.strategy = parse_strategy(j.at("strategy").get<std::string>());
    m.component = parse_component(j.at("component").get<std::string>());
    m.size = j.at("size").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.parameters = j.at("parameters").get<std::map<std::string, std::string>>();
    for (const auto& p : j.at("points")) {
      m.points.push_back({p.at("diversity_value").get<double>(), p.at("diversity_percent").get<double>(),
                          p.at("sample_ids").get<std::vector<std::string>>()});
    }
    return m;
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("malformed manifest: ") + e.what());
  }
}

SeriesManifest load_manifest(const std::filesystem::path& path) { return manifest_from_json(read_file(path)); }

std::vector<std::string> validate_manifest(const SeriesManifest& m, const Corpus& corpus) {
  std::vector<std::string> problems;
  if (m.points.empty()) problems.push_back("manifest has no points");
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    const auto& p = m.points[i];
    const std::string tag = "point " + std::to_string(i) + ": ";
    if (p.sample_ids.size() != m.size) {
      problems.push_back(tag + "has " + std::to_string(p.sample_ids.size()) + " ids, expected " +
                         std::to_string(m.size));
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : p.sample_ids) {
      if (!corpus.find(id)) problems.push_back(tag + "unknown id '" + id + "'");
      if (!seen.insert(id).second) problems.push_back(tag + "repeated id '" + id + "'");
    }
    if (i > 0 && p.diversity_percent < m.points[i - 1].diversity_percent) {
      problems.push_back(tag + "diversity_percent decreases");
    }
  }
  if (!m.points.empty()) {
    if (m.points.front().diversity_percent != 0.0) problems.push_back("first point is not at 0%");
    if (m.points.back().diversity_percent != 100.0) problems.push_back("last point is not at 100%");
  }
  return problems;
}

}  // namespace divforge
