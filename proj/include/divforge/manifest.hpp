#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "divforge/common.hpp"

namespace divforge {

class Corpus;

enum class Strategy { kMacro, kMeso, kMicro };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

struct SeriesPoint {
  double diversity_value = 0.0;
  double diversity_percent = 0.0;
  std::vector<std::string> sample_ids;

  bool operator==(const SeriesPoint&) const = default;
};

// Reproducibility record of one diversity series.
struct SeriesManifest {
  Strategy strategy = Strategy::kMicro;
  Component component = Component::kResponse;
  std::size_t size = 0;
  std::vector<SeriesPoint> points;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> parameters;

  bool operator==(const SeriesManifest&) const = default;
};

// Linear percent scale anchored at lo (0%) and hi (100%).
double diversity_percent(double value, double lo, double hi);

std::string to_json(const SeriesManifest& manifest);
SeriesManifest manifest_from_json(std::string_view json);
SeriesManifest load_manifest(const std::filesystem::path& path);

// Checks the manifest invariants against a corpus: every point has exactly
// `size` ids, all present in the corpus and distinct; percent runs from 0 to
// 100 without decreasing. Returns a list of violations (empty = valid).
std::vector<std::string> validate_manifest(const SeriesManifest& manifest, const Corpus& corpus);

}  // namespace divforge
