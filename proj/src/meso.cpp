#include "divforge/meso.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "divforge/corpus.hpp"
#include "divforge/macro.hpp"
#include "divforge/selection.hpp"
#include "divforge/text.hpp"

namespace divforge {

using json = nlohmann::json;

namespace {

constexpr std::size_t kMaxTagLength = 64;
constexpr std::size_t kMaxWarnings = 10;

}  // namespace

TagIngestResult ingest_tags_jsonl(std::string_view contents, const Corpus& corpus) {
  TagIngestResult out;
  std::size_t warnings = 0;
  auto note = [&](const std::string& msg) {
    if (warnings++ < kMaxWarnings) warn(msg);
  };
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    ++out.lines;

    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("id") || !rec.contains("tags") ||
        !rec["tags"].is_array()) {
      ++out.malformed;
      note("tags line " + std::to_string(line_no) + ": malformed record, skipped");
      continue;
    }
    TagRecord r;
    const json& id = rec["id"];
    if (id.is_string()) {
      r.id = id.get<std::string>();
    } else if (id.is_number_integer()) {
      r.id = std::to_string(id.get<long long>());
    } else {
      ++out.malformed;
      note("tags line " + std::to_string(line_no) + ": id is not a string, skipped");
      continue;
    }
    bool ok = true;
    for (const json& t : rec["tags"]) {
      if (t.is_string()) {
        r.tags.push_back(t.get<std::string>());
      } else if (t.is_object() && t.contains("tag") && t["tag"].is_string()) {
        r.tags.push_back(t["tag"].get<std::string>());
      } else {
        ok = false;
        break;
      }
    }
    if (!ok || std::any_of(r.tags.begin(), r.tags.end(), [](const std::string& s) { return !text::is_valid_utf8(s); })) {
      ++out.malformed;
      note("tags line " + std::to_string(line_no) + ": bad tag entry, skipped");
      continue;
    }
    const auto pos = corpus.find(r.id);
    if (!pos) {
      ++out.unknown_ids;
      note("tags line " + std::to_string(line_no) + ": id '" + r.id + "' not in corpus, dropped");
      continue;
    }
    r.position = *pos;
    if (r.tags.empty()) {
      ++out.empty;
      note("tags line " + std::to_string(line_no) + ": sample '" + r.id + "' has no tags");
    }
    out.records.push_back(std::move(r));
  }
  if (warnings > kMaxWarnings) warn(std::to_string(warnings - kMaxWarnings) + " further tag warnings suppressed");
  return out;
}

TagIngestResult ingest_tags(const std::filesystem::path& path, const Corpus& corpus) {
  if (!std::filesystem::is_regular_file(path)) throw IoError("cannot read " + path.string());
  return ingest_tags_jsonl(read_file(path), corpus);
}

std::string normalize_tag(std::string_view tag) { return text::to_lower(text::trim(tag)); }

bool is_word_tag(std::string_view normalized) {
  if (normalized.empty() || text::code_point_count(normalized) > kMaxTagLength) return false;
  std::size_t pos = 0;
  while (pos < normalized.size()) {
    if (text::is_letter(text::next_code_point(normalized, pos))) return true;
  }
  return false;
}

std::vector<TagRecord> filter_tags(std::vector<TagRecord> records) {
  for (TagRecord& r : records) {
    std::vector<std::string> kept;
    std::set<std::string> seen;
    for (const std::string& raw : r.tags) {
      std::string t = normalize_tag(raw);
      if (!is_word_tag(t)) continue;
      if (seen.insert(t).second) kept.push_back(std::move(t));
    }
    r.tags = std::move(kept);
  }
  return records;
}

TagCatalog build_tag_catalog(const std::vector<TagRecord>& records, std::size_t corpus_size,
                             const EmbeddingMatrix& tag_embeddings, double eps, std::size_t min_samples) {
  if (!(eps > 0.0)) throw PreconditionError("eps must be positive");
  if (min_samples == 0) throw PreconditionError("min_samples must be positive");
  tag_embeddings.validate();

  std::set<std::string> distinct;
  for (const TagRecord& r : records) {
    if (r.position >= corpus_size) throw PreconditionError("tag record position out of range");
    distinct.insert(r.tags.begin(), r.tags.end());
  }
  const std::vector<std::string> tags(distinct.begin(), distinct.end());

  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < tag_embeddings.ids.size(); ++i) row_of.emplace(normalize_tag(tag_embeddings.ids[i]), i);
  std::vector<std::string> missing;
  RowMatrix rows(static_cast<Eigen::Index>(tags.size()), static_cast<Eigen::Index>(tag_embeddings.dim()));
  for (std::size_t i = 0; i < tags.size(); ++i) {
    auto it = row_of.find(tags[i]);
    if (it == row_of.end()) {
      missing.push_back(tags[i]);
      continue;
    }
    rows.row(static_cast<Eigen::Index>(i)) = tag_embeddings.vectors.row(static_cast<Eigen::Index>(it->second));
  }
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " tag(s) have no embedding:";
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 5); ++i) msg += " '" + missing[i] + "'";
    throw PreconditionError(msg);
  }

  TagCatalog cat;
  cat.eps = eps;
  cat.min_samples = min_samples;
  cat.embedding_fingerprint = tag_embeddings.fingerprint;

  // Representative per group of tag indices; groups are dbscan clusters plus
  // one singleton per noise tag.
  std::vector<std::vector<std::size_t>> groups;
  if (!tags.empty()) {
    EmbeddingMatrix e{tags, rows, {}};
    const ClusterAssignment a = dbscan(e, eps, min_samples);
    groups = a.members();
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (a.labels[i] == kNoise) groups.push_back({i});
    }
  }
  std::vector<std::pair<std::string, std::size_t>> reps;  // representative, group
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& members = groups[g];
    Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(rows.cols());
    for (std::size_t i : members) centroid += rows.row(static_cast<Eigen::Index>(i));
    centroid /= static_cast<double>(members.size());
    // Members are ascending, and so lexicographic, so a strict comparison
    // keeps the smaller tag on ties.
    std::size_t best = members.front();
    double best_d = (rows.row(static_cast<Eigen::Index>(best)) - centroid).squaredNorm();
    for (std::size_t i : members) {
      const double d = (rows.row(static_cast<Eigen::Index>(i)) - centroid).squaredNorm();
      if (d < best_d) {
        best = i;
        best_d = d;
      }
    }
    reps.emplace_back(tags[best], g);
  }
  std::sort(reps.begin(), reps.end());
  for (std::size_t c = 0; c < reps.size(); ++c) {
    cat.representatives.push_back(reps[c].first);
    for (std::size_t i : groups[reps[c].second]) cat.category_of[tags[i]] = c;
  }

  cat.sample_categories.assign(corpus_size, {});
  cat.sample_tag_counts.assign(corpus_size, 0);
  for (const TagRecord& r : records) {
    auto& cats = cat.sample_categories[r.position];
    for (const std::string& t : r.tags) cats.push_back(cat.category_of.at(t));
    cat.sample_tag_counts[r.position] += r.tags.size();
  }
  for (auto& cats : cat.sample_categories) {
    std::sort(cats.begin(), cats.end());
    cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
  }
  return cat;
}

double category_ratio(const TagCatalog& catalog, const std::vector<std::size_t>& positions) {
  std::set<std::size_t> present;
  std::size_t instances = 0;
  for (std::size_t p : positions) {
    present.insert(catalog.sample_categories.at(p).begin(), catalog.sample_categories.at(p).end());
    instances += catalog.sample_tag_counts.at(p);
  }
  return instances == 0 ? 0.0 : static_cast<double>(present.size()) / static_cast<double>(instances);
}

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

SeriesManifest build_meso_series(const TagCatalog& catalog, const Corpus& corpus, const MesoSeriesOptions& options) {
  if (catalog.sample_categories.size() != corpus.size()) {
    throw PreconditionError("tag catalog covers " + std::to_string(catalog.sample_categories.size()) +
                            " samples but the corpus has " + std::to_string(corpus.size()));
  }
  if (options.size == 0) throw PreconditionError("series size must be positive");
  const std::size_t categories = catalog.category_count();
  std::vector<SampleClass> pools(categories);
  for (std::size_t c = 0; c < categories; ++c) pools[c].id = c;
  for (std::size_t p = 0; p < corpus.size(); ++p) {
    for (std::size_t c : catalog.sample_categories[p]) pools[c].members.push_back(p);
  }
  std::vector<std::size_t> order(categories);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pools[a].members.size() > pools[b].members.size(); });
  // Drop categories that no sample holds; they cannot be drawn from.
  while (!order.empty() && pools[order.back()].members.empty()) order.pop_back();

  // Union sizes of the first k pools.
  std::vector<char> covered(corpus.size(), 0);
  std::vector<std::size_t> union_size;
  std::size_t acc = 0;
  for (std::size_t c : order) {
    for (std::size_t p : pools[c].members) {
      if (!covered[p]) {
        covered[p] = 1;
        ++acc;
      }
    }
    union_size.push_back(acc);
  }
  if (acc < options.size) {
    throw PreconditionError("size " + std::to_string(options.size) + " exceeds the " + std::to_string(acc) +
                            " tagged samples");
  }
  const std::size_t k_max = order.size();
  if (k_max < 2) throw PreconditionError("meso series needs at least 2 tag categories, found " + std::to_string(k_max));
  std::size_t k_min = 1;
  while (union_size[k_min - 1] < options.size) ++k_min;
  if (k_min == k_max) {
    throw PreconditionError("meso series is degenerate: all " + std::to_string(k_max) +
                            " categories are needed to reach size " + std::to_string(options.size));
  }
  const std::vector<std::size_t> targets = spaced_targets(k_min, k_max, options.points, Spacing::kLinear);

  SeriesManifest m;
  m.strategy = Strategy::kMeso;
  m.size = options.size;
  m.seed = options.seed;
  auto& p = m.parameters;
  p["points"] = std::to_string(options.points);
  p["spacing"] = "linear";
  p["eps"] = fmt_double(catalog.eps);
  p["min_samples"] = std::to_string(catalog.min_samples);
  p["categories"] = std::to_string(categories);
  p["k_min"] = std::to_string(k_min);
  p["k_max"] = std::to_string(k_max);
  p["category_order"] = "descending sample frequency, ties by category id";
  p["diversity_value"] = "distinct categories / tag instances in the selected set";
  p["tag_embedding_fingerprint"] = catalog.embedding_fingerprint;
  p["corpus_digest"] = corpus.provenance().source_digest;
  p["rng"] = std::string(Rng::kName);

  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::size_t k = targets[i];
    std::vector<SampleClass> classes(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t r = 0; r < k; ++r) classes[r] = pools[order[r]];
    const std::vector<std::size_t> chosen = uniform_select(classes, options.size, derive_seed(options.seed, k));
    std::set<std::size_t> chosen_present;
    std::vector<char> in_first_k(categories, 0);
    for (std::size_t r = 0; r < k; ++r) in_first_k[order[r]] = 1;
    for (std::size_t pos : chosen) {
      for (std::size_t c : catalog.sample_categories[pos]) {
        if (in_first_k[c]) chosen_present.insert(c);
      }
    }
    const std::string key = "point." + std::to_string(i) + ".";
    p[key + "k"] = std::to_string(k);
    p[key + "chosen_categories_present"] = std::to_string(chosen_present.size());

    SeriesPoint point;
    point.diversity_value = category_ratio(catalog, chosen);
    point.diversity_percent =
        diversity_percent(static_cast<double>(k), static_cast<double>(k_min), static_cast<double>(k_max));
    for (std::size_t pos : chosen) point.sample_ids.push_back(corpus[pos].id);
    m.points.push_back(std::move(point));
  }
  return m;
}

}  // namespace divforge
