#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "divforge/clustering.hpp"
#include "divforge/manifest.hpp"

namespace divforge {

class Corpus;

struct TagRecord {
  std::string id;
  std::size_t position = 0;  // corpus position of id
  std::vector<std::string> tags;
};

struct TagIngestResult {
  std::vector<TagRecord> records;
  std::size_t lines = 0;  // non-blank lines
  std::size_t unknown_ids = 0;
  std::size_t malformed = 0;
  std::size_t empty = 0;  // kept, with an empty tag list
};

// JSONL of {"id", "tags": [...]} where a tag is a string or an object
// {"tag", "explanation"} (the explanation is discarded). Records whose id
// is not in the corpus are dropped and counted.
TagIngestResult ingest_tags(const std::filesystem::path& path, const Corpus& corpus);
TagIngestResult ingest_tags_jsonl(std::string_view contents, const Corpus& corpus);

// Trimmed and lowercased form used for tags and tag-embedding ids.
std::string normalize_tag(std::string_view tag);
// At least one letter and at most 64 code points after normalization.
bool is_word_tag(std::string_view normalized);
// Normalizes, drops non-word tags and repeats within a record.
std::vector<TagRecord> filter_tags(std::vector<TagRecord> records);

struct TagCatalog {
  std::map<std::string, std::size_t> category_of;  // filtered tag -> category
  std::vector<std::string> representatives;       // category -> representative tag
  std::vector<std::vector<std::size_t>> sample_categories;  // per corpus position, ascending
  std::vector<std::size_t> sample_tag_counts;                // filtered tag instances per position
  double eps = 0.0;
  std::size_t min_samples = 0;
  std::string embedding_fingerprint;

  std::size_t category_count() const { return representatives.size(); }
};

// Clusters the distinct filtered tags with dbscan over their embeddings.
// A cluster's representative is its member nearest the centroid (ties: the
// lexicographically smaller tag); noise tags are their own category.
// Category ids follow the sorted order of representatives. Throws
// PreconditionError when a tag has no embedding.
TagCatalog build_tag_catalog(const std::vector<TagRecord>& records, std::size_t corpus_size,
                             const EmbeddingMatrix& tag_embeddings, double eps = 0.15,
                             std::size_t min_samples = 2);

struct MesoSeriesOptions {
  std::size_t size = 0;
  std::size_t points = 7;
  std::uint64_t seed = 0;
};

// Distinct categories over tag instances in the given samples.
double category_ratio(const TagCatalog& catalog, const std::vector<std::size_t>& positions);

// Point j draws `size` samples uniformly across the k_j most frequent
// categories (ties by id); a sample in several chosen categories is taken
// once. diversity_value is the category ratio of the drawn set and
// diversity_percent is anchored on k.
SeriesManifest build_meso_series(const TagCatalog& catalog, const Corpus& corpus, const MesoSeriesOptions& options);

}  // namespace divforge
