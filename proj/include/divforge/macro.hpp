#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "divforge/clustering.hpp"
#include "divforge/common.hpp"
#include "divforge/manifest.hpp"

namespace divforge {

class Corpus;

enum class Spacing { kLinear, kLog };

Spacing parse_spacing(std::string_view s);
std::string_view to_string(Spacing s);

// Topic assignment over corpus positions (row i = corpus sample i).
struct TopicModel {
  ClusterAssignment assignment;
  Component component = Component::kResponse;
  std::string embedding_fingerprint;
  std::size_t reduced_dim = 0;
  std::size_t min_cluster_size = 0;
  double eps = 0.0;

  // Cluster ids ordered by descending size, ties by id.
  std::vector<std::size_t> cluster_order() const;
};

inline constexpr std::size_t kTopicPcaComponents = 5;

// Picks the embedding row of every corpus sample, reduces it with PCA to at
// most five components and runs density clustering. Throws
// PreconditionError when a corpus id has no embedding.
TopicModel build_topic_model(const Corpus& corpus, Component component, const EmbeddingMatrix& embeddings,
                             std::size_t min_cluster_size);

// `points` cluster counts from k_min to k_max, spaced linearly or
// geometrically, rounded and made strictly increasing where the range
// allows it.
std::vector<std::size_t> spaced_targets(std::size_t lo, std::size_t hi, std::size_t points, Spacing spacing);

struct MacroSeriesOptions {
  std::size_t size = 0;
  std::size_t points = 7;
  std::uint64_t seed = 0;
  Spacing spacing = Spacing::kLinear;
};

// Point j draws `size` samples uniformly across the k_j largest clusters.
// k_min is the fewest clusters whose members reach `size`, k_max is every
// cluster. diversity_value is k.
SeriesManifest build_macro_series(const TopicModel& model, const Corpus& corpus,
                                  const MacroSeriesOptions& options);

}  // namespace divforge
