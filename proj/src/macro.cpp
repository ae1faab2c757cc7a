#include "divforge/macro.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "divforge/corpus.hpp"
#include "divforge/selection.hpp"

namespace divforge {

Spacing parse_spacing(std::string_view s) {
  if (s == "linear") return Spacing::kLinear;
  if (s == "log") return Spacing::kLog;
  throw PreconditionError("unknown spacing '" + std::string(s) + "' (expected linear or log)");
}

std::string_view to_string(Spacing s) { return s == Spacing::kLinear ? "linear" : "log"; }

std::vector<std::size_t> TopicModel::cluster_order() const {
  std::vector<std::size_t> sizes(assignment.k, 0);
  for (int label : assignment.labels) {
    if (label != kNoise) ++sizes[static_cast<std::size_t>(label)];
  }
  std::vector<std::size_t> order(assignment.k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });
  return order;
}

TopicModel build_topic_model(const Corpus& corpus, Component component, const EmbeddingMatrix& embeddings,
                             std::size_t min_cluster_size) {
  if (corpus.empty()) throw PreconditionError("cannot build a topic model over an empty corpus");
  embeddings.validate();
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const Sample& s : corpus.samples()) ids.push_back(s.id);
  const EmbeddingMatrix rows = embeddings.select(ids);
  const std::size_t dim = std::min(kTopicPcaComponents, rows.dim());
  const EmbeddingMatrix reduced = pca_reduce(rows, dim);

  DensityOptions opts;
  opts.min_cluster_size = min_cluster_size;
  DensityResult dr = density_sweep(reduced, opts);

  TopicModel model;
  model.assignment = std::move(dr.assignment);
  model.component = component;
  model.embedding_fingerprint = embeddings.fingerprint;
  model.reduced_dim = dim;
  model.min_cluster_size = min_cluster_size;
  model.eps = dr.eps;
  return model;
}

std::vector<std::size_t> spaced_targets(std::size_t lo, std::size_t hi, std::size_t points, Spacing spacing) {
  if (points < 2) throw PreconditionError("a series needs at least 2 points");
  if (lo == 0 || hi < lo) throw PreconditionError("target range needs 1 <= lo <= hi");
  std::vector<std::size_t> t(points);
  const double a = static_cast<double>(lo);
  const double b = static_cast<double>(hi);
  for (std::size_t i = 0; i < points; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(points - 1);
    const double v = spacing == Spacing::kLinear ? a + f * (b - a) : std::exp(std::log(a) + f * (std::log(b) - std::log(a)));
    t[i] = static_cast<std::size_t>(std::llround(v));
  }
  t.front() = lo;
  t.back() = hi;
  if (hi - lo + 1 >= points) {
    for (std::size_t i = 1; i < points; ++i) t[i] = std::max(t[i], t[i - 1] + 1);
    for (std::size_t i = points - 1; i-- > 0;) t[i] = std::min(t[i], t[i + 1] - 1);
  } else {
    for (std::size_t i = 1; i < points; ++i) t[i] = std::max(t[i], t[i - 1]);
  }
  return t;
}

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

SeriesManifest build_macro_series(const TopicModel& model, const Corpus& corpus, const MacroSeriesOptions& options) {
  if (model.assignment.labels.size() != corpus.size()) {
    throw PreconditionError("topic model covers " + std::to_string(model.assignment.labels.size()) +
                            " samples but the corpus has " + std::to_string(corpus.size()));
  }
  if (options.size == 0) throw PreconditionError("series size must be positive");
  const auto members = model.assignment.members();
  const std::vector<std::size_t> order = model.cluster_order();
  std::size_t pooled = 0;
  for (const auto& m : members) pooled += m.size();
  if (pooled < options.size) {
    throw PreconditionError("size " + std::to_string(options.size) + " exceeds the " + std::to_string(pooled) +
                            " clustered (non-noise) samples");
  }
  const std::size_t k_max = order.size();
  if (k_max < 2) {
    throw PreconditionError("macro series needs at least 2 topic clusters, found " + std::to_string(k_max));
  }
  std::size_t k_min = 0;
  for (std::size_t acc = 0; k_min < k_max && acc < options.size;) acc += members[order[k_min++]].size();
  if (k_min == k_max) {
    throw PreconditionError("macro series is degenerate: all " + std::to_string(k_max) +
                            " clusters are needed to reach size " + std::to_string(options.size));
  }
  const std::vector<std::size_t> targets = spaced_targets(k_min, k_max, options.points, options.spacing);

  SeriesManifest m;
  m.strategy = Strategy::kMacro;
  m.component = model.component;
  m.size = options.size;
  m.seed = options.seed;
  auto& p = m.parameters;
  p["points"] = std::to_string(options.points);
  p["spacing"] = std::string(to_string(options.spacing));
  p["min_cluster_size"] = std::to_string(model.min_cluster_size);
  p["reduction"] = "pca:" + std::to_string(model.reduced_dim) + " (in place of umap)";
  p["clustering"] = "dbscan eps sweep, eps=" + fmt_double(model.eps);
  p["clusters"] = std::to_string(k_max);
  p["noise_samples"] = std::to_string(model.assignment.noise_count());
  p["k_min"] = std::to_string(k_min);
  p["k_max"] = std::to_string(k_max);
  p["cluster_order"] = "descending size, ties by cluster id";
  p["embedding_fingerprint"] = model.embedding_fingerprint;
  p["corpus_digest"] = corpus.provenance().source_digest;
  p["rng"] = std::string(Rng::kName);

  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::size_t k = targets[i];
    std::vector<SampleClass> classes;
    classes.reserve(k);
    for (std::size_t r = 0; r < k; ++r) classes.push_back({order[r], members[order[r]]});
    const std::vector<std::size_t> chosen = uniform_select(classes, options.size, derive_seed(options.seed, k));
    SeriesPoint point;
    point.diversity_value = static_cast<double>(k);
    point.diversity_percent =
        diversity_percent(static_cast<double>(k), static_cast<double>(k_min), static_cast<double>(k_max));
    point.sample_ids.reserve(chosen.size());
    for (std::size_t pos : chosen) point.sample_ids.push_back(corpus[pos].id);
    m.points.push_back(std::move(point));
  }
  return m;
}

}  // namespace divforge
