#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace divforge {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row i is the embedding of ids[i].
struct EmbeddingMatrix {
  std::vector<std::string> ids;
  RowMatrix vectors;
  std::string fingerprint;  // sha256 of the source file(s), when loaded

  std::size_t rows() const { return static_cast<std::size_t>(vectors.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }
  // Throws PreconditionError on id/row mismatch, repeated ids or non-finite
  // components.
  void validate() const;
  // Rows for the given ids, in that order.
  EmbeddingMatrix select(const std::vector<std::string>& wanted) const;
};

// `<path>.jsonl` holds {"id", "vector": [...]} records; anything else is a
// flat little-endian float32 file with a JSON sidecar {dim, count, ids} at
// `<path>.json` (or the same stem with .json).
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void save_embeddings_jsonl(const EmbeddingMatrix& e, const std::filesystem::path& path);
void save_embeddings_binary(const EmbeddingMatrix& e, const std::filesystem::path& path);

struct PcaResult {
  EmbeddingMatrix reduced;
  Eigen::VectorXd explained_variance;  // per kept component, descending
  RowMatrix components;                // d x c, orthonormal columns
  Eigen::RowVectorXd mean;
  std::size_t rank = 0;
};

// Mean-centred projection onto the top principal components of the sample
// covariance. Each component is signed so its largest-magnitude coordinate
// is positive. Asking for more components than the data rank pads with
// zero-variance directions and warns.
PcaResult pca(const EmbeddingMatrix& e, std::size_t components);
EmbeddingMatrix pca_reduce(const EmbeddingMatrix& e, std::size_t components);

inline constexpr int kNoise = -1;

struct ClusterAssignment {
  std::vector<int> labels;  // per row; kNoise for noise
  std::size_t k = 0;        // clusters, labelled 0..k-1 by smallest member row

  std::vector<std::vector<std::size_t>> members() const;
  std::size_t noise_count() const;
};

// Euclidean DBSCAN. A row is core when at least min_samples rows (itself
// included) lie within eps. Cores connect when within eps; a non-core row
// within eps of some core joins the cluster of the lowest-index such core.
ClusterAssignment dbscan(const EmbeddingMatrix& e, double eps, std::size_t min_samples);

struct DensityOptions {
  std::size_t min_cluster_size = 20;
  double low_quantile = 0.05;     // first eps: this quantile of the k-distances
  double grid_ratio = 1.0905077326652577;  // 2^(1/8) between successive eps values
  double stability_ratio = 2.0;   // a cluster count must hold over eps x this factor
  std::size_t max_steps = 256;
};

struct SweepStep {
  double eps = 0.0;
  std::size_t clusters = 0;
  std::size_t noise = 0;
};

struct DensityResult {
  ClusterAssignment assignment;
  double eps = 0.0;  // 0 when no stable clustering was found
  std::vector<SweepStep> sweep;
};

// Density clustering with a minimum cluster size. Sweeps DBSCAN (min_samples
// = min_cluster_size) over a geometric eps grid that starts at a low
// quantile of the k-distance curve and runs until everything merges.
// Clusters under min_cluster_size are noise. A cluster count is stable when
// it holds, with at least two clusters, across a run of grid values
// spanning stability_ratio. The result is the stable run with the most
// clusters (ties: larger eps), taken at its largest eps. No stable run
// means all noise. A point set with zero spread is a single cluster.
DensityResult density_sweep(const EmbeddingMatrix& e, const DensityOptions& options);
ClusterAssignment density_cluster(const EmbeddingMatrix& e, std::size_t min_cluster_size);

}  // namespace divforge
