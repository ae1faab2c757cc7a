#include "divforge/clustering.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <queue>
#include <unordered_set>

#include "divforge/common.hpp"

namespace divforge {

using nlohmann::json;

void EmbeddingMatrix::validate() const {
  if (ids.size() != rows()) throw PreconditionError("embedding ids and rows differ in count");
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw PreconditionError("embedding id '" + id + "' repeated");
  }
  if (!vectors.allFinite()) throw PreconditionError("embedding holds non-finite components");
}

EmbeddingMatrix EmbeddingMatrix::select(const std::vector<std::string>& wanted) const {
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < ids.size(); ++i) row_of.emplace(ids[i], i);
  EmbeddingMatrix out;
  out.fingerprint = fingerprint;
  out.vectors.resize(static_cast<Eigen::Index>(wanted.size()), vectors.cols());
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    auto it = row_of.find(wanted[i]);
    if (it == row_of.end()) throw PreconditionError("no embedding for id '" + wanted[i] + "'");
    out.vectors.row(static_cast<Eigen::Index>(i)) = vectors.row(static_cast<Eigen::Index>(it->second));
  }
  out.ids = wanted;
  return out;
}

namespace {

EmbeddingMatrix load_jsonl(const std::filesystem::path& path) {
  const std::string contents = read_file(path);
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string::npos) end = contents.size();
    const std::string_view line(contents.data() + start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("id") || !rec.contains("vector") ||
        !rec["vector"].is_array()) {
      throw PreconditionError(path.string() + ":" + std::to_string(line_no) + ": expected {\"id\", \"vector\"}");
    }
    ids.push_back(rec["id"].is_string() ? rec["id"].get<std::string>() : rec["id"].dump());
    std::vector<double> v;
    for (const auto& x : rec["vector"]) {
      if (!x.is_number()) throw PreconditionError(path.string() + ":" + std::to_string(line_no) + ": non-numeric component");
      v.push_back(x.get<double>());
    }
    if (!rows.empty() && v.size() != rows.front().size()) {
      throw PreconditionError(path.string() + ":" + std::to_string(line_no) + ": dimension mismatch");
    }
    rows.push_back(std::move(v));
  }
  EmbeddingMatrix e;
  e.ids = std::move(ids);
  e.vectors.resize(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      e.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  e.fingerprint = sha256_hex(contents);
  return e;
}

std::filesystem::path sidecar_for(const std::filesystem::path& path) {
  std::filesystem::path appended = path;
  appended += ".json";
  if (std::filesystem::exists(appended)) return appended;
  std::filesystem::path replaced = path;
  replaced.replace_extension(".json");
  if (std::filesystem::exists(replaced)) return replaced;
  throw IoError("no JSON sidecar next to " + path.string());
}

EmbeddingMatrix load_binary(const std::filesystem::path& path) {
  const std::filesystem::path sidecar_path = sidecar_for(path);
  const std::string sidecar_text = read_file(sidecar_path);
  const json sidecar = json::parse(sidecar_text, nullptr, false);
  if (sidecar.is_discarded() || !sidecar.is_object()) throw PreconditionError("embedding sidecar is not JSON");
  std::size_t dim = 0;
  std::size_t count = 0;
  std::vector<std::string> ids;
  try {
    dim = sidecar.at("dim").get<std::size_t>();
    count = sidecar.at("count").get<std::size_t>();
    ids = sidecar.at("ids").get<std::vector<std::string>>();
  } catch (const json::exception&) {
    throw PreconditionError("embedding sidecar needs dim, count and ids");
  }
  if (ids.size() != count) throw PreconditionError("embedding sidecar: ids length differs from count");
  const std::string blob = read_file(path);
  if (blob.size() != dim * count * 4) {
    throw PreconditionError("embedding file holds " + std::to_string(blob.size()) + " bytes, expected " +
                            std::to_string(dim * count * 4));
  }
  EmbeddingMatrix e;
  e.ids = std::move(ids);
  e.vectors.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
  for (std::size_t i = 0; i < count * dim; ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[4 * i]) |
                               (static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8) |
                               (static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16) |
                               (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
    float f = 0.0f;
    std::memcpy(&f, &bits, sizeof(f));
    e.vectors(static_cast<Eigen::Index>(i / dim), static_cast<Eigen::Index>(i % dim)) = f;
  }
  e.fingerprint = sha256_hex(blob + sidecar_text);
  return e;
}

}  // namespace

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw IoError("cannot read embeddings " + path.string());
  EmbeddingMatrix e = path.extension() == ".jsonl" ? load_jsonl(path) : load_binary(path);
  e.validate();
  return e;
}

void save_embeddings_jsonl(const EmbeddingMatrix& e, const std::filesystem::path& path) {
  std::string out;
  for (std::size_t i = 0; i < e.rows(); ++i) {
    json rec;
    rec["id"] = e.ids[i];
    std::vector<double> v(e.dim());
    for (std::size_t j = 0; j < e.dim(); ++j) v[j] = e.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    rec["vector"] = v;
    out += rec.dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

void save_embeddings_binary(const EmbeddingMatrix& e, const std::filesystem::path& path) {
  std::string blob;
  blob.reserve(e.rows() * e.dim() * 4);
  for (std::size_t i = 0; i < e.rows(); ++i) {
    for (std::size_t j = 0; j < e.dim(); ++j) {
      const auto f = static_cast<float>(e.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      std::uint32_t bits = 0;
      std::memcpy(&bits, &f, sizeof(f));
      for (int b = 0; b < 4; ++b) blob.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
    }
  }
  write_file(path, blob);
  json sidecar = {{"dim", e.dim()}, {"count", e.rows()}, {"ids", e.ids}};
  std::filesystem::path sidecar_path = path;
  sidecar_path += ".json";
  write_file(sidecar_path, sidecar.dump() + "\n");
}

PcaResult pca(const EmbeddingMatrix& e, std::size_t components) {
  const std::size_t n = e.rows();
  const std::size_t d = e.dim();
  if (n < 2) throw PreconditionError("PCA needs at least 2 rows");
  if (components == 0 || components > d) throw PreconditionError("PCA components must be in [1, dim]");
  PcaResult r;
  r.mean = e.vectors.colwise().mean();
  const RowMatrix centered = e.vectors.rowwise() - r.mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("PCA eigen-decomposition failed");
  // Ascending from Eigen; take from the top.
  const Eigen::VectorXd values = solver.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  const double tol = std::max(values(0), 0.0) * static_cast<double>(d) * 1e-12;
  r.rank = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) r.rank += values(i) > tol;
  if (components > r.rank) {
    warn("PCA: " + std::to_string(components) + " components requested but data rank is " +
         std::to_string(r.rank) + "; padding with zero-variance directions");
  }
  const auto c = static_cast<Eigen::Index>(components);
  r.components = vectors.leftCols(c);
  for (Eigen::Index j = 0; j < c; ++j) {
    Eigen::Index arg = 0;
    r.components.col(j).cwiseAbs().maxCoeff(&arg);
    if (r.components(arg, j) < 0) r.components.col(j) *= -1.0;
  }
  r.explained_variance = values.head(c).cwiseMax(0.0);
  r.reduced.ids = e.ids;
  r.reduced.vectors = centered * r.components;
  r.reduced.fingerprint = e.fingerprint;
  return r;
}

EmbeddingMatrix pca_reduce(const EmbeddingMatrix& e, std::size_t components) {
  return pca(e, components).reduced;
}

std::vector<std::vector<std::size_t>> ClusterAssignment::members() const {
  std::vector<std::vector<std::size_t>> out(k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) out[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  return out;
}

std::size_t ClusterAssignment::noise_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
}

namespace {

// Static kd-tree over row-major points; brute force above 16 dimensions
// where space partitioning stops paying off.
class NeighborSearch {
 public:
  NeighborSearch(const RowMatrix& m) : data_(m.data()), n_(static_cast<std::size_t>(m.rows())), dim_(static_cast<std::size_t>(m.cols())) {
    perm_.resize(n_);
    std::iota(perm_.begin(), perm_.end(), 0u);
    if (dim_ <= 16 && n_ > kLeaf) build(0, n_);
  }

  template <typename Visit>
  void radius(std::size_t query, double r2, Visit&& visit) const {
    const double* q = row(query);
    if (nodes_.empty()) {
      for (std::size_t i = 0; i < n_; ++i) {
        if (dist2(q, row(i)) <= r2) visit(i);
      }
      return;
    }
    radius_node(0, q, r2, visit);
  }

  // Distance to the k-th nearest row, the query itself counting as first.
  double kth_distance(std::size_t query, std::size_t k) const {
    const double* q = row(query);
    std::priority_queue<double> best;  // max-heap of the k smallest squared distances
    auto offer = [&](double d2) {
      if (best.size() < k) {
        best.push(d2);
      } else if (d2 < best.top()) {
        best.pop();
        best.push(d2);
      }
    };
    if (nodes_.empty()) {
      for (std::size_t i = 0; i < n_; ++i) offer(dist2(q, row(i)));
    } else {
      knn_node(0, q, k, best, offer);
    }
    return std::sqrt(best.top());
  }

 private:
  static constexpr std::size_t kLeaf = 16;
  struct Node {
    std::size_t begin, end;
    int left = -1, right = -1;
    std::size_t axis = 0;
    double split = 0.0;
  };

  const double* row(std::size_t i) const { return data_ + i * dim_; }
  double dist2(const double* a, const double* b) const {
    double s = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double t = a[j] - b[j];
      s += t * t;
    }
    return s;
  }

  int build(std::size_t begin, std::size_t end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({begin, end});
    if (end - begin <= kLeaf) return id;
    std::size_t axis = 0;
    double widest = -1.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      double lo = row(perm_[begin])[j];
      double hi = lo;
      for (std::size_t i = begin; i < end; ++i) {
        lo = std::min(lo, row(perm_[i])[j]);
        hi = std::max(hi, row(perm_[i])[j]);
      }
      if (hi - lo > widest) {
        widest = hi - lo;
        axis = j;
      }
    }
    if (widest <= 0.0) return id;  // all identical: keep as a leaf
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(perm_.begin() + static_cast<std::ptrdiff_t>(begin), perm_.begin() + static_cast<std::ptrdiff_t>(mid),
                     perm_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::uint32_t a, std::uint32_t b) { return row(a)[axis] < row(b)[axis]; });
    nodes_[id].axis = axis;
    nodes_[id].split = row(perm_[mid])[axis];
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  template <typename Visit>
  void radius_node(int id, const double* q, double r2, Visit& visit) const {
    const Node& node = nodes_[id];
    if (node.left < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        if (dist2(q, row(perm_[i])) <= r2) visit(perm_[i]);
      }
      return;
    }
    const double diff = q[node.axis] - node.split;
    const int near = diff < 0 ? node.left : node.right;
    const int far = diff < 0 ? node.right : node.left;
    radius_node(near, q, r2, visit);
    if (diff * diff <= r2) radius_node(far, q, r2, visit);
  }

  template <typename Offer>
  void knn_node(int id, const double* q, std::size_t k, const std::priority_queue<double>& best, Offer& offer) const {
    const Node& node = nodes_[id];
    if (node.left < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) offer(dist2(q, row(perm_[i])));
      return;
    }
    const double diff = q[node.axis] - node.split;
    const int near = diff < 0 ? node.left : node.right;
    const int far = diff < 0 ? node.right : node.left;
    knn_node(near, q, k, best, offer);
    if (best.size() < k || diff * diff <= best.top()) knn_node(far, q, k, best, offer);
  }

  const double* data_;
  std::size_t n_;
  std::size_t dim_;
  std::vector<std::uint32_t> perm_;
  std::vector<Node> nodes_;
};

// Renumbers clusters 0..k-1 by their smallest member row.
ClusterAssignment canonical(std::vector<int> labels) {
  std::unordered_map<int, int> remap;
  int next = 0;
  for (int& l : labels) {
    if (l < 0) continue;
    auto [it, inserted] = remap.emplace(l, next);
    if (inserted) ++next;
    l = it->second;
  }
  return {std::move(labels), static_cast<std::size_t>(next)};
}

ClusterAssignment run_dbscan(const RowMatrix& m, const NeighborSearch& search, double eps, std::size_t min_samples) {
  const std::size_t n = static_cast<std::size_t>(m.rows());
  const double r2 = eps * eps;
  std::vector<char> core(n, 0);
  parallel_for(n, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      std::size_t count = 0;
      search.radius(i, r2, [&](std::size_t) { ++count; });
      core[i] = count >= min_samples;
    }
  });
  std::vector<int> labels(n, kNoise);
  int cluster = 0;
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || labels[i] != kNoise) continue;
    labels[i] = cluster;
    stack.assign(1, i);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      search.radius(p, r2, [&](std::size_t q) {
        if (core[q] && labels[q] == kNoise) {
          labels[q] = cluster;
          stack.push_back(q);
        }
      });
    }
    ++cluster;
  }
  std::vector<int> border(n, kNoise);
  parallel_for(n, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (core[i]) continue;
      std::size_t first = n;
      search.radius(i, r2, [&](std::size_t q) {
        if (core[q] && q < first) first = q;
      });
      if (first < n) border[i] = labels[first];
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) labels[i] = border[i];
  }
  return canonical(std::move(labels));
}

ClusterAssignment drop_small(const ClusterAssignment& a, std::size_t min_size) {
  std::vector<std::size_t> sizes(a.k, 0);
  for (int l : a.labels) {
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
  }
  std::vector<int> labels = a.labels;
  for (int& l : labels) {
    if (l >= 0 && sizes[static_cast<std::size_t>(l)] < min_size) l = kNoise;
  }
  return canonical(std::move(labels));
}

}  // namespace

ClusterAssignment dbscan(const EmbeddingMatrix& e, double eps, std::size_t min_samples) {
  if (!(eps > 0.0)) throw PreconditionError("dbscan needs eps > 0");
  if (min_samples < 1) throw PreconditionError("dbscan needs min_samples >= 1");
  const NeighborSearch search(e.vectors);
  return run_dbscan(e.vectors, search, eps, min_samples);
}

DensityResult density_sweep(const EmbeddingMatrix& e, const DensityOptions& options) {
  const std::size_t mcs = options.min_cluster_size;
  if (mcs < 2) throw PreconditionError("density clustering needs min_cluster_size >= 2");
  if (!(options.grid_ratio > 1.0) || !(options.stability_ratio >= 1.0)) {
    throw PreconditionError("density clustering needs grid_ratio > 1 and stability_ratio >= 1");
  }
  const std::size_t n = e.rows();
  DensityResult result;
  result.assignment.labels.assign(n, kNoise);
  if (n < mcs) return result;

  bool zero_spread = true;
  for (std::size_t i = 1; i < n && zero_spread; ++i) {
    zero_spread = e.vectors.row(static_cast<Eigen::Index>(i)) == e.vectors.row(0);
  }
  if (zero_spread) {
    result.assignment.labels.assign(n, 0);
    result.assignment.k = 1;
    return result;
  }

  const NeighborSearch search(e.vectors);
  std::vector<double> kdist(n);
  parallel_for(n, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) kdist[i] = search.kth_distance(i, mcs);
  });
  std::vector<double> positive;
  for (double d : kdist) {
    if (d > 0.0) positive.push_back(d);
  }
  if (positive.empty()) {
    // Every row has mcs exact duplicates but the rows are not all equal:
    // start just above zero at the smallest pairwise scale we can see.
    positive.push_back((e.vectors.rowwise() - e.vectors.row(0)).rowwise().norm().maxCoeff() * 1e-6);
  }
  std::sort(positive.begin(), positive.end());
  const auto q_index = static_cast<std::size_t>(options.low_quantile * static_cast<double>(positive.size() - 1));
  const double start = positive[q_index];

  std::vector<ClusterAssignment> assignments;
  double eps = start;
  for (std::size_t step = 0; step < options.max_steps; ++step, eps *= options.grid_ratio) {
    ClusterAssignment a = drop_small(run_dbscan(e.vectors, search, eps, mcs), mcs);
    result.sweep.push_back({eps, a.k, a.noise_count()});
    const bool merged = a.k <= 1 && a.noise_count() == 0;
    assignments.push_back(std::move(a));
    if (merged) break;
  }

  // Scan runs of equal cluster count.
  std::size_t best_end = 0;
  std::size_t best_count = 0;
  for (std::size_t begin = 0; begin < result.sweep.size();) {
    std::size_t end = begin;
    while (end + 1 < result.sweep.size() && result.sweep[end + 1].clusters == result.sweep[begin].clusters) ++end;
    const std::size_t count = result.sweep[begin].clusters;
    const bool stable = count >= 2 && result.sweep[end].eps >= result.sweep[begin].eps * options.stability_ratio * (1.0 - 1e-12);
    if (stable && count >= best_count) {
      best_count = count;
      best_end = end;
    }
    begin = end + 1;
  }
  if (best_count == 0) return result;
  result.assignment = std::move(assignments[best_end]);
  result.eps = result.sweep[best_end].eps;
  return result;
}

ClusterAssignment density_cluster(const EmbeddingMatrix& e, std::size_t min_cluster_size) {
  DensityOptions options;
  options.min_cluster_size = min_cluster_size;
  return density_sweep(e, options).assignment;
}

}  // namespace divforge
