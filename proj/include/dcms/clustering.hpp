#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "dcms/estimators.hpp"
#include "dcms/kernels.hpp"
#include "dcms/tensor_io.hpp"

namespace dcms {

/// Symmetric d x d matrix of pairwise-pixel CKA values. Rows of degenerate
/// (constant) pixels are all zero, diagonal included.
class CkaMatrix {
 public:
  explicit CkaMatrix(std::size_t d);
  /// Validates finiteness, exact symmetry and the [0, 1] range (with float slack).
  CkaMatrix(std::size_t d, std::vector<double> values);

  std::size_t size() const { return d_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * d_ + j]; }
  std::span<const double> values() const { return values_; }

  /// Pixels whose diagonal entry is zero.
  std::vector<std::size_t> degenerate() const;

 private:
  friend CkaMatrix cka_matrix(const KernelSpec&, const SampleMatrix&, const EstimatorConfig&);

  std::size_t d_;
  std::vector<double> values_;
};

/// Pairwise single-pixel CKA over cka_batch blocks of the training data, each
/// unordered pair evaluated once. A pixel constant within any block is degenerate.
CkaMatrix cka_matrix(const KernelSpec& spec, const SampleMatrix& train,
                     const EstimatorConfig& cfg);

void save_cka_matrix(const CkaMatrix& m, const std::filesystem::path& path);
CkaMatrix load_cka_matrix(const std::filesystem::path& path);
void export_cka_csv(const CkaMatrix& m, const std::filesystem::path& path);

/// Disjoint cover of {0, ..., d-1}; clusters ordered by smallest index.
class Partition {
 public:
  /// Sorts within and across clusters; throws InputError on overlap, gaps,
  /// empty clusters or indices >= d.
  Partition(std::size_t d, std::vector<std::vector<std::size_t>> clusters);

  static Partition whole(std::size_t d);
  static Partition singletons(std::size_t d);

  std::size_t pixels() const { return d_; }
  std::size_t size() const { return clusters_.size(); }
  std::span<const IndexSet> clusters() const { return clusters_; }
  const IndexSet& operator[](std::size_t c) const { return clusters_[c]; }

  /// Cluster ordinal of each pixel.
  std::vector<std::size_t> labels() const;

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::size_t d_;
  std::vector<IndexSet> clusters_;
};

void save_partition(const Partition& p, const std::filesystem::path& path);
Partition load_partition(const std::filesystem::path& path);

enum class Linkage { average, complete, single };

std::string_view to_string(Linkage linkage);
Linkage parse_linkage(std::string_view name);

struct Merge {
  /// Smallest pixel index of each merged cluster, left < right.
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  Partition partition;
  std::vector<Merge> merges;
};

/// Agglomerative clustering on dissimilarity 1 - M until num_clusters remain.
/// Equal heights go to the pair whose smaller cluster has the lowest minimum
/// pixel index, then the lowest minimum index of the other cluster.
Dendrogram agglomerate(const CkaMatrix& m, std::size_t num_clusters,
                       Linkage linkage = Linkage::average);

inline Partition cluster(const CkaMatrix& m, std::size_t num_clusters,
                         Linkage linkage = Linkage::average) {
  return agglomerate(m, num_clusters, linkage).partition;
}

}  // namespace dcms
