#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dcms/clustering.hpp"
#include "dcms/estimators.hpp"
#include "dcms/kernels.hpp"
#include "dcms/tensor_io.hpp"

namespace dcms {

/// Which dataset feeds the median heuristic, or a fixed value.
enum class GammaSource { train, test, value };

std::string_view to_string(GammaSource source);
GammaSource parse_gamma_source(std::string_view name);

/// Compute the partition from training data instead of supplying one.
struct ClusterRequest {
  std::size_t num_clusters = 1;
  Linkage linkage = Linkage::average;
};

struct MonitorConfig {
  KernelFamily family = KernelFamily::rbf;
  GammaSource gamma_source = GammaSource::test;
  /// Used when gamma_source == value.
  double gamma = 1.0;
  std::size_t max_pairs = kDefaultMedianPairs;
  EstimatorConfig estimator;
  std::variant<Partition, ClusterRequest> partition = ClusterRequest{};
  /// Leading test samples to use; all of them when unset.
  std::optional<std::size_t> n_test;
  bool emit_mmd = false;
};

struct SnapshotReport {
  std::int64_t ordinal = 0;
  std::string label;
  double image_cms = 0.0;
  std::vector<double> cluster_cms;
  double product_cms = 0.0;
  std::optional<double> mmd2;
  double factorization_gap = 0.0;
  bool corollary_violation = false;
};

/// Report header plus one record per snapshot.
struct MonitorResult {
  KernelSpec kernel;
  GammaSource gamma_source = GammaSource::test;
  Partition partition;
  std::size_t n_test = 0;
  EstimatorConfig estimator;
  std::vector<SnapshotReport> reports;
};

/// Slack on the corollary |image| <= min |cluster| before a violation is flagged.
inline constexpr double kCorollarySlack = 1e-9;

/// Image-wise and cluster-wise CMS of every snapshot against the test set.
/// The bandwidth is resolved once and reused for the whole series. `train` is
/// required for GammaSource::train and for ClusterRequest partitions.
MonitorResult monitor(const SampleMatrix& test, const SnapshotSeries& series,
                      const MonitorConfig& cfg, const SampleMatrix* train = nullptr);

struct Factorization {
  double image_cms = 0.0;
  std::vector<double> cluster_cms;
  double product_cms = 0.0;
  double gap = 0.0;
};

/// Both sides of the product identity: image-wise CMS and the product of the
/// cluster-wise CMS values, with their absolute difference.
Factorization verify_factorization(const SampleMatrix& x, const SampleMatrix& y,
                                   const Partition& partition, const KernelSpec& spec,
                                   const EstimatorConfig& cfg);

}  // namespace dcms
