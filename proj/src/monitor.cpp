#include "dcms/monitor.hpp"

#include <algorithm>
#include <cmath>

#include "dcms/error.hpp"
#include "dcms/parallel.hpp"

namespace dcms {

std::string_view to_string(GammaSource source) {
  switch (source) {
    case GammaSource::train: return "train";
    case GammaSource::test: return "test";
    case GammaSource::value: return "value";
  }
  return "test";
}

GammaSource parse_gamma_source(std::string_view name) {
  if (name == "train") return GammaSource::train;
  if (name == "test") return GammaSource::test;
  if (name == "value") return GammaSource::value;
  throw InputError("unknown gamma source \"" + std::string(name) + "\"");
}

namespace {

void check_partition(const Partition& p, std::size_t d) {
  if (p.pixels() != d) {
    throw InputError("partition d mismatch: partition covers " + std::to_string(p.pixels()) +
                     " pixels, data has " + std::to_string(d));
  }
}

/// Cluster-wise CMS values in partition order. Clusters run in parallel when
/// there are enough of them to occupy the workers; otherwise each estimate
/// parallelises internally.
std::vector<double> cluster_cms(const KernelSpec& spec, const Partition& partition,
                                const SampleMatrix& x, const SampleMatrix& y,
                                const EstimatorConfig& cfg) {
  std::vector<double> out(partition.size());
  const std::size_t workers = resolve_workers(cfg.workers);
  if (partition.size() >= workers && workers > 1) {
    EstimatorConfig inner = cfg;
    inner.workers = 1;
    parallel_for(partition.size(), workers, [&](std::size_t c) {
      out[c] = cms(spec, partition[c], x, y, inner);
    });
  } else {
    for (std::size_t c = 0; c < partition.size(); ++c) out[c] = cms(spec, partition[c], x, y, cfg);
  }
  return out;
}

double product(const std::vector<double>& values) {
  double p = 1.0;
  for (const double v : values) p *= v;
  return p;
}

}  // namespace

MonitorResult monitor(const SampleMatrix& test, const SnapshotSeries& series,
                      const MonitorConfig& cfg, const SampleMatrix* train) {
  cfg.estimator.validate();
  if (!test.meta().same_shape(series.meta())) {
    throw InputError("shape mismatch between test data and snapshots");
  }
  if (train && !train->meta().same_shape(test.meta())) {
    throw InputError("shape mismatch between training and test data");
  }
  const std::size_t d = test.pixels();

  const std::size_t n_test = cfg.n_test.value_or(test.size());
  if (n_test < 1 || n_test > test.size()) {
    throw InputError("n_test = " + std::to_string(n_test) + " exceeds the " +
                     std::to_string(test.size()) + " available test samples");
  }
  const std::optional<SampleMatrix> sliced =
      n_test == test.size() ? std::nullopt : std::optional(test.slice(0, n_test));
  const SampleMatrix& te = sliced ? *sliced : test;

  const IndexSet everything = IndexSet::all(d);
  KernelSpec kernel{cfg.family, cfg.gamma};
  switch (cfg.gamma_source) {
    case GammaSource::value:
      break;
    case GammaSource::test:
      kernel.gamma = median_heuristic_gamma(te, everything, cfg.max_pairs);
      break;
    case GammaSource::train:
      if (!train) throw InputError("gamma source \"train\" requires training data");
      kernel.gamma = median_heuristic_gamma(*train, everything, cfg.max_pairs);
      break;
  }
  kernel.validate();

  std::optional<Partition> resolved;
  if (const auto* p = std::get_if<Partition>(&cfg.partition)) {
    check_partition(*p, d);
    resolved = *p;
  } else {
    const auto& req = std::get<ClusterRequest>(cfg.partition);
    if (!train) throw InputError("computing a partition requires training data");
    resolved = cluster(cka_matrix(kernel, *train, cfg.estimator), req.num_clusters, req.linkage);
  }

  MonitorResult result{kernel, cfg.gamma_source, *resolved, n_test, cfg.estimator, {}};
  result.reports.reserve(series.size());
  for (const Snapshot& snap : series.snapshots()) {
    SnapshotReport r;
    r.ordinal = snap.ordinal;
    r.label = snap.label;
    const auto blocks = blockwise_stats(kernel, everything, te, snap.samples, cfg.estimator);
    r.image_cms = mean_cosine(blocks);
    if (cfg.emit_mmd) r.mmd2 = mean_mmd2(blocks);
    r.cluster_cms = cluster_cms(kernel, result.partition, te, snap.samples, cfg.estimator);
    r.product_cms = product(r.cluster_cms);
    r.factorization_gap = std::abs(r.image_cms - r.product_cms);
    double min_abs = std::abs(r.cluster_cms.front());
    for (const double v : r.cluster_cms) min_abs = std::min(min_abs, std::abs(v));
    r.corollary_violation = std::abs(r.image_cms) > min_abs + kCorollarySlack;
    result.reports.push_back(std::move(r));
  }
  return result;
}

Factorization verify_factorization(const SampleMatrix& x, const SampleMatrix& y,
                                   const Partition& partition, const KernelSpec& spec,
                                   const EstimatorConfig& cfg) {
  if (!x.meta().same_shape(y.meta())) throw InputError("shape mismatch between datasets");
  check_partition(partition, x.pixels());
  Factorization f;
  f.image_cms = cms(spec, IndexSet::all(x.pixels()), x, y, cfg);
  f.cluster_cms = cluster_cms(spec, partition, x, y, cfg);
  f.product_cms = product(f.cluster_cms);
  f.gap = std::abs(f.image_cms - f.product_cms);
  return f;
}

}  // namespace dcms
