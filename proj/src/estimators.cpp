#include "dcms/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dcms/error.hpp"
#include "dcms/parallel.hpp"
#include "gram_internal.hpp"

namespace dcms {

void EstimatorConfig::validate() const {
  if (cms_batch < 2 || cka_batch < 2) throw InputError("mini-batch sizes must be >= 2");
}

std::vector<BlockRange> make_blocks(std::size_t n, std::size_t batch, bool drop_remainder,
                                    bool blocked) {
  std::vector<BlockRange> blocks;
  if (n == 0) return blocks;
  if (!blocked) {
    blocks.push_back({0, n});
    return blocks;
  }
  const std::size_t full = n / batch;
  for (std::size_t b = 0; b < full; ++b) blocks.push_back({b * batch, batch});
  if (!drop_remainder && n % batch != 0) blocks.push_back({full * batch, n % batch});
  return blocks;
}

double MeanEmbeddingStats::cosine() const { return xy / std::sqrt(xx * yy); }

namespace {

void check_pair(const KernelSpec& spec, const IndexSet& subset, const SampleMatrix& x,
                const SampleMatrix& y) {
  spec.validate();
  if (!x.meta().same_shape(y.meta())) throw InputError("shape mismatch between datasets");
  subset.check(x.pixels());
}

MeanEmbeddingStats stats_for(const KernelSpec& spec, const IndexSet& subset,
                             const SampleMatrix& x, BlockRange xr, const SampleMatrix& y,
                             BlockRange yr, std::size_t workers) {
  const auto gx = detail::gather(x, subset, xr.first, xr.count);
  const auto gy = detail::gather(y, subset, yr.first, yr.count);
  const double n = static_cast<double>(xr.count);
  const double m = static_cast<double>(yr.count);

  std::vector<double> buf(std::max(xr.count, yr.count) * std::max(xr.count, yr.count));
  MeanEmbeddingStats s;
  std::span<double> kxx(buf.data(), xr.count * xr.count);
  detail::fill_gram(spec, gx, gx, true, kxx, workers);
  s.xx = detail::ordered_sum(kxx) / (n * n);

  std::span<double> kyy(buf.data(), yr.count * yr.count);
  detail::fill_gram(spec, gy, gy, true, kyy, workers);
  s.yy = detail::ordered_sum(kyy) / (m * m);

  std::span<double> kxy(buf.data(), xr.count * yr.count);
  detail::fill_gram(spec, gx, gy, false, kxy, workers);
  s.xy = detail::ordered_sum(kxy) / (n * m);
  return s;
}

std::string describe(const IndexSet& s) {
  std::string out = "{";
  std::size_t shown = 0;
  for (const std::size_t i : s) {
    if (shown) out += ",";
    if (shown == 8) {
      out += "...";
      break;
    }
    out += std::to_string(i);
    ++shown;
  }
  return out + "}";
}

struct HsicBlock {
  double ab = 0.0;
  double aa = 0.0;
  double bb = 0.0;
};

std::vector<HsicBlock> hsic_blocks(const KernelSpec& spec_a, const KernelSpec& spec_b,
                                   const IndexSet& subset_a, const IndexSet& subset_b,
                                   const SampleMatrix& data, const EstimatorConfig& cfg) {
  spec_a.validate();
  spec_b.validate();
  cfg.validate();
  subset_a.check(data.pixels());
  subset_b.check(data.pixels());
  if (!(subset_a == subset_b) && !subset_a.disjoint(subset_b)) {
    throw InputError("HSIC subsets must be disjoint or identical");
  }
  const auto blocks = make_blocks(data.size(), cfg.cka_batch, cfg.drop_remainder, cfg.blocked);
  if (blocks.empty()) throw InputError("empty block set: fewer samples than one CKA block");

  std::vector<HsicBlock> out;
  out.reserve(blocks.size());
  for (const BlockRange& r : blocks) {
    if (r.count < 2) throw InputError("HSIC block size must be >= 2");
    const std::size_t n = r.count;
    std::vector<double> k(n * n);
    detail::fill_gram(spec_a, detail::gather(data, subset_a, r.first, n),
                      detail::gather(data, subset_a, r.first, n), true, k, cfg.workers);
    const auto ca = detail::centered_packed(k, n);
    detail::fill_gram(spec_b, detail::gather(data, subset_b, r.first, n),
                      detail::gather(data, subset_b, r.first, n), true, k, cfg.workers);
    const auto cb = detail::centered_packed(k, n);
    out.push_back({detail::packed_frobenius(ca.data(), cb.data(), n),
                   detail::packed_frobenius(ca.data(), ca.data(), n),
                   detail::packed_frobenius(cb.data(), cb.data(), n)});
  }
  return out;
}

}  // namespace

MeanEmbeddingStats mean_embedding_stats(const KernelSpec& spec, const IndexSet& subset,
                                        const SampleMatrix& x, const SampleMatrix& y,
                                        std::size_t workers) {
  check_pair(spec, subset, x, y);
  return stats_for(spec, subset, x, {0, x.size()}, y, {0, y.size()}, workers);
}

std::vector<MeanEmbeddingStats> blockwise_stats(const KernelSpec& spec, const IndexSet& subset,
                                                const SampleMatrix& x, const SampleMatrix& y,
                                                const EstimatorConfig& cfg) {
  check_pair(spec, subset, x, y);
  cfg.validate();
  const auto bx = make_blocks(x.size(), cfg.cms_batch, cfg.drop_remainder, cfg.blocked);
  const auto by = make_blocks(y.size(), cfg.cms_batch, cfg.drop_remainder, cfg.blocked);
  const std::size_t count = std::min(bx.size(), by.size());
  if (count == 0) throw InputError("empty block set: fewer samples than one CMS block");
  std::vector<MeanEmbeddingStats> out;
  out.reserve(count);
  for (std::size_t b = 0; b < count; ++b) {
    out.push_back(stats_for(spec, subset, x, bx[b], y, by[b], cfg.workers));
  }
  return out;
}

double mean_cosine(const std::vector<MeanEmbeddingStats>& blocks) {
  double s = 0.0;
  for (const auto& b : blocks) s += b.cosine();
  return s / static_cast<double>(blocks.size());
}

double mean_mmd2(const std::vector<MeanEmbeddingStats>& blocks) {
  double s = 0.0;
  for (const auto& b : blocks) s += b.mmd2();
  return s / static_cast<double>(blocks.size());
}

double cms(const KernelSpec& spec, const IndexSet& subset, const SampleMatrix& x,
           const SampleMatrix& y, const EstimatorConfig& cfg) {
  return mean_cosine(blockwise_stats(spec, subset, x, y, cfg));
}

double mmd2(const KernelSpec& spec, const IndexSet& subset, const SampleMatrix& x,
            const SampleMatrix& y, const EstimatorConfig& cfg) {
  return mean_mmd2(blockwise_stats(spec, subset, x, y, cfg));
}

double hsic(const KernelSpec& spec_a, const KernelSpec& spec_b, const IndexSet& subset_a,
            const IndexSet& subset_b, const SampleMatrix& data, const EstimatorConfig& cfg) {
  const auto blocks = hsic_blocks(spec_a, spec_b, subset_a, subset_b, data, cfg);
  double s = 0.0;
  for (const auto& b : blocks) s += b.ab;
  return s / static_cast<double>(blocks.size());
}

double cka(const KernelSpec& spec_a, const KernelSpec& spec_b, const IndexSet& subset_a,
           const IndexSet& subset_b, const SampleMatrix& data, const EstimatorConfig& cfg) {
  const auto blocks = hsic_blocks(spec_a, spec_b, subset_a, subset_b, data, cfg);
  double s = 0.0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& h = blocks[b];
    if (h.aa <= kDegenerateHsic || h.bb <= kDegenerateHsic) {
      const IndexSet& bad = h.aa <= kDegenerateHsic ? subset_a : subset_b;
      throw DegenerateError("degenerate pixel: subset " + describe(bad) +
                            " is constant within CKA block " + std::to_string(b));
    }
    s += h.ab / std::sqrt(h.aa * h.bb);
  }
  return s / static_cast<double>(blocks.size());
}

}  // namespace dcms
