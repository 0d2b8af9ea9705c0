#pragma once

#include <cstddef>
#include <vector>

#include "dcms/kernels.hpp"
#include "dcms/tensor_io.hpp"

namespace dcms {

/// Mini-batch settings shared by the CMS/MMD and HSIC/CKA estimators.
struct EstimatorConfig {
  std::size_t cms_batch = 150;
  std::size_t cka_batch = 100;
  /// Samples past the last full block are ignored; otherwise they form a
  /// smaller trailing block.
  bool drop_remainder = true;
  /// When false every estimator uses one block holding all samples.
  bool blocked = true;
  std::size_t workers = 0;

  void validate() const;
};

struct BlockRange {
  std::size_t first = 0;
  std::size_t count = 0;
};

std::vector<BlockRange> make_blocks(std::size_t n, std::size_t batch, bool drop_remainder,
                                    bool blocked);

/// Biased (diagonal-including) estimates of |mu_P|^2, |mu_Q|^2 and <mu_P, mu_Q>.
struct MeanEmbeddingStats {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;

  double cosine() const;
  double mmd2() const { return xx + yy - 2.0 * xy; }
};

/// Single block over all samples of X and Y.
MeanEmbeddingStats mean_embedding_stats(const KernelSpec& spec, const IndexSet& subset,
                                        const SampleMatrix& x, const SampleMatrix& y,
                                        std::size_t workers = 0);

/// One entry per aligned block pair (block i of X with block i of Y); blocks
/// beyond the shorter side are discarded.
std::vector<MeanEmbeddingStats> blockwise_stats(const KernelSpec& spec, const IndexSet& subset,
                                                const SampleMatrix& x, const SampleMatrix& y,
                                                const EstimatorConfig& cfg);

/// Left-to-right means over blocks.
double mean_cosine(const std::vector<MeanEmbeddingStats>& blocks);
double mean_mmd2(const std::vector<MeanEmbeddingStats>& blocks);

/// Cosine similarity of the empirical mean embeddings, averaged over blocks.
double cms(const KernelSpec& spec, const IndexSet& subset, const SampleMatrix& x,
           const SampleMatrix& y, const EstimatorConfig& cfg);

/// xx + yy - 2 xy per block, averaged. Not clamped at zero.
double mmd2(const KernelSpec& spec, const IndexSet& subset, const SampleMatrix& x,
            const SampleMatrix& y, const EstimatorConfig& cfg);

/// tr(K_A H K_B H), H = I - 11^T / n, with K_A and K_B built from columns
/// subset_a and subset_b of the same samples; averaged over cka_batch blocks.
double hsic(const KernelSpec& spec_a, const KernelSpec& spec_b, const IndexSet& subset_a,
            const IndexSet& subset_b, const SampleMatrix& data, const EstimatorConfig& cfg);

/// Per block HSIC(A,B) / sqrt(HSIC(A,A) HSIC(B,B)), averaged. Throws
/// DegenerateError if either self-HSIC of a block is <= kDegenerateHsic.
double cka(const KernelSpec& spec_a, const KernelSpec& spec_b, const IndexSet& subset_a,
           const IndexSet& subset_b, const SampleMatrix& data, const EstimatorConfig& cfg);

inline constexpr double kDegenerateHsic = 1e-15;

}  // namespace dcms
