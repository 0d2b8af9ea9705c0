#include <cmath>

#include <gtest/gtest.h>

#include "dcms/error.hpp"
#include "dcms/estimators.hpp"
#include "dcms/synth.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace dcms;
using testing_util::random_matrix;
using testing_util::rows;

namespace {

const KernelSpec kRbf1{KernelFamily::rbf, 1.0};
const double kE1 = std::exp(-1.0);

EstimatorConfig single_block() {
  EstimatorConfig cfg;
  cfg.blocked = false;
  return cfg;
}

double rel(double a, long double b) {
  const long double d = std::fabs(static_cast<long double>(a) - b);
  return static_cast<double>(d / std::max(std::fabs(b), 1e-300L));
}

std::vector<std::size_t> whole(std::size_t d) {
  std::vector<std::size_t> v(d);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TEST(MeanEmbeddingStats, ClosedForms) {
  const auto s = mean_embedding_stats(kRbf1, IndexSet::all(1), rows({{0.0f}}), rows({{1.0f}}));
  EXPECT_EQ(s.xx, 1.0);
  EXPECT_EQ(s.yy, 1.0);
  EXPECT_DOUBLE_EQ(s.xy, kE1);

  const auto t = mean_embedding_stats(kRbf1, IndexSet::all(1), rows({{0.0f}, {1.0f}}), rows({{0.0f}}));
  EXPECT_DOUBLE_EQ(t.xx, (2.0 + 2.0 * kE1) / 4.0);
  EXPECT_EQ(t.yy, 1.0);
  EXPECT_DOUBLE_EQ(t.xy, (1.0 + kE1) / 2.0);
}

TEST(MeanEmbeddingStats, SameDataAndCauchySchwarz) {
  const auto x = random_matrix(9, 2, 2, 3, 1);
  const auto s = mean_embedding_stats(kRbf1, IndexSet::all(4), x, x);
  EXPECT_EQ(s.xx, s.yy);
  EXPECT_EQ(s.xx, s.xy);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = random_matrix(6, 2, 2, 1, seed * 2);
    const auto b = random_matrix(4, 2, 2, 1, seed * 2 + 1, 0.3, 1.4);
    const auto st = mean_embedding_stats(KernelSpec{KernelFamily::laplacian, 0.8}, IndexSet({1, 2}), a, b);
    EXPECT_GT(st.xx, 0.0);
    EXPECT_GT(st.yy, 0.0);
    EXPECT_LE(st.xy * st.xy, st.xx * st.yy * (1.0 + 1e-12));
    EXPECT_EQ(st.mmd2(), st.xx + st.yy - 2.0 * st.xy);
  }
}

TEST(Cms, ClosedForms) {
  EXPECT_DOUBLE_EQ(cms(kRbf1, IndexSet::all(1), rows({{0.0f}}), rows({{1.0f}}), single_block()), kE1);
  EXPECT_DOUBLE_EQ(mmd2(kRbf1, IndexSet::all(1), rows({{0.0f}}), rows({{1.0f}}), single_block()), 2.0 - 2.0 * kE1);
  const auto x = random_matrix(20, 3, 3, 1, 4);
  EXPECT_EQ(cms(kRbf1, IndexSet::all(9), x, x, single_block()), 1.0);
  EXPECT_NEAR(mmd2(kRbf1, IndexSet::all(9), x, x, single_block()), 0.0, 1e-12);
}

TEST(Cms, TwoBlocksMatchOraclePerBlock) {
  const auto x = random_matrix(300, 2, 2, 1, 21);
  const auto y = random_matrix(300, 2, 2, 1, 22, 0.1, 1.2);
  const KernelSpec spec{KernelFamily::rbf, 2.0};
  EstimatorConfig cfg;  // cms_batch 150
  long double expect_cms = 0.0L, expect_mmd = 0.0L;
  for (std::size_t b = 0; b < 2; ++b) {
    expect_cms += oracle::cms(spec, whole(4), x.slice(150 * b, 150), y.slice(150 * b, 150));
    expect_mmd += oracle::mmd2(spec, whole(4), x.slice(150 * b, 150), y.slice(150 * b, 150));
  }
  EXPECT_LT(rel(cms(spec, IndexSet::all(4), x, y, cfg), expect_cms / 2), 1e-12);
  EXPECT_LT(rel(mmd2(spec, IndexSet::all(4), x, y, cfg), expect_mmd / 2), 1e-12);
}

TEST(Cms, OneBlockEqualsFullEstimator) {
  const auto x = random_matrix(40, 2, 3, 1, 5);
  const auto y = random_matrix(40, 2, 3, 1, 6);
  EstimatorConfig blocked;
  blocked.cms_batch = 40;
  const auto full = mean_embedding_stats(kRbf1, IndexSet::all(6), x, y);
  EXPECT_EQ(cms(kRbf1, IndexSet::all(6), x, y, blocked), full.cosine());
  EXPECT_EQ(cms(kRbf1, IndexSet::all(6), x, y, single_block()), full.cosine());
  EXPECT_EQ(mmd2(kRbf1, IndexSet::all(6), x, y, blocked), full.mmd2());
}

TEST(Cms, BlockPairingAndRemainder) {
  const auto x = random_matrix(7, 1, 2, 1, 7);
  const auto y = random_matrix(11, 1, 2, 1, 8);
  EstimatorConfig cfg;
  cfg.cms_batch = 3;
  // x: 2 blocks, y: 3 blocks -> 2 aligned pairs
  const auto blocks = blockwise_stats(kRbf1, IndexSet::all(2), x, y, cfg);
  ASSERT_EQ(blocks.size(), 2u);
  const auto second = mean_embedding_stats(kRbf1, IndexSet::all(2), x.slice(3, 3), y.slice(3, 3));
  EXPECT_EQ(blocks[1].xy, second.xy);

  cfg.drop_remainder = false;
  EXPECT_EQ(blockwise_stats(kRbf1, IndexSet::all(2), x, y, cfg).size(), 3u);

  cfg.drop_remainder = true;
  cfg.cms_batch = 8;
  EXPECT_THROW(cms(kRbf1, IndexSet::all(2), x, y, cfg), InputError);
}

TEST(Cms, BoundedForRandomData) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto x = random_matrix(8, 2, 2, 1, 100 + seed);
    const auto y = random_matrix(5, 2, 2, 1, 200 + seed, -0.5, 2.0);
    const double v = cms(KernelSpec{KernelFamily::rbf, 0.5}, IndexSet::all(4), x, y, single_block());
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Mmd2, VanishesAsGammaShrinks) {
  const auto x = random_matrix(10, 2, 2, 1, 1);
  const auto y = random_matrix(10, 2, 2, 1, 2, 3.0, 4.0);
  double prev = mmd2(KernelSpec{KernelFamily::rbf, 1e-2}, IndexSet::all(4), x, y, single_block());
  for (double g = 1e-3; g > 1e-9; g /= 10) {
    const double v = mmd2(KernelSpec{KernelFamily::rbf, g}, IndexSet::all(4), x, y, single_block());
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1e-6);
}

TEST(Hsic, TwoSampleHandFormula) {
  const auto d = rows({{0.0f, 2.0f}, {1.0f, 0.5f}});
  const KernelSpec a{KernelFamily::rbf, 1.0};
  const KernelSpec b{KernelFamily::laplacian, 0.3};
  EstimatorConfig cfg;
  cfg.cka_batch = 2;
  const double ka12 = std::exp(-1.0);
  const double kb12 = std::exp(-0.3 * 1.5);
  const double hand = (2.0 - 2.0 * ka12) * (2.0 - 2.0 * kb12) / 4.0;
  const double got = hsic(a, b, IndexSet({0}), IndexSet({1}), d, cfg);
  EXPECT_NEAR(got, hand, 1e-15);
  EXPECT_NEAR(got, static_cast<double>(oracle::hsic(a, b, {0}, {1}, d)), 1e-15);
  // rank-one centring at n = 2 makes CKA trivially one
  EXPECT_NEAR(cka(a, b, IndexSet({0}), IndexSet({1}), d, cfg), 1.0, 1e-12);
}

TEST(Hsic, SelfPositiveConstantZeroSymmetric) {
  const auto d = random_matrix(30, 1, 3, 1, 9);
  EstimatorConfig cfg;
  cfg.cka_batch = 10;
  EXPECT_GT(hsic(kRbf1, kRbf1, IndexSet({0}), IndexSet({0}), d, cfg), 0.0);

  std::vector<float> v(d.data().begin(), d.data().end());
  for (std::size_t s = 0; s < 30; ++s) v[s * 3 + 2] = 0.25f;
  const auto c = testing_util::matrix(30, 1, 3, 1, v);
  EXPECT_NEAR(hsic(kRbf1, kRbf1, IndexSet({2}), IndexSet({0}), c, cfg), 0.0, 1e-12);
  EXPECT_THROW(cka(kRbf1, kRbf1, IndexSet({2}), IndexSet({0}), c, cfg), DegenerateError);

  const KernelSpec other{KernelFamily::laplacian, 2.0};
  EXPECT_EQ(hsic(kRbf1, other, IndexSet({0}), IndexSet({1, 2}), d, cfg),
            hsic(other, kRbf1, IndexSet({1, 2}), IndexSet({0}), d, cfg));
}

TEST(Hsic, Preconditions) {
  const auto d = random_matrix(5, 1, 3, 1, 2);
  EstimatorConfig cfg;
  cfg.cka_batch = 2;
  cfg.drop_remainder = false;  // trailing block of one sample
  EXPECT_THROW(hsic(kRbf1, kRbf1, IndexSet({0}), IndexSet({1}), d, cfg), InputError);
  cfg.drop_remainder = true;
  EXPECT_THROW(hsic(kRbf1, kRbf1, IndexSet({0, 1}), IndexSet({1, 2}), d, cfg), InputError);
  cfg.cka_batch = 6;
  EXPECT_THROW(hsic(kRbf1, kRbf1, IndexSet({0}), IndexSet({1}), d, cfg), InputError);
  cfg.cka_batch = 1;
  EXPECT_THROW(hsic(kRbf1, kRbf1, IndexSet({0}), IndexSet({1}), d, cfg), InputError);
}

TEST(Cka, SelfAlignmentIsExactlyOne) {
  const auto d = random_matrix(50, 2, 2, 3, 12);
  EstimatorConfig cfg;
  cfg.cka_batch = 10;
  EXPECT_EQ(cka(kRbf1, kRbf1, IndexSet({1, 3}), IndexSet({1, 3}), d, cfg), 1.0);
}

TEST(Cka, OracleEquivalenceSmall) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 3 + rng() % 6;
    const auto d = random_matrix(n, 1, 4, trial % 2 ? 3 : 1, rng(), -1.0, 1.0);
    const KernelSpec a{KernelFamily::rbf, 0.3 + (rng() % 20) / 10.0};
    const KernelSpec b{KernelFamily::laplacian, 0.3 + (rng() % 20) / 10.0};
    EstimatorConfig cfg;
    cfg.blocked = false;
    const long double ref = oracle::cka(a, b, {0, 1}, {3}, d);
    EXPECT_LT(rel(cka(a, b, IndexSet({0, 1}), IndexSet({3}), d, cfg), ref), 1e-12) << trial;
    const long double h = oracle::hsic(a, b, {0, 1}, {3}, d);
    EXPECT_LT(rel(hsic(a, b, IndexSet({0, 1}), IndexSet({3}), d, cfg), h), 1e-12) << trial;
  }
}

TEST(Cka, IndependentColumnsAreNearZero) {
  // two independent sources, one pixel each
  SynthSpec spec;
  spec.height = 1;
  spec.width = 2;
  spec.blocks = {{1, 0.0, 1.0, 0.2}, {1, 0.0, 1.0, 0.2}};
  const auto d = synth_independent(spec, 2000, 31);
  const KernelSpec k{KernelFamily::rbf, 0.5};
  EXPECT_LT(cka(k, k, IndexSet({0}), IndexSet({1}), d, EstimatorConfig{}), 0.15);
}

TEST(Cka, ScaleInvariantUnderMatchedBandwidth) {
  const auto d = random_matrix(24, 1, 3, 1, 40);
  std::vector<float> v(d.data().begin(), d.data().end());
  const float c = 4.0f;
  for (std::size_t s = 0; s < 24; ++s) v[s * 3] *= c;
  const auto scaled = testing_util::matrix(24, 1, 3, 1, v);
  EstimatorConfig cfg;
  cfg.cka_batch = 8;
  const KernelSpec base{KernelFamily::rbf, 1.3};
  const KernelSpec adjusted{KernelFamily::rbf, 1.3 / (c * c)};
  const double before = cka(base, base, IndexSet({0}), IndexSet({1, 2}), d, cfg);
  const double after = cka(adjusted, base, IndexSet({0}), IndexSet({1, 2}), scaled, cfg);
  EXPECT_LT(std::abs(before - after), 1e-6);
}

TEST(EstimatorConfig, Validation) {
  EstimatorConfig cfg;
  cfg.cms_batch = 1;
  EXPECT_THROW(cfg.validate(), InputError);
  EXPECT_EQ(make_blocks(10, 4, true, true).size(), 2u);
  EXPECT_EQ(make_blocks(10, 4, false, true).back().count, 2u);
  EXPECT_EQ(make_blocks(10, 4, true, false).front().count, 10u);
}
