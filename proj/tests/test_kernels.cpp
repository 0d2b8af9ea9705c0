#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "dcms/error.hpp"
#include "dcms/kernels.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace dcms;
using testing_util::rows;

TEST(PixelKernel, ClosedForms) {
  const KernelSpec rbf{KernelFamily::rbf, 1.0};
  const std::vector<float> zero{0.0f}, one{1.0f};
  EXPECT_EQ(pixel_kernel(rbf, one, one), 1.0);
  EXPECT_DOUBLE_EQ(pixel_kernel(rbf, zero, one), std::exp(-1.0));

  const KernelSpec lap{KernelFamily::laplacian, 0.5};
  const std::vector<float> a{0, 0, 0}, b{2, 0, 0};
  EXPECT_DOUBLE_EQ(pixel_kernel(lap, a, b), std::exp(-1.0));
}

TEST(PixelKernel, Errors) {
  const KernelSpec rbf{KernelFamily::rbf, 1.0};
  const std::vector<float> a{0.0f}, b{0.0f, 1.0f};
  EXPECT_THROW(pixel_kernel(rbf, a, b), InputError);
  EXPECT_THROW(pixel_kernel(KernelSpec{KernelFamily::rbf, 0.0}, a, a), InputError);
  EXPECT_THROW(pixel_kernel(KernelSpec{KernelFamily::rbf, NAN}, a, a), InputError);
}

TEST(ProductKernel, ClosedFormsAndReduction) {
  const KernelSpec rbf{KernelFamily::rbf, 1.0};
  const std::vector<float> x{0, 0}, y{1, 1};
  EXPECT_DOUBLE_EQ(product_kernel(rbf, IndexSet({0, 1}), 1, x, y), std::exp(-2.0));
  EXPECT_EQ(product_kernel(rbf, IndexSet::all(2), 1, y, y), 1.0);
  EXPECT_EQ(product_kernel(rbf, IndexSet({1}), 1, x, y),
            pixel_kernel(rbf, std::span(x).subspan(1, 1), std::span(y).subspan(1, 1)));
  EXPECT_THROW(product_kernel(rbf, IndexSet({2}), 1, x, y), InputError);
}

TEST(ProductKernel, LongProductMatchesSummedExponent) {
  const std::size_t d = 4096;
  std::vector<float> x(d, 0.0f), y(d, 0.1f);
  const KernelSpec rbf{KernelFamily::rbf, 1.5};
  const long double s = static_cast<long double>(d) * 0.1f * 0.1f;
  const double k = product_kernel(rbf, IndexSet::all(d), 1, x, y);
  EXPECT_GT(k, 0.0);
  // sequential summation of d terms: relative exponent error up to d * eps
  const double ref = static_cast<double>(std::exp(-1.5L * s));
  EXPECT_NEAR(k, ref, 1.5 * static_cast<double>(s) * d * 1.2e-16 * ref);
}

TEST(ProductKernel, DisjointUnionFactorizes) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = testing_util::random_matrix(2, 3, 3, trial % 2 ? 3 : 1, rng());
    const KernelSpec spec{trial % 3 ? KernelFamily::rbf : KernelFamily::laplacian, 0.3 + trial * 0.01};
    std::vector<std::size_t> a, b;
    for (std::size_t p = 0; p < 9; ++p) (rng() % 2 ? a : b).push_back(p);
    if (a.empty() || b.empty()) continue;
    const double whole = product_kernel(spec, IndexSet::all(9), m.channels(), m.sample(0), m.sample(1));
    const double parts = product_kernel(spec, IndexSet(a), m.channels(), m.sample(0), m.sample(1)) *
                         product_kernel(spec, IndexSet(b), m.channels(), m.sample(0), m.sample(1));
    EXPECT_NEAR(whole, parts, 1e-14 * whole);
  }
}

TEST(ProductKernel, BoundedAndMonotoneInGamma) {
  const auto m = testing_util::random_matrix(2, 2, 2, 1, 11);
  double prev = 1.0;
  for (double g = 0.1; g < 10.0; g *= 1.5) {
    const double k = product_kernel(KernelSpec{KernelFamily::rbf, g}, IndexSet::all(4), 1, m.sample(0), m.sample(1));
    EXPECT_GT(k, 0.0);
    EXPECT_LE(k, 1.0);
    EXPECT_LT(k, prev);
    prev = k;
  }
}

TEST(Gram, TwoByTwo) {
  const auto a = rows({{0.0f}, {1.0f}});
  const auto g = gram(KernelSpec{KernelFamily::rbf, 1.0}, IndexSet::all(1), a, a);
  EXPECT_EQ(g(0, 0), 1.0);
  EXPECT_EQ(g(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(g(0, 1), std::exp(-1.0));
  EXPECT_EQ(g(0, 1), g(1, 0));
}

TEST(Gram, TransposeAndOracle) {
  const auto a = testing_util::random_matrix(5, 2, 2, 3, 1);
  const auto b = testing_util::random_matrix(7, 2, 2, 3, 2);
  const KernelSpec spec{KernelFamily::laplacian, 0.7};
  const IndexSet s({0, 3});
  const auto ab = gram(spec, s, a, b);
  const auto ba = gram(spec, s, b, a);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 7; ++j) {
      EXPECT_EQ(ab(i, j), ba(j, i));
      const double ref = static_cast<double>(oracle::kernel(spec, {0, 3}, a, i, b, j));
      EXPECT_NEAR(ab(i, j), ref, 1e-15);
      EXPECT_EQ(ab(i, j), product_kernel(spec, s, 3, a.sample(i), b.sample(j)));
    }
  }
  EXPECT_THROW(gram(spec, s, a, testing_util::random_matrix(2, 1, 4, 3, 3)), InputError);
  EXPECT_THROW(gram(spec, IndexSet({4}), a, b), InputError);
}

TEST(Gram, IndependentOfWorkerCount) {
  const auto a = testing_util::random_matrix(40, 4, 4, 1, 5);
  const KernelSpec spec{KernelFamily::rbf, 0.2};
  const auto g1 = gram(spec, IndexSet::all(16), a, a, 1);
  const auto g4 = gram(spec, IndexSet::all(16), a, a, 4);
  EXPECT_EQ(g1.values, g4.values);
}

TEST(Gram, PositiveSemidefinite) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 12;
    const auto a = testing_util::random_matrix(n, 2, 2, trial % 2 ? 3 : 1, rng(), -1.0, 1.0);
    const KernelSpec spec{trial % 2 ? KernelFamily::rbf : KernelFamily::laplacian, 0.05 + (rng() % 100) / 10.0};
    const auto g = gram(spec, IndexSet({0, 2, 3}), a, a);
    Eigen::MatrixXd k(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) k(i, j) = g(i, j);
    }
    const double lambda_min = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues().minCoeff();
    EXPECT_GE(lambda_min, -1e-8 * static_cast<double>(n));
  }
}

TEST(MedianHeuristic, HandMedian) {
  const auto a = rows({{0.0f}, {1.0f}, {3.0f}});
  EXPECT_EQ(median_heuristic_gamma(a, IndexSet::all(1)), 0.5);
}

TEST(MedianHeuristic, ZeroDistancesExcluded) {
  const auto a = rows({{2.0f}, {2.0f}, {6.0f}});
  // distances {0, 4, 4}
  EXPECT_EQ(median_heuristic_gamma(a, IndexSet::all(1)), 0.25);
}

TEST(MedianHeuristic, EvenCountAveragesMiddlePair) {
  const auto a = rows({{0.0f}, {1.0f}, {4.0f}, {4.0f}});
  // nonzero distances {1, 4, 4, 3, 3}; with the duplicate pair removed: odd count 5 -> median 3
  EXPECT_EQ(median_heuristic_gamma(a, IndexSet::all(1)), 1.0 / 3.0);
  const auto b = rows({{0.0f}, {1.0f}, {3.0f}, {6.0f}});
  // distances {1, 3, 6, 2, 5, 3} -> sorted 1 2 3 3 5 6 -> median 3
  EXPECT_EQ(median_heuristic_gamma(b, IndexSet::all(1)), 1.0 / 3.0);
  const auto c = rows({{0.0f}, {1.0f}, {3.0f}, {7.0f}});
  // distances {1, 3, 7, 2, 6, 4} -> sorted 1 2 3 4 6 7 -> median 3.5
  EXPECT_EQ(median_heuristic_gamma(c, IndexSet::all(1)), 1.0 / 3.5);
}

TEST(MedianHeuristic, SubsetEuclideanNotSquared) {
  const auto a = rows({{0.0f, 0.0f, 9.0f}, {3.0f, 4.0f, 9.0f}});
  EXPECT_EQ(median_heuristic_gamma(a, IndexSet({0, 1})), 0.2);
}

TEST(MedianHeuristic, Degenerate) {
  const auto a = rows({{1.0f}, {1.0f}, {1.0f}});
  EXPECT_THROW(median_heuristic_gamma(a, IndexSet::all(1)), DegenerateError);
  EXPECT_THROW(median_heuristic_gamma(rows({{1.0f}}), IndexSet::all(1)), InputError);
}

TEST(MedianHeuristic, PermutationInvariant) {
  const auto a = testing_util::random_matrix(30, 2, 3, 1, 17);
  std::vector<std::size_t> order(30);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(4));
  std::vector<float> v;
  for (const std::size_t i : order) v.insert(v.end(), a.sample(i).begin(), a.sample(i).end());
  const auto b = testing_util::matrix(30, 2, 3, 1, v);
  EXPECT_EQ(median_heuristic_gamma(a, IndexSet::all(6)), median_heuristic_gamma(b, IndexSet::all(6)));
}

TEST(MedianHeuristic, SubsampledBudgetIsDeterministicAndClose) {
  const auto a = testing_util::random_matrix(200, 2, 2, 1, 8);
  const double full = median_heuristic_gamma(a, IndexSet::all(4));
  const double sub1 = median_heuristic_gamma(a, IndexSet::all(4), 5000);
  const double sub2 = median_heuristic_gamma(a, IndexSet::all(4), 5000);
  EXPECT_EQ(sub1, sub2);
  EXPECT_NEAR(sub1, full, 0.05 * full);
}

TEST(IndexSet, Validation) {
  EXPECT_THROW(IndexSet({}), InputError);
  EXPECT_THROW(IndexSet({1, 1}), InputError);
  const IndexSet s({3, 1, 2});
  EXPECT_EQ(s.front(), 1u);
  EXPECT_EQ(s.back(), 3u);
  EXPECT_TRUE(s.disjoint(IndexSet({0, 4})));
  EXPECT_FALSE(s.disjoint(IndexSet({0, 3})));
  EXPECT_THROW(s.check(3), InputError);
}
