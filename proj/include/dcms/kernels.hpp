#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcms/tensor_io.hpp"

namespace dcms {

enum class KernelFamily { rbf, laplacian };

std::string_view to_string(KernelFamily family);
KernelFamily parse_kernel_family(std::string_view name);

/// Pixel-wise kernel. rbf: exp(-gamma * |a - b|_2^2), laplacian: exp(-gamma * |a - b|_1),
/// where a and b are the channel vectors of one pixel.
struct KernelSpec {
  KernelFamily family = KernelFamily::rbf;
  double gamma = 1.0;

  void validate() const;
};

/// Sorted, duplicate-free, nonempty set of pixel indices.
class IndexSet {
 public:
  /// Sorts the input; rejects empty input and duplicates.
  explicit IndexSet(std::vector<std::size_t> indices);

  /// {0, ..., d-1}
  static IndexSet all(std::size_t d);
  /// {first, ..., first + count - 1}
  static IndexSet range(std::size_t first, std::size_t count);

  std::span<const std::size_t> indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  std::size_t front() const { return indices_.front(); }
  std::size_t back() const { return indices_.back(); }
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  bool fits(std::size_t d) const { return indices_.back() < d; }
  /// Throws InputError unless every index is < d.
  void check(std::size_t d) const;
  bool disjoint(const IndexSet& other) const;

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  std::vector<std::size_t> indices_;
};

double pixel_kernel(const KernelSpec& spec, std::span<const float> a, std::span<const float> b);

/// Product of pixel kernels over `subset`, evaluated as a single exponential
/// of the summed per-pixel exponents so long products do not underflow.
double product_kernel(const KernelSpec& spec, const IndexSet& subset, std::size_t channels,
                      std::span<const float> x, std::span<const float> y);

/// Row-major rows x cols kernel matrix.
struct GramMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

/// values(i, j) = product_kernel(spec, subset, A_i, B_j). Each entry is
/// computed by exactly one worker, so the result is independent of `workers`.
GramMatrix gram(const KernelSpec& spec, const IndexSet& subset, const SampleMatrix& a,
                const SampleMatrix& b, std::size_t workers = 0);

inline constexpr std::size_t kDefaultMedianPairs = 500'000;

/// 1 / median of the nonzero Euclidean distances |x_I - y_I|_2 over distinct
/// sample pairs. Above `max_pairs` pairs, a fixed-seed uniform sample of pairs
/// is used instead. Throws DegenerateError when every distance is zero.
double median_heuristic_gamma(const SampleMatrix& a, const IndexSet& subset,
                              std::size_t max_pairs = kDefaultMedianPairs);

}  // namespace dcms
