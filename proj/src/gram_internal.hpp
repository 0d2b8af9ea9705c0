#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dcms/kernels.hpp"
#include "dcms/tensor_io.hpp"

namespace dcms::detail {

/// Subset coordinates of a contiguous run of samples, one dense row per sample
/// (pixels in subset order, channels innermost), widened to double.
struct Gathered {
  std::size_t rows = 0;
  std::size_t width = 0;
  std::vector<double> values;

  const double* row(std::size_t i) const { return values.data() + i * width; }
};

Gathered gather(const SampleMatrix& m, const IndexSet& subset, std::size_t first,
                std::size_t count);

/// Sum of per-coordinate squared (rbf) or absolute (laplacian) differences,
/// accumulated left to right.
inline double distance_exponent(KernelFamily family, const double* a, const double* b,
                                std::size_t width) {
  double s = 0.0;
  if (family == KernelFamily::rbf) {
    for (std::size_t k = 0; k < width; ++k) {
      const double t = a[k] - b[k];
      s += t * t;
    }
  } else {
    for (std::size_t k = 0; k < width; ++k) {
      const double t = a[k] - b[k];
      s += t < 0.0 ? -t : t;
    }
  }
  return s;
}

/// out(i, j) = exp(-gamma * exponent(a_i, b_j)), row-major a.rows x b.rows.
/// With `symmetric` (a and b hold the same rows) only i <= j is evaluated and mirrored.
void fill_gram(const KernelSpec& spec, const Gathered& a, const Gathered& b, bool symmetric,
               std::span<double> out, std::size_t workers);

/// Sum of all entries of a row-major matrix in row-major order.
double ordered_sum(std::span<const double> values);

/// H K H for a symmetric n x n Gram matrix K, packed as the n diagonal entries
/// followed by the strict upper triangle in row-major order.
std::vector<double> centered_packed(std::span<const double> k, std::size_t n);

/// Frobenius inner product of two packed symmetric matrices of order n.
double packed_frobenius(const double* u, const double* v, std::size_t n);

/// Dot product with four interleaved accumulators (fixed order).
double dot(const double* a, const double* b, std::size_t len);

}  // namespace dcms::detail
