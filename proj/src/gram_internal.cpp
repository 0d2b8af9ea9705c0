#include "gram_internal.hpp"

#include <cmath>

#include "dcms/parallel.hpp"

namespace dcms::detail {

Gathered gather(const SampleMatrix& m, const IndexSet& subset, std::size_t first,
                std::size_t count) {
  const std::size_t c = m.channels();
  Gathered g;
  g.rows = count;
  g.width = subset.size() * c;
  g.values.resize(g.rows * g.width);
  double* out = g.values.data();
  for (std::size_t i = 0; i < count; ++i) {
    const auto row = m.sample(first + i);
    for (const std::size_t p : subset) {
      for (std::size_t ch = 0; ch < c; ++ch) *out++ = row[p * c + ch];
    }
  }
  return g;
}

void fill_gram(const KernelSpec& spec, const Gathered& a, const Gathered& b, bool symmetric,
               std::span<double> out, std::size_t workers) {
  const std::size_t n = a.rows;
  const std::size_t m = b.rows;
  const double neg_gamma = -spec.gamma;
  parallel_for(n, workers, [&](std::size_t i) {
    const double* ai = a.row(i);
    double* row = out.data() + i * m;
    if (symmetric) {
      row[i] = 1.0;
      for (std::size_t j = i + 1; j < m; ++j) {
        const double v = std::exp(neg_gamma * distance_exponent(spec.family, ai, b.row(j), a.width));
        row[j] = v;
        out[j * m + i] = v;
      }
    } else {
      for (std::size_t j = 0; j < m; ++j) {
        row[j] = std::exp(neg_gamma * distance_exponent(spec.family, ai, b.row(j), a.width));
      }
    }
  });
}

double ordered_sum(std::span<const double> values) {
  double s = 0.0;
  for (const double v : values) s += v;
  return s;
}

std::vector<double> centered_packed(std::span<const double> k, std::size_t n) {
  std::vector<double> row_mean(n);
  for (std::size_t i = 0; i < n; ++i) {
    row_mean[i] = ordered_sum(k.subspan(i * n, n)) / static_cast<double>(n);
  }
  const double grand = ordered_sum(row_mean) / static_cast<double>(n);

  std::vector<double> packed(n + n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    packed[i] = ((k[i * n + i] - row_mean[i]) - row_mean[i]) + grand;
  }
  double* off = packed.data() + n;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      *off++ = ((k[i * n + j] - row_mean[i]) - row_mean[j]) + grand;
    }
  }
  return packed;
}

double dot(const double* a, const double* b, std::size_t len) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= len; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < len; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

double packed_frobenius(const double* u, const double* v, std::size_t n) {
  return dot(u, v, n) + 2.0 * dot(u + n, v + n, n * (n - 1) / 2);
}

}  // namespace dcms::detail
