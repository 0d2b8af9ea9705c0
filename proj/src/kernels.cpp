#include "dcms/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dcms/error.hpp"
#include "gram_internal.hpp"

namespace dcms {

std::string_view to_string(KernelFamily family) {
  return family == KernelFamily::rbf ? "rbf" : "laplacian";
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "rbf") return KernelFamily::rbf;
  if (name == "laplacian") return KernelFamily::laplacian;
  throw InputError("unknown kernel family \"" + std::string(name) + "\"");
}

void KernelSpec::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw InputError("kernel bandwidth gamma must be positive and finite");
  }
}

IndexSet::IndexSet(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
  if (indices_.empty()) throw InputError("index set must be nonempty");
  std::sort(indices_.begin(), indices_.end());
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw InputError("index set contains duplicate pixel indices");
  }
}

IndexSet IndexSet::all(std::size_t d) { return range(0, d); }

IndexSet IndexSet::range(std::size_t first, std::size_t count) {
  std::vector<std::size_t> v(count);
  for (std::size_t k = 0; k < count; ++k) v[k] = first + k;
  return IndexSet(std::move(v));
}

void IndexSet::check(std::size_t d) const {
  if (!fits(d)) {
    throw InputError("pixel index " + std::to_string(back()) + " out of range for " +
                     std::to_string(d) + " pixels");
  }
}

bool IndexSet::disjoint(const IndexSet& other) const {
  auto a = indices_.begin();
  auto b = other.indices_.begin();
  while (a != indices_.end() && b != other.indices_.end()) {
    if (*a == *b) return false;
    if (*a < *b) ++a; else ++b;
  }
  return true;
}

namespace {

double pixel_exponent(KernelFamily family, std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double t = static_cast<double>(a[c]) - static_cast<double>(b[c]);
    s += family == KernelFamily::rbf ? t * t : std::abs(t);
  }
  return s;
}

}  // namespace

double pixel_kernel(const KernelSpec& spec, std::span<const float> a, std::span<const float> b) {
  spec.validate();
  if (a.size() != b.size()) throw InputError("pixel channel vectors differ in length");
  return std::exp(-spec.gamma * pixel_exponent(spec.family, a, b));
}

double product_kernel(const KernelSpec& spec, const IndexSet& subset, std::size_t channels,
                      std::span<const float> x, std::span<const float> y) {
  spec.validate();
  if (channels == 0 || x.size() != y.size() || x.size() % channels != 0) {
    throw InputError("samples do not share a shape");
  }
  subset.check(x.size() / channels);
  // Same coordinate-by-coordinate accumulation as the Gram path.
  double s = 0.0;
  for (const std::size_t p : subset) {
    for (std::size_t c = p * channels; c < (p + 1) * channels; ++c) {
      const double t = static_cast<double>(x[c]) - static_cast<double>(y[c]);
      s += spec.family == KernelFamily::rbf ? t * t : std::abs(t);
    }
  }
  return std::exp(-spec.gamma * s);
}

GramMatrix gram(const KernelSpec& spec, const IndexSet& subset, const SampleMatrix& a,
                const SampleMatrix& b, std::size_t workers) {
  spec.validate();
  if (!a.meta().same_shape(b.meta())) throw InputError("shape mismatch between datasets");
  subset.check(a.pixels());
  const bool same = &a == &b;
  const auto ga = detail::gather(a, subset, 0, a.size());
  GramMatrix g{a.size(), b.size(), std::vector<double>(a.size() * b.size())};
  if (same) {
    detail::fill_gram(spec, ga, ga, true, g.values, workers);
  } else {
    detail::fill_gram(spec, ga, detail::gather(b, subset, 0, b.size()), false, g.values, workers);
  }
  return g;
}

double median_heuristic_gamma(const SampleMatrix& a, const IndexSet& subset,
                              std::size_t max_pairs) {
  const std::size_t n = a.size();
  if (n < 2) throw InputError("median heuristic needs at least two samples");
  if (max_pairs == 0) throw InputError("median heuristic pair budget must be positive");
  subset.check(a.pixels());
  const auto g = detail::gather(a, subset, 0, n);

  auto distance = [&](std::size_t i, std::size_t j) {
    return std::sqrt(detail::distance_exponent(KernelFamily::rbf, g.row(i), g.row(j), g.width));
  };

  std::vector<double> dists;
  const std::size_t total_pairs = n * (n - 1) / 2;
  if (total_pairs <= max_pairs) {
    dists.reserve(total_pairs);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = distance(i, j);
        if (d > 0.0) dists.push_back(d);
      }
    }
  } else {
    std::mt19937_64 rng(0x6d656469616e5eedULL);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    dists.reserve(max_pairs);
    for (std::size_t k = 0; k < max_pairs; ++k) {
      std::size_t i = pick(rng);
      std::size_t j = pick(rng);
      while (j == i) j = pick(rng);
      const double d = distance(i, j);
      if (d > 0.0) dists.push_back(d);
    }
  }
  if (dists.empty()) {
    throw DegenerateError("degenerate bandwidth: all pairwise distances are zero");
  }

  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
  double median = dists[mid];
  if (dists.size() % 2 == 0) {
    const double lower = *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (lower + median);
  }
  return 1.0 / median;
}

}  // namespace dcms
