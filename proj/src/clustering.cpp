#include "dcms/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "dcms/error.hpp"
#include "dcms/parallel.hpp"
#include "gram_internal.hpp"

namespace dcms {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// CKA matrix

CkaMatrix::CkaMatrix(std::size_t d) : d_(d), values_(d * d, 0.0) {
  if (d == 0) throw InputError("CKA matrix needs at least one pixel");
}

CkaMatrix::CkaMatrix(std::size_t d, std::vector<double> values) : d_(d), values_(std::move(values)) {
  if (d == 0) throw InputError("CKA matrix needs at least one pixel");
  if (values_.size() != d * d) throw InputError("dimension mismatch: CKA matrix is not d x d");
  constexpr double slack = 1e-6;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double v = values_[i * d + j];
      if (!std::isfinite(v) || v < -slack || v > 1.0 + slack) {
        throw InputError("CKA entry (" + std::to_string(i) + "," + std::to_string(j) +
                         ") outside [0, 1]");
      }
      if (v != values_[j * d + i]) throw InputError("CKA matrix is not symmetric");
    }
  }
}

std::vector<std::size_t> CkaMatrix::degenerate() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d_; ++i) {
    if (values_[i * d_ + i] == 0.0) out.push_back(i);
  }
  return out;
}

CkaMatrix cka_matrix(const KernelSpec& spec, const SampleMatrix& train,
                     const EstimatorConfig& cfg) {
  spec.validate();
  cfg.validate();
  const std::size_t d = train.pixels();
  const auto blocks = make_blocks(train.size(), cfg.cka_batch, cfg.drop_remainder, cfg.blocked);
  if (blocks.empty()) throw InputError("empty block set: fewer samples than one CKA block");
  for (const auto& b : blocks) {
    if (b.count < 2) throw InputError("CKA block size must be >= 2");
  }

  CkaMatrix out(d);
  std::vector<double>& acc = out.values_;
  std::vector<char> degenerate(d, 0);
  std::vector<double> self(d);
  std::vector<char> block_degenerate(d);

  for (const BlockRange& block : blocks) {
    const std::size_t n = block.count;
    const std::size_t len = n + n * (n - 1) / 2;
    std::vector<double> packed(d * len);

    parallel_for(d, cfg.workers, [&](std::size_t p) {
      const auto g = detail::gather(train, IndexSet({p}), block.first, n);
      std::vector<double> k(n * n);
      detail::fill_gram(spec, g, g, true, k, 1);
      const auto c = detail::centered_packed(k, n);
      std::copy(c.begin(), c.end(), packed.begin() + static_cast<std::ptrdiff_t>(p * len));
      self[p] = detail::packed_frobenius(c.data(), c.data(), n);
      block_degenerate[p] = self[p] <= kDegenerateHsic;
    });
    for (std::size_t p = 0; p < d; ++p) degenerate[p] |= block_degenerate[p];

    // Rows are processed in groups so each column vector is streamed once per group.
    constexpr std::size_t group = 8;
    const std::size_t groups = (d + group - 1) / group;
    parallel_for(groups, cfg.workers, [&](std::size_t gi) {
      const std::size_t p0 = gi * group;
      const std::size_t p1 = std::min(d, p0 + group);
      for (std::size_t q = p0; q < d; ++q) {
        if (block_degenerate[q]) continue;
        const double* vq = packed.data() + q * len;
        for (std::size_t p = p0; p < p1 && p <= q; ++p) {
          if (block_degenerate[p]) continue;
          const double h = detail::packed_frobenius(packed.data() + p * len, vq, n);
          acc[p * d + q] += h / std::sqrt(self[p] * self[q]);
        }
      }
    });
  }

  const double count = static_cast<double>(blocks.size());
  for (std::size_t p = 0; p < d; ++p) {
    for (std::size_t q = p; q < d; ++q) {
      double v = acc[p * d + q] / count;
      if (degenerate[p] || degenerate[q]) v = 0.0;
      else if (p == q) v = 1.0;
      acc[p * d + q] = v;
      acc[q * d + p] = v;
    }
  }
  return out;
}

void save_cka_matrix(const CkaMatrix& m, const fs::path& path) {
  std::vector<float> f(m.values().begin(), m.values().end());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
  if (!out) throw InputError("cannot write " + path.string());
  std::ofstream side(sidecar_path(path));
  side << json{{"d", m.size()}}.dump() << '\n';
  if (!side) throw InputError("cannot write " + sidecar_path(path).string());
}

CkaMatrix load_cka_matrix(const fs::path& path) {
  const fs::path sc = sidecar_path(path);
  std::ifstream side(sc);
  if (!side) throw InputError("missing sidecar " + sc.string());
  json j;
  try {
    side >> j;
  } catch (const json::exception& e) {
    throw InputError("malformed sidecar " + sc.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("d") || !j["d"].is_number_integer() ||
      j["d"].get<std::int64_t>() < 1) {
    throw InputError("malformed sidecar " + sc.string() + ": field \"d\" must be a positive integer");
  }
  const auto d = j["d"].get<std::size_t>();

  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw InputError("cannot open " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != d * d * sizeof(float)) {
    throw InputError("dimension mismatch: " + path.string() + " is not a " + std::to_string(d) +
                     " x " + std::to_string(d) + " f32 matrix");
  }
  in.seekg(0);
  std::vector<float> f(d * d);
  in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw InputError("short read from " + path.string());
  return CkaMatrix(d, std::vector<double>(f.begin(), f.end()));
}

void export_cka_csv(const CkaMatrix& m, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(9);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Partition

Partition::Partition(std::size_t d, std::vector<std::vector<std::size_t>> clusters) : d_(d) {
  if (d == 0) throw InputError("partition needs at least one pixel");
  std::vector<char> seen(d, 0);
  clusters_.reserve(clusters.size());
  for (auto& c : clusters) {
    if (c.empty()) throw InputError("partition contains an empty cluster");
    for (const std::size_t i : c) {
      if (i >= d) throw InputError("partition index " + std::to_string(i) + " out of range");
      if (seen[i]) throw InputError("overlapping clusters: pixel " + std::to_string(i));
      seen[i] = 1;
    }
    clusters_.emplace_back(std::move(c));
  }
  const auto missing = std::find(seen.begin(), seen.end(), 0);
  if (missing != seen.end()) {
    throw InputError("incomplete partition: pixel " + std::to_string(missing - seen.begin()) +
                     " not covered");
  }
  std::sort(clusters_.begin(), clusters_.end(),
            [](const IndexSet& a, const IndexSet& b) { return a.front() < b.front(); });
}

Partition Partition::whole(std::size_t d) {
  std::vector<std::size_t> all(d);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return Partition(d, {std::move(all)});
}

Partition Partition::singletons(std::size_t d) {
  std::vector<std::vector<std::size_t>> c(d);
  for (std::size_t i = 0; i < d; ++i) c[i] = {i};
  return Partition(d, std::move(c));
}

std::vector<std::size_t> Partition::labels() const {
  std::vector<std::size_t> out(d_);
  for (std::size_t c = 0; c < clusters_.size(); ++c) {
    for (const std::size_t i : clusters_[c]) out[i] = c;
  }
  return out;
}

void save_partition(const Partition& p, const fs::path& path) {
  json clusters = json::array();
  for (const IndexSet& c : p.clusters()) {
    clusters.push_back(std::vector<std::size_t>(c.begin(), c.end()));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << json{{"d", p.pixels()}, {"clusters", clusters}}.dump() << '\n';
  if (!out) throw InputError("cannot write " + path.string());
}

Partition load_partition(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("malformed partition " + path.string() + ": " + e.what());
  }
  try {
    if (!j.is_object() || !j.at("d").is_number_integer() || j.at("d").get<std::int64_t>() < 1 ||
        !j.at("clusters").is_array()) {
      throw InputError("malformed partition " + path.string());
    }
    std::vector<std::vector<std::size_t>> clusters;
    for (const auto& c : j.at("clusters")) {
      if (!c.is_array()) throw InputError("malformed partition " + path.string());
      std::vector<std::size_t> members;
      for (const auto& v : c) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
          throw InputError("malformed partition " + path.string() + ": bad pixel index");
        }
        members.push_back(v.get<std::size_t>());
      }
      clusters.push_back(std::move(members));
    }
    return Partition(j.at("d").get<std::size_t>(), std::move(clusters));
  } catch (const json::exception& e) {
    throw InputError("malformed partition " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Agglomeration

std::string_view to_string(Linkage linkage) {
  switch (linkage) {
    case Linkage::average: return "average";
    case Linkage::complete: return "complete";
    case Linkage::single: return "single";
  }
  return "average";
}

Linkage parse_linkage(std::string_view name) {
  if (name == "average") return Linkage::average;
  if (name == "complete") return Linkage::complete;
  if (name == "single") return Linkage::single;
  throw InputError("unknown linkage \"" + std::string(name) + "\"");
}

namespace {

/// Agglomeration state with a cached nearest neighbour per active cluster.
class Agglomerator {
 public:
  Agglomerator(const CkaMatrix& m, Linkage linkage)
      : n_(m.size()), linkage_(linkage), dist_(n_ * n_), size_(n_, 1), min_(n_),
        members_(n_), active_(n_, 1), nn_(n_, kNone) {
    for (std::size_t i = 0; i < n_; ++i) {
      min_[i] = i;
      members_[i] = {i};
      for (std::size_t j = 0; j < n_; ++j) dist_[i * n_ + j] = 1.0 - m(i, j);
    }
    for (std::size_t i = 0; i < n_; ++i) rescan(i);
  }

  std::vector<Merge> run(std::size_t target) {
    std::vector<Merge> merges;
    std::size_t remaining = n_;
    while (remaining > target) {
      std::size_t best = kNone;
      for (std::size_t i = 0; i < n_; ++i) {
        if (active_[i] && nn_[i] != kNone && (best == kNone || less(i, nn_[i], best, nn_[best]))) {
          best = i;
        }
      }
      std::size_t a = best;
      std::size_t b = nn_[best];
      if (min_[b] < min_[a]) std::swap(a, b);
      merges.push_back({min_[a], min_[b], d(a, b), size_[a] + size_[b]});
      merge(a, b);
      --remaining;
    }
    return merges;
  }

  std::vector<std::vector<std::size_t>> clusters() const {
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < n_; ++i) {
      if (active_[i]) out.push_back(members_[i]);
    }
    return out;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  double d(std::size_t i, std::size_t j) const { return dist_[i * n_ + j]; }

  // Smallest pixel index of the smaller cluster, then of the other one.
  std::pair<std::size_t, std::size_t> tie_key(std::size_t i, std::size_t j) const {
    const bool i_first = size_[i] < size_[j] || (size_[i] == size_[j] && min_[i] < min_[j]);
    return i_first ? std::pair{min_[i], min_[j]} : std::pair{min_[j], min_[i]};
  }

  bool less(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    const double a = d(i, j);
    const double b = d(k, l);
    if (a != b) return a < b;
    return tie_key(i, j) < tie_key(k, l);
  }

  void rescan(std::size_t i) {
    nn_[i] = kNone;
    for (std::size_t j = 0; j < n_; ++j) {
      if (j == i || !active_[j]) continue;
      if (nn_[i] == kNone || less(i, j, i, nn_[i])) nn_[i] = j;
    }
  }

  void merge(std::size_t a, std::size_t b) {
    const double wa = static_cast<double>(size_[a]);
    const double wb = static_cast<double>(size_[b]);
    for (std::size_t k = 0; k < n_; ++k) {
      if (!active_[k] || k == a || k == b) continue;
      double v = 0.0;
      switch (linkage_) {
        case Linkage::average: v = (wa * d(a, k) + wb * d(b, k)) / (wa + wb); break;
        case Linkage::complete: v = std::max(d(a, k), d(b, k)); break;
        case Linkage::single: v = std::min(d(a, k), d(b, k)); break;
      }
      dist_[a * n_ + k] = v;
      dist_[k * n_ + a] = v;
    }
    active_[b] = 0;
    size_[a] += size_[b];
    min_[a] = std::min(min_[a], min_[b]);
    members_[a].insert(members_[a].end(), members_[b].begin(), members_[b].end());
    members_[b].clear();

    for (std::size_t i = 0; i < n_; ++i) {
      if (!active_[i] || i == a) continue;
      if (nn_[i] == a || nn_[i] == b) {
        rescan(i);
      } else if (less(i, a, i, nn_[i])) {
        nn_[i] = a;
      }
    }
    rescan(a);
  }

  std::size_t n_;
  Linkage linkage_;
  std::vector<double> dist_;
  std::vector<std::size_t> size_;
  std::vector<std::size_t> min_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<char> active_;
  std::vector<std::size_t> nn_;
};

}  // namespace

Dendrogram agglomerate(const CkaMatrix& m, std::size_t num_clusters, Linkage linkage) {
  if (num_clusters < 1 || num_clusters > m.size()) {
    throw InputError("number of clusters must lie in [1, " + std::to_string(m.size()) + "]");
  }
  Agglomerator agg(m, linkage);
  auto merges = agg.run(num_clusters);
  return Dendrogram{Partition(m.size(), agg.clusters()), std::move(merges)};
}

}  // namespace dcms
