#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dcms {

struct ValueRange {
  double min = 0.0;
  double max = 0.0;
};

/// Shape of a dataset of flattened images. Pixels are flattened row-major over
/// the grid with channels innermost; every pixel index in the library refers
/// to this order.
struct DatasetMeta {
  std::size_t n_samples = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  ValueRange value_range;

  std::size_t pixels() const { return height * width; }
  std::size_t row_length() const { return pixels() * channels; }

  /// Same grid and channel count; sample counts may differ.
  bool same_shape(const DatasetMeta& other) const {
    return height == other.height && width == other.width && channels == other.channels;
  }

  void validate() const;
};

/// Immutable n x (pixels * channels) block of finite samples.
class SampleMatrix {
 public:
  /// Validates the shape and that every value is finite, then records the
  /// observed value range in the meta.
  SampleMatrix(DatasetMeta meta, std::vector<float> data);

  const DatasetMeta& meta() const { return meta_; }
  std::size_t size() const { return meta_.n_samples; }
  std::size_t pixels() const { return meta_.pixels(); }
  std::size_t channels() const { return meta_.channels; }
  std::size_t row_length() const { return meta_.row_length(); }

  std::span<const float> data() const { return data_; }
  std::span<const float> sample(std::size_t i) const {
    return std::span<const float>(data_).subspan(i * row_length(), row_length());
  }
  float at(std::size_t sample, std::size_t pixel, std::size_t channel = 0) const {
    return data_[(sample * pixels() + pixel) * channels() + channel];
  }

  /// Copy of samples [first, first + count).
  SampleMatrix slice(std::size_t first, std::size_t count) const;

  friend bool operator==(const SampleMatrix& a, const SampleMatrix& b);

 private:
  DatasetMeta meta_;
  std::vector<float> data_;
};

enum class SampleFormat { raw_f32, csv };

struct ShapeHint {
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t channels = 1;
};

/// `<path>.meta.json`
std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// raw_f32 requires the sidecar. csv uses the sidecar when present, else the
/// hint, else treats each row as a 1 x columns grayscale image.
SampleMatrix load_sample_matrix(const std::filesystem::path& path, SampleFormat format,
                                std::optional<ShapeHint> hint = std::nullopt);

/// Writes the payload and its sidecar (for both formats).
void save_sample_matrix(const SampleMatrix& m, const std::filesystem::path& path,
                        SampleFormat format);

struct Snapshot {
  std::string label;
  std::int64_t ordinal = 0;
  SampleMatrix samples;
};

/// Generator snapshots ordered by strictly increasing ordinal, all sharing one meta.
class SnapshotSeries {
 public:
  explicit SnapshotSeries(std::vector<Snapshot> snapshots);

  std::span<const Snapshot> snapshots() const { return snapshots_; }
  std::size_t size() const { return snapshots_.size(); }
  const DatasetMeta& meta() const { return snapshots_.front().samples.meta(); }

 private:
  std::vector<Snapshot> snapshots_;
};

/// Reads every `snap_<ordinal>.f32` in dir (other files are ignored).
SnapshotSeries load_snapshot_series(const std::filesystem::path& dir);

}  // namespace dcms
