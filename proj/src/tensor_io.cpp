#include "dcms/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "dcms/error.hpp"

namespace dcms {

namespace fs = std::filesystem;
using nlohmann::json;

void DatasetMeta::validate() const {
  if (n_samples < 1) throw InputError("dataset must contain at least one sample");
  if (height < 1 || width < 1) throw InputError("image height and width must be >= 1");
  if (channels != 1 && channels != 3) throw InputError("channels must be 1 or 3");
  if (!std::isfinite(value_range.min) || !std::isfinite(value_range.max) ||
      value_range.min > value_range.max) {
    throw InputError("value range must be finite with min <= max");
  }
}

SampleMatrix::SampleMatrix(DatasetMeta meta, std::vector<float> data)
    : meta_(meta), data_(std::move(data)) {
  meta_.value_range = {};
  meta_.validate();
  if (data_.size() != meta_.n_samples * meta_.row_length()) {
    throw InputError("dimension mismatch: expected " +
                     std::to_string(meta_.n_samples * meta_.row_length()) + " values, got " +
                     std::to_string(data_.size()));
  }
  for (std::size_t k = 0; k < data_.size(); ++k) {
    if (!std::isfinite(data_[k])) {
      const std::size_t sample = k / meta_.row_length();
      const std::size_t pixel = (k % meta_.row_length()) / meta_.channels;
      throw InputError("non-finite value at sample " + std::to_string(sample) + ", pixel " +
                       std::to_string(pixel));
    }
  }
  const auto [lo, hi] = std::minmax_element(data_.begin(), data_.end());
  meta_.value_range = {*lo, *hi};
}

SampleMatrix SampleMatrix::slice(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > size()) throw InputError("sample slice out of range");
  DatasetMeta m = meta_;
  m.n_samples = count;
  const auto begin = data_.begin() + static_cast<std::ptrdiff_t>(first * row_length());
  return SampleMatrix(m, std::vector<float>(begin, begin + static_cast<std::ptrdiff_t>(count * row_length())));
}

bool operator==(const SampleMatrix& a, const SampleMatrix& b) {
  if (a.meta_.n_samples != b.meta_.n_samples || !a.meta_.same_shape(b.meta_)) return false;
  // Bitwise, so -0.0 and 0.0 differ.
  return std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(float)) == 0;
}

fs::path sidecar_path(const fs::path& path) {
  fs::path p = path;
  p += ".meta.json";
  return p;
}

namespace {

std::size_t positive_field(const json& j, const char* key, const fs::path& where) {
  if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<std::int64_t>() < 1) {
    throw InputError("malformed sidecar " + where.string() + ": field \"" + key +
                     "\" must be a positive integer");
  }
  return j[key].get<std::size_t>();
}

DatasetMeta read_sidecar(const fs::path& payload) {
  const fs::path sc = sidecar_path(payload);
  std::ifstream in(sc);
  if (!in) throw InputError("missing sidecar " + sc.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("malformed sidecar " + sc.string() + ": " + e.what());
  }
  if (!j.is_object()) throw InputError("malformed sidecar " + sc.string() + ": not an object");
  DatasetMeta meta;
  meta.n_samples = positive_field(j, "n", sc);
  meta.height = positive_field(j, "height", sc);
  meta.width = positive_field(j, "width", sc);
  meta.channels = positive_field(j, "channels", sc);
  if (meta.channels != 1 && meta.channels != 3) {
    throw InputError("malformed sidecar " + sc.string() + ": channels must be 1 or 3");
  }
  return meta;
}

void write_sidecar(const DatasetMeta& meta, const fs::path& payload) {
  const fs::path sc = sidecar_path(payload);
  std::ofstream out(sc);
  if (!out) throw InputError("cannot write " + sc.string());
  const json j = {{"n", meta.n_samples},
                  {"height", meta.height},
                  {"width", meta.width},
                  {"channels", meta.channels}};
  out << j.dump() << '\n';
  if (!out) throw InputError("cannot write " + sc.string());
}

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

std::vector<float> read_raw_f32(const fs::path& path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw InputError("cannot open " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != expected * sizeof(float)) {
    throw InputError("dimension mismatch: " + path.string() + " holds " + std::to_string(bytes) +
                     " bytes, sidecar implies " + std::to_string(expected * sizeof(float)));
  }
  in.seekg(0);
  std::vector<float> data(expected);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw InputError("short read from " + path.string());
  if constexpr (std::endian::native == std::endian::big) {
    for (float& f : data) f = std::bit_cast<float>(byteswap32(std::bit_cast<std::uint32_t>(f)));
  }
  return data;
}

std::vector<float> parse_csv(const fs::path& path, std::size_t& rows, std::size_t& cols) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<float> data;
  rows = 0;
  cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t fields = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (;;) {
      while (p < end && *p == ' ') ++p;
      float v = 0.0f;
      const auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) {
        throw InputError("malformed csv value in " + path.string() + " at row " +
                         std::to_string(rows));
      }
      data.push_back(v);
      ++fields;
      p = next;
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      if (*p != ',') {
        throw InputError("malformed csv value in " + path.string() + " at row " +
                         std::to_string(rows));
      }
      ++p;
    }
    if (rows == 0) {
      cols = fields;
    } else if (fields != cols) {
      throw InputError("dimension mismatch: csv row " + std::to_string(rows) + " has " +
                       std::to_string(fields) + " columns, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw InputError("empty csv file " + path.string());
  return data;
}

}  // namespace

SampleMatrix load_sample_matrix(const fs::path& path, SampleFormat format,
                                std::optional<ShapeHint> hint) {
  if (!fs::exists(path)) throw InputError("no such file " + path.string());
  if (format == SampleFormat::raw_f32) {
    DatasetMeta meta = read_sidecar(path);
    auto data = read_raw_f32(path, meta.n_samples * meta.row_length());
    return SampleMatrix(meta, std::move(data));
  }

  std::size_t rows = 0;
  std::size_t cols = 0;
  auto data = parse_csv(path, rows, cols);
  DatasetMeta meta;
  if (fs::exists(sidecar_path(path))) {
    meta = read_sidecar(path);
    if (meta.n_samples != rows) {
      throw InputError("dimension mismatch: sidecar declares " + std::to_string(meta.n_samples) +
                       " samples, csv has " + std::to_string(rows));
    }
  } else if (hint) {
    meta.height = hint->height;
    meta.width = hint->width;
    meta.channels = hint->channels;
  } else {
    meta.height = 1;
    meta.width = cols;
    meta.channels = 1;
  }
  meta.n_samples = rows;
  if (meta.row_length() != cols) {
    throw InputError("dimension mismatch: csv has " + std::to_string(cols) +
                     " columns, shape implies " + std::to_string(meta.row_length()));
  }
  return SampleMatrix(meta, std::move(data));
}

void save_sample_matrix(const SampleMatrix& m, const fs::path& path, SampleFormat format) {
  if (format == SampleFormat::raw_f32) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    const auto data = m.data();
    if constexpr (std::endian::native == std::endian::big) {
      for (float f : data) {
        const std::uint32_t v = byteswap32(std::bit_cast<std::uint32_t>(f));
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
    } else {
      out.write(reinterpret_cast<const char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(float)));
    }
    if (!out) throw InputError("cannot write " + path.string());
  } else {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    std::array<char, 32> buf{};
    for (std::size_t i = 0; i < m.size(); ++i) {
      const auto row = m.sample(i);
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (k) out.put(',');
        const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), row[k]);
        out.write(buf.data(), res.ptr - buf.data());
      }
      out.put('\n');
    }
    if (!out) throw InputError("cannot write " + path.string());
  }
  write_sidecar(m.meta(), path);
}

SnapshotSeries::SnapshotSeries(std::vector<Snapshot> snapshots) : snapshots_(std::move(snapshots)) {
  if (snapshots_.empty()) throw InputError("snapshot series is empty");
  const DatasetMeta& first = snapshots_.front().samples.meta();
  for (std::size_t i = 0; i < snapshots_.size(); ++i) {
    const DatasetMeta& m = snapshots_[i].samples.meta();
    if (!m.same_shape(first) || m.n_samples != first.n_samples) {
      throw InputError("inconsistent metas across snapshots: " + snapshots_[i].label +
                       " differs from " + snapshots_.front().label);
    }
    if (i > 0 && snapshots_[i].ordinal <= snapshots_[i - 1].ordinal) {
      throw InputError("snapshot ordinals must be strictly increasing");
    }
  }
}

SnapshotSeries load_snapshot_series(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  std::map<std::int64_t, fs::path> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    constexpr std::string_view prefix = "snap_";
    constexpr std::string_view suffix = ".f32";
    if (name.size() <= prefix.size() + suffix.size() || !name.starts_with(prefix) ||
        !name.ends_with(suffix)) {
      continue;
    }
    const std::string_view digits(name.data() + prefix.size(),
                                  name.size() - prefix.size() - suffix.size());
    std::int64_t ordinal = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), ordinal);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) continue;
    if (!found.emplace(ordinal, entry.path()).second) {
      throw InputError("duplicate snapshot ordinal " + std::to_string(ordinal) + " in " +
                       dir.string());
    }
  }
  if (found.empty()) throw InputError("no snap_<ordinal>.f32 files in " + dir.string());

  std::vector<Snapshot> snaps;
  snaps.reserve(found.size());
  for (const auto& [ordinal, path] : found) {
    snaps.push_back(Snapshot{path.stem().string(), ordinal,
                             load_sample_matrix(path, SampleFormat::raw_f32)});
  }
  return SnapshotSeries(std::move(snaps));
}

}  // namespace dcms
