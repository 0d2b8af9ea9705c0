#include "dcms/synth.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "dcms/error.hpp"

namespace dcms {

using nlohmann::json;

void SynthSpec::validate() const {
  if (height < 1 || width < 1) throw InputError("synth: height and width must be >= 1");
  if (channels != 1 && channels != 3) throw InputError("synth: channels must be 1 or 3");
  if (blocks.empty()) throw InputError("synth: at least one block is required");
  std::size_t total = 0;
  for (const auto& b : blocks) {
    if (b.size < 1) throw InputError("synth: block size must be >= 1");
    if (!std::isfinite(b.mean) || !std::isfinite(b.scale) || !std::isfinite(b.noise) ||
        b.scale < 0.0 || b.noise < 0.0) {
      throw InputError("synth: block parameters must be finite with scale, noise >= 0");
    }
    total += b.size;
  }
  if (total != height * width) {
    throw InputError("synth: block sizes sum to " + std::to_string(total) + ", image has " +
                     std::to_string(height * width) + " pixels");
  }
}

Partition SynthSpec::partition() const {
  validate();
  std::vector<std::vector<std::size_t>> clusters;
  std::size_t next = 0;
  for (const auto& b : blocks) {
    std::vector<std::size_t> c(b.size);
    for (auto& i : c) i = next++;
    clusters.push_back(std::move(c));
  }
  return Partition(height * width, std::move(clusters));
}

SynthSpec parse_synth_spec(const json& j) {
  try {
    SynthSpec s;
    s.height = j.at("height").get<std::size_t>();
    s.width = j.at("width").get<std::size_t>();
    s.channels = j.value("channels", std::size_t{1});
    for (const auto& b : j.at("blocks")) {
      BlockSource src;
      src.size = b.at("size").get<std::size_t>();
      src.mean = b.value("mean", src.mean);
      src.scale = b.value("scale", src.scale);
      src.noise = b.value("noise", src.noise);
      s.blocks.push_back(src);
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed synth spec: ") + e.what());
  }
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("malformed synth spec " + path.string() + ": " + e.what());
  }
  return parse_synth_spec(j);
}

json to_json(const SynthSpec& spec) {
  json blocks = json::array();
  for (const auto& b : spec.blocks) {
    blocks.push_back({{"size", b.size}, {"mean", b.mean}, {"scale", b.scale}, {"noise", b.noise}});
  }
  return {{"height", spec.height}, {"width", spec.width}, {"channels", spec.channels},
          {"blocks", blocks}};
}

SampleMatrix synth_independent(const SynthSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw InputError("synth: n must be >= 1");
  const std::size_t c = spec.channels;
  const std::size_t row = spec.height * spec.width * c;
  std::vector<float> data(n * row);

  // Every block owns its own stream, so blocks are independent by construction.
  std::size_t offset = 0;
  for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
    const BlockSource& src = spec.blocks[b];
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(b), 0x5eedu};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t s = 0; s < n; ++s) {
      const double latent = src.mean + src.scale * normal(rng);
      float* out = data.data() + s * row + offset * c;
      for (std::size_t k = 0; k < src.size * c; ++k) {
        out[k] = static_cast<float>(latent + src.noise * normal(rng));
      }
    }
    offset += src.size;
  }

  DatasetMeta meta;
  meta.n_samples = n;
  meta.height = spec.height;
  meta.width = spec.width;
  meta.channels = c;
  return SampleMatrix(meta, std::move(data));
}

}  // namespace dcms
