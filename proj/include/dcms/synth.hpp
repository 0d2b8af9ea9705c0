#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "dcms/clustering.hpp"
#include "dcms/tensor_io.hpp"

namespace dcms {

/// One group of consecutive pixels driven by a shared latent source.
/// value = mean + scale * z + noise * e, z ~ N(0,1) per sample (shared by the
/// block's pixels and channels), e ~ N(0,1) per pixel and channel.
struct BlockSource {
  std::size_t size = 1;
  double mean = 0.0;
  double scale = 1.0;
  double noise = 0.1;
};

/// Blocks tile the flattened pixel order consecutively; their sizes sum to
/// height * width.
struct SynthSpec {
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t channels = 1;
  std::vector<BlockSource> blocks;

  void validate() const;
  /// The ground-truth partition induced by the blocks.
  Partition partition() const;
};

/// JSON form: {"height":h,"width":w,"channels":c,
///             "blocks":[{"size":s,"mean":m,"scale":a,"noise":b},...]}
/// `channels` defaults to 1; block fields other than size default as in BlockSource.
SynthSpec parse_synth_spec(const nlohmann::json& j);
SynthSpec load_synth_spec(const std::filesystem::path& path);
nlohmann::json to_json(const SynthSpec& spec);

/// n samples with independent blocks; deterministic given seed.
SampleMatrix synth_independent(const SynthSpec& spec, std::size_t n, std::uint64_t seed);

}  // namespace dcms
