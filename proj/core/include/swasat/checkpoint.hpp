#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>
#include <torch/nn/module.h>
#include <torch/types.h>

#include "swasat/discriminator.hpp"
#include "swasat/generator.hpp"

namespace swasat {

/// Single-file model archive.
///
/// Layout: 8-byte magic "SWASATCK", u32 format version, u64 header length,
/// compact JSON header, then the raw little-endian bytes of every array in
/// header order. The header lists arrays sorted by name, and JSON objects are
/// key-sorted, so serialization is a pure function of the content and a
/// save -> load -> save cycle reproduces the file byte for byte.
///
/// Array name prefixes: "g." live generator, "g_ema." EMA generator, "d."
/// critic, "opt_g." / "opt_d." optimizer moments, "rng." generator state.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint32_t format_version = kFormatVersion;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  nlohmann::json train = nlohmann::json::object();
  std::int64_t step = 0;
  double path_length_mean = 0.0;
  std::map<std::string, torch::Tensor> arrays;

  bool has_prefix(const std::string& prefix) const;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::string& bytes);

/// Writes to a temporary sibling then renames over `path`.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Stable identity of a checkpoint: SHA-256 of its serialized bytes.
std::string checkpoint_hash(const Checkpoint& checkpoint);

/// Copy a module's parameters and buffers into `arrays` under `prefix`.
void export_module(const torch::nn::Module& module, const std::string& prefix,
                   std::map<std::string, torch::Tensor>& arrays);

/// Load parameters and buffers from `arrays`; every module entry must be present
/// with a matching shape.
void import_module(torch::nn::Module& module, const std::string& prefix,
                   const std::map<std::string, torch::Tensor>& arrays);

/// EMA generator (the sampling network) with its stored w_mean.
Generator load_generator(const Checkpoint& checkpoint, bool use_ema = true);
Discriminator load_discriminator(const Checkpoint& checkpoint);

}  // namespace swasat
