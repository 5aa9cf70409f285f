#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/nn/module.h>
#include <torch/nn/modules/container/modulelist.h>
#include <torch/nn/pimpl.h>
#include <torch/types.h>

#include "swasat/layers.hpp"
#include "swasat/wavelet.hpp"

namespace swasat {

using nn::NoiseMode;

/// Channel count per band resolution (band resolution = image resolution / 2).
using ChannelSchedule = std::map<std::int64_t, std::int64_t>;

struct GeneratorConfig {
  std::int64_t z_dim = 512;
  std::int64_t w_dim = 512;
  std::int64_t mapping_depth = 8;
  double mapping_lr_mul = 0.01;
  std::int64_t base_resolution = 4;
  std::int64_t output_resolution = 64;
  std::int64_t image_channels = 3;
  ChannelSchedule channels;
  wavelet::ResampleMode resample = wavelet::ResampleMode::kBilinear;

  /// Band resolutions from base_resolution to output_resolution / 2.
  std::vector<std::int64_t> band_resolutions() const;
  void validate() const;

  /// 64x64 output with a reduced channel schedule.
  static GeneratorConfig desk();
  /// 256x256 output with the full-width schedule.
  static GeneratorConfig paper();
  /// Tiny config for tests and gradient checks.
  static GeneratorConfig tiny(std::int64_t output_resolution, std::int64_t channels, std::int64_t latent_dim);
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);

enum class StyleLayerKind { kConv, kToWavelet };

/// One style-consuming layer. `row` indexes the per-layer latent matrix.
struct StyleLayer {
  std::string name;
  std::int64_t row = 0;
  std::int64_t band_resolution = 0;
  std::int64_t in_channels = 0;
  StyleLayerKind kind = StyleLayerKind::kConv;
};

/// Style layers in synthesis order: per scale, the (upsampling) convs then the to-wavelet layer.
std::vector<StyleLayer> style_layers(const GeneratorConfig& config);

/// Input noise vector (z_dim).
struct LatentZ {
  torch::Tensor values;
};

/// Standard-normal latent drawn from a seeded generator.
LatentZ latent_from_seed(std::uint64_t seed, std::int64_t z_dim);

/// Stacked latents for a list of seeds: (N, z_dim).
torch::Tensor latents_from_seeds(const std::vector<std::uint64_t>& seeds, std::int64_t z_dim);

/// A pending additive offset `alpha * direction` on a subset of latent rows.
struct LatentOffset {
  std::string key;            // identifies the direction; offsets with equal keys merge
  torch::Tensor direction;    // (w_dim)
  std::vector<std::int64_t> rows;
  double alpha = 0.0;
};

/// Per-layer mapped latent (num_style_layers, w_dim) plus pending edits.
///
/// Edits are kept symbolic and folded in by resolve(), so repeated edits along
/// one direction combine their magnitudes before touching the latent values.
struct LatentW {
  torch::Tensor base;
  std::vector<LatentOffset> offsets;

  torch::Tensor resolve() const;
};

struct TruncationConfig {
  double psi = 1.0;
  torch::Tensor w_mean;  // (w_dim)
  std::int64_t mean_samples = 4096;

  void validate() const;
};

/// w' = w_mean + psi * (w - w_mean); exact at psi = 0 and psi = 1.
torch::Tensor truncate(const torch::Tensor& w, const TruncationConfig& truncation);

/// Wavelet-domain style generator: mapping network + modulated synthesis that
/// predicts packed Haar coefficients per scale, accumulated through
/// wavelet_upsample skips and inverted once at the top scale.
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(GeneratorConfig config);

  const GeneratorConfig& config() const { return config_; }
  const std::vector<StyleLayer>& layers() const { return layers_; }
  std::int64_t num_style_layers() const { return static_cast<std::int64_t>(layers_.size()); }

  /// (B, z_dim) -> (B, w_dim)
  torch::Tensor map(const torch::Tensor& z);

  /// (B, w_dim) -> (B, num_style_layers, w_dim)
  torch::Tensor broadcast(const torch::Tensor& w) const;

  /// (B, num_style_layers, w_dim) -> (B, C, R, R)
  torch::Tensor synthesize(const torch::Tensor& ws, NoiseMode noise = NoiseMode::kOff,
                           std::optional<at::Generator> generator = std::nullopt);

  /// z -> image without truncation.
  torch::Tensor forward(const torch::Tensor& z, NoiseMode noise = NoiseMode::kOff);

  /// Style projection of a named layer (see style_layers()).
  nn::ModulatedConv2d modulated_conv(const std::string& layer_name) const;

  /// Running estimate of the mapped-latent mean used for truncation.
  torch::Tensor w_mean;

  /// Estimate w_mean from `samples` latents of a fixed seeded stream.
  void update_w_mean(std::int64_t samples, std::uint64_t seed = 0x5EEDull);

 private:
  GeneratorConfig config_;
  std::vector<StyleLayer> layers_;
  std::vector<nn::EqualLinear> mapping_;
  torch::Tensor constant_input_;
  std::vector<nn::StyledConv> convs_;      // synthesis order
  std::vector<nn::ToWavelet> to_wavelets_; // one per scale
  std::map<std::string, nn::ModulatedConv2d> by_name_;
};
TORCH_MODULE(Generator);

/// Single-image G(z): synthesize(truncate(map(z))). Returns (C, R, R).
torch::Tensor generate(Generator& generator, const LatentZ& z, const TruncationConfig& truncation,
                       NoiseMode noise = NoiseMode::kOff);

/// Truncated per-layer latent for a seed; the starting point for edits.
LatentW mapped_latent(Generator& generator, const LatentZ& z, const TruncationConfig& truncation);
LatentW mapped_latent(Generator& generator, std::uint64_t seed, const TruncationConfig& truncation);

/// Render a (possibly edited) per-layer latent. Returns (C, R, R).
torch::Tensor render(Generator& generator, const LatentW& latent, NoiseMode noise = NoiseMode::kOff);

}  // namespace swasat
