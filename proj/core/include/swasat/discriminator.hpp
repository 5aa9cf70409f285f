#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/nn/module.h>
#include <torch/nn/pimpl.h>
#include <torch/types.h>

#include "swasat/generator.hpp"
#include "swasat/layers.hpp"

namespace swasat {

enum class CriticDownsample { kWavelet, kStridedConv };

struct DiscriminatorConfig {
  std::int64_t input_resolution = 64;
  std::int64_t image_channels = 3;
  ChannelSchedule channels;  // keyed by band resolution, down to 4
  bool minibatch_stddev = true;
  std::int64_t stddev_group = 4;
  CriticDownsample downsample = CriticDownsample::kWavelet;

  std::vector<std::int64_t> band_resolutions() const;  // descending, ends at 4
  void validate() const;

  static DiscriminatorConfig desk();
  static DiscriminatorConfig paper();
  static DiscriminatorConfig tiny(std::int64_t input_resolution, std::int64_t channels);
  /// Same resolution and widths as a generator config.
  static DiscriminatorConfig matching(const GeneratorConfig& generator);
};

void to_json(nlohmann::json& j, const DiscriminatorConfig& c);
void from_json(const nlohmann::json& j, DiscriminatorConfig& c);

/// Residual critic block. With wavelet downsampling, both paths halve the
/// resolution by a Haar decomposition of the feature map (4x channels)
/// followed by a convolution.
class CriticBlockImpl : public torch::nn::Module {
 public:
  CriticBlockImpl(std::int64_t in_channels, std::int64_t out_channels, CriticDownsample downsample);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  CriticDownsample downsample_;
  nn::EqualConv2d conv0_{nullptr};
  nn::EqualConv2d conv1_{nullptr};
  nn::EqualConv2d skip_{nullptr};
};
TORCH_MODULE(CriticBlock);

/// Wavelet-space critic: dwt2d input, from-wavelet projections at every
/// scale, residual downscaling blocks, minibatch stddev, dense head.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(DiscriminatorConfig config);

  const DiscriminatorConfig& config() const { return config_; }

  /// (B, C, R, R) -> (B) realness logits.
  torch::Tensor forward(const torch::Tensor& images);

 private:
  torch::Tensor stddev_feature(const torch::Tensor& x) const;

  DiscriminatorConfig config_;
  std::vector<nn::EqualConv2d> from_wavelets_;
  std::vector<CriticBlock> blocks_;
  nn::EqualConv2d final_conv_{nullptr};
  nn::EqualLinear final_dense_{nullptr};
  nn::EqualLinear final_out_{nullptr};
};
TORCH_MODULE(Discriminator);

/// Logits for a single image (C, R, R).
double score(Discriminator& discriminator, const torch::Tensor& image);

}  // namespace swasat
