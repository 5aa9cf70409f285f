#pragma once

#include <cstdint>
#include <optional>

#include <torch/nn/module.h>
#include <torch/nn/pimpl.h>
#include <torch/types.h>

#include "swasat/wavelet.hpp"

namespace swasat::nn {

// Equalized learning-rate building blocks. Parameters are stored at unit
// scale and multiplied by a fixed He constant at run time.

/// leaky_relu(x + bias, 0.2) * sqrt(2); bias broadcast over dim 1.
torch::Tensor fused_leaky_relu(const torch::Tensor& x, const torch::Tensor& bias);

/// x / rms(x) over dim 1.
torch::Tensor pixel_norm(const torch::Tensor& x);

struct EqualLinearOptions {
  bool bias = true;
  double bias_init = 0.0;
  double lr_mul = 1.0;
  bool activate = false;
};

class EqualLinearImpl : public torch::nn::Module {
 public:
  EqualLinearImpl(std::int64_t in_features, std::int64_t out_features, EqualLinearOptions options = {});

  torch::Tensor forward(const torch::Tensor& x);

  torch::Tensor weight;  // (out, in)
  torch::Tensor bias;    // (out) or undefined

  double scale() const { return scale_; }
  double lr_mul() const { return options_.lr_mul; }

 private:
  EqualLinearOptions options_;
  double scale_;
};
TORCH_MODULE(EqualLinear);

struct EqualConv2dOptions {
  std::int64_t stride = 1;
  std::int64_t padding = 0;
  bool bias = true;
  bool activate = false;
};

class EqualConv2dImpl : public torch::nn::Module {
 public:
  EqualConv2dImpl(std::int64_t in_channels, std::int64_t out_channels, std::int64_t kernel,
                  EqualConv2dOptions options = {});

  torch::Tensor forward(const torch::Tensor& x);

  torch::Tensor weight;  // (out, in, k, k)
  torch::Tensor bias;

 private:
  EqualConv2dOptions options_;
  double scale_;
};
TORCH_MODULE(EqualConv2d);

struct ModulatedConv2dOptions {
  bool demodulate = true;
  bool upsample = false;
  wavelet::ResampleMode resample = wavelet::ResampleMode::kBilinear;
};

/// Style-modulated convolution. The per-sample style scales input channels;
/// demodulation renormalizes each output channel to unit expected variance.
/// Computed as modulate-input -> shared conv -> scale-output, which is
/// algebraically the per-sample weight form without a grouped convolution.
class ModulatedConv2dImpl : public torch::nn::Module {
 public:
  ModulatedConv2dImpl(std::int64_t in_channels, std::int64_t out_channels, std::int64_t kernel,
                      std::int64_t style_dim, ModulatedConv2dOptions options = {});

  /// x: (B, in, H, W); w: (B, style_dim). Output spatial size doubles when upsampling.
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& w);

  /// The w -> per-channel style projection analysed by closed-form factorization.
  EqualLinear modulation{nullptr};
  torch::Tensor weight;  // (out, in, k, k)

  std::int64_t in_channels() const { return in_channels_; }
  std::int64_t out_channels() const { return out_channels_; }

 private:
  std::int64_t in_channels_;
  std::int64_t out_channels_;
  std::int64_t kernel_;
  ModulatedConv2dOptions options_;
  double scale_;
};
TORCH_MODULE(ModulatedConv2d);

enum class NoiseMode { kOff, kRandom };

/// Modulated 3x3 conv + per-pixel noise + biased leaky ReLU.
class StyledConvImpl : public torch::nn::Module {
 public:
  StyledConvImpl(std::int64_t in_channels, std::int64_t out_channels, std::int64_t style_dim,
                 bool upsample, wavelet::ResampleMode resample);

  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& w, NoiseMode noise,
                        std::optional<at::Generator> generator = std::nullopt);

  ModulatedConv2d conv{nullptr};
  torch::Tensor noise_strength;  // scalar, starts at 0
  torch::Tensor activation_bias;
};
TORCH_MODULE(StyledConv);

/// Predicts packed wavelet coefficients (4*C channels) from features with an
/// unnormalized modulated 1x1 conv and adds the wavelet-upsampled skip.
class ToWaveletImpl : public torch::nn::Module {
 public:
  ToWaveletImpl(std::int64_t in_channels, std::int64_t image_channels, std::int64_t style_dim,
                wavelet::ResampleMode resample);

  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& w,
                        const torch::Tensor& skip = {});

  ModulatedConv2d conv{nullptr};
  torch::Tensor bias;

 private:
  wavelet::ResampleMode resample_;
};
TORCH_MODULE(ToWavelet);

}  // namespace swasat::nn
