#include "swasat/layers.hpp"

#include <cmath>

#include <torch/torch.h>

namespace swasat::nn {
namespace {

constexpr double kSqrt2 = 1.4142135623730951;

torch::Tensor bias_view(const torch::Tensor& bias, std::int64_t dims) {
  std::vector<std::int64_t> shape(static_cast<std::size_t>(dims), 1);
  shape[1] = bias.size(0);
  return bias.view(shape);
}

}  // namespace

torch::Tensor fused_leaky_relu(const torch::Tensor& x, const torch::Tensor& bias) {
  auto y = bias.defined() ? x + bias_view(bias, x.dim()) : x;
  return torch::leaky_relu(y, 0.2) * kSqrt2;
}

torch::Tensor pixel_norm(const torch::Tensor& x) {
  return x * torch::rsqrt(x.pow(2).mean(1, /*keepdim=*/true) + 1e-8);
}

EqualLinearImpl::EqualLinearImpl(std::int64_t in_features, std::int64_t out_features,
                                 EqualLinearOptions options)
    : options_(options), scale_(1.0 / std::sqrt(static_cast<double>(in_features)) * options.lr_mul) {
  weight = register_parameter("weight", torch::randn({out_features, in_features}) / options.lr_mul);
  if (options.bias) {
    bias = register_parameter("bias", torch::full({out_features}, options.bias_init));
  }
}

torch::Tensor EqualLinearImpl::forward(const torch::Tensor& x) {
  const auto w = weight * scale_;
  if (options_.activate) {
    auto out = torch::matmul(x, w.t());
    return fused_leaky_relu(out, bias.defined() ? bias * options_.lr_mul : torch::Tensor());
  }
  auto out = torch::matmul(x, w.t());
  if (bias.defined()) {
    out = out + bias * options_.lr_mul;
  }
  return out;
}

EqualConv2dImpl::EqualConv2dImpl(std::int64_t in_channels, std::int64_t out_channels, std::int64_t kernel,
                                 EqualConv2dOptions options)
    : options_(options), scale_(1.0 / std::sqrt(static_cast<double>(in_channels * kernel * kernel))) {
  weight = register_parameter("weight", torch::randn({out_channels, in_channels, kernel, kernel}));
  if (options.bias) {
    bias = register_parameter("bias", torch::zeros({out_channels}));
  }
}

torch::Tensor EqualConv2dImpl::forward(const torch::Tensor& x) {
  auto out = torch::conv2d(x, weight * scale_, {}, options_.stride, options_.padding);
  if (options_.activate) {
    return fused_leaky_relu(out, bias);
  }
  if (bias.defined()) {
    out = out + bias.view({1, -1, 1, 1});
  }
  return out;
}

ModulatedConv2dImpl::ModulatedConv2dImpl(std::int64_t in_channels, std::int64_t out_channels,
                                         std::int64_t kernel, std::int64_t style_dim,
                                         ModulatedConv2dOptions options)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      options_(options),
      scale_(1.0 / std::sqrt(static_cast<double>(in_channels * kernel * kernel))) {
  weight = register_parameter("weight", torch::randn({out_channels, in_channels, kernel, kernel}));
  modulation = register_module(
      "modulation", EqualLinear(style_dim, in_channels, EqualLinearOptions{.bias = true, .bias_init = 1.0}));
}

torch::Tensor ModulatedConv2dImpl::forward(const torch::Tensor& x, const torch::Tensor& w) {
  const auto batch = x.size(0);
  const auto style = modulation->forward(w);  // (B, in)
  auto input = x * style.view({batch, in_channels_, 1, 1});
  if (options_.upsample) {
    input = wavelet::upsample2x(input, options_.resample);
  }
  const auto kernel = weight * scale_;
  auto out = torch::conv2d(input, kernel, {}, 1, kernel_ / 2);
  if (options_.demodulate) {
    // sum_{i,k} (kernel[o,i,k] * style[b,i])^2 = style^2 @ sum_k kernel^2
    const auto kernel_energy = kernel.pow(2).sum({2, 3});  // (out, in)
    const auto demod = torch::rsqrt(torch::matmul(style.pow(2), kernel_energy.t()) + 1e-8);
    out = out * demod.view({batch, out_channels_, 1, 1});
  }
  return out;
}

StyledConvImpl::StyledConvImpl(std::int64_t in_channels, std::int64_t out_channels, std::int64_t style_dim,
                               bool upsample, wavelet::ResampleMode resample) {
  conv = register_module(
      "conv", ModulatedConv2d(in_channels, out_channels, 3, style_dim,
                              ModulatedConv2dOptions{.demodulate = true, .upsample = upsample, .resample = resample}));
  noise_strength = register_parameter("noise_strength", torch::zeros({1}));
  activation_bias = register_parameter("activation_bias", torch::zeros({out_channels}));
}

torch::Tensor StyledConvImpl::forward(const torch::Tensor& x, const torch::Tensor& w, NoiseMode noise,
                                      std::optional<at::Generator> generator) {
  auto out = conv->forward(x, w);
  if (noise == NoiseMode::kRandom) {
    const auto noise_image =
        torch::randn({out.size(0), 1, out.size(2), out.size(3)}, generator, out.options().requires_grad(false));
    out = out + noise_strength * noise_image;
  }
  return fused_leaky_relu(out, activation_bias);
}

ToWaveletImpl::ToWaveletImpl(std::int64_t in_channels, std::int64_t image_channels, std::int64_t style_dim,
                             wavelet::ResampleMode resample)
    : resample_(resample) {
  conv = register_module("conv", ModulatedConv2d(in_channels, 4 * image_channels, 1, style_dim,
                                                 ModulatedConv2dOptions{.demodulate = false}));
  bias = register_parameter("bias", torch::zeros({4 * image_channels}));
}

torch::Tensor ToWaveletImpl::forward(const torch::Tensor& x, const torch::Tensor& w, const torch::Tensor& skip) {
  auto out = conv->forward(x, w) + bias.view({1, -1, 1, 1});
  if (skip.defined()) {
    out = out + wavelet::wavelet_upsample_packed(skip, resample_);
  }
  return out;
}

}  // namespace swasat::nn
