#include "swasat/discriminator.hpp"

#include <cmath>
#include <sstream>

#include <torch/torch.h>

#include "swasat/errors.hpp"
#include "swasat/wavelet.hpp"

namespace swasat {
namespace {

constexpr double kInvSqrt2 = 0.7071067811865476;

bool is_power_of_two(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

std::vector<std::int64_t> DiscriminatorConfig::band_resolutions() const {
  std::vector<std::int64_t> out;
  for (std::int64_t r = input_resolution / 2; r >= 4; r /= 2) {
    out.push_back(r);
  }
  return out;
}

void DiscriminatorConfig::validate() const {
  if (!is_power_of_two(input_resolution) || input_resolution < 8) {
    throw ConfigError("discriminator: input_resolution must be a power of two >= 8");
  }
  if (image_channels <= 0) {
    throw ConfigError("discriminator: image_channels must be positive");
  }
  if (stddev_group < 1) {
    throw ConfigError("discriminator: stddev_group must be >= 1");
  }
  for (const auto r : band_resolutions()) {
    const auto it = channels.find(r);
    if (it == channels.end() || it->second <= 0) {
      throw ConfigError("discriminator: channel schedule has no entry for band resolution " + std::to_string(r));
    }
  }
}

DiscriminatorConfig DiscriminatorConfig::desk() { return matching(GeneratorConfig::desk()); }

DiscriminatorConfig DiscriminatorConfig::paper() { return matching(GeneratorConfig::paper()); }

DiscriminatorConfig DiscriminatorConfig::tiny(std::int64_t input_resolution, std::int64_t channels) {
  DiscriminatorConfig c;
  c.input_resolution = input_resolution;
  for (std::int64_t r = 4; r <= input_resolution / 2; r *= 2) {
    c.channels[r] = channels;
  }
  return c;
}

DiscriminatorConfig DiscriminatorConfig::matching(const GeneratorConfig& generator) {
  DiscriminatorConfig c;
  c.input_resolution = generator.output_resolution;
  c.image_channels = generator.image_channels;
  c.channels = generator.channels;
  return c;
}

void to_json(nlohmann::json& j, const DiscriminatorConfig& c) {
  nlohmann::json channels = nlohmann::json::object();
  for (const auto& [res, ch] : c.channels) {
    channels[std::to_string(res)] = ch;
  }
  j = nlohmann::json{{"input_resolution", c.input_resolution},
                     {"image_channels", c.image_channels},
                     {"channels", channels},
                     {"minibatch_stddev", c.minibatch_stddev},
                     {"stddev_group", c.stddev_group},
                     {"downsample", c.downsample == CriticDownsample::kWavelet ? "wavelet" : "strided_conv"}};
}

void from_json(const nlohmann::json& j, DiscriminatorConfig& c) {
  c.input_resolution = j.at("input_resolution").get<std::int64_t>();
  c.image_channels = j.at("image_channels").get<std::int64_t>();
  c.channels.clear();
  for (const auto& [res, ch] : j.at("channels").items()) {
    c.channels[std::stoll(res)] = ch.get<std::int64_t>();
  }
  c.minibatch_stddev = j.at("minibatch_stddev").get<bool>();
  c.stddev_group = j.at("stddev_group").get<std::int64_t>();
  const auto mode = j.at("downsample").get<std::string>();
  if (mode == "wavelet") {
    c.downsample = CriticDownsample::kWavelet;
  } else if (mode == "strided_conv") {
    c.downsample = CriticDownsample::kStridedConv;
  } else {
    throw ConfigError("unknown critic downsample mode '" + mode + "'");
  }
}

CriticBlockImpl::CriticBlockImpl(std::int64_t in_channels, std::int64_t out_channels, CriticDownsample downsample)
    : downsample_(downsample) {
  using nn::EqualConv2dOptions;
  conv0_ = register_module("conv0", nn::EqualConv2d(in_channels, in_channels, 3,
                                                    EqualConv2dOptions{.padding = 1, .activate = true}));
  if (downsample == CriticDownsample::kWavelet) {
    conv1_ = register_module("conv1", nn::EqualConv2d(4 * in_channels, out_channels, 3,
                                                      EqualConv2dOptions{.padding = 1, .activate = true}));
    skip_ = register_module("skip", nn::EqualConv2d(4 * in_channels, out_channels, 1,
                                                    EqualConv2dOptions{.bias = false}));
  } else {
    conv1_ = register_module("conv1", nn::EqualConv2d(in_channels, out_channels, 3,
                                                      EqualConv2dOptions{.stride = 2, .padding = 1, .activate = true}));
    skip_ = register_module("skip", nn::EqualConv2d(in_channels, out_channels, 1,
                                                    EqualConv2dOptions{.stride = 2, .bias = false}));
  }
}

torch::Tensor CriticBlockImpl::forward(const torch::Tensor& x) {
  auto h = conv0_->forward(x);
  torch::Tensor skip;
  if (downsample_ == CriticDownsample::kWavelet) {
    h = conv1_->forward(wavelet::dwt2d_packed(h));
    skip = skip_->forward(wavelet::dwt2d_packed(x));
  } else {
    h = conv1_->forward(h);
    skip = skip_->forward(x);
  }
  return (h + skip) * kInvSqrt2;
}

DiscriminatorImpl::DiscriminatorImpl(DiscriminatorConfig config) : config_(std::move(config)) {
  config_.validate();
  using nn::EqualConv2dOptions;
  const auto packed_channels = 4 * config_.image_channels;
  for (const auto res : config_.band_resolutions()) {
    const auto ch = config_.channels.at(res);
    from_wavelets_.push_back(register_module(
        "from_wavelet_b" + std::to_string(res),
        nn::EqualConv2d(packed_channels, ch, 1, EqualConv2dOptions{.activate = true})));
    if (res > 4) {
      blocks_.push_back(register_module("block_b" + std::to_string(res),
                                        CriticBlock(ch, config_.channels.at(res / 2), config_.downsample)));
    }
  }
  const auto base_ch = config_.channels.at(4);
  final_conv_ = register_module("final_conv", nn::EqualConv2d(base_ch + 1, base_ch, 3,
                                                              EqualConv2dOptions{.padding = 1, .activate = true}));
  final_dense_ = register_module("final_dense", nn::EqualLinear(base_ch * 16, base_ch,
                                                                nn::EqualLinearOptions{.activate = true}));
  final_out_ = register_module("final_out", nn::EqualLinear(base_ch, 1));
}

torch::Tensor DiscriminatorImpl::stddev_feature(const torch::Tensor& x) const {
  const auto batch = x.size(0);
  if (!config_.minibatch_stddev) {
    return torch::zeros({batch, 1, x.size(2), x.size(3)}, x.options());
  }
  auto group = std::min<std::int64_t>(batch, config_.stddev_group);
  while (batch % group != 0) {
    --group;
  }
  auto y = x.view({group, -1, x.size(1), x.size(2), x.size(3)});
  y = torch::sqrt(y.var(0, /*unbiased=*/false) + 1e-8);  // (B/g, C, H, W)
  y = y.mean({1, 2, 3}).view({-1, 1, 1, 1});
  return y.repeat({group, 1, x.size(2), x.size(3)});
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& images) {
  const auto r = config_.input_resolution;
  if (images.dim() != 4 || images.size(1) != config_.image_channels || images.size(2) != r || images.size(3) != r) {
    std::ostringstream msg;
    msg << "discriminator: expected (B, " << config_.image_channels << ", " << r << ", " << r << ") images, got "
        << images.sizes();
    throw DimensionError(msg.str());
  }
  auto bands = wavelet::dwt2d_packed(images);
  torch::Tensor out;
  for (std::size_t i = 0; i < from_wavelets_.size(); ++i) {
    auto projected = from_wavelets_[i]->forward(bands);
    out = out.defined() ? out + projected : projected;
    if (i < blocks_.size()) {
      out = blocks_[i]->forward(out);
      bands = wavelet::wavelet_downsample_packed(bands);
    }
  }
  out = torch::cat({out, stddev_feature(out)}, 1);
  out = final_conv_->forward(out);
  out = final_dense_->forward(out.flatten(1));
  return final_out_->forward(out).squeeze(1);
}

double score(Discriminator& discriminator, const torch::Tensor& image) {
  torch::NoGradGuard no_grad;
  return discriminator->forward(image.unsqueeze(0)).item<double>();
}

}  // namespace swasat
