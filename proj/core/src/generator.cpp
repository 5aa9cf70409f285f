#include "swasat/generator.hpp"

#include <cmath>
#include <sstream>

#include <ATen/CPUGeneratorImpl.h>
#include <torch/torch.h>

#include "swasat/errors.hpp"

namespace swasat {
namespace {

bool is_power_of_two(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

std::string conv_name(std::int64_t res) { return "conv_b" + std::to_string(res); }
std::string conv_up_name(std::int64_t res) { return "conv_up_b" + std::to_string(res); }
std::string to_wavelet_name(std::int64_t res) { return "to_wavelet_b" + std::to_string(res); }

const char* resample_name(wavelet::ResampleMode mode) {
  return mode == wavelet::ResampleMode::kNearest ? "nearest" : "bilinear";
}

wavelet::ResampleMode parse_resample(const std::string& name) {
  if (name == "nearest") return wavelet::ResampleMode::kNearest;
  if (name == "bilinear") return wavelet::ResampleMode::kBilinear;
  throw ConfigError("unknown resample mode '" + name + "'");
}

torch::Tensor param_dtype_like(const torch::Tensor& x, const torch::nn::Module& module) {
  for (const auto& p : module.parameters()) {
    return x.to(p.dtype());
  }
  return x;
}

}  // namespace

std::vector<std::int64_t> GeneratorConfig::band_resolutions() const {
  std::vector<std::int64_t> out;
  for (std::int64_t r = base_resolution; r <= output_resolution / 2; r *= 2) {
    out.push_back(r);
  }
  return out;
}

void GeneratorConfig::validate() const {
  if (z_dim <= 0 || w_dim <= 0 || mapping_depth <= 0 || image_channels <= 0) {
    throw ConfigError("generator: z_dim, w_dim, mapping_depth and image_channels must be positive");
  }
  if (mapping_lr_mul <= 0.0) {
    throw ConfigError("generator: mapping_lr_mul must be positive");
  }
  if (base_resolution != 4) {
    throw ConfigError("generator: base_resolution must be 4");
  }
  if (!is_power_of_two(output_resolution) || output_resolution < 2 * base_resolution) {
    std::ostringstream msg;
    msg << "generator: output_resolution must be a power of two >= " << 2 * base_resolution << ", got "
        << output_resolution;
    throw ConfigError(msg.str());
  }
  for (const auto r : band_resolutions()) {
    const auto it = channels.find(r);
    if (it == channels.end() || it->second <= 0) {
      throw ConfigError("generator: channel schedule has no entry for band resolution " + std::to_string(r));
    }
  }
}

GeneratorConfig GeneratorConfig::desk() {
  GeneratorConfig c;
  c.output_resolution = 64;
  c.channels = {{4, 64}, {8, 64}, {16, 32}, {32, 16}};
  return c;
}

GeneratorConfig GeneratorConfig::paper() {
  GeneratorConfig c;
  c.output_resolution = 256;
  c.channels = {{4, 512}, {8, 512}, {16, 512}, {32, 512}, {64, 512}, {128, 256}};
  return c;
}

GeneratorConfig GeneratorConfig::tiny(std::int64_t output_resolution, std::int64_t channels,
                                      std::int64_t latent_dim) {
  GeneratorConfig c;
  c.z_dim = latent_dim;
  c.w_dim = latent_dim;
  c.mapping_depth = 2;
  c.output_resolution = output_resolution;
  for (std::int64_t r = 4; r <= output_resolution / 2; r *= 2) {
    c.channels[r] = channels;
  }
  return c;
}

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  nlohmann::json channels = nlohmann::json::object();
  for (const auto& [res, ch] : c.channels) {
    channels[std::to_string(res)] = ch;
  }
  j = nlohmann::json{{"z_dim", c.z_dim},
                     {"w_dim", c.w_dim},
                     {"mapping_depth", c.mapping_depth},
                     {"mapping_lr_mul", c.mapping_lr_mul},
                     {"base_resolution", c.base_resolution},
                     {"output_resolution", c.output_resolution},
                     {"image_channels", c.image_channels},
                     {"channels", channels},
                     {"resample", resample_name(c.resample)}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  c.z_dim = j.at("z_dim").get<std::int64_t>();
  c.w_dim = j.at("w_dim").get<std::int64_t>();
  c.mapping_depth = j.at("mapping_depth").get<std::int64_t>();
  c.mapping_lr_mul = j.at("mapping_lr_mul").get<double>();
  c.base_resolution = j.at("base_resolution").get<std::int64_t>();
  c.output_resolution = j.at("output_resolution").get<std::int64_t>();
  c.image_channels = j.at("image_channels").get<std::int64_t>();
  c.channels.clear();
  for (const auto& [res, ch] : j.at("channels").items()) {
    c.channels[std::stoll(res)] = ch.get<std::int64_t>();
  }
  c.resample = parse_resample(j.at("resample").get<std::string>());
}

std::vector<StyleLayer> style_layers(const GeneratorConfig& config) {
  std::vector<StyleLayer> out;
  std::int64_t row = 0;
  const auto add = [&](std::string name, std::int64_t res, std::int64_t in, StyleLayerKind kind) {
    out.push_back(StyleLayer{std::move(name), row++, res, in, kind});
  };
  for (const auto res : config.band_resolutions()) {
    const auto ch = config.channels.at(res);
    if (res == config.base_resolution) {
      add(conv_name(res), res, ch, StyleLayerKind::kConv);
    } else {
      add(conv_up_name(res), res, config.channels.at(res / 2), StyleLayerKind::kConv);
      add(conv_name(res), res, ch, StyleLayerKind::kConv);
    }
    add(to_wavelet_name(res), res, ch, StyleLayerKind::kToWavelet);
  }
  return out;
}

LatentZ latent_from_seed(std::uint64_t seed, std::int64_t z_dim) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  return LatentZ{torch::randn({z_dim}, gen, torch::kFloat32)};
}

torch::Tensor latents_from_seeds(const std::vector<std::uint64_t>& seeds, std::int64_t z_dim) {
  std::vector<torch::Tensor> rows;
  rows.reserve(seeds.size());
  for (const auto seed : seeds) {
    rows.push_back(latent_from_seed(seed, z_dim).values);
  }
  return torch::stack(rows);
}

torch::Tensor LatentW::resolve() const {
  auto out = base.clone();
  for (const auto& offset : offsets) {
    if (offset.alpha == 0.0 || offset.rows.empty()) {
      continue;
    }
    const auto delta = (offset.direction.to(torch::kFloat64) * offset.alpha).to(base.dtype());
    for (const auto row : offset.rows) {
      out[row].add_(delta);
    }
  }
  return out;
}

void TruncationConfig::validate() const {
  if (!(psi >= 0.0 && psi <= 1.0)) {
    throw ConfigError("truncation psi must lie in [0, 1], got " + std::to_string(psi));
  }
  if (w_mean.defined() && !torch::isfinite(w_mean).all().item<bool>()) {
    throw ConfigError("truncation w_mean is not finite");
  }
}

torch::Tensor truncate(const torch::Tensor& w, const TruncationConfig& truncation) {
  truncation.validate();
  if (!truncation.w_mean.defined()) {
    throw ConfigError("truncation requires w_mean");
  }
  if (w.size(-1) != truncation.w_mean.size(-1)) {
    throw DimensionError("truncate: latent and w_mean widths differ");
  }
  const auto mean = truncation.w_mean.to(w.dtype()).expand_as(w);
  // lerp evaluates end - (end - start) * (1 - psi) for psi >= 0.5 and
  // start + psi * (end - start) below, so both endpoints are exact.
  return torch::lerp(mean, w, truncation.psi);
}

GeneratorImpl::GeneratorImpl(GeneratorConfig config) : config_(std::move(config)) {
  config_.validate();
  layers_ = style_layers(config_);

  auto mapping = torch::nn::ModuleList();
  for (std::int64_t i = 0; i < config_.mapping_depth; ++i) {
    const auto in = i == 0 ? config_.z_dim : config_.w_dim;
    auto layer = nn::EqualLinear(in, config_.w_dim,
                                 nn::EqualLinearOptions{.bias = true, .lr_mul = config_.mapping_lr_mul, .activate = true});
    mapping->push_back(layer);
    mapping_.push_back(layer);
  }
  register_module("mapping", mapping);

  const auto resolutions = config_.band_resolutions();
  const auto base_ch = config_.channels.at(config_.base_resolution);
  constant_input_ = register_parameter("constant_input",
                                       torch::randn({1, base_ch, config_.base_resolution, config_.base_resolution}));

  for (const auto res : resolutions) {
    const auto ch = config_.channels.at(res);
    if (res == config_.base_resolution) {
      auto conv = register_module(conv_name(res), nn::StyledConv(ch, ch, config_.w_dim, false, config_.resample));
      convs_.push_back(conv);
      by_name_.emplace(conv_name(res), conv->conv);
    } else {
      const auto in = config_.channels.at(res / 2);
      auto up = register_module(conv_up_name(res), nn::StyledConv(in, ch, config_.w_dim, true, config_.resample));
      auto conv = register_module(conv_name(res), nn::StyledConv(ch, ch, config_.w_dim, false, config_.resample));
      convs_.push_back(up);
      convs_.push_back(conv);
      by_name_.emplace(conv_up_name(res), up->conv);
      by_name_.emplace(conv_name(res), conv->conv);
    }
    auto tw = register_module(to_wavelet_name(res),
                              nn::ToWavelet(ch, config_.image_channels, config_.w_dim, config_.resample));
    to_wavelets_.push_back(tw);
    by_name_.emplace(to_wavelet_name(res), tw->conv);
  }

  w_mean = register_buffer("w_mean", torch::zeros({config_.w_dim}));
}

torch::Tensor GeneratorImpl::map(const torch::Tensor& z) {
  if (z.dim() != 2 || z.size(1) != config_.z_dim) {
    std::ostringstream msg;
    msg << "map_latent: expected (B, " << config_.z_dim << ") latents, got " << z.sizes();
    throw DimensionError(msg.str());
  }
  auto x = nn::pixel_norm(param_dtype_like(z, *this));
  for (auto& layer : mapping_) {
    x = layer->forward(x);
  }
  return x;
}

torch::Tensor GeneratorImpl::broadcast(const torch::Tensor& w) const {
  if (w.dim() != 2 || w.size(1) != config_.w_dim) {
    throw DimensionError("broadcast: expected (B, w_dim) latents");
  }
  return w.unsqueeze(1).expand({w.size(0), num_style_layers(), config_.w_dim});
}

torch::Tensor GeneratorImpl::synthesize(const torch::Tensor& ws, NoiseMode noise,
                                        std::optional<at::Generator> generator) {
  if (ws.dim() != 3 || ws.size(1) != num_style_layers() || ws.size(2) != config_.w_dim) {
    std::ostringstream msg;
    msg << "synthesize: expected (B, " << num_style_layers() << ", " << config_.w_dim << ") latents, got "
        << ws.sizes();
    throw DimensionError(msg.str());
  }
  const auto styles = param_dtype_like(ws, *this);
  const auto batch = styles.size(0);
  auto x = constant_input_.expand({batch, -1, -1, -1});
  torch::Tensor skip;
  std::size_t conv_index = 0;
  std::size_t scale_index = 0;
  for (const auto& layer : layers_) {
    const auto w = styles.select(1, layer.row);
    if (layer.kind == StyleLayerKind::kConv) {
      x = convs_[conv_index++]->forward(x, w, noise, generator);
    } else {
      skip = to_wavelets_[scale_index++]->forward(x, w, skip);
    }
  }
  return wavelet::iwt2d_packed(skip);
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& z, NoiseMode noise) {
  return synthesize(broadcast(map(z)), noise);
}

nn::ModulatedConv2d GeneratorImpl::modulated_conv(const std::string& layer_name) const {
  const auto it = by_name_.find(layer_name);
  if (it == by_name_.end()) {
    throw NotFoundError("generator has no style layer named '" + layer_name + "'");
  }
  return it->second;
}

void GeneratorImpl::update_w_mean(std::int64_t samples, std::uint64_t seed) {
  if (samples <= 0) {
    throw ConfigError("w_mean estimation needs a positive sample count");
  }
  torch::NoGradGuard no_grad;
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  constexpr std::int64_t kChunk = 1024;
  auto sum = torch::zeros({config_.w_dim}, torch::kFloat64);
  for (std::int64_t done = 0; done < samples; done += kChunk) {
    const auto n = std::min(kChunk, samples - done);
    const auto z = torch::randn({n, config_.z_dim}, gen, torch::kFloat32);
    sum += map(z).to(torch::kFloat64).sum(0);
  }
  w_mean.copy_(sum / static_cast<double>(samples));
}

LatentW mapped_latent(Generator& generator, const LatentZ& z, const TruncationConfig& truncation) {
  torch::NoGradGuard no_grad;
  const auto w = truncate(generator->map(z.values.unsqueeze(0)), truncation);
  return LatentW{generator->broadcast(w).squeeze(0).contiguous(), {}};
}

LatentW mapped_latent(Generator& generator, std::uint64_t seed, const TruncationConfig& truncation) {
  return mapped_latent(generator, latent_from_seed(seed, generator->config().z_dim), truncation);
}

torch::Tensor generate(Generator& generator, const LatentZ& z, const TruncationConfig& truncation,
                       NoiseMode noise) {
  return render(generator, mapped_latent(generator, z, truncation), noise);
}

torch::Tensor render(Generator& generator, const LatentW& latent, NoiseMode noise) {
  torch::NoGradGuard no_grad;
  return generator->synthesize(latent.resolve().unsqueeze(0), noise).squeeze(0);
}

}  // namespace swasat
