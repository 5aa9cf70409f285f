#include "swasat/wavelet.hpp"

#include <sstream>

#include <torch/nn/functional/pooling.h>
#include <torch/nn/functional/upsampling.h>
#include <torch/torch.h>

#include "swasat/errors.hpp"

namespace swasat::wavelet {
namespace {

void require_even_image(const torch::Tensor& image) {
  if (image.dim() < 2) {
    throw DimensionError("wavelet: expected (..., H, W) input, got " + std::to_string(image.dim()) + " dims");
  }
  const auto h = image.size(-2);
  const auto w = image.size(-1);
  if (h < 2 || w < 2 || h % 2 != 0 || w % 2 != 0) {
    std::ostringstream msg;
    msg << "wavelet: spatial dims must be even and >= 2, got " << h << "x" << w;
    throw DimensionError(msg.str());
  }
}

// Collapse leading dims so 2-D ops see (N, C, H, W).
torch::Tensor as_4d(const torch::Tensor& x) {
  return x.reshape({-1, 1, x.size(-2), x.size(-1)});
}

std::vector<std::int64_t> with_spatial(const torch::Tensor& x, std::int64_t h, std::int64_t w) {
  auto sizes = x.sizes().vec();
  sizes[sizes.size() - 2] = h;
  sizes[sizes.size() - 1] = w;
  return sizes;
}

}  // namespace

void WaveletBands::validate() const {
  if (!ll.defined() || !lh.defined() || !hl.defined() || !hh.defined()) {
    throw DimensionError("wavelet: undefined band");
  }
  if (ll.sizes() != lh.sizes() || ll.sizes() != hl.sizes() || ll.sizes() != hh.sizes()) {
    throw DimensionError("wavelet: band shapes differ");
  }
  if (ll.dim() < 2) {
    throw DimensionError("wavelet: bands need at least 2 dims");
  }
}

WaveletBands dwt2d(const torch::Tensor& image) {
  require_even_image(image);
  const auto h = image.size(-2);
  const auto w = image.size(-1);
  const auto even_rows = image.slice(-2, 0, h, 2);
  const auto odd_rows = image.slice(-2, 1, h, 2);
  const auto a = even_rows.slice(-1, 0, w, 2);
  const auto b = even_rows.slice(-1, 1, w, 2);
  const auto c = odd_rows.slice(-1, 0, w, 2);
  const auto d = odd_rows.slice(-1, 1, w, 2);
  return WaveletBands{
      (a + b + c + d) * 0.5,
      (a - b + c - d) * 0.5,
      (a + b - c - d) * 0.5,
      (a - b - c + d) * 0.5,
  };
}

torch::Tensor iwt2d(const WaveletBands& bands) {
  bands.validate();
  const auto& ll = bands.ll;
  const auto& lh = bands.lh;
  const auto& hl = bands.hl;
  const auto& hh = bands.hh;
  const auto a = (ll + lh + hl + hh) * 0.5;
  const auto b = (ll - lh + hl - hh) * 0.5;
  const auto c = (ll + lh - hl - hh) * 0.5;
  const auto d = (ll - lh - hl + hh) * 0.5;
  const auto h = ll.size(-2);
  const auto w = ll.size(-1);
  // Interleave columns then rows: (..., h, w, 2) -> (..., h, 2w).
  const auto top = torch::stack({a, b}, -1).reshape(with_spatial(ll, h, 2 * w));
  const auto bottom = torch::stack({c, d}, -1).reshape(with_spatial(ll, h, 2 * w));
  return torch::stack({top, bottom}, -2).reshape(with_spatial(ll, 2 * h, 2 * w));
}

torch::Tensor pack(const WaveletBands& bands) {
  bands.validate();
  if (bands.ll.dim() < 3) {
    throw DimensionError("wavelet: packing needs a channel axis");
  }
  return torch::cat({bands.ll, bands.lh, bands.hl, bands.hh}, -3);
}

WaveletBands unpack(const torch::Tensor& packed) {
  if (packed.dim() < 3 || packed.size(-3) % 4 != 0) {
    throw DimensionError("wavelet: packed tensor needs a channel axis divisible by 4");
  }
  auto parts = packed.chunk(4, -3);
  return WaveletBands{parts[0], parts[1], parts[2], parts[3]};
}

torch::Tensor dwt2d_packed(const torch::Tensor& image) { return pack(dwt2d(image)); }

torch::Tensor iwt2d_packed(const torch::Tensor& packed) { return iwt2d(unpack(packed)); }

torch::Tensor upsample2x(const torch::Tensor& image, ResampleMode mode) {
  if (image.dim() < 2) {
    throw DimensionError("upsample2x: expected (..., H, W) input");
  }
  const auto h = image.size(-2);
  const auto w = image.size(-1);
  if (mode == ResampleMode::kNearest) {
    return image.repeat_interleave(2, -2).repeat_interleave(2, -1);
  }
  namespace F = torch::nn::functional;
  auto up = F::interpolate(as_4d(image), F::InterpolateFuncOptions()
                                             .size(std::vector<std::int64_t>{2 * h, 2 * w})
                                             .mode(torch::kBilinear)
                                             .align_corners(false));
  return up.reshape(with_spatial(image, 2 * h, 2 * w));
}

WaveletBands wavelet_upsample(const WaveletBands& bands, ResampleMode mode) {
  return dwt2d(upsample2x(iwt2d(bands), mode));
}

torch::Tensor wavelet_upsample_packed(const torch::Tensor& packed, ResampleMode mode) {
  return pack(wavelet_upsample(unpack(packed), mode));
}

torch::Tensor wavelet_downsample_packed(const torch::Tensor& packed) {
  const auto image = iwt2d_packed(packed);
  namespace F = torch::nn::functional;
  const auto pooled = F::avg_pool2d(as_4d(image), F::AvgPool2dFuncOptions(2));
  return dwt2d_packed(pooled.reshape(with_spatial(image, image.size(-2) / 2, image.size(-1) / 2)));
}

}  // namespace swasat::wavelet
