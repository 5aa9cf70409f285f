#pragma once

#include <cstdint>

#include <torch/types.h>

namespace swasat::wavelet {

/// One level of a 2-D orthonormal Haar decomposition.
///
/// Each band has the layout of the source image with the spatial dims halved:
/// (..., C, H/2, W/2). Any number of leading batch dims is allowed, which lets
/// the same type carry a single image or a minibatch of feature maps.
struct WaveletBands {
  torch::Tensor ll;
  torch::Tensor lh;
  torch::Tensor hl;
  torch::Tensor hh;

  std::int64_t source_height() const { return ll.size(-2) * 2; }
  std::int64_t source_width() const { return ll.size(-1) * 2; }

  /// Throws DimensionError unless all four bands share one shape.
  void validate() const;
};

enum class ResampleMode { kBilinear, kNearest };

/// Orthonormal Haar analysis over each 2x2 block (a b / c d):
///   ll = (a+b+c+d)/2, lh = (a-b+c-d)/2, hl = (a+b-c-d)/2, hh = (a-b-c+d)/2.
/// Input has shape (..., C, H, W) with H and W even; odd sizes are rejected.
WaveletBands dwt2d(const torch::Tensor& image);

/// Exact inverse of dwt2d.
torch::Tensor iwt2d(const WaveletBands& bands);

/// Bands stacked on the channel axis as [ll | lh | hl | hh]: (..., 4C, H/2, W/2).
/// This is the representation the generator and the critic operate in.
torch::Tensor pack(const WaveletBands& bands);
WaveletBands unpack(const torch::Tensor& packed);

/// Convenience wrappers over the packed layout.
torch::Tensor dwt2d_packed(const torch::Tensor& image);
torch::Tensor iwt2d_packed(const torch::Tensor& packed);

/// 2x spatial resample of an (..., C, H, W) image.
torch::Tensor upsample2x(const torch::Tensor& image, ResampleMode mode);

/// iwt2d -> 2x resample -> dwt2d. Output band dims are twice the input's.
WaveletBands wavelet_upsample(const WaveletBands& bands, ResampleMode mode = ResampleMode::kBilinear);
torch::Tensor wavelet_upsample_packed(const torch::Tensor& packed,
                                      ResampleMode mode = ResampleMode::kBilinear);

/// iwt2d -> 2x2 average pool -> dwt2d. Output band dims are half the input's.
torch::Tensor wavelet_downsample_packed(const torch::Tensor& packed);

}  // namespace swasat::wavelet
