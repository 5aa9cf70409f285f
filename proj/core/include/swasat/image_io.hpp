#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <torch/types.h>

namespace swasat::image {

// Images are (C, H, W) float tensors in [-1, 1], RGB channel order.

/// Quantize to 8-bit (H, W, C): round((x + 1) * 127.5), clamped to [0, 255].
torch::Tensor to_uint8(const torch::Tensor& image);

/// Inverse of to_uint8 up to quantization: (H, W, C) uint8 -> (C, H, W) float.
torch::Tensor from_uint8(const torch::Tensor& pixels);

/// Lossless PNG of the quantized image. Same input, same bytes.
std::string encode_png(const torch::Tensor& image);
torch::Tensor decode_image(std::string_view bytes);

void write_png(const std::filesystem::path& path, const torch::Tensor& image);

/// Decode any format OpenCV reads (PNG, JPEG, TIFF, ...). Throws IoError naming
/// the path when the file is missing or not a decodable image.
torch::Tensor read_image(const std::filesystem::path& path);

/// read_image followed by an area resize to resolution x resolution when needed.
torch::Tensor read_image(const std::filesystem::path& path, std::int64_t resolution);

/// Area resize of a (C, H, W) image.
torch::Tensor resize(const torch::Tensor& image, std::int64_t height, std::int64_t width);

/// Lay out (rows * cols, C, H, W) images as one (C, rows * H, cols * W) image, row-major.
torch::Tensor tile(const torch::Tensor& images, std::int64_t rows, std::int64_t cols);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

}  // namespace swasat::image
