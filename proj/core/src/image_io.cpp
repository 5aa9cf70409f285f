#include "swasat/image_io.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <torch/torch.h>

#include "swasat/errors.hpp"

namespace swasat::image {
namespace {

void require_image(const torch::Tensor& image) {
  if (image.dim() != 3 || (image.size(0) != 1 && image.size(0) != 3)) {
    std::ostringstream msg;
    msg << "expected a (C, H, W) image with 1 or 3 channels, got " << image.sizes();
    throw DimensionError(msg.str());
  }
}

// uint8 (H, W, 3) RGB tensor <-> cv::Mat BGR
cv::Mat to_mat(const torch::Tensor& pixels) {
  const auto hwc = pixels.contiguous();
  const int h = static_cast<int>(hwc.size(0));
  const int w = static_cast<int>(hwc.size(1));
  const int c = static_cast<int>(hwc.size(2));
  cv::Mat mat(h, w, CV_8UC(c), const_cast<std::uint8_t*>(hwc.data_ptr<std::uint8_t>()));
  cv::Mat out;
  if (c == 3) {
    cv::cvtColor(mat, out, cv::COLOR_RGB2BGR);
  } else {
    out = mat.clone();
  }
  return out;
}

torch::Tensor from_mat(const cv::Mat& decoded) {
  cv::Mat rgb;
  if (decoded.channels() == 1) {
    cv::cvtColor(decoded, rgb, cv::COLOR_GRAY2RGB);
  } else if (decoded.channels() == 4) {
    cv::cvtColor(decoded, rgb, cv::COLOR_BGRA2RGB);
  } else {
    cv::cvtColor(decoded, rgb, cv::COLOR_BGR2RGB);
  }
  if (rgb.depth() != CV_8U) {
    cv::Mat converted;
    rgb.convertTo(converted, CV_8U, rgb.depth() == CV_16U ? 1.0 / 257.0 : 1.0);
    rgb = converted;
  }
  auto pixels = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8).clone();
  return from_uint8(pixels);
}

}  // namespace

torch::Tensor to_uint8(const torch::Tensor& image) {
  require_image(image);
  const auto scaled = ((image.detach().to(torch::kFloat64) + 1.0) * 127.5).round().clamp(0.0, 255.0);
  return scaled.to(torch::kUInt8).permute({1, 2, 0}).contiguous();
}

torch::Tensor from_uint8(const torch::Tensor& pixels) {
  if (pixels.dim() != 3 || pixels.scalar_type() != torch::kUInt8) {
    throw DimensionError("from_uint8: expected (H, W, C) uint8 pixels");
  }
  return pixels.permute({2, 0, 1}).to(torch::kFloat32).div(127.5).sub(1.0).contiguous();
}

std::string encode_png(const torch::Tensor& image) {
  const auto mat = to_mat(to_uint8(image));
  std::vector<std::uint8_t> buffer;
  const std::vector<int> params{cv::IMWRITE_PNG_COMPRESSION, 6};
  if (!cv::imencode(".png", mat, buffer, params)) {
    throw IoError("PNG encoding failed");
  }
  return std::string(buffer.begin(), buffer.end());
}

torch::Tensor decode_image(std::string_view bytes) {
  std::vector<std::uint8_t> buffer(bytes.begin(), bytes.end());
  const auto decoded = cv::imdecode(buffer, cv::IMREAD_UNCHANGED);
  if (decoded.empty()) {
    throw IoError("image decoding failed");
  }
  return from_mat(decoded);
}

void write_png(const std::filesystem::path& path, const torch::Tensor& image) {
  const auto bytes = encode_png(image);
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out.flush()) {
    throw IoError("write failure on " + path.string());
  }
}

torch::Tensor read_image(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw IoError("cannot read image " + path.string() + ": no such file");
  }
  const auto decoded = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (decoded.empty()) {
    throw IoError("cannot read image " + path.string() + ": not a decodable image");
  }
  return from_mat(decoded);
}

torch::Tensor read_image(const std::filesystem::path& path, std::int64_t resolution) {
  auto img = read_image(path);
  if (img.size(1) != resolution || img.size(2) != resolution) {
    img = resize(img, resolution, resolution);
  }
  return img;
}

torch::Tensor resize(const torch::Tensor& image, std::int64_t height, std::int64_t width) {
  require_image(image);
  const auto mat = to_mat(to_uint8(image));
  cv::Mat out;
  cv::resize(mat, out, cv::Size(static_cast<int>(width), static_cast<int>(height)), 0, 0, cv::INTER_AREA);
  return from_mat(out);
}

torch::Tensor tile(const torch::Tensor& images, std::int64_t rows, std::int64_t cols) {
  if (images.dim() != 4 || images.size(0) != rows * cols) {
    throw DimensionError("tile: expected rows * cols images");
  }
  const auto c = images.size(1);
  const auto h = images.size(2);
  const auto w = images.size(3);
  return images.reshape({rows, cols, c, h, w}).permute({2, 0, 3, 1, 4}).reshape({c, rows * h, cols * w});
}

std::string base64_encode(std::string_view bytes) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (std::uint32_t(std::uint8_t(bytes[i])) << 16) |
                            (std::uint32_t(std::uint8_t(bytes[i + 1])) << 8) | std::uint8_t(bytes[i + 2]);
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back(kAlphabet[v & 63]);
  }
  const auto rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t v = std::uint32_t(std::uint8_t(bytes[i])) << 16;
    if (rest == 2) {
      v |= std::uint32_t(std::uint8_t(bytes[i + 1])) << 8;
    }
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(rest == 2 ? kAlphabet[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::string base64_decode(std::string_view text) {
  std::array<int, 256> table{};
  table.fill(-1);
  const std::string_view alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    table[static_cast<unsigned char>(alphabet[i])] = static_cast<int>(i);
  }
  std::string out;
  std::uint32_t buffer = 0;
  int bits = 0;
  for (const char ch : text) {
    if (ch == '=') {
      break;
    }
    const int v = table[static_cast<unsigned char>(ch)];
    if (v < 0) {
      throw IoError("base64: invalid character");
    }
    buffer = (buffer << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((buffer >> bits) & 0xFF));
    }
  }
  return out;
}

}  // namespace swasat::image
