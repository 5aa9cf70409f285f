#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include <torch/types.h>

namespace swasat {

/// Lower-case hex SHA-256 of a byte range.
std::string sha256_hex(std::span<const std::byte> bytes);
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents. Throws IoError if the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

/// SHA-256 over a tensor's dtype, shape and contiguous raw bytes.
std::string sha256_tensor(const torch::Tensor& tensor);

}  // namespace swasat
