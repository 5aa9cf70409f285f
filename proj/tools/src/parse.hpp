#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace swasat::cli {

/// "0,3,8-11" -> {0, 3, 8, 9, 10, 11}
std::vector<std::uint64_t> parse_seeds(const std::string& text);

/// Reproducibility header shared by every command's outputs.
nlohmann::json repro_header(const std::string& command, int argc, char** argv, nlohmann::json extra);

}  // namespace swasat::cli
