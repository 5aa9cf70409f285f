#include "parse.hpp"

#include <sstream>

#include "swasat/errors.hpp"

namespace swasat::cli {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    if (item.empty()) {
      continue;
    }
    try {
      const auto dash = item.find('-');
      if (dash == std::string::npos) {
        std::size_t used = 0;
        out.push_back(std::stoull(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } else {
        std::size_t used_a = 0;
        std::size_t used_b = 0;
        const auto a_text = item.substr(0, dash);
        const auto b_text = item.substr(dash + 1);
        const auto a = std::stoull(a_text, &used_a);
        const auto b = std::stoull(b_text, &used_b);
        if (used_a != a_text.size() || used_b != b_text.size() || b < a || b - a > 100000) {
          throw std::invalid_argument(item);
        }
        for (auto s = a; s <= b; ++s) out.push_back(s);
      }
    } catch (const std::logic_error&) {
      throw ConfigError("cannot parse seed list entry '" + item + "'");
    }
  }
  if (out.empty()) {
    throw ConfigError("seed list is empty");
  }
  return out;
}

nlohmann::json repro_header(const std::string& command, int argc, char** argv, nlohmann::json extra) {
  std::vector<std::string> args(argv, argv + argc);
  nlohmann::json header{{"tool", "swasat"}, {"command", command}, {"argv", args}};
  for (auto& [k, v] : extra.items()) {
    header[k] = v;
  }
  return header;
}

}  // namespace swasat::cli
