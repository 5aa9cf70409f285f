#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "swasat/checkpoint.hpp"
#include "swasat/generator.hpp"
#include "swasat/sefa.hpp"

namespace swasat::testkit {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& child) const { return path_ / child; }

 private:
  std::filesystem::path path_;
};

/// A few training steps of a tiny model on random images, saved to `path`.
/// Returns the checkpoint hash.
std::string make_tiny_checkpoint(const std::filesystem::path& path, std::int64_t resolution = 16,
                                 std::int64_t steps = 2, std::uint64_t seed = 7,
                                 std::int64_t latent_dim = 8);

/// Directions file for a checkpoint (selection "all", k directions).
sefa::SemanticDirectionSet make_directions(const std::filesystem::path& checkpoint_file, std::int64_t k,
                                           const std::filesystem::path& out_file);

std::string read_file(const std::filesystem::path& path);

/// Class-per-folder tree of small PNGs with pairwise distinct content.
/// counts[c] images go to class_XX; directory names sort in class order.
void write_tree(const std::filesystem::path& root, const std::vector<std::int64_t>& counts, int side = 4);

}  // namespace swasat::testkit
