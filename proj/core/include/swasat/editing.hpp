#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/types.h>

#include "swasat/generator.hpp"
#include "swasat/sefa.hpp"

namespace swasat::editing {

/// latent + alpha * u_index on every latent row covered by the factorized
/// layers. Repeated edits along one direction accumulate alpha symbolically,
/// so edit(edit(w, i, a), i, b) == edit(w, i, a + b).
LatentW edit_latent(const LatentW& latent, const sefa::SemanticDirectionSet& directions, std::int64_t index,
                    double alpha);

/// `count` values evenly spaced over [-alpha_max, alpha_max].
std::vector<double> default_alphas(double alpha_max = 8.0, std::int64_t count = 11);

/// Hash of the canonical directions document (equals sha256 of a file written by save_directions).
std::string directions_hash(const sefa::SemanticDirectionSet& directions);

struct GridCell {
  std::int64_t row = 0;
  std::int64_t col = 0;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  std::int64_t direction_index = 0;
};

struct EditGrid {
  torch::Tensor images;  // (rows * cols, C, R, R), row-major
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<GridCell> cells;
  std::string checkpoint_hash;
  std::string directions_hash;
  double psi = 1.0;

  torch::Tensor cell(std::int64_t row, std::int64_t col) const;
  /// All cells tiled into one (C, rows * R, cols * R) image.
  torch::Tensor tiled() const;
  nlohmann::json manifest() const;
};

/// Rows are seeds, columns are alphas. Noise is off, so identical requests give identical grids.
EditGrid edit_grid(Generator& generator, const std::vector<std::uint64_t>& seeds,
                   const sefa::SemanticDirectionSet& directions, std::int64_t index, const std::vector<double>& alphas,
                   double psi);

/// Writes `<stem>.png` (tiled grid) and `<stem>.json` (manifest) into out_dir.
void save_grid(const EditGrid& grid, const std::filesystem::path& out_dir, const std::string& stem = "grid");

}  // namespace swasat::editing
