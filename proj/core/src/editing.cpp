#include "swasat/editing.hpp"

#include <cmath>
#include <fstream>

#include <torch/torch.h>

#include "swasat/errors.hpp"
#include "swasat/hashing.hpp"
#include "swasat/image_io.hpp"

namespace swasat::editing {

LatentW edit_latent(const LatentW& latent, const sefa::SemanticDirectionSet& directions, std::int64_t index,
                    double alpha) {
  if (!std::isfinite(alpha)) {
    throw ConfigError("edit magnitude must be finite");
  }
  const auto& dir = directions.at(index);
  if (!latent.base.defined() || latent.base.dim() != 2) {
    throw DimensionError("edit_latent expects a (layers, w_dim) latent");
  }
  if (latent.base.size(1) != dir.vector.size()) {
    throw DimensionError("edit_latent: latent width " + std::to_string(latent.base.size(1)) +
                         " does not match direction length " + std::to_string(dir.vector.size()));
  }
  const auto rows = directions.latent_rows();
  for (const auto r : rows) {
    if (r < 0 || r >= latent.base.size(0)) {
      throw DimensionError("edit_latent: direction covers latent row " + std::to_string(r) +
                           " which the latent does not have");
    }
  }
  LatentW out = latent;
  const auto key = directions.checkpoint_hash + ":" + directions.selection.to_string() + ":" + std::to_string(index);
  for (auto& offset : out.offsets) {
    if (offset.key == key) {
      offset.alpha += alpha;
      return out;
    }
  }
  auto vec = torch::from_blob(const_cast<double*>(dir.vector.data()), {dir.vector.size()}, torch::kFloat64).clone();
  out.offsets.push_back(LatentOffset{key, vec, rows, alpha});
  return out;
}

std::vector<double> default_alphas(double alpha_max, std::int64_t count) {
  if (count < 1 || !(alpha_max >= 0.0)) {
    throw ConfigError("alpha sweep needs count >= 1 and alpha_max >= 0");
  }
  if (count == 1) {
    return {0.0};
  }
  // mirrored, so alpha and -alpha render as an exact pair
  std::vector<double> out(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < (count + 1) / 2; ++i) {
    const double v = alpha_max * static_cast<double>(count - 1 - 2 * i) / static_cast<double>(count - 1);
    out[static_cast<std::size_t>(i)] = -v;
    out[static_cast<std::size_t>(count - 1 - i)] = v;
  }
  if (count % 2 == 1) {
    out[static_cast<std::size_t>(count / 2)] = 0.0;
  }
  return out;
}

std::string directions_hash(const sefa::SemanticDirectionSet& directions) {
  return sha256_hex(sefa::to_json(directions).dump(2) + "\n");
}

torch::Tensor EditGrid::cell(std::int64_t row, std::int64_t col) const {
  if (row < 0 || row >= rows || col < 0 || col >= cols) {
    throw NotFoundError("grid cell out of range");
  }
  return images[row * cols + col];
}

torch::Tensor EditGrid::tiled() const { return image::tile(images, rows, cols); }

nlohmann::json EditGrid::manifest() const {
  nlohmann::json doc;
  doc["checkpoint_hash"] = checkpoint_hash;
  doc["directions_hash"] = directions_hash;
  doc["psi"] = psi;
  doc["rows"] = rows;
  doc["cols"] = cols;
  auto arr = nlohmann::json::array();
  for (const auto& c : cells) {
    arr.push_back({{"row", c.row}, {"col", c.col}, {"seed", c.seed}, {"alpha", c.alpha},
                   {"direction_index", c.direction_index}});
  }
  doc["cells"] = arr;
  return doc;
}

EditGrid edit_grid(Generator& generator, const std::vector<std::uint64_t>& seeds,
                   const sefa::SemanticDirectionSet& directions, std::int64_t index, const std::vector<double>& alphas,
                   double psi) {
  if (seeds.empty() || alphas.empty()) {
    throw ConfigError("edit grid needs at least one seed and one alpha");
  }
  directions.at(index);
  torch::NoGradGuard no_grad;
  TruncationConfig trunc;
  trunc.psi = psi;
  trunc.w_mean = generator->w_mean;

  EditGrid grid;
  grid.rows = static_cast<std::int64_t>(seeds.size());
  grid.cols = static_cast<std::int64_t>(alphas.size());
  grid.checkpoint_hash = directions.checkpoint_hash;
  grid.directions_hash = directions_hash(directions);
  grid.psi = psi;
  std::vector<torch::Tensor> images;
  for (std::size_t r = 0; r < seeds.size(); ++r) {
    const auto base = mapped_latent(generator, seeds[r], trunc);
    for (std::size_t c = 0; c < alphas.size(); ++c) {
      images.push_back(render(generator, edit_latent(base, directions, index, alphas[c])));
      grid.cells.push_back(GridCell{static_cast<std::int64_t>(r), static_cast<std::int64_t>(c), seeds[r], alphas[c],
                                    index});
    }
  }
  grid.images = torch::stack(images);
  return grid;
}

void save_grid(const EditGrid& grid, const std::filesystem::path& out_dir, const std::string& stem) {
  std::filesystem::create_directories(out_dir);
  image::write_png(out_dir / (stem + ".png"), grid.tiled());
  std::ofstream out(out_dir / (stem + ".json"), std::ios::trunc);
  out << grid.manifest().dump(2) << '\n';
  if (!out.flush()) {
    throw IoError("cannot write grid manifest in " + out_dir.string());
  }
}

}  // namespace swasat::editing
