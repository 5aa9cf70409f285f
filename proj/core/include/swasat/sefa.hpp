#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "swasat/checkpoint.hpp"
#include "swasat/generator.hpp"

namespace swasat::sefa {

/// Which style layers contribute rows to the projection matrix.
///   all     every synthesis conv (to-wavelet layers excluded)
///   coarse / middle / fine   synthesis convs in the first, second or last
///           third of the scale ladder (scale index l of L maps to floor(3l/L))
///   explicit  a named list, which may include to-wavelet layers
struct LayerSelection {
  enum class Kind { kAll, kCoarse, kMiddle, kFine, kExplicit };
  Kind kind = Kind::kAll;
  std::vector<std::string> names;

  /// "all", "coarse", "middle", "fine" or a comma-separated list of layer names.
  static LayerSelection parse(const std::string& text);
  std::string to_string() const;
};

/// Resolve against a generator's style layers. Throws ConfigError on an empty
/// result and NotFoundError on unknown names.
std::vector<StyleLayer> resolve(const GeneratorConfig& config, const LayerSelection& selection);

struct LayerSpan {
  std::string name;
  std::int64_t latent_row = 0;  // row of the per-layer latent this layer consumes
  std::int64_t begin = 0;       // first row in the projection matrix
  std::int64_t end = 0;         // one past the last row
};

/// Row-normalized style-projection weights stacked in layer order: (sum of
/// per-layer input channels, w_dim).
struct ProjectionMatrix {
  Eigen::MatrixXd values;
  std::vector<LayerSpan> layers;
};

ProjectionMatrix collect_projection_weights(const Generator& generator, const LayerSelection& selection);
ProjectionMatrix collect_projection_weights(const Checkpoint& checkpoint, const LayerSelection& selection);

struct SemanticDirection {
  std::int64_t index = 0;  // 1-based, eigenvalue order
  double eigenvalue = 0.0;
  Eigen::VectorXd vector;
  std::string positive_label;
  std::string negative_label;
};

struct SemanticDirectionSet {
  static constexpr int kFormatVersion = 1;

  std::string checkpoint_hash;
  LayerSelection selection;
  std::vector<LayerSpan> layers;
  std::int64_t w_dim = 0;
  std::vector<SemanticDirection> directions;
  /// Groups of 1-based indices whose eigenvalues coincide to within 1e-9 relative.
  std::vector<std::vector<std::int64_t>> eigenvalue_clusters;

  std::int64_t size() const { return static_cast<std::int64_t>(directions.size()); }
  /// Throws NotFoundError unless 1 <= index <= size().
  const SemanticDirection& at(std::int64_t index) const;
  SemanticDirection& at(std::int64_t index);
  /// Rows of the per-layer latent covered by the factorized layers.
  std::vector<std::int64_t> latent_rows() const;
  /// (w_dim, k) matrix of direction vectors as columns.
  Eigen::MatrixXd basis() const;
};

/// Top-k eigenvectors of A^T A with eigenvalues in non-increasing order. The
/// first component with magnitude above 1e-12 of every vector is positive.
SemanticDirectionSet factorize(const ProjectionMatrix& projection, std::int64_t k);

/// Plain-matrix form used by tests and benchmarks.
SemanticDirectionSet factorize(const Eigen::MatrixXd& weights, std::int64_t k);

/// Structured text (JSON) directions file.
nlohmann::json to_json(const SemanticDirectionSet& set);
SemanticDirectionSet from_json(const nlohmann::json& doc);
void save_directions(const SemanticDirectionSet& set, const std::filesystem::path& path);
SemanticDirectionSet load_directions(const std::filesystem::path& path);

}  // namespace swasat::sefa
