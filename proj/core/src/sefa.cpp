#include "swasat/sefa.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <torch/torch.h>

#include "swasat/errors.hpp"

namespace swasat::sefa {
namespace {

constexpr double kClusterTolerance = 1e-9;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, sep)) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first != std::string::npos) {
      out.push_back(item.substr(first, last - first + 1));
    }
  }
  return out;
}

Eigen::MatrixXd to_eigen(const torch::Tensor& t) {
  const auto d = t.detach().to(torch::kFloat64).contiguous();
  Eigen::MatrixXd out(d.size(0), d.size(1));
  const auto* p = d.data_ptr<double>();
  for (std::int64_t r = 0; r < d.size(0); ++r) {
    for (std::int64_t c = 0; c < d.size(1); ++c) {
      out(r, c) = p[r * d.size(1) + c];
    }
  }
  return out;
}

}  // namespace

LayerSelection LayerSelection::parse(const std::string& text) {
  LayerSelection s;
  if (text == "all") {
    s.kind = Kind::kAll;
  } else if (text == "coarse") {
    s.kind = Kind::kCoarse;
  } else if (text == "middle") {
    s.kind = Kind::kMiddle;
  } else if (text == "fine") {
    s.kind = Kind::kFine;
  } else {
    s.kind = Kind::kExplicit;
    s.names = split(text, ',');
    if (s.names.empty()) {
      throw ConfigError("layer selection is empty");
    }
  }
  return s;
}

std::string LayerSelection::to_string() const {
  switch (kind) {
    case Kind::kAll: return "all";
    case Kind::kCoarse: return "coarse";
    case Kind::kMiddle: return "middle";
    case Kind::kFine: return "fine";
    case Kind::kExplicit: break;
  }
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    out += (i ? "," : "") + names[i];
  }
  return out;
}

std::vector<StyleLayer> resolve(const GeneratorConfig& config, const LayerSelection& selection) {
  const auto layers = style_layers(config);
  std::vector<StyleLayer> out;
  if (selection.kind == LayerSelection::Kind::kExplicit) {
    std::set<std::string> seen;
    for (const auto& name : selection.names) {
      const auto it = std::find_if(layers.begin(), layers.end(), [&](const StyleLayer& l) { return l.name == name; });
      if (it == layers.end()) {
        throw NotFoundError("unknown style layer '" + name + "'");
      }
      if (seen.insert(name).second) {
        out.push_back(*it);
      }
    }
    std::sort(out.begin(), out.end(), [](const StyleLayer& a, const StyleLayer& b) { return a.row < b.row; });
  } else {
    const auto resolutions = config.band_resolutions();
    const auto num_scales = static_cast<std::int64_t>(resolutions.size());
    for (const auto& layer : layers) {
      if (layer.kind != StyleLayerKind::kConv) {
        continue;
      }
      const auto scale = std::find(resolutions.begin(), resolutions.end(), layer.band_resolution) - resolutions.begin();
      const auto group = 3 * scale / num_scales;
      const bool keep = selection.kind == LayerSelection::Kind::kAll ||
                        (selection.kind == LayerSelection::Kind::kCoarse && group == 0) ||
                        (selection.kind == LayerSelection::Kind::kMiddle && group == 1) ||
                        (selection.kind == LayerSelection::Kind::kFine && group == 2);
      if (keep) {
        out.push_back(layer);
      }
    }
  }
  if (out.empty()) {
    throw ConfigError("layer selection '" + selection.to_string() + "' matches no style layers");
  }
  return out;
}

ProjectionMatrix collect_projection_weights(const Generator& generator, const LayerSelection& selection) {
  const auto layers = resolve(generator->config(), selection);
  ProjectionMatrix out;
  std::vector<Eigen::MatrixXd> blocks;
  std::int64_t rows = 0;
  for (const auto& layer : layers) {
    auto weight = to_eigen(generator->modulated_conv(layer.name)->modulation->weight);
    if (!weight.allFinite()) {
      throw DataError("style projection of layer '" + layer.name + "' is not finite");
    }
    for (Eigen::Index r = 0; r < weight.rows(); ++r) {
      const double norm = weight.row(r).norm();
      if (norm > 0.0) {
        weight.row(r) /= norm;
      }
    }
    out.layers.push_back(LayerSpan{layer.name, layer.row, rows, rows + weight.rows()});
    rows += weight.rows();
    blocks.push_back(std::move(weight));
  }
  out.values.resize(rows, generator->config().w_dim);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    out.values.middleRows(out.layers[i].begin, blocks[i].rows()) = blocks[i];
  }
  return out;
}

ProjectionMatrix collect_projection_weights(const Checkpoint& checkpoint, const LayerSelection& selection) {
  return collect_projection_weights(load_generator(checkpoint), selection);
}

const SemanticDirection& SemanticDirectionSet::at(std::int64_t index) const {
  if (index < 1 || index > size()) {
    throw NotFoundError("direction " + std::to_string(index) + " is outside 1.." + std::to_string(size()));
  }
  return directions[static_cast<std::size_t>(index - 1)];
}

SemanticDirection& SemanticDirectionSet::at(std::int64_t index) {
  return const_cast<SemanticDirection&>(std::as_const(*this).at(index));
}

std::vector<std::int64_t> SemanticDirectionSet::latent_rows() const {
  std::vector<std::int64_t> rows;
  for (const auto& layer : layers) {
    rows.push_back(layer.latent_row);
  }
  return rows;
}

Eigen::MatrixXd SemanticDirectionSet::basis() const {
  Eigen::MatrixXd out(w_dim, size());
  for (std::int64_t i = 0; i < size(); ++i) {
    out.col(i) = directions[static_cast<std::size_t>(i)].vector;
  }
  return out;
}

SemanticDirectionSet factorize(const Eigen::MatrixXd& weights, std::int64_t k) {
  const auto w_dim = static_cast<std::int64_t>(weights.cols());
  if (k < 1 || k > w_dim) {
    throw ConfigError("factorize: k must lie in 1.." + std::to_string(w_dim) + ", got " + std::to_string(k));
  }
  if (weights.rows() == 0 || !weights.allFinite()) {
    throw DataError("factorize: projection matrix is empty or not finite");
  }
  const Eigen::MatrixXd gram = weights.transpose() * weights;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) {
    throw DataError("factorize: eigendecomposition did not converge");
  }
  // Eigen returns ascending eigenvalues.
  SemanticDirectionSet out;
  out.w_dim = w_dim;
  for (std::int64_t i = 0; i < k; ++i) {
    const auto col = w_dim - 1 - i;
    SemanticDirection dir;
    dir.index = i + 1;
    dir.eigenvalue = std::max(0.0, solver.eigenvalues()(col));
    dir.vector = solver.eigenvectors().col(col).normalized();
    for (Eigen::Index j = 0; j < dir.vector.size(); ++j) {
      if (std::abs(dir.vector(j)) > 1e-12) {
        if (dir.vector(j) < 0.0) {
          dir.vector = -dir.vector;
        }
        break;
      }
    }
    out.directions.push_back(std::move(dir));
  }
  for (const auto& dir : out.directions) {
    const bool joins = !out.eigenvalue_clusters.empty() &&
                       std::abs(out.at(out.eigenvalue_clusters.back().front()).eigenvalue - dir.eigenvalue) <=
                           kClusterTolerance * std::max(1.0, dir.eigenvalue);
    if (joins) {
      out.eigenvalue_clusters.back().push_back(dir.index);
    } else {
      out.eigenvalue_clusters.push_back({dir.index});
    }
  }
  return out;
}

SemanticDirectionSet factorize(const ProjectionMatrix& projection, std::int64_t k) {
  auto out = factorize(projection.values, k);
  out.layers = projection.layers;
  return out;
}

nlohmann::json to_json(const SemanticDirectionSet& set) {
  nlohmann::json doc;
  doc["format_version"] = SemanticDirectionSet::kFormatVersion;
  doc["checkpoint_hash"] = set.checkpoint_hash;
  doc["layer_selection"] = set.selection.to_string();
  doc["w_dim"] = set.w_dim;
  auto layers = nlohmann::json::array();
  for (const auto& l : set.layers) {
    layers.push_back({{"name", l.name}, {"latent_row", l.latent_row}, {"begin", l.begin}, {"end", l.end}});
  }
  doc["layers"] = layers;
  doc["eigenvalue_clusters"] = set.eigenvalue_clusters;
  auto dirs = nlohmann::json::array();
  for (const auto& d : set.directions) {
    std::vector<double> v(d.vector.data(), d.vector.data() + d.vector.size());
    nlohmann::json entry{{"index", d.index}, {"eigenvalue", d.eigenvalue}, {"vector", v}};
    if (!d.positive_label.empty() || !d.negative_label.empty()) {
      entry["label"] = {{"positive", d.positive_label}, {"negative", d.negative_label}};
    }
    dirs.push_back(std::move(entry));
  }
  doc["directions"] = dirs;
  return doc;
}

SemanticDirectionSet from_json(const nlohmann::json& doc) {
  if (doc.at("format_version").get<int>() != SemanticDirectionSet::kFormatVersion) {
    throw IoError("directions file: unsupported format version");
  }
  SemanticDirectionSet set;
  set.checkpoint_hash = doc.at("checkpoint_hash").get<std::string>();
  set.selection = LayerSelection::parse(doc.at("layer_selection").get<std::string>());
  set.w_dim = doc.at("w_dim").get<std::int64_t>();
  for (const auto& l : doc.at("layers")) {
    set.layers.push_back(LayerSpan{l.at("name").get<std::string>(), l.at("latent_row").get<std::int64_t>(),
                                   l.at("begin").get<std::int64_t>(), l.at("end").get<std::int64_t>()});
  }
  set.eigenvalue_clusters = doc.value("eigenvalue_clusters", std::vector<std::vector<std::int64_t>>{});
  for (const auto& d : doc.at("directions")) {
    SemanticDirection dir;
    dir.index = d.at("index").get<std::int64_t>();
    dir.eigenvalue = d.at("eigenvalue").get<double>();
    const auto v = d.at("vector").get<std::vector<double>>();
    if (static_cast<std::int64_t>(v.size()) != set.w_dim) {
      throw IoError("directions file: vector " + std::to_string(dir.index) + " has wrong length");
    }
    dir.vector = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    if (d.contains("label")) {
      dir.positive_label = d["label"].value("positive", "");
      dir.negative_label = d["label"].value("negative", "");
    }
    if (dir.index != static_cast<std::int64_t>(set.directions.size()) + 1) {
      throw IoError("directions file: indices must be 1..k in order");
    }
    set.directions.push_back(std::move(dir));
  }
  return set;
}

void save_directions(const SemanticDirectionSet& set, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << to_json(set).dump(2) << '\n';
  if (!out.flush()) {
    throw IoError("write failure on " + path.string());
  }
}

SemanticDirectionSet load_directions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open directions file " + path.string());
  }
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed directions file " + path.string() + ": " + e.what());
  }
}

}  // namespace swasat::sefa
