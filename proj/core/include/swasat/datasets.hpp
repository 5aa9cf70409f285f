#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/types.h>

namespace swasat::data {

enum class Split { kTrain, kVal, kTest };
enum class Provenance { kOriginal, kBaselineAug, kSefaAug };

std::string to_string(Split split);
Split parse_split(const std::string& text);
std::string to_string(Provenance provenance);
Provenance parse_provenance(const std::string& text);

struct SampleRecord {
  std::string path;  // relative to the dataset root, or absolute for generated samples
  std::string class_name;
  std::int64_t class_id = 0;
  Split split = Split::kTrain;
  Provenance provenance = Provenance::kOriginal;
  std::string hash;  // sha256 of the file bytes
  /// Augmentation details (source hash and operation, or seed/alpha/direction/annotator).
  nlohmann::json origin;
};

/// Class-per-folder image collection.
struct Dataset {
  std::filesystem::path root;
  std::vector<std::string> classes;  // sorted; index = class id
  std::vector<SampleRecord> samples; // grouped by class, lexicographic within a class

  std::vector<std::size_t> indices_of(std::int64_t class_id) const;
};

struct LoadOptions {
  bool verify_images = true;  // decode every file once
};

/// Every subdirectory of root is a class; files inside it are samples.
/// Throws DataError naming the class when a class directory is empty and
/// IoError naming the path when a file is not a readable image.
Dataset load_dataset(const std::filesystem::path& root, const LoadOptions& options = {});

struct SplitCounts {
  std::int64_t train = 0;
  std::int64_t val = 0;
  std::int64_t test = 0;

  std::int64_t total() const { return train + val + test; }
  bool operator==(const SplitCounts&) const = default;
};

struct Recipe {
  std::string name;
  std::int64_t num_imbalanced = 0;
  SplitCounts balanced;
  SplitCounts imbalanced;

  void validate() const;
  /// resisc70, resisc35, resisc10, ucmerced, aid, toy
  static Recipe named(const std::string& name);
  static std::vector<std::string> names();
};

void to_json(nlohmann::json& j, const Recipe& r);
void from_json(const nlohmann::json& j, Recipe& r);

struct DatasetVariant {
  std::string name;
  std::string parent;  // dataset root as given
  std::filesystem::path root;
  Recipe recipe;
  std::uint64_t seed = 0;
  std::vector<std::string> classes;
  std::vector<std::int64_t> imbalanced_classes;  // sorted ids
  std::vector<SampleRecord> records;
  nlohmann::json repro;  // free-form reproducibility header

  std::vector<const SampleRecord*> split(Split split) const;
  /// Per-class counts of one split, indexed by class id.
  std::vector<std::int64_t> counts(Split split) const;
  bool is_imbalanced(std::int64_t class_id) const;
  std::filesystem::path resolve(const SampleRecord& record) const;
  /// Throws DataError on duplicate hashes or a hash present in two splits.
  void validate() const;
};

/// Pure function of (dataset, recipe, seed). Imbalanced classes are drawn from
/// the classes holding at least recipe.balanced.total() samples; each class is
/// split test, val, train from its own seeded permutation so the class draw and
/// the per-class subsets use independent streams.
DatasetVariant make_imbalanced_variant(const Dataset& dataset, const Recipe& recipe, std::uint64_t seed);

/// Header line followed by one record per line.
void save_manifest(const DatasetVariant& variant, const std::filesystem::path& path);
DatasetVariant load_manifest(const std::filesystem::path& path);
std::string manifest_hash(const DatasetVariant& variant, Split split);

struct ToyConfig {
  std::int64_t num_classes = 5;
  std::int64_t per_class = 20;
  std::int64_t resolution = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Render the toy benchmark into out_root/<class>/<index>.png. Class k carries
/// more gray structures (rectangles and lines) than class k - 1, so the
/// gray-pixel fraction rises with the class index. The ground hue is drawn
/// from a per-class sector of the color wheel.
Dataset synth_toy(const ToyConfig& config, const std::filesystem::path& out_root);

/// Fraction of near-gray pixels of an 8-bit (H, W, 3) image: the structure measure of synth_toy.
double structure_fraction(const torch::Tensor& pixels);

/// Stack the images of a split: images (N, C, R, R) in [-1, 1], labels (N) int64.
struct TensorSplit {
  torch::Tensor images;
  torch::Tensor labels;
};
TensorSplit load_split(const DatasetVariant& variant, Split split, std::int64_t resolution);
/// All samples of a dataset (used for GAN training and the annotator).
TensorSplit load_all(const Dataset& dataset, std::int64_t resolution);

}  // namespace swasat::data
