#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/types.h>

#include "swasat/classify.hpp"
#include "swasat/datasets.hpp"
#include "swasat/generator.hpp"
#include "swasat/sefa.hpp"

namespace swasat::aug {

inline constexpr std::array<int, 8> kRotationAngles{30, 60, 90, 120, 150, 210, 240, 270};

/// Counter-clockwise rotation of a square (C, H, W) image about its center.
/// Multiples of 90 degrees are exact pixel permutations; other angles use
/// bilinear sampling with reflected borders.
torch::Tensor rotate(const torch::Tensor& image, int degrees);
torch::Tensor hflip(const torch::Tensor& image);

struct BaselineOutput {
  torch::Tensor image;
  std::string op;  // "rot<deg>" or "hflip"
  int angle = 0;
};

/// Three rotations with distinct angles from kRotationAngles plus one horizontal
/// flip of the input. Throws DimensionError for non-square images.
std::vector<BaselineOutput> baseline_augment(const torch::Tensor& image, std::uint64_t seed);
/// The angle triple baseline_augment draws for a seed.
std::array<int, 3> baseline_angles(std::uint64_t seed);
/// Reapply a recorded op ("rot<deg>" or "hflip").
torch::Tensor apply_op(const torch::Tensor& image, const std::string& op);

struct Candidate {
  torch::Tensor image;  // (C, R, R) in [-1, 1]
  std::uint64_t seed = 0;
  std::int64_t member = 0;  // 0 = base, 1..4 = edits
  std::int64_t direction_index = 0;
  double alpha = 0.0;
  std::int64_t pseudo_label = -1;
  double confidence = 0.0;
  bool accepted = false;
};

struct AugmentationBatch {
  std::vector<Candidate> candidates;  // groups of five, group order = seed order
  std::string checkpoint_hash;
  std::string directions_hash;
  double psi = 1.0;
  std::string annotator_hash;
  std::vector<std::string> annotator_classes;

  std::int64_t num_groups() const { return static_cast<std::int64_t>(candidates.size()) / 5; }
  void append(AugmentationBatch other);
};

/// Symmetric exploration magnitudes {-2a, -a, a, 2a}.
std::array<double, 4> exploration_alphas(double a = 2.0);

/// One base generation plus four edits along `direction_index` per seed.
AugmentationBatch sefa_candidates(Generator& generator, const sefa::SemanticDirectionSet& directions,
                                  std::int64_t direction_index, const std::vector<std::uint64_t>& seeds,
                                  const std::array<double, 4>& alphas, double psi);

/// Label every candidate with the annotator's argmax; accepted = confidence >= tau.
/// The annotator's class list must equal target_classes.
void pseudo_label(cls::Classifier& annotator, AugmentationBatch& batch, const std::vector<std::string>& target_classes,
                  double tau = 0.0);
/// Same rule over precomputed raw scores (N, K).
void pseudo_label_scores(AugmentationBatch& batch, const torch::Tensor& scores, double tau = 0.0);

/// Per-class train targets: 5x the current count of each imbalanced class (the
/// size baseline augmentation reaches), so either strategy adds the same number.
std::map<std::int64_t, std::int64_t> matched_targets(const data::DatasetVariant& variant);
/// Per-class train targets: the balanced classes' train count.
std::map<std::int64_t, std::int64_t> balanced_targets(const data::DatasetVariant& variant);

struct RebalanceResult {
  data::DatasetVariant variant;
  std::map<std::int64_t, std::int64_t> added;
  std::map<std::int64_t, std::int64_t> deficit;  // non-empty only with allow_shortfall
};

/// Fill each under-target class from candidates pseudo-labeled with that class:
/// repeated passes over the groups, each drawing a uniform random subset of the
/// group's five members, until the target is met exactly. Added images are
/// written to out_dir; val/test records are untouched.
RebalanceResult rebalance(const data::DatasetVariant& variant, const AugmentationBatch& batch,
                          const std::map<std::int64_t, std::int64_t>& targets, std::uint64_t seed,
                          const std::filesystem::path& out_dir, bool allow_shortfall = false);

/// Adds the four baseline outputs of every train image of `classes` (default:
/// the imbalanced classes), writing them under out_dir.
data::DatasetVariant baseline_variant(const data::DatasetVariant& variant, std::uint64_t seed,
                                      const std::filesystem::path& out_dir,
                                      std::optional<std::vector<std::int64_t>> classes = std::nullopt);

/// Union: mixed = baseline additions + sefa additions on top of the raw variant.
data::DatasetVariant mixed_variant(const data::DatasetVariant& raw, const data::DatasetVariant& baseline,
                                   const data::DatasetVariant& sefa);

/// Records whose provenance is not "original".
std::int64_t added_count(const data::DatasetVariant& variant);

/// Recompute the PNG bytes of an augmented record from its origin; sefa records
/// need the generator and directions that produced them.
std::string regenerate(const data::SampleRecord& record, const data::DatasetVariant& variant,
                       Generator* generator = nullptr, const sefa::SemanticDirectionSet* directions = nullptr);

/// Persist a batch as <dir>/candidates/<seed>_<member>.png plus provenance.jsonl.
void save_batch(const AugmentationBatch& batch, const std::filesystem::path& dir);

enum class TargetRule { kBalanced, kMatched };

std::map<std::int64_t, std::int64_t> targets_for(const data::DatasetVariant& variant, TargetRule rule);

struct SefaPlan {
  std::int64_t direction_index = 1;
  std::array<double, 4> alphas = exploration_alphas();
  double psi = 1.0;
  double tau = 0.0;
  std::uint64_t first_seed = 0;
  std::int64_t chunk = 64;       // seeds generated per round
  std::int64_t max_seeds = 4096; // give up beyond this
  TargetRule targets = TargetRule::kBalanced;
};

/// Generate and label candidate groups until every class in `needed` has at
/// least that many accepted candidates, or max_seeds is reached.
AugmentationBatch collect_candidates(Generator& generator, const sefa::SemanticDirectionSet& directions,
                                     cls::Classifier& annotator, const std::vector<std::string>& target_classes,
                                     const std::map<std::int64_t, std::int64_t>& needed, const SefaPlan& plan);

struct StrategySet {
  std::map<cls::Strategy, data::DatasetVariant> variants;
  AugmentationBatch candidates;
};

/// Imbalanced (raw), baseline, sefa (plan.targets) and mixed variants of `raw`.
/// Augmented images are written under out_dir.
StrategySet strategy_variants(const data::DatasetVariant& raw, Generator& generator,
                              const sefa::SemanticDirectionSet& directions, cls::Classifier& annotator,
                              const SefaPlan& plan, std::uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace swasat::aug
