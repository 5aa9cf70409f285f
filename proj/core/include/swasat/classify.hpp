#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/nn/module.h>
#include <torch/nn/pimpl.h>
#include <torch/types.h>

#include "swasat/datasets.hpp"

namespace swasat::cls {

enum class Backbone { kSmallCnn, kResNet50 };

std::string to_string(Backbone backbone);
Backbone parse_backbone(const std::string& text);

struct FinetuneConfig {
  Backbone backbone = Backbone::kSmallCnn;
  std::int64_t epochs = 15;
  double lr = 1e-3;
  std::int64_t batch_size = 64;
  std::int64_t resolution = 64;
  std::array<double, 3> mean{0.485, 0.456, 0.406};
  std::array<double, 3> std{0.229, 0.224, 0.225};
  std::uint64_t seed = 0;
  /// Optional initial backbone weights (ResNet-50 classification head excluded).
  std::string pretrained_weights;

  void validate() const;
  static FinetuneConfig desk();
  static FinetuneConfig paper();
};

void to_json(nlohmann::json& j, const FinetuneConfig& c);
void from_json(const nlohmann::json& j, FinetuneConfig& c);

/// Scene classifier taking images in [-1, 1]; normalization happens inside forward().
class ClassifierImpl : public torch::nn::Module {
 public:
  ClassifierImpl(FinetuneConfig config, std::vector<std::string> classes);

  torch::Tensor forward(const torch::Tensor& images);
  /// Raw class scores in eval mode, batched.
  torch::Tensor scores(const torch::Tensor& images, std::int64_t batch_size = 64);

  const FinetuneConfig& config() const { return config_; }
  const std::vector<std::string>& classes() const { return classes_; }
  std::int64_t num_classes() const { return static_cast<std::int64_t>(classes_.size()); }
  torch::nn::Module& backbone() { return *backbone_; }

 private:
  FinetuneConfig config_;
  std::vector<std::string> classes_;
  std::shared_ptr<torch::nn::Module> backbone_;
  std::function<torch::Tensor(const torch::Tensor&)> run_;
  torch::Tensor mean_, std_;
};
TORCH_MODULE(Classifier);

/// Sha256 over every named parameter and buffer.
std::string classifier_hash(const Classifier& classifier);

void save_classifier(const Classifier& classifier, const std::filesystem::path& path);
Classifier load_classifier(const std::filesystem::path& path);

struct EpochRecord {
  std::int64_t epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;  // NaN without a val split
};

struct FinetuneResult {
  Classifier classifier{nullptr};
  std::vector<EpochRecord> history;
};

/// Exactly config.epochs passes over the train split; the final-epoch weights are kept.
FinetuneResult finetune(const FinetuneConfig& config, const data::DatasetVariant& variant);
/// Same, over in-memory tensors (val may be empty).
FinetuneResult finetune(const FinetuneConfig& config, const std::vector<std::string>& classes,
                        const data::TensorSplit& train, const data::TensorSplit& val);

struct EvalReport {
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;  // NaN for classes absent from the test split
  std::vector<std::int64_t> empty_classes;
  std::vector<std::int64_t> imbalanced_classes;
  double imbalanced_mean = 0.0;
  double imbalanced_std = 0.0;  // population
  std::vector<std::vector<std::int64_t>> confusion;  // [true][predicted]
  std::vector<std::string> classes;
  std::string variant;
  std::string strategy;
  std::string test_hash;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& doc);

/// Pure arithmetic from a confusion matrix.
EvalReport report_from_confusion(const std::vector<std::vector<std::int64_t>>& confusion,
                                 const std::vector<std::int64_t>& imbalanced_classes);
/// Builds the confusion matrix from label/prediction pairs.
EvalReport report_from_predictions(const std::vector<std::int64_t>& labels, const std::vector<std::int64_t>& predictions,
                                   std::int64_t num_classes, const std::vector<std::int64_t>& imbalanced_classes);

EvalReport evaluate(Classifier& classifier, const data::DatasetVariant& variant);

enum class Strategy { kImbalanced, kBaseline, kSefa, kMixed };
std::string to_string(Strategy strategy);
Strategy parse_strategy(const std::string& text);
const std::vector<Strategy>& all_strategies();

struct ExperimentCell {
  std::string variant;
  Strategy strategy = Strategy::kImbalanced;
  std::optional<EvalReport> report;
  std::string error;  // machine code + message when the cell failed
};

struct ExperimentTable {
  std::vector<std::string> variants;
  std::vector<Strategy> strategies;
  std::vector<ExperimentCell> cells;

  const ExperimentCell* find(const std::string& variant, Strategy strategy) const;
};

nlohmann::json to_json(const ExperimentTable& table);
ExperimentTable table_from_json(const nlohmann::json& doc);

/// Fine-tune and evaluate every (variant, strategy) manifest with one shared
/// config (and therefore seed). Each variant's strategies must share a test split.
ExperimentTable run_experiment_matrix(
    const std::vector<std::pair<std::string, std::map<Strategy, data::DatasetVariant>>>& inputs,
    const FinetuneConfig& config);

/// Aligned text: one row per variant, an Acc / Imb.Acc pair per strategy; failed cells print "--".
std::string render_table(const ExperimentTable& table);

/// Full-scale reference values per variant and strategy: {acc, imbalanced mean, imbalanced std}.
struct ReferenceCell {
  double accuracy;
  double imbalanced_mean;
  double imbalanced_std;
};
const std::map<std::string, std::map<Strategy, ReferenceCell>>& reference_results();

}  // namespace swasat::cls
