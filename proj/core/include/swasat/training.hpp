#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/types.h>

#include "swasat/checkpoint.hpp"
#include "swasat/discriminator.hpp"
#include "swasat/generator.hpp"

namespace swasat {

struct TrainConfig {
  std::int64_t batch_size = 16;
  std::int64_t total_iterations = 2000;
  double g_lr = 0.002;
  double d_lr = 0.002;
  double r1_gamma = 10.0;
  std::int64_t d_reg_interval = 16;
  std::int64_t g_reg_interval = 4;
  double path_length_weight = 2.0;
  double path_length_decay = 0.01;
  std::int64_t path_batch_shrink = 2;
  double ema_decay = 0.999;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_interval = 500;
  std::int64_t device_count = 1;
  std::int64_t w_mean_samples = 4096;
  bool noise = true;

  /// `minibatch_stddev` is the critic setting; it requires batches of at least 2.
  void validate(bool minibatch_stddev = true) const;

  static TrainConfig desk();
  /// Paper-scale record: batch 64, 200000 iterations. Validated, not run here.
  static TrainConfig paper();
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// One line of the metrics log. r1 and path_length carry the most recent
/// regularizer values between lazy-regularization steps.
struct LossRecord {
  std::int64_t step = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double r1 = 0.0;
  double path_length = 0.0;
  double real_score_mean = 0.0;
  double fake_score_mean = 0.0;

  bool finite() const;
};

void to_json(nlohmann::json& j, const LossRecord& r);
void from_json(const nlohmann::json& j, LossRecord& r);

/// Adam with bias correction whose moments can be exported to a checkpoint.
class Adam {
 public:
  Adam(std::vector<std::pair<std::string, torch::Tensor>> params, double lr, double beta1, double beta2,
       double eps = 1e-8);

  void zero_grad();
  void step();

  void export_state(const std::string& prefix, std::map<std::string, torch::Tensor>& arrays) const;
  void import_state(const std::string& prefix, const std::map<std::string, torch::Tensor>& arrays);

  std::int64_t steps() const { return steps_; }

 private:
  std::vector<std::pair<std::string, torch::Tensor>> params_;
  std::vector<torch::Tensor> exp_avg_;
  std::vector<torch::Tensor> exp_avg_sq_;
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  std::int64_t steps_ = 0;
};

/// ema <- decay * ema + (1 - decay) * live, parameter by parameter.
void ema_update(torch::nn::Module& ema, const torch::nn::Module& live, double decay);

/// Infinite shuffled sampler. The indices of a step are a pure function of
/// (seed, step): the stream is split into epochs, each with its own permutation.
class BatchSampler {
 public:
  BatchSampler(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed);
  std::vector<std::int64_t> indices(std::int64_t step) const;

 private:
  std::size_t dataset_size_;
  std::size_t batch_size_;
  std::uint64_t seed_;
};

/// Adversarial trainer owning the live generator, its EMA copy and the critic.
///
/// Losses: non-saturating logistic for both networks, lazy R1 on real images
/// every d_reg_interval steps, lazy path-length regularization every
/// g_reg_interval steps. Adam betas are adjusted for the lazy intervals.
class Trainer {
 public:
  Trainer(GeneratorConfig generator, DiscriminatorConfig discriminator, TrainConfig train);
  /// Resume from a checkpoint holding live, EMA, critic and optimizer state.
  explicit Trainer(const Checkpoint& checkpoint);

  /// Critic update then generator update then EMA; increments the step.
  LossRecord step(const torch::Tensor& real_batch);

  /// The two halves of step(); exposed so tests can observe each phase.
  void discriminator_phase(const torch::Tensor& real_batch, LossRecord& record);
  void generator_phase(LossRecord& record);

  Checkpoint checkpoint();

  Generator& generator() { return generator_; }
  Generator& ema() { return ema_; }
  Discriminator& discriminator() { return discriminator_; }
  const TrainConfig& config() const { return train_; }
  std::int64_t step_count() const { return step_; }
  double path_length_mean() const { return path_length_mean_; }

 private:
  void build_optimizers();
  void check_finite(const LossRecord& record) const;

  GeneratorConfig generator_config_;
  DiscriminatorConfig discriminator_config_;
  TrainConfig train_;
  Generator generator_{nullptr};
  Generator ema_{nullptr};
  Discriminator discriminator_{nullptr};
  std::unique_ptr<Adam> g_opt_;
  std::unique_ptr<Adam> d_opt_;
  std::int64_t step_ = 0;
  double path_length_mean_ = 0.0;
  double last_r1_ = 0.0;
  double last_path_length_ = 0.0;
};

/// Append-only newline-delimited JSON log of LossRecords.
class MetricsLog {
 public:
  explicit MetricsLog(std::filesystem::path path);
  void append(const LossRecord& record);
  /// Drop records with step > `step` (used when resuming from an older checkpoint).
  void truncate_after(std::int64_t step);
  static std::vector<LossRecord> read(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
};

struct FitOptions {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume_from;
  std::function<void(const LossRecord&)> on_step;
};

/// Checkpoint file name for a step inside an output directory.
std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir, std::int64_t step);

/// Runs train_step until total_iterations. `images` is (N, C, R, R) in [-1, 1].
/// Writes checkpoints every checkpoint_interval steps and at the end, plus
/// metrics.jsonl. Returns the final checkpoint path.
std::filesystem::path fit(const TrainConfig& train, const GeneratorConfig& generator,
                          const DiscriminatorConfig& discriminator, const torch::Tensor& images,
                          const FitOptions& options);

/// Area under the ROC curve of critic logits, real vs generated (EMA) samples.
double critic_auc(Discriminator& discriminator, Generator& generator, const torch::Tensor& real_images,
                  std::int64_t samples, std::uint64_t seed);

/// Mann-Whitney AUC of positive vs negative scores (ties count half).
double roc_auc(const std::vector<double>& positives, const std::vector<double>& negatives);

/// Mean absolute difference over all distinct pairs of a (N, ...) batch.
double pairwise_diversity(const torch::Tensor& images);

}  // namespace swasat
