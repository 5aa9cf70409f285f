#include "swasat/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <ATen/CPUGeneratorImpl.h>
#include <torch/torch.h>

#include "swasat/errors.hpp"
#include "swasat/rng.hpp"

namespace swasat {
namespace {

void set_requires_grad(torch::nn::Module& module, bool flag) {
  for (auto& p : module.parameters()) {
    p.set_requires_grad(flag);
  }
}

std::vector<std::pair<std::string, torch::Tensor>> named_params(torch::nn::Module& module) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& item : module.named_parameters()) {
    out.emplace_back(item.key(), item.value());
  }
  return out;
}

torch::Tensor rng_state() {
  auto gen = at::detail::getDefaultCPUGenerator();
  std::lock_guard<std::mutex> lock(gen.mutex());
  return gen.get_state();
}

void set_rng_state(const torch::Tensor& state) {
  auto gen = at::detail::getDefaultCPUGenerator();
  std::lock_guard<std::mutex> lock(gen.mutex());
  gen.set_state(state);
}

std::string parameter_norm_summary(const torch::nn::Module& module) {
  std::ostringstream out;
  double total = 0.0;
  double largest = 0.0;
  std::string largest_name;
  for (const auto& item : module.named_parameters()) {
    const auto norm = item.value().detach().norm().item<double>();
    total += norm * norm;
    if (!(norm <= largest)) {
      largest = norm;
      largest_name = item.key();
    }
  }
  out << "total_norm=" << std::sqrt(total) << " max_norm=" << largest << " (" << largest_name << ")";
  return out.str();
}

}  // namespace

void TrainConfig::validate(bool minibatch_stddev) const {
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (minibatch_stddev && batch_size < 2) {
    throw ConfigError("train: batch_size must be >= 2 when minibatch stddev is enabled");
  }
  if (total_iterations < 0) throw ConfigError("train: total_iterations must be >= 0");
  if (!(g_lr > 0.0) || !(d_lr > 0.0)) throw ConfigError("train: learning rates must be positive");
  if (r1_gamma < 0.0 || path_length_weight < 0.0) throw ConfigError("train: regularizer weights must be >= 0");
  if (d_reg_interval < 1 || g_reg_interval < 1 || checkpoint_interval < 1) {
    throw ConfigError("train: intervals must be >= 1");
  }
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw ConfigError("train: ema_decay must lie in [0, 1)");
  if (path_batch_shrink < 1) throw ConfigError("train: path_batch_shrink must be >= 1");
  if (device_count < 1) throw ConfigError("train: device_count must be >= 1");
  if (w_mean_samples < 1) throw ConfigError("train: w_mean_samples must be >= 1");
}

TrainConfig TrainConfig::desk() { return TrainConfig{}; }

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.batch_size = 64;
  c.total_iterations = 200000;
  c.ema_decay = std::pow(0.5, 32.0 / (10.0 * 1000.0));
  c.checkpoint_interval = 10000;
  c.device_count = 4;
  return c;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"batch_size", c.batch_size},
                     {"total_iterations", c.total_iterations},
                     {"g_lr", c.g_lr},
                     {"d_lr", c.d_lr},
                     {"r1_gamma", c.r1_gamma},
                     {"d_reg_interval", c.d_reg_interval},
                     {"g_reg_interval", c.g_reg_interval},
                     {"path_length_weight", c.path_length_weight},
                     {"path_length_decay", c.path_length_decay},
                     {"path_batch_shrink", c.path_batch_shrink},
                     {"ema_decay", c.ema_decay},
                     {"seed", c.seed},
                     {"checkpoint_interval", c.checkpoint_interval},
                     {"device_count", c.device_count},
                     {"w_mean_samples", c.w_mean_samples},
                     {"noise", c.noise}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.batch_size = j.value("batch_size", d.batch_size);
  c.total_iterations = j.value("total_iterations", d.total_iterations);
  c.g_lr = j.value("g_lr", d.g_lr);
  c.d_lr = j.value("d_lr", d.d_lr);
  c.r1_gamma = j.value("r1_gamma", d.r1_gamma);
  c.d_reg_interval = j.value("d_reg_interval", d.d_reg_interval);
  c.g_reg_interval = j.value("g_reg_interval", d.g_reg_interval);
  c.path_length_weight = j.value("path_length_weight", d.path_length_weight);
  c.path_length_decay = j.value("path_length_decay", d.path_length_decay);
  c.path_batch_shrink = j.value("path_batch_shrink", d.path_batch_shrink);
  c.ema_decay = j.value("ema_decay", d.ema_decay);
  c.seed = j.value("seed", d.seed);
  c.checkpoint_interval = j.value("checkpoint_interval", d.checkpoint_interval);
  c.device_count = j.value("device_count", d.device_count);
  c.w_mean_samples = j.value("w_mean_samples", d.w_mean_samples);
  c.noise = j.value("noise", d.noise);
}

bool LossRecord::finite() const {
  return std::isfinite(d_loss) && std::isfinite(g_loss) && std::isfinite(r1) && std::isfinite(path_length) &&
         std::isfinite(real_score_mean) && std::isfinite(fake_score_mean);
}

void to_json(nlohmann::json& j, const LossRecord& r) {
  j = nlohmann::json{{"step", r.step},
                     {"d_loss", r.d_loss},
                     {"g_loss", r.g_loss},
                     {"r1", r.r1},
                     {"path_length", r.path_length},
                     {"real_score_mean", r.real_score_mean},
                     {"fake_score_mean", r.fake_score_mean}};
}

void from_json(const nlohmann::json& j, LossRecord& r) {
  r.step = j.at("step").get<std::int64_t>();
  r.d_loss = j.at("d_loss").get<double>();
  r.g_loss = j.at("g_loss").get<double>();
  r.r1 = j.at("r1").get<double>();
  r.path_length = j.at("path_length").get<double>();
  r.real_score_mean = j.at("real_score_mean").get<double>();
  r.fake_score_mean = j.at("fake_score_mean").get<double>();
}

Adam::Adam(std::vector<std::pair<std::string, torch::Tensor>> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& [name, p] : params_) {
    exp_avg_.push_back(torch::zeros_like(p, torch::MemoryFormat::Contiguous).detach());
    exp_avg_sq_.push_back(torch::zeros_like(p, torch::MemoryFormat::Contiguous).detach());
  }
}

void Adam::zero_grad() {
  for (auto& [name, p] : params_) {
    if (p.mutable_grad().defined()) {
      p.mutable_grad().detach_();
      p.mutable_grad().zero_();
    }
  }
}

void Adam::step() {
  torch::NoGradGuard no_grad;
  ++steps_;
  const auto t = static_cast<double>(steps_);
  const double bias1 = 1.0 - std::pow(beta1_, t);
  const double bias2 = 1.0 - std::pow(beta2_, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i].second;
    const auto& grad = p.grad();
    if (!grad.defined()) {
      continue;
    }
    exp_avg_[i].mul_(beta1_).add_(grad, 1.0 - beta1_);
    exp_avg_sq_[i].mul_(beta2_).addcmul_(grad, grad, 1.0 - beta2_);
    const auto denom = (exp_avg_sq_[i].sqrt() / std::sqrt(bias2)).add_(eps_);
    p.addcdiv_(exp_avg_[i], denom, -lr_ / bias1);
  }
}

void Adam::export_state(const std::string& prefix, std::map<std::string, torch::Tensor>& arrays) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    arrays[prefix + "exp_avg." + params_[i].first] = exp_avg_[i].clone();
    arrays[prefix + "exp_avg_sq." + params_[i].first] = exp_avg_sq_[i].clone();
  }
  arrays[prefix + "steps"] = torch::tensor({steps_}, torch::kInt64);
}

void Adam::import_state(const std::string& prefix, const std::map<std::string, torch::Tensor>& arrays) {
  torch::NoGradGuard no_grad;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto m = arrays.find(prefix + "exp_avg." + params_[i].first);
    const auto v = arrays.find(prefix + "exp_avg_sq." + params_[i].first);
    if (m == arrays.end() || v == arrays.end()) {
      throw IoError("checkpoint: missing optimizer state for '" + params_[i].first + "'");
    }
    exp_avg_[i].copy_(m->second);
    exp_avg_sq_[i].copy_(v->second);
  }
  const auto s = arrays.find(prefix + "steps");
  if (s == arrays.end()) {
    throw IoError("checkpoint: missing optimizer step counter");
  }
  steps_ = s->second.item<std::int64_t>();
}

void ema_update(torch::nn::Module& ema, const torch::nn::Module& live, double decay) {
  torch::NoGradGuard no_grad;
  auto ema_params = ema.named_parameters();
  const auto live_params = live.named_parameters();
  for (const auto& item : live_params) {
    auto* target = ema_params.find(item.key());
    if (target == nullptr) {
      throw DimensionError("ema_update: parameter '" + item.key() + "' missing from EMA copy");
    }
    // Two rounded products and one rounded sum, in that order.
    target->copy_(*target * decay + item.value() * (1.0 - decay));
  }
}

BatchSampler::BatchSampler(std::size_t dataset_size, std::size_t batch_size, std::uint64_t seed)
    : dataset_size_(dataset_size), batch_size_(batch_size), seed_(seed) {
  if (dataset_size == 0 || batch_size == 0) {
    throw DataError("batch sampler needs a non-empty dataset and a positive batch size");
  }
}

std::vector<std::int64_t> BatchSampler::indices(std::int64_t step) const {
  std::vector<std::int64_t> out;
  out.reserve(batch_size_);
  std::uint64_t cached_epoch = ~std::uint64_t{0};
  std::vector<std::size_t> perm;
  for (std::size_t j = 0; j < batch_size_; ++j) {
    const auto global = static_cast<std::uint64_t>(step) * batch_size_ + j;
    const auto epoch = global / dataset_size_;
    if (epoch != cached_epoch) {
      perm = rng::permutation(dataset_size_, rng::derive_seed(seed_, epoch));
      cached_epoch = epoch;
    }
    out.push_back(static_cast<std::int64_t>(perm[global % dataset_size_]));
  }
  return out;
}

Trainer::Trainer(GeneratorConfig generator, DiscriminatorConfig discriminator, TrainConfig train)
    : generator_config_(std::move(generator)),
      discriminator_config_(std::move(discriminator)),
      train_(std::move(train)) {
  discriminator_config_.validate();
  train_.validate(discriminator_config_.minibatch_stddev);
  if (generator_config_.output_resolution != discriminator_config_.input_resolution) {
    throw ConfigError("generator output and critic input resolutions differ");
  }
  torch::manual_seed(train_.seed);
  generator_ = Generator(generator_config_);
  discriminator_ = Discriminator(discriminator_config_);
  ema_ = Generator(generator_config_);
  std::map<std::string, torch::Tensor> arrays;
  export_module(*generator_, "", arrays);
  import_module(*ema_, "", arrays);
  set_requires_grad(*ema_, false);
  build_optimizers();
}

Trainer::Trainer(const Checkpoint& checkpoint)
    : generator_config_(checkpoint.generator),
      discriminator_config_(checkpoint.discriminator),
      train_(checkpoint.train.get<TrainConfig>()) {
  train_.validate(discriminator_config_.minibatch_stddev);
  generator_ = Generator(generator_config_);
  discriminator_ = Discriminator(discriminator_config_);
  ema_ = Generator(generator_config_);
  import_module(*generator_, "g.", checkpoint.arrays);
  import_module(*ema_, "g_ema.", checkpoint.arrays);
  import_module(*discriminator_, "d.", checkpoint.arrays);
  set_requires_grad(*ema_, false);
  build_optimizers();
  g_opt_->import_state("opt_g.", checkpoint.arrays);
  d_opt_->import_state("opt_d.", checkpoint.arrays);
  step_ = checkpoint.step;
  path_length_mean_ = checkpoint.path_length_mean;
  if (const auto it = checkpoint.arrays.find("rng.torch_cpu"); it != checkpoint.arrays.end()) {
    set_rng_state(it->second);
  }
  if (const auto it = checkpoint.arrays.find("train.last_regularizers"); it != checkpoint.arrays.end()) {
    last_r1_ = it->second[0].item<double>();
    last_path_length_ = it->second[1].item<double>();
  }
}

void Trainer::build_optimizers() {
  const double g_ratio = static_cast<double>(train_.g_reg_interval) / (train_.g_reg_interval + 1);
  const double d_ratio = static_cast<double>(train_.d_reg_interval) / (train_.d_reg_interval + 1);
  g_opt_ = std::make_unique<Adam>(named_params(*generator_), train_.g_lr * g_ratio, 0.0, std::pow(0.99, g_ratio));
  d_opt_ = std::make_unique<Adam>(named_params(*discriminator_), train_.d_lr * d_ratio, 0.0,
                                  std::pow(0.99, d_ratio));
}

void Trainer::check_finite(const LossRecord& record) const {
  if (record.finite()) {
    return;
  }
  std::ostringstream msg;
  msg << std::setprecision(9) << "non-finite loss at step " << record.step << ": " << nlohmann::json(record).dump()
      << "; generator " << parameter_norm_summary(*generator_) << "; critic "
      << parameter_norm_summary(*discriminator_);
  throw DivergenceError(msg.str());
}

void Trainer::discriminator_phase(const torch::Tensor& real_batch, LossRecord& record) {
  const auto batch = real_batch.size(0);
  const auto noise = train_.noise ? NoiseMode::kRandom : NoiseMode::kOff;
  set_requires_grad(*generator_, false);
  set_requires_grad(*discriminator_, true);

  torch::Tensor fake;
  {
    torch::NoGradGuard no_grad;
    const auto z = torch::randn({batch, generator_config_.z_dim});
    fake = generator_->forward(z, noise);
  }
  const auto fake_pred = discriminator_->forward(fake);
  const auto real_pred = discriminator_->forward(real_batch);
  const auto d_loss = torch::softplus(-real_pred).mean() + torch::softplus(fake_pred).mean();
  record.d_loss = d_loss.item<double>();
  record.real_score_mean = real_pred.mean().item<double>();
  record.fake_score_mean = fake_pred.mean().item<double>();
  check_finite(record);
  d_opt_->zero_grad();
  d_loss.backward();
  d_opt_->step();

  if (step_ % train_.d_reg_interval == 0) {
    auto real = real_batch.detach().clone().set_requires_grad(true);
    const auto pred = discriminator_->forward(real);
    const auto grad = torch::autograd::grad({pred.sum()}, {real}, {}, /*retain_graph=*/true,
                                            /*create_graph=*/true)[0];
    const auto r1 = grad.pow(2).reshape({batch, -1}).sum(1).mean();
    last_r1_ = r1.item<double>();
    record.r1 = last_r1_;
    check_finite(record);
    d_opt_->zero_grad();
    (r1 * (train_.r1_gamma / 2.0 * static_cast<double>(train_.d_reg_interval))).backward();
    d_opt_->step();
  }
  record.r1 = last_r1_;
}

void Trainer::generator_phase(LossRecord& record) {
  const auto batch = train_.batch_size;
  const auto noise = train_.noise ? NoiseMode::kRandom : NoiseMode::kOff;
  set_requires_grad(*generator_, true);
  set_requires_grad(*discriminator_, false);

  const auto z = torch::randn({batch, generator_config_.z_dim});
  const auto fake_pred = discriminator_->forward(generator_->forward(z, noise));
  const auto g_loss = torch::softplus(-fake_pred).mean();
  record.g_loss = g_loss.item<double>();
  check_finite(record);
  g_opt_->zero_grad();
  g_loss.backward();
  g_opt_->step();

  if (step_ % train_.g_reg_interval == 0) {
    const auto path_batch = std::max<std::int64_t>(1, batch / train_.path_batch_shrink);
    const auto pz = torch::randn({path_batch, generator_config_.z_dim});
    const auto ws = generator_->broadcast(generator_->map(pz));
    const auto images = generator_->synthesize(ws, noise);
    const auto pixels = static_cast<double>(images.size(2) * images.size(3));
    const auto probe = torch::randn_like(images) / std::sqrt(pixels);
    const auto grad = torch::autograd::grad({(images * probe).sum()}, {ws}, {}, /*retain_graph=*/true,
                                            /*create_graph=*/true)[0];
    const auto lengths = torch::sqrt(grad.pow(2).sum(2).mean(1));
    const double updated_mean =
        path_length_mean_ + train_.path_length_decay * (lengths.mean().item<double>() - path_length_mean_);
    const auto penalty = (lengths - updated_mean).pow(2).mean();
    last_path_length_ = lengths.mean().item<double>();
    record.path_length = last_path_length_;
    check_finite(record);
    g_opt_->zero_grad();
    (penalty * (train_.path_length_weight * static_cast<double>(train_.g_reg_interval))).backward();
    g_opt_->step();
    path_length_mean_ = updated_mean;
  }
  record.path_length = last_path_length_;
  set_requires_grad(*discriminator_, true);
}

LossRecord Trainer::step(const torch::Tensor& real_batch) {
  const auto r = generator_config_.output_resolution;
  if (real_batch.dim() != 4 || real_batch.size(0) != train_.batch_size ||
      real_batch.size(1) != generator_config_.image_channels || real_batch.size(2) != r || real_batch.size(3) != r) {
    std::ostringstream msg;
    msg << "train_step: expected (" << train_.batch_size << ", " << generator_config_.image_channels << ", " << r
        << ", " << r << ") batch, got " << real_batch.sizes();
    throw DimensionError(msg.str());
  }
  LossRecord record;
  record.step = step_ + 1;
  discriminator_phase(real_batch, record);
  generator_phase(record);
  ema_update(*ema_, *generator_, train_.ema_decay);
  ++step_;
  return record;
}

Checkpoint Trainer::checkpoint() {
  ema_->update_w_mean(train_.w_mean_samples);
  Checkpoint ck;
  ck.generator = generator_config_;
  ck.discriminator = discriminator_config_;
  ck.train = train_;
  ck.step = step_;
  ck.path_length_mean = path_length_mean_;
  export_module(*generator_, "g.", ck.arrays);
  export_module(*ema_, "g_ema.", ck.arrays);
  export_module(*discriminator_, "d.", ck.arrays);
  g_opt_->export_state("opt_g.", ck.arrays);
  d_opt_->export_state("opt_d.", ck.arrays);
  ck.arrays["w_mean"] = ema_->w_mean.detach().clone();
  ck.arrays["rng.torch_cpu"] = rng_state().clone();
  ck.arrays["train.last_regularizers"] = torch::tensor({last_r1_, last_path_length_}, torch::kFloat64);
  return ck;
}

MetricsLog::MetricsLog(std::filesystem::path path) : path_(std::move(path)) {}

void MetricsLog::append(const LossRecord& record) {
  std::ofstream out(path_, std::ios::app);
  if (!out) {
    throw IoError("cannot append to metrics log " + path_.string());
  }
  out << nlohmann::json(record).dump() << '\n';
  if (!out.flush()) {
    throw IoError("write failure on metrics log " + path_.string());
  }
}

void MetricsLog::truncate_after(std::int64_t step) {
  if (!std::filesystem::exists(path_)) {
    return;
  }
  auto records = read(path_);
  std::ofstream out(path_, std::ios::trunc);
  for (const auto& r : records) {
    if (r.step <= step) {
      out << nlohmann::json(r).dump() << '\n';
    }
  }
  if (!out.flush()) {
    throw IoError("write failure on metrics log " + path_.string());
  }
}

std::vector<LossRecord> MetricsLog::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot read metrics log " + path.string());
  }
  std::vector<LossRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      out.push_back(nlohmann::json::parse(line).get<LossRecord>());
    }
  }
  return out;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir, std::int64_t step) {
  std::ostringstream name;
  name << "checkpoint_" << std::setw(7) << std::setfill('0') << step << ".swck";
  return out_dir / name.str();
}

std::filesystem::path fit(const TrainConfig& train, const GeneratorConfig& generator,
                          const DiscriminatorConfig& discriminator, const torch::Tensor& images,
                          const FitOptions& options) {
  train.validate(discriminator.minibatch_stddev);
  const auto r = generator.output_resolution;
  if (images.dim() != 4 || images.size(0) == 0) {
    throw DataError("fit: dataset must be a non-empty (N, C, R, R) tensor");
  }
  if (images.size(1) != generator.image_channels || images.size(2) != r || images.size(3) != r) {
    std::ostringstream msg;
    msg << "fit: dataset resolution " << images.size(2) << "x" << images.size(3) << " does not match generator "
        << r << "x" << r;
    throw DataError(msg.str());
  }
  std::filesystem::create_directories(options.out_dir);
  const auto metrics_path = options.out_dir / "metrics.jsonl";

  std::unique_ptr<Trainer> trainer;
  MetricsLog log(metrics_path);
  if (options.resume_from) {
    trainer = std::make_unique<Trainer>(load_checkpoint(*options.resume_from));
    log.truncate_after(trainer->step_count());
  } else {
    trainer = std::make_unique<Trainer>(generator, discriminator, train);
    std::filesystem::remove(metrics_path);
  }
  const auto total = options.resume_from ? std::max(train.total_iterations, trainer->step_count())
                                         : train.total_iterations;
  const auto& active = trainer->config();
  BatchSampler sampler(static_cast<std::size_t>(images.size(0)), static_cast<std::size_t>(active.batch_size),
                       rng::derive_seed(active.seed, "batches"));

  std::int64_t last_saved = -1;
  while (trainer->step_count() < total) {
    const auto idx = sampler.indices(trainer->step_count());
    const auto batch = images.index_select(0, torch::tensor(idx, torch::kInt64));
    const auto record = trainer->step(batch);
    log.append(record);
    if (options.on_step) {
      options.on_step(record);
    }
    if (trainer->step_count() % active.checkpoint_interval == 0) {
      save_checkpoint(trainer->checkpoint(), checkpoint_path(options.out_dir, trainer->step_count()));
      last_saved = trainer->step_count();
    }
  }
  const auto final_path = checkpoint_path(options.out_dir, trainer->step_count());
  if (last_saved != trainer->step_count()) {
    save_checkpoint(trainer->checkpoint(), final_path);
  }
  return final_path;
}

double roc_auc(const std::vector<double>& positives, const std::vector<double>& negatives) {
  if (positives.empty() || negatives.empty()) {
    throw DataError("roc_auc: both score sets must be non-empty");
  }
  double wins = 0.0;
  for (const auto p : positives) {
    for (const auto n : negatives) {
      wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    }
  }
  return wins / (static_cast<double>(positives.size()) * static_cast<double>(negatives.size()));
}

double critic_auc(Discriminator& discriminator, Generator& generator, const torch::Tensor& real_images,
                  std::int64_t samples, std::uint64_t seed) {
  torch::NoGradGuard no_grad;
  const auto n = std::min<std::int64_t>(samples, real_images.size(0));
  const auto real_idx = rng::sample_without_replacement(static_cast<std::size_t>(real_images.size(0)),
                                                        static_cast<std::size_t>(n), seed);
  std::vector<std::int64_t> idx(real_idx.begin(), real_idx.end());
  const auto real = real_images.index_select(0, torch::tensor(idx, torch::kInt64));
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  const auto z = torch::randn({n, generator->config().z_dim}, gen, torch::kFloat32);
  const auto fake = generator->forward(z, NoiseMode::kOff);
  constexpr std::int64_t kChunk = 16;
  std::vector<double> pos;
  std::vector<double> neg;
  for (std::int64_t start = 0; start < n; start += kChunk) {
    const auto len = std::min(kChunk, n - start);
    const auto rp = discriminator->forward(real.narrow(0, start, len)).to(torch::kFloat64).contiguous();
    const auto fp = discriminator->forward(fake.narrow(0, start, len)).to(torch::kFloat64).contiguous();
    pos.insert(pos.end(), rp.data_ptr<double>(), rp.data_ptr<double>() + len);
    neg.insert(neg.end(), fp.data_ptr<double>(), fp.data_ptr<double>() + len);
  }
  return roc_auc(pos, neg);
}

double pairwise_diversity(const torch::Tensor& images) {
  const auto flat = images.detach().reshape({images.size(0), -1}).to(torch::kFloat64);
  const auto n = flat.size(0);
  if (n < 2) {
    throw DataError("pairwise_diversity needs at least two samples");
  }
  double total = 0.0;
  std::int64_t pairs = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      total += (flat[i] - flat[j]).abs().mean().item<double>();
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

}  // namespace swasat
