#include "swasat/classify.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <torch/torch.h>

#include "swasat/errors.hpp"
#include "swasat/hashing.hpp"
#include "swasat/rng.hpp"

namespace fs = std::filesystem;

namespace swasat::cls {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SmallCnnImpl : torch::nn::Module {
  SmallCnnImpl(std::int64_t num_classes) {
    std::int64_t in = 3;
    for (const std::int64_t out : {16, 32, 64, 128}) {
      torch::nn::Sequential block(
          torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).padding(1).bias(false)),
          torch::nn::BatchNorm2d(out), torch::nn::ReLU(), torch::nn::MaxPool2d(2));
      blocks.push_back(register_module("block" + std::to_string(blocks.size()), block));
      in = out;
    }
    head = register_module("head", torch::nn::Linear(in, num_classes));
  }
  torch::Tensor forward(const torch::Tensor& x) {
    auto h = x;
    for (auto& b : blocks) {
      h = b->forward(h);
    }
    return head->forward(h.mean({2, 3}));
  }
  std::vector<torch::nn::Sequential> blocks;
  torch::nn::Linear head{nullptr};
};
TORCH_MODULE(SmallCnn);

struct BottleneckImpl : torch::nn::Module {
  BottleneckImpl(std::int64_t in, std::int64_t planes, std::int64_t stride) {
    conv1 = register_module("conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, planes, 1).bias(false)));
    bn1 = register_module("bn1", torch::nn::BatchNorm2d(planes));
    conv2 = register_module(
        "conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(planes, planes, 3).stride(stride).padding(1).bias(false)));
    bn2 = register_module("bn2", torch::nn::BatchNorm2d(planes));
    conv3 = register_module("conv3", torch::nn::Conv2d(torch::nn::Conv2dOptions(planes, planes * 4, 1).bias(false)));
    bn3 = register_module("bn3", torch::nn::BatchNorm2d(planes * 4));
    if (stride != 1 || in != planes * 4) {
      downsample = register_module(
          "downsample",
          torch::nn::Sequential(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, planes * 4, 1).stride(stride).bias(false)),
                                torch::nn::BatchNorm2d(planes * 4)));
    }
  }
  torch::Tensor forward(const torch::Tensor& x) {
    auto h = torch::relu(bn1(conv1(x)));
    h = torch::relu(bn2(conv2(h)));
    h = bn3(conv3(h));
    return torch::relu(h + (downsample ? downsample->forward(x) : x));
  }
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr}, conv3{nullptr};
  torch::nn::BatchNorm2d bn1{nullptr}, bn2{nullptr}, bn3{nullptr};
  torch::nn::Sequential downsample{nullptr};
};
TORCH_MODULE(Bottleneck);

// Standard 50-layer bottleneck layout with torchvision parameter names.
struct ResNet50Impl : torch::nn::Module {
  ResNet50Impl(std::int64_t num_classes) {
    conv1 = register_module("conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(3, 64, 7).stride(2).padding(3).bias(false)));
    bn1 = register_module("bn1", torch::nn::BatchNorm2d(64));
    std::int64_t in = 64;
    const std::int64_t planes[4] = {64, 128, 256, 512};
    const std::int64_t depth[4] = {3, 4, 6, 3};
    for (int s = 0; s < 4; ++s) {
      torch::nn::Sequential stage;
      for (std::int64_t b = 0; b < depth[s]; ++b) {
        stage->push_back(Bottleneck(in, planes[s], (b == 0 && s > 0) ? 2 : 1));
        in = planes[s] * 4;
      }
      layers.push_back(register_module("layer" + std::to_string(s + 1), stage));
    }
    fc = register_module("fc", torch::nn::Linear(in, num_classes));
  }
  torch::Tensor forward(const torch::Tensor& x) {
    auto h = torch::relu(bn1(conv1(x)));
    h = torch::max_pool2d(h, 3, 2, 1);
    for (auto& stage : layers) {
      h = stage->forward(h);
    }
    return fc(h.mean({2, 3}));
  }
  torch::nn::Conv2d conv1{nullptr};
  torch::nn::BatchNorm2d bn1{nullptr};
  std::vector<torch::nn::Sequential> layers;
  torch::nn::Linear fc{nullptr};
};
TORCH_MODULE(ResNet50);

void load_pretrained(torch::nn::Module& backbone, const std::string& path) {
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path);
  } catch (const c10::Error& e) {
    throw IoError("cannot read pretrained weights " + path);
  }
  torch::NoGradGuard no_grad;
  std::int64_t loaded = 0;
  auto assign = [&](const std::string& name, torch::Tensor& target) {
    if (name.rfind("fc.", 0) == 0) {
      return;
    }
    torch::Tensor value;
    if (archive.try_read(name, value) && value.sizes() == target.sizes()) {
      target.copy_(value);
      ++loaded;
    }
  };
  for (auto& p : backbone.named_parameters(true)) assign(p.key(), p.value());
  for (auto& b : backbone.named_buffers(true)) assign(b.key(), b.value());
  if (loaded == 0) {
    throw DataError("pretrained weights " + path + " matched no backbone tensors");
  }
}

}  // namespace

std::string to_string(Backbone backbone) { return backbone == Backbone::kResNet50 ? "resnet50" : "small_cnn"; }

Backbone parse_backbone(const std::string& text) {
  if (text == "small_cnn") return Backbone::kSmallCnn;
  if (text == "resnet50") return Backbone::kResNet50;
  throw ConfigError("unknown backbone '" + text + "'");
}

void FinetuneConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (resolution < 16) throw ConfigError("classifier resolution must be >= 16");
  for (const auto s : std) {
    if (!(s > 0.0)) throw ConfigError("normalization std must be > 0");
  }
}

FinetuneConfig FinetuneConfig::desk() { return FinetuneConfig{}; }

FinetuneConfig FinetuneConfig::paper() {
  FinetuneConfig c;
  c.backbone = Backbone::kResNet50;
  c.epochs = 30;
  c.lr = 0.001;
  c.batch_size = 512;
  c.resolution = 256;
  return c;
}

void to_json(nlohmann::json& j, const FinetuneConfig& c) {
  j = {{"backbone", to_string(c.backbone)}, {"epochs", c.epochs},  {"lr", c.lr},
       {"batch_size", c.batch_size},        {"resolution", c.resolution}, {"mean", c.mean},
       {"std", c.std},                      {"seed", c.seed},      {"pretrained_weights", c.pretrained_weights}};
}

void from_json(const nlohmann::json& j, FinetuneConfig& c) {
  FinetuneConfig d;
  c.backbone = parse_backbone(j.value("backbone", to_string(d.backbone)));
  c.epochs = j.value("epochs", d.epochs);
  c.lr = j.value("lr", d.lr);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.resolution = j.value("resolution", d.resolution);
  c.mean = j.value("mean", d.mean);
  c.std = j.value("std", d.std);
  c.seed = j.value("seed", d.seed);
  c.pretrained_weights = j.value("pretrained_weights", d.pretrained_weights);
}

ClassifierImpl::ClassifierImpl(FinetuneConfig config, std::vector<std::string> classes)
    : config_(std::move(config)), classes_(std::move(classes)) {
  config_.validate();
  if (classes_.size() < 2) {
    throw ConfigError("a classifier needs at least two classes");
  }
  const auto n = num_classes();
  if (config_.backbone == Backbone::kResNet50) {
    auto net = ResNet50(n);
    register_module("backbone", net);
    backbone_ = net.ptr();
    run_ = [net](const torch::Tensor& x) mutable { return net->forward(x); };
  } else {
    auto net = SmallCnn(n);
    register_module("backbone", net);
    backbone_ = net.ptr();
    run_ = [net](const torch::Tensor& x) mutable { return net->forward(x); };
  }
  if (!config_.pretrained_weights.empty()) {
    load_pretrained(*backbone_, config_.pretrained_weights);
  }
  mean_ = torch::tensor(std::vector<double>(config_.mean.begin(), config_.mean.end()), torch::kFloat32).view({1, 3, 1, 1});
  std_ = torch::tensor(std::vector<double>(config_.std.begin(), config_.std.end()), torch::kFloat32).view({1, 3, 1, 1});
}

torch::Tensor ClassifierImpl::forward(const torch::Tensor& images) {
  if (images.dim() != 4 || images.size(1) != 3) {
    throw DimensionError("classifier expects (N, 3, H, W) images");
  }
  const auto unit = (images + 1.0) * 0.5;
  return run_((unit - mean_) / std_);
}

torch::Tensor ClassifierImpl::scores(const torch::Tensor& images, std::int64_t batch_size) {
  torch::NoGradGuard no_grad;
  const bool was_training = is_training();
  eval();
  std::vector<torch::Tensor> out;
  for (std::int64_t i = 0; i < images.size(0); i += batch_size) {
    out.push_back(forward(images.slice(0, i, std::min(i + batch_size, images.size(0)))));
  }
  train(was_training);
  if (out.empty()) {
    return torch::empty({0, num_classes()});
  }
  return torch::cat(out);
}

std::string classifier_hash(const Classifier& classifier) {
  std::string text;
  for (const auto& p : classifier->named_parameters(true)) {
    text += p.key() + ":" + sha256_tensor(p.value()) + "\n";
  }
  for (const auto& b : classifier->named_buffers(true)) {
    text += b.key() + ":" + sha256_tensor(b.value()) + "\n";
  }
  return sha256_hex(text);
}

void save_classifier(const Classifier& classifier, const fs::path& path) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  torch::serialize::OutputArchive archive;
  classifier->save(archive);
  nlohmann::json meta{{"config", classifier->config()}, {"classes", classifier->classes()}};
  archive.write("swasat_meta", c10::IValue(meta.dump()));
  const auto tmp = path.string() + ".tmp";
  archive.save_to(tmp);
  fs::rename(tmp, path);
}

Classifier load_classifier(const fs::path& path) {
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error&) {
    throw IoError("cannot read classifier " + path.string());
  }
  c10::IValue meta_value;
  if (!archive.try_read("swasat_meta", meta_value)) {
    throw IoError("classifier file lacks metadata: " + path.string());
  }
  const auto meta = nlohmann::json::parse(meta_value.toStringRef());
  auto config = meta.at("config").get<FinetuneConfig>();
  config.pretrained_weights.clear();
  Classifier classifier(config, meta.at("classes").get<std::vector<std::string>>());
  classifier->load(archive);
  classifier->eval();
  return classifier;
}

FinetuneResult finetune(const FinetuneConfig& config, const std::vector<std::string>& classes,
                        const data::TensorSplit& train, const data::TensorSplit& val) {
  config.validate();
  const auto n = train.images.size(0);
  if (n == 0) {
    throw DataError("train split is empty");
  }
  const auto num_classes = static_cast<std::int64_t>(classes.size());
  if (train.labels.max().item<std::int64_t>() >= num_classes || train.labels.min().item<std::int64_t>() < 0) {
    throw DataError("train labels fall outside the " + std::to_string(num_classes) + " known classes");
  }
  torch::manual_seed(config.seed);
  FinetuneResult result{Classifier(config, classes), {}};
  auto& model = result.classifier;
  torch::optim::Adam optimizer(model->parameters(), torch::optim::AdamOptions(config.lr));
  for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
    model->train();
    const auto order = rng::permutation(static_cast<std::size_t>(n),
                                        rng::derive_seed(rng::derive_seed(config.seed, "epochs"), epoch));
    const auto index = torch::tensor(std::vector<std::int64_t>(order.begin(), order.end()), torch::kInt64);
    double loss_sum = 0.0;
    for (std::int64_t i = 0; i < n; i += config.batch_size) {
      auto batch = index.slice(0, i, std::min(i + config.batch_size, n));
      if (batch.size(0) == 1 && n > 1) {
        // batch norm needs two samples; fold the straggler into the previous batch
        batch = index.slice(0, i - 1, i + 1);
      }
      const auto logits = model->forward(train.images.index_select(0, batch));
      const auto loss = torch::nn::functional::cross_entropy(logits, train.labels.index_select(0, batch));
      if (!std::isfinite(loss.item<double>())) {
        throw DivergenceError("classifier loss is not finite at epoch " + std::to_string(epoch) + ", offset " +
                              std::to_string(i));
      }
      optimizer.zero_grad();
      loss.backward();
      optimizer.step();
      loss_sum += loss.item<double>() * static_cast<double>(batch.size(0));
    }
    EpochRecord rec{epoch, loss_sum / static_cast<double>(n), kNaN};
    if (val.images.defined() && val.images.size(0) > 0) {
      const auto pred = model->scores(val.images).argmax(1);
      rec.val_accuracy = pred.eq(val.labels).to(torch::kFloat64).mean().item<double>();
    }
    result.history.push_back(rec);
  }
  model->eval();
  return result;
}

FinetuneResult finetune(const FinetuneConfig& config, const data::DatasetVariant& variant) {
  const auto train = data::load_split(variant, data::Split::kTrain, config.resolution);
  const auto val = data::load_split(variant, data::Split::kVal, config.resolution);
  return finetune(config, variant.classes, train, val);
}

EvalReport report_from_confusion(const std::vector<std::vector<std::int64_t>>& confusion,
                                 const std::vector<std::int64_t>& imbalanced_classes) {
  const auto k = confusion.size();
  EvalReport r;
  r.confusion = confusion;
  r.imbalanced_classes = imbalanced_classes;
  std::int64_t trace = 0;
  std::int64_t total = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (confusion[i].size() != k) {
      throw DimensionError("confusion matrix must be square");
    }
    std::int64_t row = 0;
    for (const auto v : confusion[i]) {
      row += v;
    }
    trace += confusion[i][i];
    total += row;
    if (row == 0) {
      r.per_class_accuracy.push_back(kNaN);
      r.empty_classes.push_back(static_cast<std::int64_t>(i));
      r.warnings.push_back("class " + std::to_string(i) + " has no test samples; excluded from per-class statistics");
    } else {
      r.per_class_accuracy.push_back(static_cast<double>(confusion[i][i]) / static_cast<double>(row));
    }
  }
  if (total == 0) {
    throw DataError("test split is empty");
  }
  r.accuracy = static_cast<double>(trace) / static_cast<double>(total);
  std::vector<double> imb;
  for (const auto c : imbalanced_classes) {
    if (c < 0 || c >= static_cast<std::int64_t>(k)) {
      throw DimensionError("imbalanced class id out of range");
    }
    if (!std::isnan(r.per_class_accuracy[static_cast<std::size_t>(c)])) {
      imb.push_back(r.per_class_accuracy[static_cast<std::size_t>(c)]);
    }
  }
  if (imb.empty()) {
    r.imbalanced_mean = kNaN;
    r.imbalanced_std = kNaN;
  } else {
    double sum = 0.0;
    for (const auto a : imb) sum += a;
    r.imbalanced_mean = sum / static_cast<double>(imb.size());
    double ss = 0.0;
    for (const auto a : imb) ss += (a - r.imbalanced_mean) * (a - r.imbalanced_mean);
    r.imbalanced_std = std::sqrt(ss / static_cast<double>(imb.size()));
  }
  return r;
}

EvalReport report_from_predictions(const std::vector<std::int64_t>& labels, const std::vector<std::int64_t>& predictions,
                                   std::int64_t num_classes, const std::vector<std::int64_t>& imbalanced_classes) {
  if (labels.size() != predictions.size()) {
    throw DimensionError("labels and predictions differ in length");
  }
  std::vector<std::vector<std::int64_t>> confusion(static_cast<std::size_t>(num_classes),
                                                   std::vector<std::int64_t>(static_cast<std::size_t>(num_classes), 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes || predictions[i] < 0 || predictions[i] >= num_classes) {
      throw DimensionError("label or prediction outside the class range");
    }
    ++confusion[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(predictions[i])];
  }
  return report_from_confusion(confusion, imbalanced_classes);
}

EvalReport evaluate(Classifier& classifier, const data::DatasetVariant& variant) {
  if (classifier->num_classes() != static_cast<std::int64_t>(variant.classes.size())) {
    throw DataError("classifier knows " + std::to_string(classifier->num_classes()) + " classes, variant has " +
                    std::to_string(variant.classes.size()));
  }
  const auto test = data::load_split(variant, data::Split::kTest, classifier->config().resolution);
  if (test.images.size(0) == 0) {
    throw DataError("test split is empty");
  }
  const auto pred = classifier->scores(test.images).argmax(1).contiguous();
  const auto lab = test.labels.contiguous();
  std::vector<std::int64_t> labels(lab.data_ptr<std::int64_t>(), lab.data_ptr<std::int64_t>() + lab.numel());
  std::vector<std::int64_t> preds(pred.data_ptr<std::int64_t>(), pred.data_ptr<std::int64_t>() + pred.numel());
  auto r = report_from_predictions(labels, preds, classifier->num_classes(), variant.imbalanced_classes);
  r.classes = variant.classes;
  r.variant = variant.name;
  r.test_hash = data::manifest_hash(variant, data::Split::kTest);
  return r;
}

namespace {
nlohmann::json nan_to_null(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }
double null_to_nan(const nlohmann::json& j) { return j.is_null() ? kNaN : j.get<double>(); }
}  // namespace

nlohmann::json to_json(const EvalReport& r) {
  auto per_class = nlohmann::json::array();
  for (const auto a : r.per_class_accuracy) per_class.push_back(nan_to_null(a));
  return {{"accuracy", r.accuracy},
          {"per_class_accuracy", per_class},
          {"empty_classes", r.empty_classes},
          {"imbalanced_classes", r.imbalanced_classes},
          {"imbalanced_mean", nan_to_null(r.imbalanced_mean)},
          {"imbalanced_std", nan_to_null(r.imbalanced_std)},
          {"confusion", r.confusion},
          {"classes", r.classes},
          {"variant", r.variant},
          {"strategy", r.strategy},
          {"test_hash", r.test_hash},
          {"warnings", r.warnings}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.accuracy = j.at("accuracy").get<double>();
  for (const auto& a : j.at("per_class_accuracy")) r.per_class_accuracy.push_back(null_to_nan(a));
  r.empty_classes = j.at("empty_classes").get<std::vector<std::int64_t>>();
  r.imbalanced_classes = j.at("imbalanced_classes").get<std::vector<std::int64_t>>();
  r.imbalanced_mean = null_to_nan(j.at("imbalanced_mean"));
  r.imbalanced_std = null_to_nan(j.at("imbalanced_std"));
  r.confusion = j.at("confusion").get<std::vector<std::vector<std::int64_t>>>();
  r.classes = j.value("classes", std::vector<std::string>{});
  r.variant = j.value("variant", "");
  r.strategy = j.value("strategy", "");
  r.test_hash = j.value("test_hash", "");
  r.warnings = j.value("warnings", std::vector<std::string>{});
  return r;
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kImbalanced: return "imbalanced";
    case Strategy::kBaseline: return "baseline";
    case Strategy::kSefa: return "sefa";
    case Strategy::kMixed: return "mixed";
  }
  return "imbalanced";
}

Strategy parse_strategy(const std::string& text) {
  for (const auto s : all_strategies()) {
    if (to_string(s) == text) return s;
  }
  throw ConfigError("unknown augmentation strategy '" + text + "'");
}

const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> all{Strategy::kImbalanced, Strategy::kBaseline, Strategy::kSefa, Strategy::kMixed};
  return all;
}

const ExperimentCell* ExperimentTable::find(const std::string& variant, Strategy strategy) const {
  for (const auto& c : cells) {
    if (c.variant == variant && c.strategy == strategy) return &c;
  }
  return nullptr;
}

nlohmann::json to_json(const ExperimentTable& t) {
  auto strategies = nlohmann::json::array();
  for (const auto s : t.strategies) strategies.push_back(to_string(s));
  auto cells = nlohmann::json::array();
  for (const auto& c : t.cells) {
    nlohmann::json cell{{"variant", c.variant}, {"strategy", to_string(c.strategy)}};
    if (c.report) {
      cell["report"] = to_json(*c.report);
    } else {
      cell["missing"] = true;
      cell["error"] = c.error;
    }
    cells.push_back(std::move(cell));
  }
  return {{"variants", t.variants}, {"strategies", strategies}, {"cells", cells}};
}

ExperimentTable table_from_json(const nlohmann::json& doc) {
  ExperimentTable t;
  t.variants = doc.at("variants").get<std::vector<std::string>>();
  for (const auto& s : doc.at("strategies")) t.strategies.push_back(parse_strategy(s.get<std::string>()));
  for (const auto& c : doc.at("cells")) {
    ExperimentCell cell;
    cell.variant = c.at("variant").get<std::string>();
    cell.strategy = parse_strategy(c.at("strategy").get<std::string>());
    if (c.contains("report")) {
      cell.report = report_from_json(c["report"]);
    } else {
      cell.error = c.value("error", "");
    }
    t.cells.push_back(std::move(cell));
  }
  return t;
}

ExperimentTable run_experiment_matrix(
    const std::vector<std::pair<std::string, std::map<Strategy, data::DatasetVariant>>>& inputs,
    const FinetuneConfig& config) {
  ExperimentTable table;
  table.strategies = all_strategies();
  for (const auto& [name, by_strategy] : inputs) {
    table.variants.push_back(name);
    std::optional<std::string> test_hash;
    for (const auto& [strategy, variant] : by_strategy) {
      const auto h = data::manifest_hash(variant, data::Split::kTest);
      if (test_hash && *test_hash != h) {
        throw DataError("variant " + name + ": strategies disagree on the test split");
      }
      test_hash = h;
    }
    for (const auto strategy : table.strategies) {
      ExperimentCell cell{name, strategy, std::nullopt, ""};
      const auto it = by_strategy.find(strategy);
      if (it == by_strategy.end()) {
        cell.error = "E_NOT_FOUND: no manifest for this strategy";
      } else {
        try {
          auto model = finetune(config, it->second).classifier;
          auto report = evaluate(model, it->second);
          report.variant = name;
          report.strategy = to_string(strategy);
          cell.report = std::move(report);
        } catch (const Error& e) {
          cell.error = e.code() + ": " + e.what();
        }
      }
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

std::string render_table(const ExperimentTable& table) {
  std::ostringstream out;
  std::size_t name_width = 16;
  for (const auto& v : table.variants) name_width = std::max(name_width, v.size() + 2);
  constexpr int kAcc = 8;
  constexpr int kImb = 16;
  out << std::left << std::setw(static_cast<int>(name_width)) << "";
  for (const auto s : table.strategies) out << "| " << std::setw(kAcc + kImb) << to_string(s);
  out << "\n" << std::setw(static_cast<int>(name_width)) << "variant";
  for (std::size_t i = 0; i < table.strategies.size(); ++i) {
    out << "| " << std::setw(kAcc) << "Acc" << std::setw(kImb) << "Imb.Acc";
  }
  out << "\n";
  for (const auto& v : table.variants) {
    out << std::setw(static_cast<int>(name_width)) << v;
    for (const auto s : table.strategies) {
      const auto* cell = table.find(v, s);
      std::ostringstream acc;
      std::ostringstream imb;
      if (cell && cell->report) {
        acc << std::fixed << std::setprecision(3) << cell->report->accuracy;
        if (std::isnan(cell->report->imbalanced_mean)) {
          imb << "n/a";
        } else {
          imb << std::fixed << std::setprecision(3) << cell->report->imbalanced_mean << "+-"
              << cell->report->imbalanced_std;
        }
      } else {
        acc << "--";
        imb << "--";
      }
      out << "| " << std::setw(kAcc) << acc.str() << std::setw(kImb) << imb.str();
    }
    out << "\n";
  }
  return out.str();
}

const std::map<std::string, std::map<Strategy, ReferenceCell>>& reference_results() {
  using S = Strategy;
  static const std::map<std::string, std::map<Strategy, ReferenceCell>> table{
      {"resisc70",
       {{S::kImbalanced, {0.827, 0.638, 0.191}}, {S::kBaseline, {0.835, 0.674, 0.218}},
        {S::kSefa, {0.836, 0.694, 0.166}}, {S::kMixed, {0.842, 0.760, 0.128}}}},
      {"resisc35",
       {{S::kImbalanced, {0.804, 0.463, 0.242}}, {S::kBaseline, {0.829, 0.629, 0.189}},
        {S::kSefa, {0.821, 0.561, 0.214}}, {S::kMixed, {0.833, 0.673, 0.137}}}},
      {"resisc10",
       {{S::kImbalanced, {0.776, 0.235, 0.230}}, {S::kBaseline, {0.764, 0.270, 0.256}},
        {S::kSefa, {0.786, 0.370, 0.248}}, {S::kMixed, {0.808, 0.494, 0.222}}}},
      {"ucmerced",
       {{S::kImbalanced, {0.776, 0.420, 0.286}}, {S::kBaseline, {0.810, 0.580, 0.319}},
        {S::kSefa, {0.814, 0.600, 0.303}}, {S::kMixed, {0.819, 0.660, 0.356}}}},
      {"aid",
       {{S::kImbalanced, {0.716, 0.425, 0.269}}, {S::kBaseline, {0.766, 0.668, 0.275}},
        {S::kSefa, {0.767, 0.629, 0.258}}, {S::kMixed, {0.783, 0.732, 0.176}}}},
  };
  return table;
}

}  // namespace swasat::cls
