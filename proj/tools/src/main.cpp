// swasat command-line tool: one subcommand per pipeline stage.

#include <algorithm>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <torch/torch.h>

#include "parse.hpp"
#include "swasat/augmentation.hpp"
#include "swasat/checkpoint.hpp"
#include "swasat/classify.hpp"
#include "swasat/datasets.hpp"
#include "swasat/editing.hpp"
#include "swasat/errors.hpp"
#include "swasat/hashing.hpp"
#include "swasat/image_io.hpp"
#include "swasat/rng.hpp"
#include "swasat/sefa.hpp"
#include "swasat/service.hpp"
#include "swasat/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int g_argc = 0;
char** g_argv = nullptr;

void write_json(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << doc.dump(2) << '\n';
  if (!out.flush()) throw swasat::IoError("cannot write " + path.string());
}

json repro(const std::string& command, json extra = json::object()) {
  return swasat::cli::repro_header(command, g_argc, g_argv, std::move(extra));
}

// ---------------------------------------------------------------- train
struct TrainArgs {
  std::string data, out, preset = "desk", resume;
  std::int64_t iterations = -1, batch = -1, checkpoint_interval = -1, w_mean_samples = -1;
  std::uint64_t seed = 0;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  swasat::GeneratorConfig g;
  swasat::TrainConfig t;
  if (a.preset == "desk") {
    g = swasat::GeneratorConfig::desk();
    t = swasat::TrainConfig::desk();
  } else if (a.preset == "paper") {
    g = swasat::GeneratorConfig::paper();
    t = swasat::TrainConfig::paper();
  } else if (a.preset == "tiny") {
    g = swasat::GeneratorConfig::tiny(16, 8, 16);
    t = swasat::TrainConfig::desk();
  } else {
    throw swasat::ConfigError("unknown preset '" + a.preset + "'");
  }
  if (a.iterations > 0) t.total_iterations = a.iterations;
  if (a.batch > 0) t.batch_size = a.batch;
  if (a.checkpoint_interval > 0) t.checkpoint_interval = a.checkpoint_interval;
  if (a.w_mean_samples > 0) t.w_mean_samples = a.w_mean_samples;
  t.seed = a.seed;
  const auto d = swasat::DiscriminatorConfig::matching(g);
  const auto dataset = swasat::data::load_dataset(a.data);
  const auto images = swasat::data::load_all(dataset, g.output_resolution).images;
  std::string data_hashes;
  for (const auto& s : dataset.samples) data_hashes += s.hash;
  write_json(fs::path(a.out) / "run.json",
             repro("train", {{"train", t}, {"generator", g}, {"discriminator", d}, {"seed", a.seed},
                             {"data_root", a.data}, {"data_hash", swasat::sha256_hex(data_hashes)},
                             {"samples", dataset.samples.size()}}));
  swasat::FitOptions opts;
  opts.out_dir = a.out;
  if (!a.resume.empty()) opts.resume_from = a.resume;
  if (!a.quiet) {
    opts.on_step = [&](const swasat::LossRecord& r) {
      if (r.step % 100 == 0 || r.step + 1 == t.total_iterations) {
        std::fprintf(stderr, "step %lld d=%.4f g=%.4f r1=%.4f pl=%.4f\n", static_cast<long long>(r.step), r.d_loss,
                     r.g_loss, r.r1, r.path_length);
      }
    };
  }
  const auto final_path = swasat::fit(t, g, d, images, opts);
  std::cout << final_path.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- sample
int run_sample(const std::string& checkpoint_file, const std::string& seeds_text, double psi, bool live,
               const std::string& out) {
  const auto seeds = swasat::cli::parse_seeds(seeds_text);
  const auto ck = swasat::load_checkpoint(checkpoint_file);
  auto g = swasat::load_generator(ck, !live);
  if (live) {
    g->update_w_mean(ck.train.value("w_mean_samples", std::int64_t{4096}));
  }
  swasat::TruncationConfig trunc;
  trunc.psi = psi;
  trunc.w_mean = g->w_mean;
  json files = json::array();
  fs::create_directories(out);
  for (const auto seed : seeds) {
    char name[48];
    std::snprintf(name, sizeof(name), "seed_%06llu.png", static_cast<unsigned long long>(seed));
    swasat::image::write_png(fs::path(out) / name, swasat::generate(g, swasat::latent_from_seed(seed, g->config().z_dim), trunc));
    files.push_back({{"seed", seed}, {"file", name}});
  }
  write_json(fs::path(out) / "sample.json",
             {{"repro", repro("sample", {{"checkpoint_hash", swasat::checkpoint_hash(ck)}, {"psi", psi}, {"seeds", seeds}, {"live", live}})},
              {"files", files}});
  return 0;
}

// ---------------------------------------------------------------- factorize
int run_factorize(const std::string& checkpoint_file, const std::string& layers, std::int64_t k, const std::string& out) {
  const auto ck = swasat::load_checkpoint(checkpoint_file);
  const auto selection = swasat::sefa::LayerSelection::parse(layers);
  auto set = swasat::sefa::factorize(swasat::sefa::collect_projection_weights(ck, selection), k);
  set.checkpoint_hash = swasat::checkpoint_hash(ck);
  set.selection = selection;
  swasat::sefa::save_directions(set, out);
  std::cout << out << '\n';
  return 0;
}

// ---------------------------------------------------------------- edit-grid
struct GridArgs {
  std::string checkpoint, directions, seeds, out;
  std::int64_t direction = 1;
  std::vector<double> alphas;
  double alpha_max = 8.0;
  std::int64_t columns = 11;
  double psi = 0.5;
};

int run_edit_grid(const GridArgs& a) {
  const auto ck = swasat::load_checkpoint(a.checkpoint);
  auto g = swasat::load_generator(ck);
  const auto dirs = swasat::sefa::load_directions(a.directions);
  if (dirs.checkpoint_hash != swasat::checkpoint_hash(ck)) {
    throw swasat::DataError("directions file was computed from a different checkpoint");
  }
  const auto alphas = a.alphas.empty() ? swasat::editing::default_alphas(a.alpha_max, a.columns) : a.alphas;
  const auto grid = swasat::editing::edit_grid(g, swasat::cli::parse_seeds(a.seeds), dirs, a.direction, alphas, a.psi);
  swasat::editing::save_grid(grid, a.out);
  for (const auto& c : grid.cells) {
    char name[48];
    std::snprintf(name, sizeof(name), "r%03lld_c%03lld.png", static_cast<long long>(c.row), static_cast<long long>(c.col));
    swasat::image::write_png(fs::path(a.out) / "cells" / name, grid.cell(c.row, c.col));
  }
  write_json(fs::path(a.out) / "repro.json",
             repro("edit-grid", {{"checkpoint_hash", grid.checkpoint_hash}, {"directions_hash", grid.directions_hash},
                                 {"alphas", alphas}, {"psi", a.psi}, {"direction_index", a.direction}}));
  return 0;
}

// ---------------------------------------------------------------- make-variant / make-toy
int run_make_variant(const std::string& data, const std::string& recipe, std::uint64_t seed, const std::string& out,
                     bool no_verify) {
  const auto dataset = swasat::data::load_dataset(data, swasat::data::LoadOptions{!no_verify});
  auto variant = swasat::data::make_imbalanced_variant(dataset, swasat::data::Recipe::named(recipe), seed);
  variant.repro = repro("make-variant", {{"recipe", variant.recipe}, {"seed", seed}, {"data_root", data}});
  swasat::data::save_manifest(variant, out);
  std::cout << out << '\n';
  return 0;
}

int run_make_toy(const swasat::data::ToyConfig& config, const std::string& out) {
  const auto ds = swasat::data::synth_toy(config, out);
  std::cout << ds.samples.size() << " images in " << out << '\n';
  return 0;
}

// ---------------------------------------------------------------- augment
struct AugmentArgs {
  std::string manifest, strategy = "all", out, checkpoint, directions, annotator, targets = "balanced";
  std::int64_t direction = 1, max_seeds = 4096;
  double alpha_step = 2.0, psi = 0.7, tau = 0.0;
  std::uint64_t seed = 0;
  bool allow_shortfall = false;
};

int run_augment(const AugmentArgs& a) {
  namespace aug = swasat::aug;
  const auto raw = swasat::data::load_manifest(a.manifest);
  const fs::path out(a.out);
  const bool want_baseline = a.strategy == "baseline" || a.strategy == "mixed" || a.strategy == "all";
  const bool want_sefa = a.strategy == "sefa" || a.strategy == "mixed" || a.strategy == "all";
  if (!want_baseline && !want_sefa) throw swasat::ConfigError("unknown strategy '" + a.strategy + "'");
  json summary{{"repro", repro("augment", {{"manifest", a.manifest}, {"seed", a.seed}, {"strategy", a.strategy}})}};
  summary["raw_train"] = raw.counts(swasat::data::Split::kTrain);

  std::optional<swasat::data::DatasetVariant> baseline, sefa;
  if (want_baseline) {
    baseline = aug::baseline_variant(raw, swasat::rng::derive_seed(a.seed, "baseline"), out);
  }
  if (want_sefa) {
    if (a.checkpoint.empty() || a.directions.empty() || a.annotator.empty()) {
      throw swasat::ConfigError("sefa augmentation needs --checkpoint, --directions and --annotator");
    }
    const auto ck = swasat::load_checkpoint(a.checkpoint);
    auto g = swasat::load_generator(ck);
    const auto dirs = swasat::sefa::load_directions(a.directions);
    if (dirs.checkpoint_hash != swasat::checkpoint_hash(ck)) {
      throw swasat::DataError("directions file was computed from a different checkpoint");
    }
    auto annotator = swasat::cls::load_classifier(a.annotator);
    if (a.targets != "balanced" && a.targets != "matched") throw swasat::ConfigError("--targets is balanced or matched");
    const auto targets =
        aug::targets_for(raw, a.targets == "matched" ? aug::TargetRule::kMatched : aug::TargetRule::kBalanced);
    const auto counts = raw.counts(swasat::data::Split::kTrain);
    std::map<std::int64_t, std::int64_t> needed;
    for (const auto& [c, t] : targets) needed[c] = t - counts[static_cast<std::size_t>(c)];
    aug::SefaPlan plan;
    plan.direction_index = a.direction;
    plan.alphas = aug::exploration_alphas(a.alpha_step);
    plan.psi = a.psi;
    plan.tau = a.tau;
    plan.max_seeds = a.max_seeds;
    auto batch = aug::collect_candidates(g, dirs, annotator, raw.classes, needed, plan);
    aug::save_batch(batch, out / "batch");
    auto result = aug::rebalance(raw, batch, targets, swasat::rng::derive_seed(a.seed, "sefa"), out, a.allow_shortfall);
    json deficit = json::object();
    for (const auto& [c, d] : result.deficit) deficit[raw.classes[static_cast<std::size_t>(c)]] = d;
    summary["sefa_deficit"] = deficit;
    summary["candidate_groups"] = batch.num_groups();
    sefa = std::move(result.variant);
  }
  const auto emit = [&](const std::string& name, const swasat::data::DatasetVariant& v) {
    swasat::data::save_manifest(v, out / (name + ".jsonl"));
    summary[name] = {{"manifest", (out / (name + ".jsonl")).string()}, {"added", aug::added_count(v)},
                     {"train", v.counts(swasat::data::Split::kTrain)}};
  };
  if (baseline && (a.strategy == "baseline" || a.strategy == "all")) emit("baseline", *baseline);
  if (sefa && (a.strategy == "sefa" || a.strategy == "all")) emit("sefa", *sefa);
  if (baseline && sefa) emit("mixed", aug::mixed_variant(raw, *baseline, *sefa));
  write_json(out / "augment.json", summary);
  std::cout << summary.dump() << '\n';
  return 0;
}

// ---------------------------------------------------------------- classify
struct ClassifyArgs {
  std::string manifest, data, out, report, backbone = "small_cnn", pretrained;
  std::int64_t epochs = -1, batch = -1, resolution = -1;
  double lr = -1.0;
  std::uint64_t seed = 0;
};

swasat::cls::FinetuneConfig finetune_config(const ClassifyArgs& a) {
  auto c = a.backbone == "resnet50" ? swasat::cls::FinetuneConfig::paper() : swasat::cls::FinetuneConfig::desk();
  c.backbone = swasat::cls::parse_backbone(a.backbone);
  if (a.epochs > 0) c.epochs = a.epochs;
  if (a.batch > 0) c.batch_size = a.batch;
  if (a.resolution > 0) c.resolution = a.resolution;
  if (a.lr > 0) c.lr = a.lr;
  c.seed = a.seed;
  c.pretrained_weights = a.pretrained;
  c.validate();
  return c;
}

int run_classify(const ClassifyArgs& a) {
  const auto config = finetune_config(a);
  if (a.manifest.empty() == a.data.empty()) {
    throw swasat::ConfigError("pass exactly one of --manifest or --data");
  }
  swasat::cls::FinetuneResult result;
  std::optional<swasat::data::DatasetVariant> variant;
  if (!a.data.empty()) {
    const auto ds = swasat::data::load_dataset(a.data);
    result = swasat::cls::finetune(config, ds.classes, swasat::data::load_all(ds, config.resolution), {});
  } else {
    variant = swasat::data::load_manifest(a.manifest);
    result = swasat::cls::finetune(config, *variant);
  }
  swasat::cls::save_classifier(result.classifier, a.out);
  json history = json::array();
  for (const auto& h : result.history) {
    history.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss},
                       {"val_accuracy", std::isnan(h.val_accuracy) ? json(nullptr) : json(h.val_accuracy)}});
  }
  json doc{{"repro", repro("classify", {{"config", config}, {"classifier_hash", swasat::cls::classifier_hash(result.classifier)}})},
           {"history", history}};
  if (variant) {
    auto report = swasat::cls::evaluate(result.classifier, *variant);
    doc["report"] = swasat::cls::to_json(report);
    std::printf("acc %.4f imbalanced %.4f +- %.4f\n", report.accuracy, report.imbalanced_mean, report.imbalanced_std);
  }
  write_json(a.report.empty() ? fs::path(a.out + ".json") : fs::path(a.report), doc);
  return 0;
}

// ---------------------------------------------------------------- report
int run_report(const std::string& matrix_file, const std::string& table_file, const ClassifyArgs& ca,
               const std::string& out, bool reference) {
  swasat::cls::ExperimentTable table;
  if (!table_file.empty()) {
    std::ifstream in(table_file);
    if (!in) throw swasat::IoError("cannot open " + table_file);
    table = swasat::cls::table_from_json(json::parse(in));
  } else if (!matrix_file.empty()) {
    std::ifstream in(matrix_file);
    if (!in) throw swasat::IoError("cannot open " + matrix_file);
    const auto doc = json::parse(in);
    std::vector<std::pair<std::string, std::map<swasat::cls::Strategy, swasat::data::DatasetVariant>>> inputs;
    const auto base = fs::path(matrix_file).parent_path();
    for (const auto& v : doc.at("variants")) {
      std::map<swasat::cls::Strategy, swasat::data::DatasetVariant> by;
      for (const auto& [name, path] : v.at("manifests").items()) {
        fs::path p = path.get<std::string>();
        if (p.is_relative()) p = base / p;
        by[swasat::cls::parse_strategy(name)] = swasat::data::load_manifest(p);
      }
      inputs.emplace_back(v.at("name").get<std::string>(), std::move(by));
    }
    table = swasat::cls::run_experiment_matrix(inputs, finetune_config(ca));
  } else {
    throw swasat::ConfigError("pass --matrix or --table");
  }
  const auto text = swasat::cls::render_table(table);
  std::cout << text;
  if (reference) {
    swasat::cls::ExperimentTable ref;
    ref.strategies = swasat::cls::all_strategies();
    for (const auto& [name, cells] : swasat::cls::reference_results()) {
      ref.variants.push_back(name);
      for (const auto& [s, c] : cells) {
        swasat::cls::EvalReport r;
        r.accuracy = c.accuracy;
        r.imbalanced_mean = c.imbalanced_mean;
        r.imbalanced_std = c.imbalanced_std;
        ref.cells.push_back({name, s, r, ""});
      }
    }
    std::cout << "\nfull-scale reference\n" << swasat::cls::render_table(ref);
  }
  if (!out.empty()) {
    fs::create_directories(out);
    auto doc = swasat::cls::to_json(table);
    doc["repro"] = repro("report", {{"matrix", matrix_file}, {"table", table_file}});
    write_json(fs::path(out) / "table.json", doc);
    std::ofstream(fs::path(out) / "table.txt") << text;
  }
  return 0;
}

// ---------------------------------------------------------------- serve
swasat::service::Service* g_service = nullptr;

void handle_signal(int) {
  if (g_service) g_service->stop();
}

int run_serve(const std::string& checkpoint, const std::string& directions, const std::string& host, int port,
              double psi) {
  swasat::service::ServiceOptions options;
  options.default_psi = psi;
  swasat::service::Service service(checkpoint, directions, options);
  g_service = &service;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  service.serve(host, port, [&](int bound) {
    std::cout << "listening on http://" << host << ":" << bound << std::endl;
  });
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  g_argc = argc;
  g_argv = argv;
  torch::set_num_threads(1);
  CLI::App app{"swasat: wavelet style generator, closed-form edit directions and augmentation tools"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file mirroring the long flags; flags on the command line win");
  std::function<int()> action;

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train the generator and critic on a class-per-folder image tree");
  train->add_option("--data", ta.data, "dataset root")->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", ta.out, "output directory")->required();
  train->add_option("--preset", ta.preset, "desk | tiny | paper")->capture_default_str();
  train->add_option("--iterations", ta.iterations);
  train->add_option("--batch-size", ta.batch);
  train->add_option("--checkpoint-interval", ta.checkpoint_interval);
  train->add_option("--w-mean-samples", ta.w_mean_samples);
  train->add_option("--seed", ta.seed)->capture_default_str();
  train->add_option("--resume", ta.resume, "checkpoint to resume from")->check(CLI::ExistingFile);
  train->add_flag("--quiet", ta.quiet);
  train->callback([&] { action = [&] { return run_train(ta); }; });

  std::string s_ck, s_seeds = "0-7", s_out;
  double s_psi = 0.5;
  bool s_live = false;
  auto* sample = app.add_subcommand("sample", "render images for a list of seeds");
  sample->add_option("--checkpoint", s_ck)->required()->check(CLI::ExistingFile);
  sample->add_option("--seeds", s_seeds, "e.g. 0,3,8-11")->capture_default_str();
  sample->add_option("--psi", s_psi, "truncation")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  sample->add_option("--out", s_out)->required();
  sample->add_flag("--live", s_live, "use the raw generator weights instead of the moving average");
  sample->callback([&] { action = [&] { return run_sample(s_ck, s_seeds, s_psi, s_live, s_out); }; });

  std::string f_ck, f_layers = "all", f_out;
  std::int64_t f_k = 10;
  auto* factorize = app.add_subcommand("factorize", "closed-form latent directions from the style projections");
  factorize->add_option("--checkpoint", f_ck)->required()->check(CLI::ExistingFile);
  factorize->add_option("--layers", f_layers, "all | coarse | middle | fine | comma-separated names")->capture_default_str();
  factorize->add_option("--k", f_k)->capture_default_str();
  factorize->add_option("--out", f_out)->required();
  factorize->callback([&] { action = [&] { return run_factorize(f_ck, f_layers, f_k, f_out); }; });

  GridArgs ga;
  auto* grid = app.add_subcommand("edit-grid", "seeds x magnitudes grid along one direction");
  grid->add_option("--checkpoint", ga.checkpoint)->required()->check(CLI::ExistingFile);
  grid->add_option("--directions", ga.directions)->required()->check(CLI::ExistingFile);
  grid->add_option("--seeds", ga.seeds)->required();
  grid->add_option("--direction", ga.direction)->capture_default_str();
  grid->add_option("--alphas", ga.alphas, "explicit magnitudes")->delimiter(',');
  grid->add_option("--alpha-max", ga.alpha_max)->capture_default_str();
  grid->add_option("--columns", ga.columns)->capture_default_str();
  grid->add_option("--psi", ga.psi)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  grid->add_option("--out", ga.out)->required();
  grid->callback([&] { action = [&] { return run_edit_grid(ga); }; });

  std::string v_data, v_recipe, v_out;
  std::uint64_t v_seed = 0;
  bool v_no_verify = false;
  auto* variant = app.add_subcommand("make-variant", "imbalanced split manifest from a named recipe");
  variant->add_option("--data", v_data)->required()->check(CLI::ExistingDirectory);
  variant->add_option("--recipe", v_recipe, "resisc70 | resisc35 | resisc10 | ucmerced | aid | toy")->required();
  variant->add_option("--seed", v_seed)->capture_default_str();
  variant->add_option("--out", v_out)->required();
  variant->add_flag("--no-verify", v_no_verify, "skip decoding every image");
  variant->callback([&] { action = [&] { return run_make_variant(v_data, v_recipe, v_seed, v_out, v_no_verify); }; });

  swasat::data::ToyConfig toy;
  std::string toy_out;
  auto* make_toy = app.add_subcommand("make-toy", "render the synthetic toy benchmark");
  make_toy->add_option("--out", toy_out)->required();
  make_toy->add_option("--classes", toy.num_classes)->capture_default_str();
  make_toy->add_option("--per-class", toy.per_class)->capture_default_str();
  make_toy->add_option("--resolution", toy.resolution)->capture_default_str();
  make_toy->add_option("--seed", toy.seed)->capture_default_str();
  make_toy->callback([&] { action = [&] { return run_make_toy(toy, toy_out); }; });

  AugmentArgs aa;
  auto* augment = app.add_subcommand("augment", "baseline and/or generated augmentation of a variant");
  augment->add_option("--manifest", aa.manifest)->required()->check(CLI::ExistingFile);
  augment->add_option("--strategy", aa.strategy, "baseline | sefa | mixed | all")->capture_default_str();
  augment->add_option("--out", aa.out)->required();
  augment->add_option("--checkpoint", aa.checkpoint)->check(CLI::ExistingFile);
  augment->add_option("--directions", aa.directions)->check(CLI::ExistingFile);
  augment->add_option("--annotator", aa.annotator)->check(CLI::ExistingFile);
  augment->add_option("--direction", aa.direction)->capture_default_str();
  augment->add_option("--alpha-step", aa.alpha_step, "magnitudes are -2a, -a, a, 2a")->capture_default_str();
  augment->add_option("--psi", aa.psi)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  augment->add_option("--tau", aa.tau, "pseudo-label confidence threshold")->capture_default_str();
  augment->add_option("--targets", aa.targets, "balanced | matched")->capture_default_str();
  augment->add_option("--max-seeds", aa.max_seeds)->capture_default_str();
  augment->add_option("--seed", aa.seed)->capture_default_str();
  augment->add_flag("--allow-shortfall", aa.allow_shortfall);
  augment->callback([&] { action = [&] { return run_augment(aa); }; });

  ClassifyArgs ca;
  const auto add_finetune_flags = [&](CLI::App* sub) {
    sub->add_option("--backbone", ca.backbone, "small_cnn | resnet50")->capture_default_str();
    sub->add_option("--pretrained", ca.pretrained, "initial backbone weights")->check(CLI::ExistingFile);
    sub->add_option("--epochs", ca.epochs);
    sub->add_option("--lr", ca.lr);
    sub->add_option("--batch-size", ca.batch);
    sub->add_option("--resolution", ca.resolution);
    sub->add_option("--seed", ca.seed)->capture_default_str();
  };
  auto* classify = app.add_subcommand("classify", "fine-tune a scene classifier (and evaluate on the test split)");
  classify->add_option("--manifest", ca.manifest)->check(CLI::ExistingFile);
  classify->add_option("--data", ca.data, "train on every image of a dataset tree")->check(CLI::ExistingDirectory);
  classify->add_option("--out", ca.out)->required();
  classify->add_option("--report", ca.report);
  add_finetune_flags(classify);
  classify->callback([&] { action = [&] { return run_classify(ca); }; });

  std::string r_matrix, r_table, r_out;
  bool r_reference = false;
  auto* report = app.add_subcommand("report", "run or render the strategy comparison table");
  report->add_option("--matrix", r_matrix, "JSON: {variants: [{name, manifests: {strategy: path}}]}")->check(CLI::ExistingFile);
  report->add_option("--table", r_table, "existing table.json to render")->check(CLI::ExistingFile);
  report->add_option("--out", r_out);
  report->add_flag("--reference", r_reference, "also print the full-scale reference values");
  add_finetune_flags(report);
  report->callback([&] { action = [&] { return run_report(r_matrix, r_table, ca, r_out, r_reference); }; });

  std::string sv_ck, sv_dirs, sv_host = "127.0.0.1";
  int sv_port = 8080;
  double sv_psi = 0.5;
  auto* serve = app.add_subcommand("serve", "HTTP API for the exploration UI");
  serve->add_option("--checkpoint", sv_ck)->required()->check(CLI::ExistingFile);
  serve->add_option("--directions", sv_dirs)->required()->check(CLI::ExistingFile);
  serve->add_option("--host", sv_host)->capture_default_str();
  serve->add_option("--port", sv_port)->capture_default_str();
  serve->add_option("--psi", sv_psi, "default truncation")->capture_default_str();
  serve->callback([&] { action = [&] { return run_serve(sv_ck, sv_dirs, sv_host, sv_port, sv_psi); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: E_USAGE: " << msg << '\n';
    return 2;
  }
  try {
    return action();
  } catch (const swasat::Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: " << e.code() << ": " << msg << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: E_INTERNAL: " << msg << '\n';
    return 1;
  }
}
