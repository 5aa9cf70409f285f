#include "support.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <torch/torch.h>

#include "swasat/training.hpp"

namespace fs = std::filesystem;

namespace swasat::testkit {

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = fs::temp_directory_path() / ("swasat_" + tag + "_" + std::to_string(rd()));
    if (fs::create_directories(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create temp dir");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string make_tiny_checkpoint(const fs::path& path, std::int64_t resolution, std::int64_t steps, std::uint64_t seed,
                                 std::int64_t latent_dim) {
  auto g = GeneratorConfig::tiny(resolution, 8, latent_dim);
  auto d = DiscriminatorConfig::matching(g);
  auto t = TrainConfig::desk();
  t.batch_size = 4;
  t.seed = seed;
  t.w_mean_samples = 64;
  t.total_iterations = steps;
  Trainer trainer(g, d, t);
  torch::manual_seed(seed + 1);
  const auto images = torch::rand({8, 3, resolution, resolution}) * 2 - 1;
  for (std::int64_t i = 0; i < steps; ++i) {
    trainer.step(images.slice(0, 0, 4));
  }
  const auto ck = trainer.checkpoint();
  save_checkpoint(ck, path);
  return checkpoint_hash(ck);
}

sefa::SemanticDirectionSet make_directions(const fs::path& checkpoint_file, std::int64_t k, const fs::path& out_file) {
  const auto ck = load_checkpoint(checkpoint_file);
  const auto selection = sefa::LayerSelection::parse("all");
  auto set = sefa::factorize(sefa::collect_projection_weights(ck, selection), k);
  set.checkpoint_hash = checkpoint_hash(ck);
  set.selection = selection;
  sefa::save_directions(set, out_file);
  return set;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_tree(const fs::path& root, const std::vector<std::int64_t>& counts, int side) {
  for (std::size_t c = 0; c < counts.size(); ++c) {
    char dir[32];
    std::snprintf(dir, sizeof(dir), "class_%02zu", c);
    fs::create_directories(root / dir);
    for (std::int64_t i = 0; i < counts[c]; ++i) {
      cv::Mat img(side, side, CV_8UC3, cv::Scalar(0, 0, 0));
      const std::uint64_t id = (static_cast<std::uint64_t>(c) << 32) | static_cast<std::uint64_t>(i);
      for (int b = 0; b < 8; ++b) {
        img.data[b] = static_cast<unsigned char>((id >> (8 * b)) & 0xFF);
      }
      char file[32];
      std::snprintf(file, sizeof(file), "%05lld.png", static_cast<long long>(i));
      cv::imwrite((root / dir / file).string(), img);
    }
  }
}

}  // namespace swasat::testkit
