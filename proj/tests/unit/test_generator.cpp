#include <gtest/gtest.h>
#include <torch/torch.h>

#include "swasat/errors.hpp"
#include "swasat/generator.hpp"

using namespace swasat;

namespace {

Generator tiny_generator(std::int64_t res = 16, std::uint64_t seed = 3) {
  torch::manual_seed(seed);
  Generator g(GeneratorConfig::tiny(res, 8, 8));
  g->eval();
  g->update_w_mean(256);
  return g;
}

}  // namespace

TEST(GeneratorConfig, DeskLayerTable) {
  const auto cfg = GeneratorConfig::desk();
  EXPECT_EQ(cfg.band_resolutions(), (std::vector<std::int64_t>{4, 8, 16, 32}));
  const auto layers = style_layers(cfg);
  ASSERT_EQ(layers.size(), 11u);
  EXPECT_EQ(layers.front().name, "conv_b4");
  EXPECT_EQ(layers.back().name, "to_wavelet_b32");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    EXPECT_EQ(layers[i].row, static_cast<std::int64_t>(i));
  }
}

TEST(GeneratorConfig, TinyHasFiveConvLayers) {
  const auto layers = style_layers(GeneratorConfig::tiny(32, 8, 4));
  int convs = 0;
  for (const auto& l : layers) {
    if (l.kind == StyleLayerKind::kConv) {
      ++convs;
      EXPECT_EQ(l.in_channels, 8);
    }
  }
  EXPECT_EQ(convs, 5);
}

TEST(GeneratorConfig, RejectsBadResolution) {
  auto cfg = GeneratorConfig::tiny(16, 8, 8);
  cfg.output_resolution = 24;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(GeneratorConfig, JsonRoundTrip) {
  const auto cfg = GeneratorConfig::desk();
  const nlohmann::json j = cfg;
  const auto back = j.get<GeneratorConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
}

TEST(Generator, OutputShapeAndRange) {
  auto g = tiny_generator();
  const auto img = generate(g, latent_from_seed(1, 8), TruncationConfig{1.0, g->w_mean});
  EXPECT_EQ(img.sizes(), (std::vector<std::int64_t>{3, 16, 16}));
  EXPECT_TRUE(torch::isfinite(img).all().item<bool>());
}

TEST(Generator, SameSeedIsBitIdentical) {
  auto g = tiny_generator();
  const TruncationConfig t{0.7, g->w_mean};
  EXPECT_TRUE(torch::equal(generate(g, latent_from_seed(5, 8), t), generate(g, latent_from_seed(5, 8), t)));
  EXPECT_FALSE(torch::equal(generate(g, latent_from_seed(5, 8), t), generate(g, latent_from_seed(6, 8), t)));
}

TEST(Generator, LatentFromSeedIsStable) {
  EXPECT_TRUE(torch::equal(latent_from_seed(9, 16).values, latent_from_seed(9, 16).values));
  EXPECT_EQ(latent_from_seed(9, 16).values.size(0), 16);
}

TEST(Truncation, PsiZeroCollapsesToMean) {
  auto g = tiny_generator();
  const TruncationConfig t{0.0, g->w_mean};
  const auto a = mapped_latent(g, 1, t);
  const auto b = mapped_latent(g, 2, t);
  EXPECT_TRUE(torch::equal(a.base, b.base));
  EXPECT_TRUE(torch::equal(a.base[0], g->w_mean));
  EXPECT_TRUE(torch::equal(render(g, a), render(g, b)));
}

TEST(Truncation, PsiOneIsIdentity) {
  auto g = tiny_generator();
  torch::NoGradGuard ng;
  const auto w = g->map(latent_from_seed(4, 8).values.unsqueeze(0));
  EXPECT_TRUE(torch::equal(truncate(w, TruncationConfig{1.0, g->w_mean}), w));
}

TEST(Truncation, RejectsPsiOutsideUnitInterval) {
  auto g = tiny_generator();
  const auto w = torch::zeros({1, 8});
  EXPECT_THROW(truncate(w, TruncationConfig{1.5, g->w_mean}), ConfigError);
  EXPECT_THROW(truncate(w, TruncationConfig{-0.1, g->w_mean}), ConfigError);
  EXPECT_THROW(truncate(w, TruncationConfig{0.5, {}}), ConfigError);
  EXPECT_THROW(truncate(torch::zeros({1, 4}), TruncationConfig{0.5, g->w_mean}), DimensionError);
}

TEST(LatentW, OffsetsWithSameKeyAdd) {
  LatentW w{torch::zeros({3, 4}), {}};
  const auto dir = torch::tensor({1.0f, 0.0f, 0.0f, 0.0f});
  w.offsets.push_back({"k", dir, {0, 2}, 1.5});
  const auto r = w.resolve();
  EXPECT_FLOAT_EQ(r[0][0].item<float>(), 1.5f);
  EXPECT_FLOAT_EQ(r[1][0].item<float>(), 0.0f);
  EXPECT_FLOAT_EQ(r[2][0].item<float>(), 1.5f);
}

TEST(Generator, ModulatedConvLookup) {
  auto g = tiny_generator();
  for (const auto& l : g->layers()) {
    EXPECT_NO_THROW(g->modulated_conv(l.name));
  }
  EXPECT_THROW(g->modulated_conv("nope"), NotFoundError);
}
