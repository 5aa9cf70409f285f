#include <gtest/gtest.h>
#include <torch/torch.h>

#include <set>

#include "support.hpp"
#include "swasat/errors.hpp"
#include "swasat/training.hpp"

using namespace swasat;

namespace {

struct Pair : torch::nn::Module {
  Pair(float a, float b) {
    p = register_parameter("p", torch::tensor({a, b}));
  }
  torch::Tensor p;
};

}  // namespace

TEST(Ema, MatchesScalarRecurrenceBitExactly) {
  Pair ema(0.25f, -3.0f);
  Pair live(1.0f, 2.0f);
  float e0 = 0.25f;
  float e1 = -3.0f;
  const double decay = 0.999;
  for (int t = 0; t < 500; ++t) {
    {
      torch::NoGradGuard ng;
      live.p.add_(torch::tensor({0.01f * static_cast<float>(t % 7), -0.02f}));
    }
    const float l0 = live.p[0].item<float>();
    const float l1 = live.p[1].item<float>();
    ema_update(ema, live, decay);
    e0 = e0 * static_cast<float>(decay) + l0 * static_cast<float>(1.0 - decay);
    e1 = e1 * static_cast<float>(decay) + l1 * static_cast<float>(1.0 - decay);
    ASSERT_EQ(ema.p[0].item<float>(), e0) << "step " << t;
    ASSERT_EQ(ema.p[1].item<float>(), e1) << "step " << t;
  }
}

TEST(Ema, MissingParameterThrows) {
  Pair live(1.0f, 2.0f);
  torch::nn::Module empty;
  EXPECT_THROW(ema_update(empty, live, 0.5), DimensionError);
}

TEST(BatchSampler, EpochIsAPermutation) {
  BatchSampler s(10, 5, 42);
  std::set<std::int64_t> seen;
  for (const auto i : s.indices(0)) seen.insert(i);
  for (const auto i : s.indices(1)) seen.insert(i);
  EXPECT_EQ(seen.size(), 10u);
  EXPECT_EQ(s.indices(3), BatchSampler(10, 5, 42).indices(3));
  EXPECT_NE(s.indices(0), BatchSampler(10, 5, 43).indices(0));
}

TEST(BatchSampler, BatchLargerThanDataset) {
  BatchSampler s(3, 7, 1);
  const auto idx = s.indices(0);
  ASSERT_EQ(idx.size(), 7u);
  for (const auto i : idx) {
    EXPECT_GE(i, 0);
    EXPECT_LT(i, 3);
  }
  EXPECT_THROW(BatchSampler(0, 4, 1), DataError);
}

TEST(RocAuc, HandComputed) {
  EXPECT_DOUBLE_EQ(roc_auc({3, 4}, {1, 2}), 1.0);
  EXPECT_DOUBLE_EQ(roc_auc({1, 2}, {3, 4}), 0.0);
  EXPECT_DOUBLE_EQ(roc_auc({1}, {1}), 0.5);
  // pairs: (2>1) (2<3) (4>1) (4>3) -> 3/4
  EXPECT_DOUBLE_EQ(roc_auc({2, 4}, {1, 3}), 0.75);
  EXPECT_THROW(roc_auc({}, {1}), DataError);
}

TEST(Diversity, HandComputed) {
  const auto imgs = torch::tensor({0.0, 0.0, 1.0, 1.0, 3.0, 3.0}).view({3, 1, 1, 2});
  // |0-1| + |0-3| + |1-3| over 3 pairs
  EXPECT_DOUBLE_EQ(pairwise_diversity(imgs), 2.0);
  EXPECT_DOUBLE_EQ(pairwise_diversity(torch::ones({4, 3, 2, 2})), 0.0);
  EXPECT_THROW(pairwise_diversity(torch::ones({1, 3, 2, 2})), DataError);
}

TEST(TrainConfig, ValidationAndJson) {
  auto c = TrainConfig::desk();
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.batch_size, 16);
  EXPECT_EQ(c.total_iterations, 2000);
  const nlohmann::json j = c;
  EXPECT_EQ(nlohmann::json(j.get<TrainConfig>()), j);
  c.ema_decay = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig::desk();
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Trainer, StepsAreFiniteAndDeterministic) {
  auto gcfg = GeneratorConfig::tiny(16, 8, 8);
  auto dcfg = DiscriminatorConfig::matching(gcfg);
  auto tcfg = TrainConfig::desk();
  tcfg.batch_size = 4;
  tcfg.d_reg_interval = 2;
  tcfg.g_reg_interval = 2;
  tcfg.seed = 5;
  torch::manual_seed(9);
  const auto data = torch::rand({4, 3, 16, 16}) * 2 - 1;
  // The trainer draws from the global torch generator, so runs go one after the other.
  auto run = [&] {
    Trainer t(gcfg, dcfg, tcfg);
    std::vector<LossRecord> out;
    for (int i = 0; i < 4; ++i) {
      out.push_back(t.step(data));
    }
    return out;
  };
  const auto ra = run();
  const auto rb = run();
  for (std::size_t i = 0; i < ra.size(); ++i) {
    EXPECT_TRUE(ra[i].finite());
    EXPECT_EQ(ra[i].d_loss, rb[i].d_loss);
    EXPECT_EQ(ra[i].g_loss, rb[i].g_loss);
  }
  Trainer a(gcfg, dcfg, tcfg);
  for (int i = 0; i < 4; ++i) {
    a.step(data);
  }
  EXPECT_EQ(a.step_count(), 4);
  EXPECT_THROW(a.step(torch::zeros({3, 3, 16, 16})), DimensionError);
}

TEST(Fit, ResumeMatchesUninterruptedRun) {
  testkit::TempDir dir("fit");
  auto gcfg = GeneratorConfig::tiny(16, 8, 8);
  auto dcfg = DiscriminatorConfig::matching(gcfg);
  auto tcfg = TrainConfig::desk();
  tcfg.batch_size = 4;
  tcfg.total_iterations = 4;
  tcfg.checkpoint_interval = 2;
  tcfg.w_mean_samples = 32;
  torch::manual_seed(1);
  const auto data = torch::rand({6, 3, 16, 16}) * 2 - 1;
  const auto full = fit(tcfg, gcfg, dcfg, data, {dir / "full", {}, {}});
  const auto resumed = fit(tcfg, gcfg, dcfg, data, {dir / "resumed", dir / "full" / "checkpoint_0000002.swck", {}});
  EXPECT_EQ(checkpoint_hash(load_checkpoint(full)), checkpoint_hash(load_checkpoint(resumed)));
  EXPECT_EQ(MetricsLog::read(dir / "resumed" / "metrics.jsonl").size(), 2u);
  EXPECT_EQ(MetricsLog::read(dir / "full" / "metrics.jsonl").size(), 4u);
  EXPECT_THROW(fit(tcfg, gcfg, dcfg, torch::rand({6, 3, 8, 8}), {dir / "bad", {}, {}}), DataError);
}
