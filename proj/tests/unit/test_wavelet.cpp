#include <gtest/gtest.h>
#include <torch/torch.h>

#include "oracles.hpp"
#include "swasat/errors.hpp"
#include "swasat/wavelet.hpp"

using namespace swasat;
using namespace swasat::wavelet;

namespace {

Eigen::VectorXd flat(const torch::Tensor& t) {
  const auto d = t.to(torch::kFloat64).contiguous();
  return Eigen::Map<const Eigen::VectorXd>(d.data_ptr<double>(), d.numel());
}

}  // namespace

TEST(Wavelet, ConstantImageHasOnlyLowBand) {
  const auto b = dwt2d(torch::ones({1, 2, 2}, torch::kFloat64));
  EXPECT_EQ(b.ll.item<double>(), 2.0);
  EXPECT_EQ(b.lh.item<double>(), 0.0);
  EXPECT_EQ(b.hl.item<double>(), 0.0);
  EXPECT_EQ(b.hh.item<double>(), 0.0);
  EXPECT_TRUE(torch::equal(iwt2d(b), torch::ones({1, 2, 2}, torch::kFloat64)));
}

TEST(Wavelet, TwoByTwoHandValues) {
  const auto img = torch::tensor({1.0, 2.0, 3.0, 4.0}, torch::kFloat64).view({1, 2, 2});
  const auto b = dwt2d(img);
  EXPECT_DOUBLE_EQ(b.ll.item<double>(), 5.0);
  EXPECT_DOUBLE_EQ(b.lh.item<double>(), -1.0);
  EXPECT_DOUBLE_EQ(b.hl.item<double>(), -2.0);
  EXPECT_DOUBLE_EQ(b.hh.item<double>(), 0.0);
  WaveletBands given{torch::full({1, 1, 1}, 5.0, torch::kFloat64), torch::full({1, 1, 1}, -1.0, torch::kFloat64),
                     torch::full({1, 1, 1}, -2.0, torch::kFloat64), torch::zeros({1, 1, 1}, torch::kFloat64)};
  EXPECT_TRUE(torch::equal(iwt2d(given), img));
}

TEST(Wavelet, MatchesExplicitHaarMatrix) {
  torch::manual_seed(3);
  const auto img = torch::randn({3, 8, 8}, torch::kFloat64);
  const auto b = dwt2d(img);
  const auto m = testkit::haar_analysis_matrix(8, 8);
  for (int c = 0; c < 3; ++c) {
    const Eigen::VectorXd expected = m * flat(img[c]);
    Eigen::VectorXd got(64);
    got << flat(b.ll[c]), flat(b.lh[c]), flat(b.hl[c]), flat(b.hh[c]);
    EXPECT_LT((expected - got).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Wavelet, HaarMatrixOracleIsOrthogonal) {
  const auto m = testkit::haar_analysis_matrix(4, 6);
  EXPECT_LT((m * m.transpose() - Eigen::MatrixXd::Identity(24, 24)).norm(), 1e-14);
}

TEST(Wavelet, RoundTripAndParseval) {
  torch::manual_seed(11);
  for (int i = 0; i < 200; ++i) {
    const auto c = torch::randint(1, 5, {1}).item<std::int64_t>();
    const auto h = 2 * torch::randint(1, 17, {1}).item<std::int64_t>();
    const auto w = 2 * torch::randint(1, 17, {1}).item<std::int64_t>();
    const auto x = torch::randn({c, h, w});
    const auto b = dwt2d(x);
    EXPECT_LT((iwt2d(b) - x).abs().max().item<double>(), 1e-6);
    const auto e = x.to(torch::kFloat64).pow(2).sum().item<double>();
    const auto eb = (b.ll.to(torch::kFloat64).pow(2).sum() + b.lh.to(torch::kFloat64).pow(2).sum() +
                     b.hl.to(torch::kFloat64).pow(2).sum() + b.hh.to(torch::kFloat64).pow(2).sum())
                        .item<double>();
    EXPECT_LT(std::abs(e - eb) / e, 1e-6);
  }
}

TEST(Wavelet, DoublePrecisionRoundTrip) {
  torch::manual_seed(12);
  const auto x = torch::randn({2, 16, 10}, torch::kFloat64);
  EXPECT_LT((iwt2d(dwt2d(x)) - x).abs().max().item<double>(), 1e-12);
}

TEST(Wavelet, Linearity) {
  torch::manual_seed(13);
  const auto x = torch::randn({2, 8, 8});
  const auto y = torch::randn({2, 8, 8});
  const auto lhs = dwt2d_packed(2.5 * x - 0.75 * y);
  const auto rhs = 2.5 * dwt2d_packed(x) - 0.75 * dwt2d_packed(y);
  EXPECT_LT((lhs - rhs).abs().max().item<double>(), 1e-6);
}

TEST(Wavelet, BlockConstantImageHasNoDetail) {
  const auto coarse = torch::randn({2, 3, 5});
  const auto img = coarse.repeat_interleave(2, 1).repeat_interleave(2, 2);
  const auto b = dwt2d(img);
  EXPECT_EQ(b.lh.abs().max().item<float>(), 0.0f);
  EXPECT_EQ(b.hl.abs().max().item<float>(), 0.0f);
  EXPECT_EQ(b.hh.abs().max().item<float>(), 0.0f);
}

TEST(Wavelet, OddSizesRejected) {
  EXPECT_THROW(dwt2d(torch::zeros({1, 3, 4})), DimensionError);
  EXPECT_THROW(dwt2d(torch::zeros({1, 4, 5})), DimensionError);
  EXPECT_THROW(dwt2d(torch::zeros({1, 0, 4})), DimensionError);
}

TEST(Wavelet, MismatchedBandsRejected) {
  WaveletBands b{torch::zeros({1, 2, 2}), torch::zeros({1, 2, 2}), torch::zeros({1, 2, 3}), torch::zeros({1, 2, 2})};
  EXPECT_THROW(iwt2d(b), DimensionError);
}

TEST(Wavelet, UpsampleConstant) {
  for (const auto mode : {ResampleMode::kBilinear, ResampleMode::kNearest}) {
    const auto b = wavelet_upsample(dwt2d(torch::ones({1, 4, 4})), mode);
    EXPECT_EQ(b.ll.sizes(), (std::vector<int64_t>{1, 4, 4}));
    EXPECT_LT((b.ll - 2.0).abs().max().item<double>(), 1e-6);
    EXPECT_LT(b.lh.abs().max().item<double>(), 1e-6);
    EXPECT_LT(b.hl.abs().max().item<double>(), 1e-6);
    EXPECT_LT(b.hh.abs().max().item<double>(), 1e-6);
  }
}

TEST(Wavelet, UpsampleShape) {
  const auto b = wavelet_upsample(dwt2d(torch::randn({3, 8, 8})));
  EXPECT_EQ(b.ll.sizes(), (std::vector<int64_t>{3, 8, 8}));
}

TEST(Wavelet, NearestUpsampleMatchesComposedOracle) {
  const auto img = torch::tensor({1.0, 2.0, 3.0, 4.0}, torch::kFloat64).view({1, 2, 2});
  const auto out = wavelet_upsample(dwt2d(img), ResampleMode::kNearest);
  const Eigen::VectorXd expected = testkit::haar_analysis_matrix(4, 4) * testkit::nearest_upsample_matrix(2, 2) * flat(img);
  Eigen::VectorXd got(16);
  got << flat(out.ll), flat(out.lh), flat(out.hl), flat(out.hh);
  EXPECT_LT((expected - got).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Wavelet, PackUnpackRoundTrip) {
  const auto x = torch::randn({2, 3, 8, 8});
  const auto p = dwt2d_packed(x);
  EXPECT_EQ(p.sizes(), (std::vector<int64_t>{2, 12, 4, 4}));
  EXPECT_TRUE(torch::equal(pack(unpack(p)), p));
  EXPECT_LT((iwt2d_packed(p) - x).abs().max().item<double>(), 1e-6);
}

TEST(Wavelet, DownsampleOfUpsampleIsIdentityForNearest) {
  const auto p = dwt2d_packed(torch::randn({1, 2, 8, 8}, torch::kFloat64));
  const auto back = wavelet_downsample_packed(wavelet_upsample_packed(p, ResampleMode::kNearest));
  EXPECT_LT((back - p).abs().max().item<double>(), 1e-12);
}
