#include <set>

#include <gtest/gtest.h>
#include <torch/torch.h>

#include "swasat/hashing.hpp"
#include "swasat/rng.hpp"

using namespace swasat;

TEST(Hashing, KnownVector) {
  EXPECT_EQ(sha256_hex(std::string("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Hashing, TensorHashSeesDtypeAndShape) {
  const auto a = torch::zeros({2, 3});
  EXPECT_EQ(sha256_tensor(a), sha256_tensor(torch::zeros({2, 3})));
  EXPECT_NE(sha256_tensor(a), sha256_tensor(torch::zeros({3, 2})));
  EXPECT_NE(sha256_tensor(a), sha256_tensor(torch::zeros({2, 3}, torch::kFloat64)));
}

TEST(Rng, StreamIsDeterministic) {
  rng::Stream a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, UniformIndexInRangeAndCoversAll) {
  rng::Stream s(1);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = s.uniform_index(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(Rng, PermutationIsAPermutation) {
  const auto p = rng::permutation(50, 9);
  std::set<std::size_t> s(p.begin(), p.end());
  EXPECT_EQ(s.size(), 50u);
  EXPECT_EQ(*s.rbegin(), 49u);
  EXPECT_EQ(p, rng::permutation(50, 9));
  EXPECT_NE(p, rng::permutation(50, 10));
}

TEST(Rng, SampleWithoutReplacementDistinct) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto k = rng::sample_without_replacement(8, 3, seed);
    ASSERT_EQ(k.size(), 3u);
    EXPECT_EQ(std::set<std::size_t>(k.begin(), k.end()).size(), 3u);
  }
}

TEST(Rng, DerivedSeedsDiffer) {
  EXPECT_NE(rng::derive_seed(1, "a"), rng::derive_seed(1, "b"));
  EXPECT_NE(rng::derive_seed(1, std::uint64_t{0}), rng::derive_seed(1, std::uint64_t{1}));
  EXPECT_EQ(rng::derive_seed(5, "x"), rng::derive_seed(5, "x"));
}
