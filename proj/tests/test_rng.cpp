#include <gtest/gtest.h>

#include <set>

#include "mintdro/rng.hpp"

using namespace mintdro;

TEST(Rng, SplitIsDeterministic) {
  EXPECT_EQ(split_seed(42, 7), split_seed(42, 7));
  EXPECT_EQ(split_seed(42, "est"), split_seed(42, "est"));
}

TEST(Rng, SplitSeparatesStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(split_seed(1, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_NE(split_seed(1, "est"), split_seed(1, "eval"));
  EXPECT_NE(split_seed(1, 0), split_seed(2, 0));
}

TEST(Rng, SameSeedSameStream) {
  Rng a = make_rng(9), b = make_rng(9);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a(), b());
}
