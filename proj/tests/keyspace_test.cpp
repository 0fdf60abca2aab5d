#include <gtest/gtest.h>

#include "elb/keyspace.hpp"
#include "elb/status.hpp"

using namespace elb;

TEST(KeyWord, PayloadAndFlag) {
  const key_word w = encode(42);
  EXPECT_EQ(w.payload(), 42u);
  EXPECT_FALSE(w.readonly());
  EXPECT_FALSE(w.empty());
  const key_word r = set_readonly(w);
  EXPECT_TRUE(r.readonly());
  EXPECT_EQ(r.payload(), 42u);
}

TEST(KeyWord, EmptyVacantTombstone) {
  EXPECT_TRUE(key_word{}.vacant());
  EXPECT_TRUE(key_word{}.empty());
  const key_word tomb = set_readonly(key_word{});
  EXPECT_TRUE(tomb.empty());
  EXPECT_FALSE(tomb.vacant());
  EXPECT_EQ(tomb.bits(), readonly_bit);
}

TEST(KeyWord, Bounds) {
  EXPECT_THROW(encode(0), std::domain_error);
  EXPECT_THROW(encode(readonly_bit), std::domain_error);
  EXPECT_EQ(encode(max_key).payload(), max_key);
  EXPECT_TRUE(valid_key(1));
  EXPECT_FALSE(valid_key(std::uint64_t{1} << 63));
}

TEST(Packing, RoundTrip) {
  const key_word w = pack(7, 5, 8);
  EXPECT_EQ(unpack(w.payload(), 8), (packed_entry{7, 5}));
  const auto [lo, hi] = packed_range(7, 8);
  EXPECT_LE(lo, w.payload());
  EXPECT_GE(hi, w.payload());
  EXPECT_EQ(hi - lo, 255u);
}

TEST(Packing, Overflow) {
  EXPECT_THROW(pack(1, 256, 8), std::overflow_error);
  EXPECT_THROW(pack(std::uint64_t{1} << 55, 0, 8), std::overflow_error);
  EXPECT_THROW(pack(0, 1, 8), std::domain_error);
  EXPECT_THROW(pack(1, 1, 63), std::overflow_error);
}

TEST(Packing, OrderFollowsKeyThenValue) {
  EXPECT_LT(pack(1, 200, 8).payload(), pack(2, 0, 8).payload());
  EXPECT_LT(pack(2, 3, 8).payload(), pack(2, 4, 8).payload());
}

TEST(StatusWord, Fields) {
  const status_word s = status_word::make(step::step1, 5, 17, 99);
  EXPECT_EQ(s.phase(), step::step1);
  EXPECT_EQ(s.parent_index(), 5u);
  EXPECT_EQ(s.child_index(), 17u);
  EXPECT_EQ(s.sequence(), 99u);
  EXPECT_TRUE(s.pending());
  EXPECT_FALSE(s.frozen());
}

TEST(StatusWord, PhaseChangesKeepTheRest) {
  const status_word s = status_word::make(step::step1, 3, status_word::self_index, 4);
  const status_word t = s.with_phase(step::step2);
  EXPECT_EQ(t.phase(), step::step2);
  EXPECT_EQ(t.parent_index(), 3u);
  EXPECT_EQ(t.child_index(), status_word::self_index);
  EXPECT_EQ(t.sequence(), 4u);
  const status_word c = t.cleared();
  EXPECT_EQ(c, status_word::idle(5));
  EXPECT_FALSE(c.pending());
  EXPECT_TRUE(s.with_phase(step::frozen).frozen());
}
