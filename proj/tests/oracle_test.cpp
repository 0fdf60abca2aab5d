#include <gtest/gtest.h>

#include "elb/verify/oracle.hpp"

using namespace elb;

TEST(Oracle, Insert) {
  oracle_set s;
  EXPECT_EQ(oracle_apply(s, op_kind::insert, 5, 5), 1u);
  EXPECT_EQ(oracle_apply(s, op_kind::insert, 5, 5), 0u);
  EXPECT_EQ(s.size(), 1u);
}

TEST(Oracle, SearchReturnsSmallestInRange) {
  oracle_set s{3, 7, 9};
  EXPECT_EQ(oracle_apply(s, op_kind::search, 4, 10), 7u);
  EXPECT_EQ(oracle_apply(s, op_kind::search, 1, 2), 0u);
  EXPECT_EQ(oracle_apply(s, op_kind::search, 9, 9), 9u);
  EXPECT_EQ(s.size(), 3u);
}

TEST(Oracle, RemoveTakesSmallestInRange) {
  oracle_set s{3, 7, 9};
  EXPECT_EQ(oracle_apply(s, op_kind::remove, 4, 10), 7u);
  EXPECT_EQ(oracle_apply(s, op_kind::remove, 4, 10), 9u);
  EXPECT_EQ(oracle_apply(s, op_kind::remove, 4, 10), 0u);
  EXPECT_EQ(s, (oracle_set{3}));
}

TEST(Oracle, KindNames) {
  EXPECT_STREQ(to_string(op_kind::search), "SEARCH");
  EXPECT_STREQ(to_string(op_kind::remove), "REMOVE");
  EXPECT_STREQ(to_string(op_kind::insert), "INSERT");
}
