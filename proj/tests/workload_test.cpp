#include <gtest/gtest.h>

#include <sstream>

#include "elb/harness/stress.hpp"

using namespace elb;

TEST(Mix, ParseAndNormalise) {
  const op_mix m = parse_mix("2:1:1");
  EXPECT_DOUBLE_EQ(m.search, 0.5);
  EXPECT_DOUBLE_EQ(m.insert, 0.25);
  EXPECT_DOUBLE_EQ(m.remove, 0.25);
  const op_mix f = parse_mix("0.1:0.7:0.2");
  EXPECT_NEAR(f.insert, 0.7, 1e-12);
}

TEST(Mix, Rejects) {
  EXPECT_THROW(parse_mix("1:1"), config_error);
  EXPECT_THROW(parse_mix("1:1:1:1"), config_error);
  EXPECT_THROW(parse_mix("a:1:1"), config_error);
  EXPECT_THROW(parse_mix("-1:1:1"), config_error);
  EXPECT_THROW(parse_mix("0:0:0"), config_error);
  EXPECT_THROW(parse_mix("1x:1:1"), config_error);
}

TEST(RunConfig, Validate) {
  run_config c;
  EXPECT_NO_THROW(c.validate());
  c.threads = 0;
  EXPECT_THROW(c.validate(), config_error);
  c = {};
  c.range = 0;
  EXPECT_THROW(c.validate(), config_error);
  c = {};
  c.tree.min_size = 100;
  EXPECT_THROW(c.validate(), config_error);
}

TEST(OpStream, DeterministicPerSeedAndThread) {
  run_config c;
  c.range = 100;
  op_stream a(c, 0), b(c, 0), other(c, 1);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const planned_op x = a.next(), y = b.next(), z = other.next();
    EXPECT_EQ(x.kind, y.kind);
    EXPECT_EQ(x.e1, y.e1);
    EXPECT_EQ(x.e2, y.e2);
    EXPECT_GE(x.e1, 1u);
    EXPECT_LE(x.e2, 100u);
    EXPECT_LE(x.e1, x.e2);
    EXPECT_LE(x.e2 - x.e1, c.span - 1);
    differs |= x.e1 != z.e1;
  }
  EXPECT_TRUE(differs);
}

TEST(Stress, SingleThreadTraceIsRepeatable) {
  run_config c;
  c.tree = {3, 4, 2};
  c.threads = 1;
  c.ops = 5000;
  c.range = 200;
  std::ostringstream a, b;
  write_trace(a, run_stress(c).trace);
  write_trace(b, run_stress(c).trace);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Stress, MultiThreadRunIsClean) {
  for (const tree_config tc : {tree_config{3, 4, 2}, tree_config{32, 32, 8}}) {
    run_config c;
    c.tree = tc;
    c.threads = 4;
    c.ops = 20000;
    c.range = 512;
    const stress_result r = run_stress(c);
    EXPECT_TRUE(r.ok());
    EXPECT_EQ(r.completed, 80000u);
    EXPECT_EQ(r.trace.ops.size(), 80000u);
    EXPECT_EQ(r.counters.size_bound_violations, 0u);
    EXPECT_EQ(r.counters.preservation_failures, 0u);
    EXPECT_GT(r.counters.committed, 0u);
  }
}

TEST(Stress, RetireModeIsClean) {
  run_config c;
  c.tree = {3, 4, 2};
  c.threads = 4;
  c.ops = 20000;
  c.range = 256;
  c.reclaim = reclaim_mode::retire;
  EXPECT_TRUE(run_stress(c).ok());
}

TEST(Stress, DurationStopsEarly) {
  run_config c;
  c.tree = {3, 4, 2};
  c.threads = 2;
  c.ops = 1000000000;
  c.duration = 0.2;
  c.record = false;
  const stress_result r = run_stress(c);
  EXPECT_LT(r.completed, 2000000000u);
  EXPECT_LT(r.seconds, 5.0);
}

TEST(Stress, SnapshotAgainstHistory) {
  history h;
  h.ops = {{0, op_kind::insert, 5, 5, 1, 2, 1}, {0, op_kind::insert, 6, 6, 3, 4, 1},
           {0, op_kind::remove, 1, 9, 5, 6, 5}};
  EXPECT_TRUE(detail::snapshot_against(h, {6}).empty());
  EXPECT_EQ(detail::snapshot_against(h, {5, 6}).size(), 1u);
  EXPECT_EQ(detail::snapshot_against(h, {}).size(), 1u);
  EXPECT_EQ(detail::snapshot_against(h, {6, 7}).size(), 1u);
}

TEST(Bench, ReportsEachThreadCount) {
  run_config c;
  c.tree = {16, 64, 16};
  c.duration = 0.1;
  c.range = 4096;
  const auto rows = run_bench(c, {1, 2});
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) EXPECT_GT(r.ops, 0u);
  c.duration = 0;
  EXPECT_THROW(run_bench(c, {1}), config_error);
}
