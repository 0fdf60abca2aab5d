#include <gtest/gtest.h>

#include "elb/harness/small_model.hpp"

using namespace elb;

TEST(SmallModel, Alphabet) {
  const auto a = small_alphabet(4);
  EXPECT_EQ(a.size(), 24u);
  EXPECT_EQ(to_string(a.front()), "INSERT(1)");
  EXPECT_EQ(to_string(a.back()), "REMOVE(4,4)");
}

TEST(SmallModel, WorkloadEnumerationUsesThreadSymmetry) {
  const auto a = small_alphabet(4);
  std::uint64_t n = 0;
  for_each_workload(a, {}, 1, [&](const small_workload& w) {
    EXPECT_TRUE(w.threads[0].empty());
    ++n;
  });
  EXPECT_EQ(n, 24u);
  n = 0;
  for_each_workload(a, {}, 2, [&](const small_workload&) { ++n; });
  EXPECT_EQ(n, 24u * 24 + 24 * 25 / 2);
}

TEST(SmallModel, SerialOrderReachability) {
  history h;
  h.ops = {{0, op_kind::insert, 1, 1, 1, 4, 1}, {1, op_kind::remove, 1, 4, 2, 3, 1}};
  EXPECT_TRUE(reachable_by_serial_order({}, h, {}));
  EXPECT_FALSE(reachable_by_serial_order({}, h, {1}));
  EXPECT_TRUE(reachable_by_serial_order({2}, h, {2}));
}

TEST(SmallModel, SingleWorkload) {
  small_workload w;
  w.prefill = {1, 2, 3, 4};
  w.threads = {{{op_kind::remove, 1, 1}}, {{op_kind::insert, 2, 2}, {op_kind::search, 1, 4}}};
  const workload_result r = check_workload(w, {3, 4, 2});
  EXPECT_TRUE(r.complete);
  EXPECT_TRUE(r.problem.empty()) << r.problem;
  EXPECT_GT(r.executions, 1u);
}

TEST(SmallModel, ExhaustiveTwoOps) {
  small_model_options o;
  o.exhaustive = {{{}, 2}, {{1, 2, 3, 4}, 2}};
  o.sample_seconds = 0;
  const small_model_report r = run_small_model(o);
  EXPECT_TRUE(r.ok()) << (r.exhaustive.messages.empty() ? "" : r.exhaustive.messages.front());
  EXPECT_EQ(r.exhaustive.workloads, 2 * (24u + 24u * 24 + 24 * 25 / 2));
  EXPECT_EQ(r.exhaustive.truncated, 0u);
}

TEST(SmallModel, SampledWorkloads) {
  small_model_options o;
  o.exhaustive.clear();
  o.max_samples = 20;
  o.sample_seconds = 60;
  const small_model_report r = run_small_model(o);
  EXPECT_TRUE(r.ok()) << (r.sampled.messages.empty() ? "" : r.sampled.messages.front());
  EXPECT_EQ(r.sampled.workloads, 20u);
}
