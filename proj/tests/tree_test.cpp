#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "elb/tree.hpp"
#include "elb/verify/oracle.hpp"

using namespace elb;

namespace {

const tree_config configs[] = {{3, 4, 2}, {32, 32, 8}, {16, 64, 16}};

std::string describe(const std::vector<violation>& vs) {
  std::string s;
  for (const auto& v : vs) s += std::string(to_string(v.kind)) + " at " + v.where + ": " + v.detail + "\n";
  return s;
}

}  // namespace

TEST(Tree, EmptyTree) {
  basic_tree<> t({3, 4, 2});
  EXPECT_EQ(t.search(1, max_key), 0u);
  EXPECT_EQ(t.remove(1, max_key), 0u);
  EXPECT_TRUE(t.snapshot().empty());
  EXPECT_TRUE(t.check_structure().empty());
  EXPECT_EQ(t.height(), 2u);
}

TEST(Tree, InsertSearchRemove) {
  basic_tree<> t({3, 4, 2});
  EXPECT_TRUE(t.insert(5));
  EXPECT_FALSE(t.insert(5));
  EXPECT_TRUE(t.insert(9));
  EXPECT_EQ(t.search(1, 10), 5u);
  EXPECT_EQ(t.search(6, 10), 9u);
  EXPECT_EQ(t.search(6, 8), 0u);
  EXPECT_EQ(t.remove(1, 100), 5u);
  EXPECT_EQ(t.search(1, 100), 9u);
  EXPECT_TRUE(t.insert(5));
  EXPECT_EQ(t.snapshot(), (std::vector<key_type>{5, 9}));
}

TEST(Tree, RejectsBadArguments) {
  basic_tree<> t({3, 4, 2});
  EXPECT_THROW(t.insert(0), std::domain_error);
  EXPECT_THROW(t.insert(readonly_bit), std::domain_error);
  EXPECT_THROW(t.search(5, 4), std::domain_error);
  EXPECT_THROW(t.remove(0, 4), std::domain_error);
  EXPECT_THROW((basic_tree<>({2, 4, 2})), config_error);
}

TEST(Tree, ExtremeKeys) {
  basic_tree<> t({3, 4, 2});
  EXPECT_TRUE(t.insert(max_key));
  EXPECT_TRUE(t.insert(1));
  EXPECT_EQ(t.search(2, max_key), max_key);
  EXPECT_EQ(t.remove(1, 1), 1u);
  EXPECT_EQ(t.remove(1, max_key), max_key);
}

TEST(Tree, AscendingAndDescendingFill) {
  for (const auto& cfg : configs) {
    basic_tree<> up(cfg), down(cfg);
    for (key_type k = 1; k <= 3000; ++k) {
      ASSERT_TRUE(up.insert(k));
      ASSERT_TRUE(down.insert(3001 - k));
    }
    EXPECT_EQ(up.snapshot().size(), 3000u);
    EXPECT_EQ(up.snapshot(), down.snapshot());
    EXPECT_TRUE(up.check_structure().empty()) << describe(up.check_structure());
    EXPECT_TRUE(down.check_structure().empty()) << describe(down.check_structure());
    for (key_type k = 1; k <= 3000; ++k) ASSERT_EQ(up.remove(1, max_key), k);
    EXPECT_TRUE(up.snapshot().empty());
    EXPECT_TRUE(up.check_structure().empty()) << describe(up.check_structure());
  }
}

TEST(Tree, RandomSerialMatchesOracle) {
  for (const auto& cfg : configs) {
    basic_tree<> t(cfg);
    oracle_set o;
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<key_type> key(1, 2000);
    std::uniform_int_distribution<int> kind(0, 2), span(0, 20);
    for (int i = 0; i < 30000; ++i) {
      const key_type a = key(rng);
      const key_type b = a + static_cast<key_type>(span(rng));
      const auto k = static_cast<op_kind>(kind(rng));
      key_type got = 0;
      switch (k) {
        case op_kind::search: got = t.search(a, b); break;
        case op_kind::remove: got = t.remove(a, b); break;
        case op_kind::insert: got = t.insert(a) ? 1 : 0; break;
      }
      ASSERT_EQ(got, oracle_apply(o, k, a, b)) << "op " << i << " " << to_string(k) << " " << a << " " << b;
    }
    EXPECT_EQ(t.snapshot(), std::vector<key_type>(o.begin(), o.end()));
    EXPECT_TRUE(t.check_structure().empty()) << describe(t.check_structure());
    const auto c = t.counters();
    EXPECT_EQ(c.size_bound_violations, 0u);
    EXPECT_EQ(c.preservation_failures, 0u);
    EXPECT_EQ(c.begun, c.committed);
    EXPECT_EQ(c.cleared, c.committed);
  }
}

// A leaf whose slots are all tombstones still accepts inserts: the insert
// compacts it first.
TEST(Tree, InsertIntoLeafOfTombstones) {
  basic_tree<> t({3, 4, 2});
  for (key_type k = 1; k <= 4; ++k) ASSERT_TRUE(t.insert(k));
  for (key_type k = 1; k <= 4; ++k) ASSERT_EQ(t.remove(k, k), k);
  EXPECT_TRUE(t.insert(2));
  EXPECT_EQ(t.snapshot(), (std::vector<key_type>{2}));
}

TEST(Tree, GrowsAndShrinks) {
  basic_tree<> t({4, 4, 2});
  for (key_type k = 1; k <= 500; ++k) t.insert(k * 7);
  const unsigned tall = t.height();
  EXPECT_GT(tall, 3u);
  for (key_type k = 1; k <= 500; ++k) ASSERT_EQ(t.remove(1, max_key), k * 7);
  EXPECT_LT(t.height(), tall);
  EXPECT_TRUE(t.check_structure().empty()) << describe(t.check_structure());
}

TEST(Tree, LayoutRoundTrip) {
  const layout top = layout::internal(
      {8}, {layout::leaf({1, 3, 5, 7}), layout::leaf({10, 11})});
  basic_tree<> t({3, 4, 2}, top);
  EXPECT_EQ(t.export_layout(), top);
  EXPECT_EQ(t.snapshot(), (std::vector<key_type>{1, 3, 5, 7, 10, 11}));
  EXPECT_TRUE(t.check_structure().empty());
}

TEST(Tree, LayoutRejectsOversizedNodes) {
  EXPECT_THROW((basic_tree<>({3, 4, 2}, layout::internal({}, {layout::leaf({1, 2, 3, 4, 5})}))), config_error);
  EXPECT_THROW((basic_tree<>({3, 4, 2}, layout::leaf({1}))), config_error);
}

TEST(Audit, DetectsLeafRange) {
  const layout top = layout::internal({8}, {layout::leaf({1, 9}), layout::leaf({10})});
  basic_tree<> t({3, 4, 2}, top);
  const auto vs = t.check_structure();
  ASSERT_FALSE(vs.empty());
  EXPECT_EQ(vs.front().kind, violation_kind::leaf_range);
}

TEST(Audit, DetectsSeparatorOrderAndChildCount) {
  basic_tree<> a({4, 4, 2}, layout::internal({8, 5}, {layout::leaf({1}), layout::leaf({6}), layout::leaf({9})}));
  bool order = false;
  for (const auto& v : a.check_structure()) order |= v.kind == violation_kind::separator_order;
  EXPECT_TRUE(order);
  basic_tree<> b({4, 4, 2}, layout::internal({8, 9}, {layout::leaf({1}), layout::leaf({9})}));
  bool count = false;
  for (const auto& v : b.check_structure()) count |= v.kind == violation_kind::child_count;
  EXPECT_TRUE(count);
}

TEST(Audit, DetectsDuplicatesAndFrozenKeys) {
  basic_tree<> a({3, 4, 2}, layout::internal({8}, {layout::leaf({3}), layout::leaf({3 | 0, 9})}));
  EXPECT_FALSE(a.check_structure().empty());
  basic_tree<> d({3, 4, 2}, layout::internal({}, {layout::leaf({3, 3})}));
  bool dup = false;
  for (const auto& v : d.check_structure()) dup |= v.kind == violation_kind::duplicate_key;
  EXPECT_TRUE(dup);
  EXPECT_THROW(d.snapshot(), structure_error);
  basic_tree<> f({3, 4, 2}, layout::internal({}, {layout::leaf({3 | readonly_bit})}));
  bool frozen = false;
  for (const auto& v : f.check_structure()) frozen |= v.kind == violation_kind::frozen_reachable;
  EXPECT_TRUE(frozen);
}

TEST(Audit, DetectsUnevenDepth) {
  const layout top = layout::internal(
      {8}, {layout::leaf({1}), layout::internal({}, {layout::leaf({9})})});
  basic_tree<> t({3, 4, 2}, top);
  bool uneven = false;
  for (const auto& v : t.check_structure()) uneven |= v.kind == violation_kind::uneven_depth;
  EXPECT_TRUE(uneven);
}

TEST(Tree, ConcurrentDisjointInserts) {
  for (const auto& cfg : configs) {
    basic_tree<> t(cfg);
    std::vector<std::thread> ts;
    for (unsigned w = 0; w < 4; ++w)
      ts.emplace_back([&t, w] {
        for (key_type k = 1; k <= 2000; ++k) t.insert(k * 4 + w);
      });
    for (auto& th : ts) th.join();
    EXPECT_EQ(t.snapshot().size(), 8000u);
    EXPECT_TRUE(t.check_structure().empty()) << describe(t.check_structure());
  }
}

TEST(Tree, ConcurrentRemoveMinDrainsEachKeyOnce) {
  basic_tree<> t({3, 4, 2});
  for (key_type k = 1; k <= 4000; ++k) t.insert(k);
  std::vector<std::vector<key_type>> got(4);
  std::vector<std::thread> ts;
  for (unsigned w = 0; w < 4; ++w)
    ts.emplace_back([&, w] {
      for (;;) {
        const key_type k = t.remove(1, max_key);
        if (k == 0) break;
        got[w].push_back(k);
      }
    });
  for (auto& th : ts) th.join();
  std::vector<key_type> all;
  for (const auto& g : got) {
    EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
    all.insert(all.end(), g.begin(), g.end());
  }
  std::sort(all.begin(), all.end());
  ASSERT_EQ(all.size(), 4000u);
  for (key_type k = 1; k <= 4000; ++k) ASSERT_EQ(all[k - 1], k);
  EXPECT_TRUE(t.check_structure().empty()) << describe(t.check_structure());
}
