#pragma once

// Built-in simulated scenarios for the rebalance protocol. Each one builds
// a small tree, starts two or three fibers and checks the finished
// execution: every begun rebalance swapped exactly one link and cleared its
// status once, the structure is sound and no key was lost or duplicated.

#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "elb/sim/scheduler.hpp"
#include "elb/tree.hpp"

namespace elb::sim {

using sim_tree = basic_tree<sim_memory>;

struct scenario_spec {
  std::string name;
  std::string description;
  scenario_fn run;
};

namespace detail {

inline std::uint64_t tomb() { return readonly_bit; }

/// Checks shared by all protocol scenarios. `expect_root_seq` is the
/// sequence the anchor status must end with.
inline std::string audit(const sim_tree& t, const std::set<key_type>& expected,
                         std::uint64_t expect_root_seq) {
  for (const violation& v : t.check_structure())
    return std::string("structure: ") + to_string(v.kind) + " at " + v.where + ": " + v.detail;
  std::vector<key_type> snap;
  try {
    snap = t.snapshot();
  } catch (const std::exception& e) {
    return std::string("snapshot: ") + e.what();
  }
  if (std::set<key_type>(snap.begin(), snap.end()) != expected) return "final key set differs";
  const rebalance_counters c = t.counters();
  if (c.committed != c.begun || c.cleared != c.begun)
    return "begun " + std::to_string(c.begun) + ", committed " + std::to_string(c.committed) +
           ", cleared " + std::to_string(c.cleared);
  if (c.preservation_failures != 0) return "a replacement changed the key set";
  const status_word rs = t.root_status();
  if (rs.pending() || rs.frozen() || rs.sequence() != expect_root_seq) {
    std::ostringstream os;
    os << "anchor status " << rs << ", expected NONE with sequence " << expect_root_seq;
    return os.str();
  }
  return {};
}

/// ic -> [ {1,3,5,7} | 8 | {10,11} ]: the left leaf is full.
inline layout full_leaf_layout() {
  return layout::internal({8}, {layout::leaf({1, 3, 5, 7}), layout::leaf({10, 11})});
}

enum class helper_start { together, at_step1, at_step2 };

inline scenario_fn split_race(helper_start when, unsigned fibers) {
  if (fibers < 2 || fibers > 3) throw std::invalid_argument("split race runs with 2 or 3 fibers");
  return [when, fibers](sim_run& run) -> check_fn {
    auto t = std::make_shared<sim_tree>(tree_config{3, 4, 2}, full_leaf_layout());
    const std::uint64_t seq0 = t->root_status().sequence();
    // The third insert lands in the left half after the split, which has room.
    static constexpr key_type keys[] = {2, 6, 4};
    auto ok = std::make_shared<std::vector<bool>>(fibers, false);
    for (unsigned f = 0; f < fibers; ++f) {
      const auto id = run.spawn([t, ok, f] { (*ok)[f] = t->insert(keys[f]); });
      if (f == 0) continue;
      if (when == helper_start::at_step1) run.gate_until(id, protocol_event::rebalance_begun);
      if (when == helper_start::at_step2) run.gate_until(id, protocol_event::step2_entered);
    }
    std::set<key_type> expected{1, 3, 5, 7, 10, 11};
    for (unsigned f = 0; f < fibers; ++f) expected.insert(keys[f]);
    return [t, ok, seq0, expected]() -> std::string {
      for (bool b : *ok)
        if (!b) return "an insert of an absent key failed";
      const auto c = t->counters();
      if (c.committed != 1) return "expected one committed replacement, got " + std::to_string(c.committed);
      return audit(*t, expected, seq0 + 1);
    };
  };
}

/// ic (full) -> P1 [ {1,2,~,~} {11,12} ]  P2 [ {21,22} ]  P3 [ {41,42} ]
/// A rebalances the left leaf, advertised on ic; B grows the tree, which
/// freezes and replaces ic itself.
inline layout grandparent_layout() {
  const std::uint64_t x = tomb();
  return layout::internal(
      {20, 40}, {layout::internal({10}, {layout::leaf({1, 2, x, x}), layout::leaf({11, 12})}),
                 layout::internal({}, {layout::leaf({21, 22})}),
                 layout::internal({}, {layout::leaf({41, 42})})});
}

inline scenario_fn grandparent_replaced(unsigned fibers) {
  if (fibers < 2 || fibers > 3) throw std::invalid_argument("grandparent scenario runs with 2 or 3 fibers");
  return [fibers](sim_run& run) -> check_fn {
    auto t = std::make_shared<sim_tree>(tree_config{3, 4, 2}, grandparent_layout());
    const std::uint64_t seq0 = t->root_status().sequence();
    auto* ic = as_internal(t->root()->children[0].peek());
    const std::uint64_t ic_seq0 = status_word{ic->status.peek()}.sequence();
    auto began = std::make_shared<std::vector<bool>>(2, false);
    run.spawn([t, began] { (*began)[0] = t->rebalance_at(1, 0); });
    run.spawn([t, began] { (*began)[1] = t->rebalance_at(41, 64); });
    auto seen = std::make_shared<key_type>(0);
    if (fibers == 3) run.spawn([t, seen] { *seen = t->search(11, 50); });
    return [t, began, seq0, ic, ic_seq0, seen, fibers]() -> std::string {
      if (fibers == 3 && *seen != 11) return "search(11, 50) returned " + std::to_string(*seen);
      // A advertises on ic, or on the new parent of its leaf when B's
      // growth came first; either way ic saw at most one cleared rebalance.
      const status_word s{ic->status.peek()};
      if (!s.frozen() || s.sequence() < ic_seq0 || s.sequence() > ic_seq0 + 1 ||
          (s.sequence() == ic_seq0 + 1 && !(*began)[0])) {
        std::ostringstream os;
        os << "replaced ic ends as " << s;
        return os.str();
      }
      if (!(*began)[1]) return "the root growth was never advertised";
      if (t->counters().by_action[static_cast<std::size_t>(rebalance_action::grow)] != 1)
        return "expected exactly one root growth";
      return audit(*t, {1, 2, 11, 12, 21, 22, 41, 42}, seq0 + 1);
    };
  };
}

}  // namespace detail

/// The built-in protocol cases. With `fibers` = 3 the split races get a
/// third inserter and the grandparent case a concurrent search.
inline std::vector<scenario_spec> protocol_scenarios(unsigned fibers = 2) {
  return {
      {"concurrent-begin", "inserts race to split the same full leaf",
       detail::split_race(detail::helper_start::together, fibers)},
      {"helper-step1", "later inserts start once the split is advertised (STEP1)",
       detail::split_race(detail::helper_start::at_step1, fibers)},
      {"helper-step2", "later inserts start once the split reached STEP2",
       detail::split_race(detail::helper_start::at_step2, fibers)},
      {"grandparent-replaced",
       "a leaf compaction is pending on ic while a climbing split replaces ic",
       detail::grandparent_replaced(fibers)},
  };
}

/// Two fibers writing one cell `n` and `m` times: every schedule is a
/// distinct trace, so exploration must visit C(n+m, n) executions.
inline scenario_fn counting_scenario(unsigned n, unsigned m) {
  return [n, m](sim_run& run) -> check_fn {
    auto x = std::make_shared<shared_cell<unsigned, sim_memory>>(0u);
    run.spawn([x, n] {
      for (unsigned i = 0; i < n; ++i) x->store(i);
    });
    run.spawn([x, m] {
      for (unsigned i = 0; i < m; ++i) x->store(i);
    });
    return [x] { return std::string(); };
  };
}

inline std::uint64_t interleavings(unsigned n, unsigned m) {
  std::uint64_t r = 1;
  for (unsigned i = 1; i <= m; ++i) r = r * (n + i) / i;
  return r;
}

struct suspension_result {
  bool suspended = false;   // the victim stopped right after freezing
  std::uint64_t completed = 0;  // operations finished by the other fibers
  std::uint64_t helper_commits = 0;
  std::string error;
};

/// One fiber is stopped for good right after it froze the nodes of a split;
/// `workers` other fibers then run `ops` seeded operations each.
inline suspension_result suspended_freeze(unsigned workers, unsigned ops, std::uint64_t seed) {
  suspension_result out;
  auto t = std::make_shared<sim_tree>(tree_config{3, 4, 2}, detail::full_leaf_layout());
  auto done = std::make_shared<std::uint64_t>(0);
  scenario_fn scen = [&](sim_run& run) -> check_fn {
    const auto victim = run.spawn([t] { t->insert(2); });
    run.suspend_after(victim, protocol_event::nodes_frozen);
    for (unsigned w = 0; w < workers; ++w) {
      const auto f = run.spawn([t, done, w, ops, seed] {
        std::mt19937_64 rng(seed * 1000003 + w);
        for (unsigned i = 0; i < ops; ++i) {
          const key_type a = rng() % 64 + 1, b = std::min<key_type>(a + rng() % 4, 64);
          switch (rng() % 3) {
            case 0: t->search(a, b); break;
            case 1: t->insert(a); break;
            default: t->remove(a, b); break;
          }
          ++*done;
        }
      });
      run.gate_until(f, protocol_event::nodes_frozen);
    }
    return [&out, t, victim, &run]() -> std::string {
      out.suspended = run.suspended(victim);
      for (const violation& v : t->check_structure())
        return std::string("structure: ") + to_string(v.kind) + " at " + v.where;
      return {};
    };
  };
  const explore_result r = sample(scen, seed, 1);
  out.completed = *done;
  out.helper_commits = t->counters().helper_commits;
  if (!r.failures.empty()) out.error = r.failures.front().message;
  return out;
}

}  // namespace elb::sim
