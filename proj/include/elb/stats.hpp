#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

#include "elb/plan.hpp"

namespace elb {

/// Plain copy of the rebalance counters.
struct rebalance_counters {
  std::uint64_t begun = 0;              // status fields claimed
  std::uint64_t committed = 0;          // successful child-link swaps
  std::uint64_t helper_commits = 0;     // swaps performed by a thread that did not begin the rebalance
  std::uint64_t cleared = 0;            // status fields returned to NONE
  std::uint64_t discarded_builds = 0;   // replacement parents built by helpers that lost the swap
  std::array<std::uint64_t, rebalance_action_count> by_action{};
  std::uint64_t leaves_emitted = 0;     // leaves produced by split/merge/redistribute/copy
  std::uint64_t sole_leaves_emitted = 0;
  std::uint64_t size_bound_violations = 0;  // non-final emitted leaves outside [min(2S, D/2); D-1]
  std::uint64_t preservation_checks = 0;
  std::uint64_t preservation_failures = 0;
  std::vector<std::uint64_t> emitted_sizes;  // histogram indexed by leaf population

  std::uint64_t restarts = 0;
};

/// Lock-free instrumentation shared by all threads of one tree.
class rebalance_stats {
public:
  explicit rebalance_stats(unsigned leaf_capacity)
      : sizes_(new std::atomic<std::uint64_t>[leaf_capacity + 1]), size_slots_(leaf_capacity + 1) {
    for (unsigned i = 0; i <= leaf_capacity; ++i) sizes_[i].store(0, std::memory_order_relaxed);
  }

  std::atomic<std::uint64_t> begun{0}, committed{0}, helper_commits{0}, cleared{0},
      discarded_builds{0}, leaves_emitted{0}, sole_leaves_emitted{0}, size_bound_violations{0},
      preservation_checks{0}, preservation_failures{0}, restarts{0};
  std::array<std::atomic<std::uint64_t>, rebalance_action_count> by_action{};

  void emitted(std::size_t size) {
    if (size < size_slots_) sizes_[size].fetch_add(1, std::memory_order_relaxed);
  }

  static void bump(std::atomic<std::uint64_t>& c, std::uint64_t n = 1) {
    c.fetch_add(n, std::memory_order_relaxed);
  }

  rebalance_counters snapshot() const {
    rebalance_counters c;
    auto rd = [](const std::atomic<std::uint64_t>& a) { return a.load(std::memory_order_relaxed); };
    c.begun = rd(begun);
    c.committed = rd(committed);
    c.helper_commits = rd(helper_commits);
    c.cleared = rd(cleared);
    c.discarded_builds = rd(discarded_builds);
    for (std::size_t i = 0; i < rebalance_action_count; ++i) c.by_action[i] = rd(by_action[i]);
    c.leaves_emitted = rd(leaves_emitted);
    c.sole_leaves_emitted = rd(sole_leaves_emitted);
    c.size_bound_violations = rd(size_bound_violations);
    c.preservation_checks = rd(preservation_checks);
    c.preservation_failures = rd(preservation_failures);
    c.restarts = rd(restarts);
    c.emitted_sizes.resize(size_slots_);
    for (std::size_t i = 0; i < size_slots_; ++i) c.emitted_sizes[i] = rd(sizes_[i]);
    return c;
  }

private:
  std::unique_ptr<std::atomic<std::uint64_t>[]> sizes_;
  std::size_t size_slots_;
};

}  // namespace elb
