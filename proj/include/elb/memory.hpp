#pragma once

// Shared cells: every word that more than one thread may write (leaf slots,
// status fields, child links) lives in a shared_cell. The Memory policy sees
// each access before it happens, which lets the simulator in elb/sim
// interleave threads at access granularity. native_memory compiles to plain
// atomics.

#include <atomic>
#include <cstdint>

namespace elb {

enum class access : std::uint8_t { load, store, cas };

// Protocol milestones reported to the Memory policy. The simulator uses them
// to gate or suspend threads at precise points of a rebalance.
enum class protocol_event : std::uint8_t {
  rebalance_begun,
  nodes_frozen,
  step2_entered,
  link_swapped,
  status_cleared,
};

struct native_memory {
  static constexpr bool simulated = false;
  static void before(const void*, access) noexcept {}
  static void event(protocol_event) noexcept {}
};

template <class T, class Memory>
class shared_cell {
public:
  shared_cell() noexcept = default;
  explicit shared_cell(T v) noexcept : v_(v) {}
  shared_cell(const shared_cell&) = delete;
  shared_cell& operator=(const shared_cell&) = delete;

  T load() const {
    Memory::before(this, access::load);
    return v_.load(std::memory_order_acquire);
  }

  void store(T v) {
    Memory::before(this, access::store);
    v_.store(v, std::memory_order_release);
  }

  // On failure `expected` receives the current value.
  bool cas(T& expected, T desired) {
    Memory::before(this, access::cas);
    return v_.compare_exchange_strong(expected, desired, std::memory_order_acq_rel,
                                      std::memory_order_acquire);
  }

  // Unobserved access for quiescent checkers and construction.
  T peek() const noexcept { return v_.load(std::memory_order_relaxed); }
  void poke(T v) noexcept { v_.store(v, std::memory_order_relaxed); }

private:
  std::atomic<T> v_{};
};

}  // namespace elb
