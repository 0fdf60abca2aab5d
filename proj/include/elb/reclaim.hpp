#pragma once

// Epoch-based reclamation for unlinked tree nodes.
//
// Threads announce the global epoch on entry to an operation and clear the
// announcement on exit. A node retired during epoch e is freed once the
// global epoch reaches e + 2, at which point every operation that could have
// seen the node has finished. Entering, leaving and retiring never wait for
// another thread; a stalled thread only delays freeing.

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace elb {

enum class reclaim_mode : unsigned char {
  retire,      // free through the epoch domain
  never_free,  // keep every unlinked node until the tree is destroyed
};

class epoch_domain {
public:
  static constexpr std::size_t max_threads = 512;
  static constexpr std::size_t scan_interval = 64;

  struct retired {
    void* ptr;
    void (*deleter)(void*);
  };

  static epoch_domain& instance() {
    static epoch_domain d;
    return d;
  }

  ~epoch_domain() {
    for (auto& r : orphans_) r.deleter(r.ptr);
  }

  void enter() {
    participant& p = local();
    if (p.depth++ == 0) {
      slots_[p.slot].epoch.store(global_.load(std::memory_order_relaxed) | 1,
                                 std::memory_order_relaxed);
      std::atomic_thread_fence(std::memory_order_seq_cst);
    }
  }

  void leave() {
    participant& p = local();
    if (--p.depth == 0) slots_[p.slot].epoch.store(0, std::memory_order_release);
  }

  void retire(void* ptr, void (*deleter)(void*)) {
    participant& p = local();
    const std::uint64_t e = global_.load(std::memory_order_acquire);
    bag& b = p.bags[(e >> 1) % 3];
    if (b.epoch != e) {
      collect(b);
      b.epoch = e;
    }
    b.items.push_back({ptr, deleter});
    if (++p.retire_count % scan_interval == 0) try_advance();
  }

  std::uint64_t epoch() const noexcept { return global_.load(std::memory_order_acquire); }

  // Frees everything retired by the calling thread that is safe to free.
  void flush() {
    participant& p = local();
    try_advance();
    const std::uint64_t g = global_.load(std::memory_order_acquire);
    for (auto& b : p.bags)
      if (b.epoch + 4 <= g) collect(b);
  }

  class guard {
  public:
    explicit guard(epoch_domain* d) : d_(d) {
      if (d_) d_->enter();
    }
    guard(const guard&) = delete;
    guard& operator=(const guard&) = delete;
    ~guard() {
      if (d_) d_->leave();
    }

  private:
    epoch_domain* d_;
  };

private:
  // Epochs advance in steps of 2; an announced epoch has its low bit set so
  // that 0 can mean "not in an operation".
  struct alignas(64) slot {
    std::atomic<std::uint64_t> epoch{0};
    std::atomic<bool> taken{false};
  };

  struct bag {
    std::uint64_t epoch = 0;
    std::vector<retired> items;
  };

  static void collect(bag& b) {
    for (auto& r : b.items) r.deleter(r.ptr);
    b.items.clear();
  }

  struct participant {
    epoch_domain* domain = nullptr;
    std::size_t slot = 0;
    std::size_t depth = 0;
    std::size_t retire_count = 0;
    std::array<bag, 3> bags;

    ~participant() {
      if (!domain) return;
      std::lock_guard lk(domain->orphan_mutex_);
      for (auto& b : bags)
        domain->orphans_.insert(domain->orphans_.end(), b.items.begin(), b.items.end());
      domain->slots_[slot].epoch.store(0, std::memory_order_release);
      domain->slots_[slot].taken.store(false, std::memory_order_release);
    }
  };

  participant& local() {
    thread_local participant p;
    if (!p.domain) {
      for (std::size_t i = 0; i < max_threads; ++i) {
        bool expected = false;
        if (slots_[i].taken.compare_exchange_strong(expected, true)) {
          p.slot = i;
          p.domain = this;
          break;
        }
      }
      if (!p.domain) throw std::runtime_error("epoch_domain: too many threads");
    }
    return p;
  }

  void try_advance() {
    const std::uint64_t g = global_.load(std::memory_order_acquire);
    for (auto& s : slots_) {
      const std::uint64_t e = s.epoch.load(std::memory_order_acquire);
      if (e != 0 && e != (g | 1)) return;
    }
    std::uint64_t expected = g;
    global_.compare_exchange_strong(expected, g + 2, std::memory_order_acq_rel);
  }

  std::atomic<std::uint64_t> global_{2};
  std::array<slot, max_threads> slots_{};
  std::mutex orphan_mutex_;
  std::vector<retired> orphans_;
};

}  // namespace elb
