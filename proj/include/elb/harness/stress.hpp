#pragma once

// Multi-threaded stress runs: seeded workers, history capture, and the
// post-run audits (structure, snapshot against the history, checker).

#include <atomic>
#include <chrono>
#include <exception>
#include <latch>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "elb/harness/workload.hpp"
#include "elb/tree.hpp"
#include "elb/verify/checker.hpp"

namespace elb {

struct stress_result {
  history trace;
  check_report check;
  std::vector<violation> structure;
  std::vector<std::string> snapshot_errors;
  std::vector<std::string> worker_errors;
  rebalance_counters counters;
  std::uint64_t completed = 0;
  double seconds = 0;
  std::vector<std::pair<double, double>> stalls;  // seconds since start, from live monitoring
  std::size_t final_size = 0;

  bool ok() const {
    return check.ok() && structure.empty() && snapshot_errors.empty() && worker_errors.empty() &&
           stalls.empty();
  }
};

namespace detail {

inline key_type apply(tree& t, const planned_op& op) {
  switch (op.kind) {
    case op_kind::search: return t.search(op.e1, op.e2);
    case op_kind::remove: return t.remove(op.e1, op.e2);
    case op_kind::insert: return t.insert(op.e1) ? 1 : 0;
  }
  return 0;
}

/// Final contents must equal what the recorded updates imply: per key, the
/// number of successful inserts minus the removes returning it.
inline std::vector<std::string> snapshot_against(const history& h, const std::vector<key_type>& snap) {
  std::map<key_type, long long> balance;
  for (const op_record& r : h.ops) {
    if (r.kind == op_kind::insert && r.result == 1) ++balance[r.e1];
    if (r.kind == op_kind::remove && r.result != 0) --balance[r.result];
  }
  std::vector<std::string> errs;
  std::set<key_type> present(snap.begin(), snap.end());
  for (const auto& [k, b] : balance) {
    const long long want = present.count(k) ? 1 : 0;
    if (b != want)
      errs.push_back("key " + std::to_string(k) + ": updates imply " + std::to_string(b) +
                     " copies, snapshot has " + std::to_string(want));
  }
  for (key_type k : snap)
    if (!balance.count(k)) errs.push_back("key " + std::to_string(k) + " present but never inserted");
  return errs;
}

}  // namespace detail

/// Runs the workload described by `c`. When `stall_window` is positive a
/// monitor thread samples completions every millisecond and reports each
/// period of at least that many seconds in which none finished.
inline stress_result run_stress(const run_config& c, double stall_window = 0) {
  c.validate();
  tree_config tc = c.tree;
  if (tc.max_restarts == 0) tc.max_restarts = 1000000;
  tree t(tc, c.reclaim);
  stamp_clock clock(c.threads == 1);
  history_recorder rec(c.threads, c.record ? c.ops : 0);
  std::vector<std::atomic<std::uint64_t>> done(c.threads);
  std::atomic<unsigned> running{c.threads};
  std::mutex err_mu;
  stress_result res;

  std::latch start(c.threads + 1);
  const auto deadline_ns = static_cast<std::int64_t>(c.duration * 1e9);
  std::chrono::steady_clock::time_point t0;

  std::vector<std::thread> workers;
  for (unsigned id = 0; id < c.threads; ++id) {
    workers.emplace_back([&, id] {
      op_stream ops(c, id);
      auto& log = rec.log(id);
      start.arrive_and_wait();
      try {
        for (std::uint64_t i = 0; i < c.ops; ++i) {
          if (deadline_ns > 0 && (i & 255) == 0 &&
              std::chrono::steady_clock::now() - t0 >= std::chrono::nanoseconds(deadline_ns))
            break;
          const planned_op op = ops.next();
          if (c.record) {
            const std::uint64_t t1 = clock.now();
            const key_type r = detail::apply(t, op);
            const std::uint64_t t2 = clock.now();
            log.push_back({id, op.kind, op.e1, op.e2, t1, t2, r});
          } else {
            detail::apply(t, op);
          }
          done[id].fetch_add(1, std::memory_order_relaxed);
        }
      } catch (const std::exception& e) {
        std::lock_guard lk(err_mu);
        res.worker_errors.push_back("thread " + std::to_string(id) + ": " + e.what());
      }
      running.fetch_sub(1, std::memory_order_acq_rel);
    });
  }

  t0 = std::chrono::steady_clock::now();
  start.arrive_and_wait();
  if (stall_window > 0) {
    using namespace std::chrono;
    std::uint64_t last_total = 0;
    auto last_change = steady_clock::now();
    bool in_stall = false;
    while (running.load(std::memory_order_acquire) > 0) {
      std::this_thread::sleep_for(milliseconds(1));
      std::uint64_t total = 0;
      for (auto& d : done) total += d.load(std::memory_order_relaxed);
      const auto now = steady_clock::now();
      if (total != last_total) {
        if (in_stall)
          res.stalls.back().second = duration<double>(now - t0).count();
        in_stall = false;
        last_total = total;
        last_change = now;
      } else if (!in_stall && duration<double>(now - last_change).count() >= stall_window &&
                 running.load(std::memory_order_acquire) > 0) {
        in_stall = true;
        res.stalls.emplace_back(duration<double>(last_change - t0).count(),
                                duration<double>(now - t0).count());
      }
    }
  }
  for (auto& w : workers) w.join();
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (auto& d : done) res.completed += d.load();

  res.counters = t.counters();
  res.structure = t.check_structure();
  std::vector<key_type> snap;
  try {
    snap = t.snapshot();
  } catch (const structure_error& e) {
    res.snapshot_errors.push_back(e.what());
  }
  res.final_size = snap.size();
  if (c.record) {
    res.trace = rec.merge();
    res.trace.config = c.tree;
    res.check = check_history(res.trace);
    auto errs = detail::snapshot_against(res.trace, snap);
    res.snapshot_errors.insert(res.snapshot_errors.end(), errs.begin(), errs.end());
  }
  return res;
}

struct bench_row {
  unsigned threads;
  std::uint64_t ops;
  double seconds;
  double ops_per_sec;
};

/// Throughput for each thread count over a fixed wall-clock duration.
inline std::vector<bench_row> run_bench(run_config c, const std::vector<unsigned>& thread_counts) {
  if (!(c.duration > 0)) throw config_error("bench duration must be positive");
  std::vector<bench_row> rows;
  for (unsigned n : thread_counts) {
    c.threads = n;
    c.record = false;
    c.ops = UINT64_MAX;
    c.validate();
    tree t(c.tree, c.reclaim);
    {
      // Prefill to half the key range so removes find work from the start.
      op_stream fill(run_config{c.tree, 1, 0, c.range, c.span, {0, 1, 0}, c.seed, 0, c.reclaim, false}, 0);
      for (key_type i = 0; i < c.range / 2; ++i) t.insert(fill.next().e1);
    }
    std::atomic<bool> stop{false};
    std::vector<std::uint64_t> count(n);
    std::latch start(n + 1);
    std::vector<std::thread> ws;
    for (unsigned id = 0; id < n; ++id)
      ws.emplace_back([&, id] {
        op_stream ops(c, id);
        start.arrive_and_wait();
        std::uint64_t k = 0;
        while (!stop.load(std::memory_order_relaxed)) {
          detail::apply(t, ops.next());
          ++k;
        }
        count[id] = k;
      });
    start.arrive_and_wait();
    const auto t0 = std::chrono::steady_clock::now();
    std::this_thread::sleep_for(std::chrono::duration<double>(c.duration));
    stop.store(true);
    for (auto& w : ws) w.join();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::uint64_t total = 0;
    for (auto k : count) total += k;
    rows.push_back({n, total, secs, double(total) / secs});
  }
  return rows;
}

}  // namespace elb
