#pragma once

// Small-model checking: tiny workloads on a tiny tree, every 2-fiber
// schedule explored, each history checked and each final key set matched
// against some serial order of the successful updates.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "elb/sim/scheduler.hpp"
#include "elb/tree.hpp"
#include "elb/verify/checker.hpp"

namespace elb {

struct small_op {
  op_kind kind;
  key_type e1, e2;
};

inline std::string to_string(const small_op& op) {
  std::string s = to_string(op.kind);
  s += "(" + std::to_string(op.e1);
  if (op.kind != op_kind::insert) s += "," + std::to_string(op.e2);
  return s + ")";
}

struct small_workload {
  std::vector<key_type> prefill;           // inserted serially before the fibers start
  std::vector<std::vector<small_op>> threads;
};

inline std::string to_string(const small_workload& w) {
  std::string s = "prefill{";
  for (std::size_t i = 0; i < w.prefill.size(); ++i) s += (i ? "," : "") + std::to_string(w.prefill[i]);
  s += "}";
  for (std::size_t t = 0; t < w.threads.size(); ++t) {
    s += " T" + std::to_string(t) + "[";
    for (std::size_t i = 0; i < w.threads[t].size(); ++i) s += (i ? " " : "") + to_string(w.threads[t][i]);
    s += "]";
  }
  return s;
}

/// Every distinct operation over keys 1..max: inserts, and searches and
/// removes over each range [e1; e2].
inline std::vector<small_op> small_alphabet(key_type max = 4) {
  std::vector<small_op> out;
  for (key_type e = 1; e <= max; ++e) out.push_back({op_kind::insert, e, e});
  for (op_kind k : {op_kind::search, op_kind::remove})
    for (key_type a = 1; a <= max; ++a)
      for (key_type b = a; b <= max; ++b) out.push_back({k, a, b});
  return out;
}

/// True if applying the successful updates of `h`, in some order, to
/// `initial` reproduces each recorded result and ends at `final_keys`.
inline bool reachable_by_serial_order(const std::set<key_type>& initial, const history& h,
                                      const std::set<key_type>& final_keys) {
  std::vector<const op_record*> ups;
  for (const op_record& r : h.ops)
    if ((r.kind == op_kind::insert && r.result == 1) || (r.kind == op_kind::remove && r.result != 0))
      ups.push_back(&r);
  std::vector<std::size_t> idx(ups.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  do {
    std::set<key_type> s = initial;
    bool ok = true;
    for (std::size_t i : idx) {
      const op_record& r = *ups[i];
      if (r.kind == op_kind::insert)
        ok = s.insert(r.e1).second;
      else
        ok = s.erase(r.result) == 1;
      if (!ok) break;
    }
    if (ok && s == final_keys) return true;
  } while (std::next_permutation(idx.begin(), idx.end()));
  return false;
}

struct workload_result {
  std::uint64_t executions = 0;
  bool complete = true;  // false when the execution cap cut the search short
  std::string problem;   // first problem with its schedule, empty if none
};

/// Explores every schedule of one workload (up to `opt.max_executions`).
inline workload_result check_workload(const small_workload& w, const tree_config& cfg,
                                      const sim::explore_options& opt = {}) {
  using sim_tree = basic_tree<sim::sim_memory>;
  const sim::scenario_fn scen = [&](sim::sim_run& run) -> sim::check_fn {
    auto t = std::make_shared<sim_tree>(cfg, reclaim_mode::never_free);
    const std::size_t setup = w.threads.size();  // records the serial prefill
    auto rec = std::make_shared<history_recorder>(setup + 1);
    for (key_type k : w.prefill) {
      const std::uint64_t t1 = run.stamp();
      const bool ok = t->insert(k);
      rec->log(setup).push_back({static_cast<std::uint32_t>(setup), op_kind::insert, k, k, t1, run.stamp(), ok ? 1u : 0u});
    }
    for (std::size_t f = 0; f < w.threads.size(); ++f)
      run.spawn([t, rec, f, &w, &run] {
        for (const small_op& op : w.threads[f]) {
          const std::uint64_t t1 = run.stamp();
          key_type r = 0;
          switch (op.kind) {
            case op_kind::search: r = t->search(op.e1, op.e2); break;
            case op_kind::remove: r = t->remove(op.e1, op.e2); break;
            case op_kind::insert: r = t->insert(op.e1) ? 1 : 0; break;
          }
          const std::uint64_t t2 = run.stamp();
          rec->log(f).push_back({static_cast<std::uint32_t>(f), op.kind, op.e1, op.e2, t1, t2, r});
        }
      });
    return [t, rec, setup]() -> std::string {
      const history h = rec->merge();
      const check_report rep = check_history(h);
      if (!rep.ok()) {
        if (rep.violations.empty()) return "history: malformed: " + rep.malformed.front().detail;
        return std::string("history: ") + to_string(rep.violations.front().what) + " " +
               rep.violations.front().detail;
      }
      for (const violation& v : t->check_structure())
        return std::string("structure: ") + to_string(v.kind) + " " + v.detail;
      std::vector<key_type> snap;
      try {
        snap = t->snapshot();
      } catch (const std::exception& e) {
        return std::string("snapshot: ") + e.what();
      }
      std::set<key_type> initial;
      history concurrent;
      for (const op_record& r : h.ops) {
        if (r.thread != setup)
          concurrent.ops.push_back(r);
        else if (r.result == 1)
          initial.insert(r.e1);
      }
      if (!reachable_by_serial_order(initial, concurrent, std::set<key_type>(snap.begin(), snap.end())))
        return "final key set not reachable by any serial order of the successful updates";
      return {};
    };
  };
  const sim::explore_result r = sim::explore(scen, opt);
  workload_result out{r.executions + r.blocked, r.complete, {}};
  if (!r.failures.empty())
    out.problem = r.failures.front().message + " @" + sim::format_schedule(r.failures.front().schedule);
  return out;
}

/// Calls `fn` on every 2-thread workload of exactly `ops` operations drawn
/// from `alphabet`. Swapping the threads gives the same schedules, so only
/// splits with |T0| <= |T1| are produced (and T0 <= T1 when equal).
template <class Fn>
void for_each_workload(const std::vector<small_op>& alphabet, const std::vector<key_type>& prefill,
                       std::size_t ops, Fn&& fn) {
  const std::size_t a = alphabet.size();
  std::vector<std::size_t> idx(ops, 0);
  for (;;) {
    for (std::size_t left = 0; 2 * left <= ops; ++left) {
      if (2 * left == ops &&
          std::lexicographical_compare(idx.begin() + left, idx.end(), idx.begin(), idx.begin() + left))
        continue;
      small_workload w;
      w.prefill = prefill;
      w.threads.resize(2);
      for (std::size_t i = 0; i < ops; ++i) w.threads[i < left ? 0 : 1].push_back(alphabet[idx[i]]);
      fn(w);
    }
    std::size_t i = 0;
    while (i < ops && ++idx[i] == a) idx[i++] = 0;
    if (i == ops) return;
  }
}

/// A random 2-thread workload of `ops` operations.
inline small_workload random_workload(std::mt19937_64& rng, const std::vector<small_op>& alphabet,
                                      const std::vector<std::vector<key_type>>& prefills, std::size_t ops) {
  small_workload w;
  w.prefill = prefills[std::uniform_int_distribution<std::size_t>(0, prefills.size() - 1)(rng)];
  w.threads.resize(2);
  const std::size_t left = std::uniform_int_distribution<std::size_t>(0, ops)(rng);
  for (std::size_t i = 0; i < ops; ++i)
    w.threads[i < left ? 0 : 1].push_back(
        alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)]);
  return w;
}

struct small_model_stats {
  std::uint64_t workloads = 0;
  std::uint64_t executions = 0;
  std::uint64_t truncated = 0;  // workloads whose search hit the execution cap
  std::uint64_t failures = 0;
  std::vector<std::string> messages;  // first few failures

  void add(const small_workload& w, const workload_result& r) {
    ++workloads;
    executions += r.executions;
    if (!r.complete) ++truncated;
    if (!r.problem.empty()) {
      ++failures;
      if (messages.size() < 5) messages.push_back(to_string(w) + ": " + r.problem);
    }
  }
};

struct small_model_options {
  tree_config tree{3, 4, 2};
  key_type max_key = 4;
  // Exhaustive part: every workload of up to `ops` operations after each prefill.
  struct tier {
    std::vector<key_type> prefill;
    std::size_t ops;
  };
  std::vector<tier> exhaustive{{{}, 3}, {{1, 3}, 3}, {{1, 2, 3}, 3}, {{1, 2, 3, 4}, 2}};
  // Sampled part: random workloads of `sample_ops` operations until the budget runs out.
  std::vector<std::vector<key_type>> sample_prefills{{}, {1, 3}, {1, 2, 3}, {1, 2, 3, 4}, {2, 4}};
  std::size_t sample_ops = 6;
  std::uint64_t seed = 1;
  double sample_seconds = 60;
  std::uint64_t max_samples = 0;  // 0: budget only
  std::uint64_t execution_cap = 20000;
};

struct small_model_report {
  small_model_stats exhaustive, sampled;
  bool ok() const noexcept { return exhaustive.failures == 0 && sampled.failures == 0; }
};

inline small_model_report run_small_model(const small_model_options& o) {
  small_model_report rep;
  const auto alphabet = small_alphabet(o.max_key);
  for (const auto& t : o.exhaustive)
    for (std::size_t n = 1; n <= t.ops; ++n)
      for_each_workload(alphabet, t.prefill, n,
                        [&](const small_workload& w) { rep.exhaustive.add(w, check_workload(w, o.tree)); });
  sim::explore_options capped;
  capped.max_executions = o.execution_cap;
  std::mt19937_64 rng(o.seed);
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  while ((o.max_samples == 0 || rep.sampled.workloads < o.max_samples) && elapsed() < o.sample_seconds) {
    const small_workload w = random_workload(rng, alphabet, o.sample_prefills, o.sample_ops);
    rep.sampled.add(w, check_workload(w, o.tree, capped));
  }
  return rep;
}

/// Number of 2-thread workloads with 1..ops operations over `alphabet`
/// symbols, counting both thread orders.
inline double full_workload_count(std::size_t alphabet, std::size_t ops) {
  double total = 0;
  for (std::size_t n = 1; n <= ops; ++n) total += std::pow(double(alphabet), double(n)) * double(n + 1);
  return total;
}

}  // namespace elb
