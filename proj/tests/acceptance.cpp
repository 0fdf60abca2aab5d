// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--only N ...] [--expect-fail N ...] [--small-model-seconds S]
//
// --expect-fail N keeps the exit status at 0 when criterion N fails only
// because its full input family could not be covered. A violation found
// along the way still fails the run.

#include <chrono>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "elb/harness/small_model.hpp"
#include "elb/harness/stress.hpp"
#include "elb/sim/scenarios.hpp"

using namespace elb;

namespace {

using clock_type = std::chrono::steady_clock;

double since(clock_type::time_point t0) { return std::chrono::duration<double>(clock_type::now() - t0).count(); }

struct verdict {
  bool pass = false;
  bool coverage_only = false;  // failed only because the input family was not fully covered
  std::string detail;
};

const tree_config configs[] = {{3, 4, 2}, {32, 32, 8}, {16, 64, 16}};

std::string name(const tree_config& c) {
  return "K=" + std::to_string(c.order) + ",D=" + std::to_string(c.leaf_capacity) + ",S=" +
         std::to_string(c.min_size);
}

// Totals shared by criteria 2 to 5.
struct stress_totals {
  bool ran = false;
  std::size_t runs = 0, structure = 0, snapshot = 0, worker = 0;
  std::size_t history_violations = 0, malformed = 0;
  std::uint64_t ops = 0, rebalances = 0, leaves = 0, size_bound = 0;
  std::uint64_t preservation_checks = 0, preservation_failures = 0;
  double seconds = 0;
  std::string first_problem;
};

stress_totals totals;
std::uint64_t serial_preservation_checks = 0, serial_preservation_failures = 0;

// ---------------------------------------------------------------------------

verdict criterion1() {
  const auto t0 = clock_type::now();
  std::ostringstream os;
  for (const auto& cfg : configs) {
    tree t(cfg);
    oracle_set o;
    std::mt19937_64 rng(20240501);
    std::uniform_int_distribution<key_type> key(1, 4096);
    std::uniform_int_distribution<key_type> width(0, 15);
    for (int i = 0; i < 100000; ++i) {
      const auto k = static_cast<op_kind>(rng() % 3);
      const key_type a = key(rng), b = k == op_kind::insert ? a : a + width(rng);
      key_type got = 0;
      switch (k) {
        case op_kind::search: got = t.search(a, b); break;
        case op_kind::remove: got = t.remove(a, b); break;
        case op_kind::insert: got = t.insert(a) ? 1 : 0; break;
      }
      const key_type want = oracle_apply(o, k, a, b);
      if (got != want)
        return {false, false,
                name(cfg) + ": op " + std::to_string(i) + " " + to_string(k) + "(" + std::to_string(a) + "," +
                    std::to_string(b) + ") returned " + std::to_string(got) + ", oracle " + std::to_string(want)};
    }
    if (t.snapshot() != std::vector<key_type>(o.begin(), o.end()))
      return {false, false, name(cfg) + ": final snapshot differs from the oracle set"};
    const auto c = t.counters();
    serial_preservation_checks += c.preservation_checks;
    serial_preservation_failures += c.preservation_failures;
    os << name(cfg) << " size " << o.size() << "; ";
  }
  const double s = since(t0);
  os << "3 x 100000 ops exact in " << s << " s (limit 10 s per run)";
  return {s < 30.0, false, os.str()};
}

void run_stress_batch() {
  if (totals.ran) return;
  totals.ran = true;
  const auto t0 = clock_type::now();
  for (std::uint64_t seed = 1; seed <= 21; ++seed) {
    run_config c;
    c.tree = configs[(seed - 1) % 3];
    c.threads = 8;
    c.ops = 100000;
    c.seed = seed;
    const stress_result r = run_stress(c);
    ++totals.runs;
    totals.ops += r.completed;
    totals.structure += r.structure.size();
    totals.snapshot += r.snapshot_errors.size();
    totals.worker += r.worker_errors.size();
    totals.history_violations += r.check.violations.size();
    totals.malformed += r.check.malformed.size();
    totals.rebalances += r.counters.committed;
    totals.leaves += r.counters.leaves_emitted;
    totals.size_bound += r.counters.size_bound_violations;
    totals.preservation_checks += r.counters.preservation_checks;
    totals.preservation_failures += r.counters.preservation_failures;
    if (totals.first_problem.empty()) {
      const std::string where = "seed " + std::to_string(seed) + " " + name(c.tree) + ": ";
      if (!r.structure.empty())
        totals.first_problem = where + to_string(r.structure.front().kind) + " " + r.structure.front().detail;
      else if (!r.worker_errors.empty())
        totals.first_problem = where + r.worker_errors.front();
      else if (!r.snapshot_errors.empty())
        totals.first_problem = where + r.snapshot_errors.front();
      else if (!r.check.violations.empty())
        totals.first_problem = where + to_string(r.check.violations.front().what) + " " + r.check.violations.front().detail;
    }
  }
  totals.seconds = since(t0);
}

verdict criterion2() {
  run_stress_batch();
  std::ostringstream os;
  os << totals.runs << " runs (seeds 1-21 over 3 configs) x 8 threads x 100000 ops, " << totals.structure
     << " structure violations, " << totals.snapshot << " snapshot mismatches, " << totals.worker
     << " worker errors, " << totals.seconds << " s (limit 120 s)";
  if (!totals.first_problem.empty()) os << "; first: " << totals.first_problem;
  return {totals.structure == 0 && totals.snapshot == 0 && totals.worker == 0 && totals.seconds < 120, false,
          os.str()};
}

// Two hand-edited copies of a serial trace: a search that found nothing is
// made to report an absent key, and a search that found a key is made to
// report nothing.
verdict criterion3() {
  run_stress_batch();
  run_config c;
  c.tree = configs[0];
  c.threads = 1;
  c.ops = 20000;
  c.range = 256;
  c.seed = 3;
  const history base = run_stress(c).trace;
  const membership_index idx(base);
  history absent = base, missed = base;
  bool edited_absent = false, edited_missed = false;
  for (std::size_t i = 0; i < base.ops.size() && !(edited_absent && edited_missed); ++i) {
    const op_record& r = base.ops[i];
    if (r.kind != op_kind::search) continue;
    if (!edited_absent && r.result == 0) {
      for (key_type k = r.e1; k <= r.e2; ++k)
        if (!idx.may_in(k, r.invoke, r.response)) {
          absent.ops[i].result = k;
          edited_absent = true;
          break;
        }
    } else if (!edited_missed && r.result != 0) {
      missed.ops[i].result = 0;
      edited_missed = true;
    }
  }
  const check_report ra = check_history(absent), rm = check_history(missed), rb = check_history(base);
  const bool neg_b = edited_absent && ra.violations.size() == 1 && ra.count(clause::not_present) == 1;
  const bool neg_a = edited_missed && rm.violations.size() == 1 && rm.count(clause::missed_present) == 1;
  std::ostringstream os;
  os << totals.history_violations << " violations and " << totals.malformed << " malformed records in "
     << totals.ops << " stress operations; unedited serial trace " << (rb.ok() ? "clean" : "FLAGGED")
     << "; absent-key edit flagged " << (neg_b ? to_string(clause::not_present) : "WRONGLY")
     << "; missed-presence edit flagged " << (neg_a ? to_string(clause::missed_present) : "WRONGLY");
  return {totals.history_violations == 0 && totals.malformed == 0 && rb.ok() && neg_a && neg_b, false, os.str()};
}

verdict criterion4() {
  run_stress_batch();
  std::ostringstream os;
  os << totals.leaves << " leaves emitted by " << totals.rebalances << " rebalances, " << totals.size_bound
     << " outside [min(2S, D/2); D-1]";
  return {totals.size_bound == 0 && totals.leaves > 0, false, os.str()};
}

verdict criterion5() {
  run_stress_batch();
  const std::uint64_t checks = totals.preservation_checks + serial_preservation_checks;
  const std::uint64_t fails = totals.preservation_failures + serial_preservation_failures;
  std::ostringstream os;
  os << checks << " rebalances compared before/after, " << fails << " changed the key set";
  return {fails == 0 && checks > 0, false, os.str()};
}

verdict criterion6() {
  const auto t0 = clock_type::now();
  std::ostringstream os;
  bool ok = true;
  sim::explore_options full;
  full.reduce = false;
  const auto sanity = sim::explore(sim::counting_scenario(3, 4), full);
  if (sanity.executions != sim::interleavings(3, 4)) {
    ok = false;
    os << "explorer sanity count " << sanity.executions << " != " << sim::interleavings(3, 4) << "; ";
  }
  for (const auto& s : sim::protocol_scenarios()) {
    const sim::explore_result r = sim::explore(s.run);
    os << s.name << " " << r.executions << " schedules";
    if (!r.ok()) os << " FAILED (" << r.failures.front().message << " @" << sim::format_schedule(r.failures.front().schedule) << ")";
    if (!r.complete) os << " INCOMPLETE";
    os << "; ";
    ok = ok && r.ok() && r.complete;
  }
  const double s = since(t0);
  os << s << " s (limit 300 s)";
  return {ok && s < 300, false, os.str()};
}

verdict criterion7() {
  const sim::suspension_result sim_run = sim::suspended_freeze(2, 600, 1);
  run_config c;
  c.tree = configs[0];
  c.threads = 8;
  c.ops = UINT64_MAX;
  c.duration = 30;
  c.range = 4096;
  c.record = false;
  const stress_result r = run_stress(c, 0.1);
  std::ostringstream os;
  os << "simulation: victim " << (sim_run.suspended ? "suspended after freezing" : "NOT suspended") << ", others completed "
     << sim_run.completed << " ops";
  if (!sim_run.error.empty()) os << " (" << sim_run.error << ")";
  os << "; real threads: " << r.completed << " ops in " << r.seconds << " s, " << r.stalls.size()
     << " windows of 100 ms without completions";
  const bool ok = sim_run.suspended && sim_run.completed >= 1000 && sim_run.error.empty() && r.stalls.empty() &&
                  r.ok() && r.seconds >= 29.0;
  return {ok, false, os.str()};
}

double small_model_seconds = 240;

verdict criterion8() {
  const auto t0 = clock_type::now();
  small_model_options o;
  o.sample_seconds = small_model_seconds;
  const small_model_report r = run_small_model(o);
  const double full = full_workload_count(small_alphabet(4).size(), 6);
  const std::uint64_t complete_samples = r.sampled.workloads - r.sampled.truncated;
  std::ostringstream os;
  os << "exhaustive up to 3 ops (4 prefills): " << r.exhaustive.workloads << " workloads, " << r.exhaustive.executions
     << " schedules; sampled 6-op: " << r.sampled.workloads << " workloads (" << r.sampled.truncated
     << " hit the schedule cap), " << r.sampled.executions << " schedules; "
     << r.exhaustive.failures + r.sampled.failures << " failures; " << since(t0) << " s";
  if (!r.ok()) {
    const auto& m = r.exhaustive.messages.empty() ? r.sampled.messages : r.exhaustive.messages;
    os << "; first: " << m.front();
    return {false, false, os.str()};
  }
  const double covered = double(r.exhaustive.workloads + complete_samples);
  os.precision(3);
  os << "; the full family of " << full << " workloads is not covered";
  return {covered >= full, true, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only, expect_fail;
  for (int i = 1; i < argc; ++i) {
    auto next_int = [&]() -> int {
      if (i + 1 >= argc) {
        std::cerr << "missing value after " << argv[i] << "\n";
        std::exit(2);
      }
      return std::atoi(argv[++i]);
    };
    if (!std::strcmp(argv[i], "--only"))
      only.insert(next_int());
    else if (!std::strcmp(argv[i], "--expect-fail"))
      expect_fail.insert(next_int());
    else if (!std::strcmp(argv[i], "--small-model-seconds"))
      small_model_seconds = next_int();
    else {
      std::cerr << "usage: acceptance [--only N] [--expect-fail N] [--small-model-seconds S]\n";
      return 2;
    }
  }

  const std::vector<std::function<verdict()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                       criterion5, criterion6, criterion7, criterion8};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(n)) continue;
    verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v = {false, false, std::string("exception: ") + e.what()};
    }
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << v.detail;
    if (!v.pass && v.coverage_only && expect_fail.count(n)) std::cout << " (expected)";
    std::cout << std::endl;
    if (!v.pass && !(v.coverage_only && expect_fail.count(n))) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
