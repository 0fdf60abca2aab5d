// elbtree: stress runs, trace checking, schedule exploration and benchmarks
// for the ELB-tree.
//
// Exit codes: 0 pass, 1 violation, 2 usage or configuration error, 3 I/O.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "elb/harness/small_model.hpp"
#include "elb/harness/stress.hpp"
#include "elb/sim/scenarios.hpp"

namespace {

using namespace elb;

constexpr int exit_pass = 0, exit_violation = 1, exit_usage = 2, exit_io = 3;

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct tree_flags {
  unsigned order = 32, leaf_cap = 32, min_size = 8;
  tree_config config() const { return {order, leaf_cap, min_size}; }
};

void add_tree_flags(CLI::App* cmd, tree_flags& f) {
  cmd->add_option("--order", f.order, "K: maximum children of an internal node")->capture_default_str();
  cmd->add_option("--leaf-cap", f.leaf_cap, "D: key slots per leaf")->capture_default_str();
  cmd->add_option("--min-size", f.min_size, "S: minimum leaf population")->capture_default_str();
}

const std::map<std::string, reclaim_mode> reclaim_names{{"retire", reclaim_mode::retire},
                                                        {"never-free", reclaim_mode::never_free}};

void print_counters(std::ostream& os, const rebalance_counters& c) {
  os << "rebalances: begun " << c.begun << ", committed " << c.committed << " (helpers " << c.helper_commits
     << "), cleared " << c.cleared << ", discarded builds " << c.discarded_builds << "\n";
  os << "actions:";
  for (std::size_t i = 0; i < rebalance_action_count; ++i)
    os << " " << to_string(static_cast<rebalance_action>(i)) << "=" << c.by_action[i];
  os << "\n";
  os << "leaves emitted: " << c.leaves_emitted << " (sole " << c.sole_leaves_emitted << "), size-bound violations "
     << c.size_bound_violations << "\n";
  os << "preservation: " << c.preservation_checks << " checked, " << c.preservation_failures << " failed\n";
  os << "restarts: " << c.restarts << "\n";
}

void print_violation(std::ostream& os, const history& h, const history_violation& v) {
  const op_record& r = h.ops[v.op];
  os << to_string(v.what) << ": thread " << r.thread << " " << to_string(r.kind) << "(" << r.e1;
  if (r.kind != op_kind::insert) os << "," << r.e2;
  os << ") [" << r.invoke << "," << r.response << ") -> " << r.result << ": " << v.detail << "\n";
}

int report_check(std::ostream& os, const history& h, const check_report& rep, std::size_t limit = 20) {
  for (const auto& m : rep.malformed) os << "malformed: op " << m.op << ": " << m.detail << "\n";
  std::size_t shown = 0;
  for (const auto& v : rep.violations) {
    if (shown++ == limit) {
      os << "... " << rep.violations.size() - limit << " more\n";
      break;
    }
    print_violation(os, h, v);
  }
  os << h.ops.size() << " operations, " << rep.violations.size() << " violations";
  for (clause c : {clause::missed_present, clause::not_present, clause::not_minimal, clause::insert_conflict,
                   clause::unmatched_remove})
    if (rep.count(c)) os << ", " << to_string(c) << " x" << rep.count(c);
  os << ", " << rep.malformed.size() << " malformed\n";
  return rep.ok() ? exit_pass : exit_violation;
}

void write_trace_file(const std::string& path, const history& h) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  write_trace(out, h);
  out.flush();
  if (!out) throw io_error("write to '" + path + "' failed");
}

history read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path + "'");
  try {
    return read_trace(in);
  } catch (const trace_error& e) {
    throw io_error(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

struct stress_flags {
  tree_flags tree;
  unsigned threads = 8;
  std::uint64_t ops = 100000;
  key_type range = 1u << 16;
  key_type span = 16;
  std::string mix = "50:25:25";
  std::uint64_t seed = 1;
  double duration = 0;
  std::string reclaim = "never-free";
  std::string trace;
  double stall_window = 0;
};

int cmd_stress(const stress_flags& f) {
  run_config c;
  c.tree = f.tree.config();
  c.threads = f.threads;
  c.ops = f.ops;
  c.range = f.range;
  c.span = f.span;
  c.mix = parse_mix(f.mix);
  c.seed = f.seed;
  c.duration = f.duration;
  c.reclaim = reclaim_names.at(f.reclaim);
  c.validate();
  if (!f.trace.empty()) {
    std::ofstream probe(f.trace);
    if (!probe) throw io_error("cannot open '" + f.trace + "' for writing");
  }

  const stress_result r = run_stress(c, f.stall_window);
  std::cout << "completed " << r.completed << " operations in " << r.seconds << " s, final size "
            << r.final_size << "\n";
  print_counters(std::cout, r.counters);
  for (const auto& e : r.worker_errors) std::cout << "worker error: " << e << "\n";
  for (const auto& v : r.structure) std::cout << "structure: " << to_string(v.kind) << " at " << v.where << ": " << v.detail << "\n";
  for (const auto& e : r.snapshot_errors) std::cout << "snapshot: " << e << "\n";
  for (const auto& [from, to] : r.stalls) std::cout << "stall: no completion from " << from << " s to " << to << " s\n";
  int rc = report_check(std::cout, r.trace, r.check);
  if (!r.ok() || r.counters.size_bound_violations || r.counters.preservation_failures) rc = exit_violation;
  if (!f.trace.empty()) write_trace_file(f.trace, r.trace);
  std::cout << (rc == exit_pass ? "PASS" : "FAIL") << "\n";
  return rc;
}

int cmd_check(const std::string& path) {
  const history h = read_trace_file(path);
  const int rc = report_check(std::cout, h, check_history(h), 50);
  std::cout << (rc == exit_pass ? "PASS" : "FAIL") << "\n";
  return rc;
}

// ---------------------------------------------------------------------------

struct schedule_flags {
  std::string scenario = "all";
  std::size_t bound = 1u << 20;
  unsigned fibers = 2;
  std::uint64_t seed = 7;
  std::uint64_t samples = 10000;
  std::string replay;
  bool list = false;
};

int cmd_schedules(const schedule_flags& f) {
  if (f.fibers < 2 || f.fibers > 3) throw config_error("--fibers must be 2 or 3");
  const auto all = sim::protocol_scenarios(f.fibers);
  if (f.list) {
    for (const auto& s : all) std::cout << s.name << "\t" << s.description << "\n";
    return exit_pass;
  }
  std::vector<const sim::scenario_spec*> chosen;
  for (const auto& s : all)
    if (f.scenario == "all" || f.scenario == s.name) chosen.push_back(&s);
  if (chosen.empty()) throw config_error("unknown scenario '" + f.scenario + "' (see --list)");

  if (!f.replay.empty()) {
    if (chosen.size() != 1) throw config_error("--replay needs a single --scenario");
    std::vector<std::size_t> sched;
    for (char ch : f.replay) {
      if (ch < '0' || ch > '9') throw config_error("schedule must be a string of fiber digits");
      sched.push_back(static_cast<std::size_t>(ch - '0'));
    }
    const std::string msg = sim::replay(chosen.front()->run, sched);
    if (msg.rfind("schedule step", 0) == 0) throw config_error(msg);
    std::cout << chosen.front()->name << ": " << (msg.empty() ? "ok" : msg) << "\n";
    return msg.empty() ? exit_pass : exit_violation;
  }

  int rc = exit_pass;
  if (f.fibers == 2) {
    // Explorer sanity: unreduced enumeration of two writers matches C(n+m, n).
    sim::explore_options full;
    full.reduce = false;
    const auto r = sim::explore(sim::counting_scenario(3, 4), full);
    const bool ok = r.executions == sim::interleavings(3, 4);
    std::cout << "explorer sanity: " << r.executions << " schedules for 3+4 writes, expected "
              << sim::interleavings(3, 4) << (ok ? "" : "  MISMATCH") << "\n";
    if (!ok) rc = exit_violation;
  }
  for (const auto* s : chosen) {
    sim::explore_result r;
    if (f.fibers == 2) {
      sim::explore_options o;
      o.max_steps = f.bound;
      r = sim::explore(s->run, o);
    } else {
      r = sim::sample(s->run, f.seed, f.samples, f.bound);
    }
    std::cout << s->name << ": " << (f.fibers == 2 ? "explored " : "sampled ") << r.executions << " schedules";
    if (r.blocked) std::cout << " (+" << r.blocked << " pruned)";
    std::cout << ", max depth " << r.max_depth << ", " << r.failures.size() << " failures\n";
    for (std::size_t i = 0; i < r.failures.size() && i < 3; ++i)
      std::cout << "  " << r.failures[i].message << "\n  replay: --scenario " << s->name << " --fibers "
                << f.fibers << " --replay " << sim::format_schedule(r.failures[i].schedule) << "\n";
    if (!r.ok()) rc = exit_violation;
  }
  std::cout << (rc == exit_pass ? "PASS" : "FAIL") << "\n";
  return rc;
}

// ---------------------------------------------------------------------------

struct bench_flags {
  tree_flags tree{16, 64, 16};
  std::vector<unsigned> threads{1, 2, 4, 8};
  key_type range = 1u << 16;
  key_type span = 16;
  std::string mix = "50:25:25";
  std::uint64_t seed = 1;
  double duration = 1;
  std::string reclaim = "retire";
};

int cmd_bench(const bench_flags& f) {
  run_config c;
  c.tree = f.tree.config();
  c.range = f.range;
  c.span = f.span;
  c.mix = parse_mix(f.mix);
  c.seed = f.seed;
  c.duration = f.duration;
  c.reclaim = reclaim_names.at(f.reclaim);
  if (f.threads.empty()) throw config_error("--threads needs at least one count");
  const auto rows = run_bench(c, f.threads);
  std::cout << "threads\tops\tseconds\tops_per_sec\n";
  for (const auto& r : rows) std::cout << r.threads << "\t" << r.ops << "\t" << r.seconds << "\t" << r.ops_per_sec << "\n";
  return exit_pass;
}

// ---------------------------------------------------------------------------

struct small_flags {
  double seconds = 60;
  std::uint64_t seed = 1;
  std::uint64_t cap = 20000;
  std::size_t ops = 3;
};

int report_small(const small_model_report& r) {
  auto line = [](const char* what, const small_model_stats& s) {
    std::cout << what << ": " << s.workloads << " workloads, " << s.executions << " executions, " << s.truncated
              << " capped, " << s.failures << " failures\n";
    for (const auto& m : s.messages) std::cout << "  " << m << "\n";
  };
  line("exhaustive", r.exhaustive);
  line("sampled", r.sampled);
  return r.ok() ? exit_pass : exit_violation;
}

int cmd_small_model(const small_flags& f) {
  small_model_options o;
  for (auto& t : o.exhaustive) t.ops = std::min(t.ops, f.ops);
  o.sample_seconds = f.seconds;
  o.seed = f.seed;
  o.execution_cap = f.cap;
  const int rc = report_small(run_small_model(o));
  std::cout << (rc == exit_pass ? "PASS" : "FAIL") << "\n";
  return rc;
}

// ---------------------------------------------------------------------------

// A quick pass over every component: serial oracle, short stress, the
// checker's constructed negatives, one protocol scenario, a small model.
int cmd_selftest() {
  int rc = exit_pass;
  auto result = [&](const std::string& name, bool ok, const std::string& detail = {}) {
    std::cout << (ok ? "ok   " : "FAIL ") << name << (detail.empty() ? "" : ": " + detail) << "\n";
    if (!ok) rc = exit_violation;
  };

  {
    tree t({3, 4, 2});
    oracle_set o;
    std::mt19937_64 rng(42);
    bool ok = true;
    for (int i = 0; i < 20000 && ok; ++i) {
      const key_type a = rng() % 500 + 1, b = a + rng() % 8;
      const auto k = static_cast<op_kind>(rng() % 3);
      key_type got = k == op_kind::search ? t.search(a, b) : k == op_kind::remove ? t.remove(a, b) : t.insert(a);
      ok = got == oracle_apply(o, k, a, b);
    }
    ok = ok && t.snapshot() == std::vector<key_type>(o.begin(), o.end()) && t.check_structure().empty();
    result("serial oracle", ok);
  }
  {
    run_config c;
    c.tree = {3, 4, 2};
    c.threads = 4;
    c.ops = 20000;
    c.range = 1024;
    const stress_result r = run_stress(c);
    result("stress", r.ok() && r.counters.size_bound_violations == 0 && r.counters.preservation_failures == 0);
  }
  {
    history a;
    a.ops = {{0, op_kind::insert, 5, 5, 1, 2, 1}, {1, op_kind::search, 1, 9, 3, 4, 0}};
    history b;
    b.ops = {{0, op_kind::search, 1, 9, 3, 4, 5}};
    result("checker negatives",
           check_history(a).count(clause::missed_present) == 1 && check_history(b).count(clause::not_present) == 1);
  }
  {
    const auto all = sim::protocol_scenarios();
    const auto r = sim::explore(all[2].run);
    result("scenario " + all[2].name, r.ok() && r.complete, r.ok() ? "" : r.failures.front().message);
  }
  {
    small_model_options o;
    o.exhaustive = {{{}, 2}, {{1, 2, 3, 4}, 2}};
    o.sample_seconds = 0;
    const auto r = run_small_model(o);
    result("small model", r.ok(), std::to_string(r.exhaustive.workloads) + " workloads");
  }
  std::cout << (rc == exit_pass ? "PASS" : "FAIL") << "\n";
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ELB-tree verification and benchmark harness"};
  app.require_subcommand(1);

  stress_flags sf;
  auto* stress = app.add_subcommand("stress", "multi-threaded run with history capture and audits");
  add_tree_flags(stress, sf.tree);
  stress->add_option("--threads", sf.threads, "worker threads")->capture_default_str();
  stress->add_option("--ops", sf.ops, "operations per thread")->capture_default_str();
  stress->add_option("--range", sf.range, "keys are drawn from [1; range]")->capture_default_str();
  stress->add_option("--span", sf.span, "search/remove ranges cover up to this many keys")->capture_default_str();
  stress->add_option("--mix", sf.mix, "search:insert:remove weights")->capture_default_str();
  stress->add_option("--seed", sf.seed, "workload seed")->capture_default_str();
  stress->add_option("--duration", sf.duration, "stop after this many seconds (0: run all ops)")->capture_default_str();
  stress->add_option("--reclaim", sf.reclaim, "retire | never-free")
      ->check(CLI::IsMember({"retire", "never-free"}))
      ->capture_default_str();
  stress->add_option("--trace", sf.trace, "write the history to this file");
  stress->add_option("--stall-window", sf.stall_window, "report periods of this many seconds without completions");

  std::string trace_path;
  auto* check = app.add_subcommand("check", "check a recorded trace against the interval semantics");
  check->add_option("--trace,trace", trace_path, "trace file")->required();

  schedule_flags schf;
  auto* schedules = app.add_subcommand("schedules", "explore the rebalance protocol scenarios");
  schedules->add_option("--scenario", schf.scenario, "scenario name or 'all'")->capture_default_str();
  schedules->add_option("--bound", schf.bound, "step bound per schedule")->capture_default_str();
  schedules->add_option("--fibers", schf.fibers, "2: every schedule; 3: seeded random schedules")
      ->capture_default_str();
  schedules->add_option("--seed", schf.seed, "seed for sampled schedules")->capture_default_str();
  schedules->add_option("--samples", schf.samples, "sampled schedules per scenario")->capture_default_str();
  schedules->add_option("--replay", schf.replay, "rerun one schedule (string of fiber digits)");
  schedules->add_flag("--list", schf.list, "list the scenarios");

  bench_flags bf;
  auto* bench = app.add_subcommand("bench", "throughput per thread count");
  add_tree_flags(bench, bf.tree);
  bench->add_option("--threads", bf.threads, "thread counts")->delimiter(',')->capture_default_str();
  bench->add_option("--range", bf.range, "keys are drawn from [1; range]")->capture_default_str();
  bench->add_option("--span", bf.span, "search/remove ranges cover up to this many keys")->capture_default_str();
  bench->add_option("--mix", bf.mix, "search:insert:remove weights")->capture_default_str();
  bench->add_option("--seed", bf.seed, "workload seed")->capture_default_str();
  bench->add_option("--duration", bf.duration, "seconds per thread count")->capture_default_str();
  bench->add_option("--reclaim", bf.reclaim, "retire | never-free")
      ->check(CLI::IsMember({"retire", "never-free"}))
      ->capture_default_str();

  small_flags smf;
  auto* small = app.add_subcommand("small-model", "tiny workloads under every 2-thread schedule");
  small->add_option("--ops", smf.ops, "exhaustive workloads up to this many operations (max 3)")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();
  small->add_option("--seconds", smf.seconds, "budget for sampled 6-operation workloads")->capture_default_str();
  small->add_option("--seed", smf.seed, "seed for sampled workloads")->capture_default_str();
  small->add_option("--cap", smf.cap, "execution cap per sampled workload")->capture_default_str();

  auto* selftest = app.add_subcommand("selftest", "quick pass over every component");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    if (*stress) return cmd_stress(sf);
    if (*check) return cmd_check(trace_path);
    if (*schedules) return cmd_schedules(schf);
    if (*bench) return cmd_bench(bf);
    if (*small) return cmd_small_model(smf);
    if (*selftest) return cmd_selftest();
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_usage;
  } catch (const io_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return exit_io;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_violation;
  }
  return exit_usage;
}
