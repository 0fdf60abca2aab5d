#pragma once

// Deterministic simulation: cooperative fibers that yield before every
// shared-cell access, so a scheduler decides the global order of accesses.
// `explore` enumerates schedules depth-first with replay; `sample` draws
// seeded random schedules.

#include <ucontext.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "elb/memory.hpp"

namespace elb::sim {

class sim_run;

namespace detail {
inline thread_local sim_run* active_run = nullptr;
struct fiber_abort {};
}  // namespace detail

/// Memory policy for trees driven by the simulator.
struct sim_memory {
  static constexpr bool simulated = true;
  static void before(const void* cell, access a);
  static void event(protocol_event e);
};

/// A fiber's next shared access. Cells are numbered in first-touch order
/// so that replays of the same schedule agree on identities.
struct pending_access {
  std::uint32_t cell = 0;
  access kind = access::load;
};

/// Accesses commute when they touch different cells or only read.
inline bool independent(const pending_access& a, const pending_access& b) {
  return a.cell != b.cell || (a.kind == access::load && b.kind == access::load);
}

inline constexpr std::size_t event_count = 5;

/// One execution: a set of fibers plus the gates and suspensions that
/// shape it.
class sim_run {
public:
  using fiber_id = std::size_t;

  explicit sim_run(std::size_t stack_size = 256 * 1024) : stack_size_(stack_size) {}
  ~sim_run() { teardown(); }
  sim_run(const sim_run&) = delete;
  sim_run& operator=(const sim_run&) = delete;

  fiber_id spawn(std::function<void()> body) {
    if (started_) throw std::logic_error("spawn after start");
    auto f = std::make_unique<fiber>();
    f->body = std::move(body);
    f->stack = std::make_unique_for_overwrite<char[]>(stack_size_);
    fibers_.push_back(std::move(f));
    return fibers_.size() - 1;
  }

  /// The fiber may not perform any shared access before `e` was emitted.
  void gate_until(fiber_id f, protocol_event e) { fibers_.at(f)->gate = static_cast<int>(e); }

  /// The fiber stops for good once it has emitted `e` `nth` times.
  void suspend_after(fiber_id f, protocol_event e, unsigned nth = 1) {
    fibers_.at(f)->suspend_event = static_cast<int>(e);
    fibers_.at(f)->suspend_nth = nth;
  }

  /// Logical clock; strictly increasing across all fibers.
  std::uint64_t stamp() noexcept { return ++clock_; }

  std::size_t size() const noexcept { return fibers_.size(); }
  bool finished(fiber_id f) const { return fibers_.at(f)->done; }
  bool suspended(fiber_id f) const { return fibers_.at(f)->suspended; }
  std::size_t emitted(protocol_event e) const { return events_[static_cast<std::size_t>(e)]; }
  const std::vector<std::string>& errors() const noexcept { return errors_; }

  /// Runs every fiber up to its first shared access.
  void start() {
    if (started_) return;
    started_ = true;
    for (fiber_id i = 0; i < fibers_.size(); ++i) {
      fiber& f = *fibers_[i];
      getcontext(&f.ctx);
      f.ctx.uc_stack.ss_sp = f.stack.get();
      f.ctx.uc_stack.ss_size = stack_size_;
      f.ctx.uc_link = &main_;
      const auto p = reinterpret_cast<std::uintptr_t>(this);
      makecontext(&f.ctx, reinterpret_cast<void (*)()>(&sim_run::entry), 3,
                  static_cast<unsigned>(p & 0xffffffffu), static_cast<unsigned>(p >> 32),
                  static_cast<unsigned>(i));
      resume(i);
    }
  }

  std::vector<fiber_id> enabled() const {
    std::vector<fiber_id> out;
    for (fiber_id i = 0; i < fibers_.size(); ++i) {
      const fiber& f = *fibers_[i];
      if (f.done || f.suspended) continue;
      if (f.gate >= 0 && events_[static_cast<std::size_t>(f.gate)] == 0) continue;
      out.push_back(i);
    }
    return out;
  }

  const pending_access& pending(fiber_id f) const { return fibers_.at(f)->next; }

  /// Lets the fiber perform its pending access and run to the next one.
  void step(fiber_id f) {
    if (f >= fibers_.size() || fibers_[f]->done || fibers_[f]->suspended)
      throw std::logic_error("step on a fiber that cannot run");
    resume(f);
  }

  /// Unwinds every fiber that has not finished.
  void teardown() {
    if (!started_ || torn_down_) return;
    torn_down_ = true;
    aborting_ = true;
    for (fiber_id i = 0; i < fibers_.size(); ++i)
      if (!fibers_[i]->done) resume(i);
  }

  // Called through sim_memory from fiber context.
  void yield(const void* cell, access a) {
    if (current_ == nullptr) return;
    if (aborting_) {
      if (std::uncaught_exceptions() == 0) throw detail::fiber_abort{};
      return;
    }
    const auto id = cells_.try_emplace(cell, static_cast<std::uint32_t>(cells_.size())).first->second;
    current_->next = {id, a};
    switch_out();
    if (aborting_ && std::uncaught_exceptions() == 0) throw detail::fiber_abort{};
  }

  void on_event(protocol_event e) {
    const auto k = static_cast<std::size_t>(e);
    ++events_[k];
    if (current_ == nullptr) return;
    if (current_->suspend_event == static_cast<int>(k) && ++current_->suspend_seen == current_->suspend_nth)
      current_->suspended = true;
  }

private:
  struct fiber {
    ucontext_t ctx{};
    std::unique_ptr<char[]> stack;
    std::function<void()> body;
    pending_access next;
    bool done = false;
    bool suspended = false;
    int gate = -1;
    int suspend_event = -1;
    unsigned suspend_nth = 1;
    unsigned suspend_seen = 0;
  };

  static void entry(unsigned lo, unsigned hi, unsigned index) {
    auto* self = reinterpret_cast<sim_run*>(static_cast<std::uintptr_t>(lo) |
                                            (static_cast<std::uintptr_t>(hi) << 32));
    fiber& f = *self->fibers_[index];
    try {
      f.body();
    } catch (const detail::fiber_abort&) {
    } catch (const std::exception& e) {
      self->errors_.push_back("fiber " + std::to_string(index) + ": " + e.what());
    } catch (...) {
      self->errors_.push_back("fiber " + std::to_string(index) + ": unknown exception");
    }
    f.done = true;
    self->current_ = nullptr;
  }

  void resume(fiber_id i) {
    sim_run* outer = detail::active_run;
    detail::active_run = this;
    current_ = fibers_[i].get();
    swapcontext(&main_, &current_->ctx);
    current_ = nullptr;
    detail::active_run = outer;
  }

  void switch_out() {
    fiber* f = current_;
    swapcontext(&f->ctx, &main_);
  }

  std::size_t stack_size_;
  ucontext_t main_{};
  std::vector<std::unique_ptr<fiber>> fibers_;
  fiber* current_ = nullptr;
  bool started_ = false;
  bool aborting_ = false;
  bool torn_down_ = false;
  std::uint64_t clock_ = 0;
  std::array<std::size_t, event_count> events_{};
  std::vector<std::string> errors_;
  std::unordered_map<const void*, std::uint32_t> cells_;
};

inline void sim_memory::before(const void* cell, access a) {
  if (detail::active_run) detail::active_run->yield(cell, a);
}

inline void sim_memory::event(protocol_event e) {
  if (detail::active_run) detail::active_run->on_event(e);
}

/// Returns an empty string when the finished execution is acceptable.
using check_fn = std::function<std::string()>;
/// Builds the fibers of one execution and returns its final check.
using scenario_fn = std::function<check_fn(sim_run&)>;

struct explore_options {
  bool reduce = true;            // partial-order reduction
  int preemption_bound = -1;     // < 0: unbounded
  std::uint64_t max_executions = 0;  // 0: no limit
  std::size_t max_steps = 1u << 20;  // per execution
};

struct schedule_failure {
  std::vector<std::size_t> schedule;
  std::string message;
};

struct explore_result {
  std::uint64_t executions = 0;  // complete executions checked
  std::uint64_t blocked = 0;     // cut short: every runnable fiber was asleep
  std::uint64_t steps = 0;
  std::size_t max_depth = 0;
  bool complete = true;  // false when max_executions stopped the search
  std::vector<schedule_failure> failures;

  bool ok() const noexcept { return failures.empty(); }
};

inline std::string format_schedule(const std::vector<std::size_t>& s) {
  std::string out;
  for (std::size_t f : s) out += static_cast<char>('0' + f % 10);
  return out;
}

namespace detail {

inline std::string finish(sim_run& run, const check_fn& check) {
  std::string msg;
  if (!run.errors().empty()) msg = run.errors().front();
  run.teardown();
  if (msg.empty() && check) msg = check();
  return msg;
}

}  // namespace detail

/// Runs one execution following `schedule`; when the schedule runs out the
/// lowest runnable fiber goes next.
inline std::string replay(const scenario_fn& scenario, const std::vector<std::size_t>& schedule) {
  sim_run run;
  const check_fn check = scenario(run);
  run.start();
  std::size_t d = 0;
  for (;;) {
    const auto en = run.enabled();
    if (en.empty()) break;
    std::size_t f = en.front();
    if (d < schedule.size()) {
      f = schedule[d];
      if (std::find(en.begin(), en.end(), f) == en.end())
        return "schedule step " + std::to_string(d) + ": fiber " + std::to_string(f) + " cannot run";
    }
    run.step(f);
    ++d;
  }
  return detail::finish(run, check);
}

/// Depth-first enumeration of schedules. With `reduce` set, only
/// schedules that reorder dependent accesses are explored: backtrack points
/// come from vector-clock race detection and sleep sets prune the rest.
inline explore_result explore(const scenario_fn& scenario, const explore_options& opt = {}) {
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  struct node {
    std::vector<std::size_t> enabled;
    std::vector<pending_access> pending;  // by fiber
    std::vector<bool> sleep, done, backtrack;
    std::size_t chosen = 0;
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    int preemptions = 0;
  };
  using clock = std::vector<std::uint32_t>;
  auto contains = [](const std::vector<std::size_t>& v, std::size_t x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  auto allowed = [&](const node& n, std::size_t q) {
    if (opt.preemption_bound < 0 || q == n.prev || n.prev == none) return true;
    return !contains(n.enabled, n.prev) || n.preemptions < opt.preemption_bound;
  };

  explore_result res;
  std::vector<node> stack;
  for (;;) {
    sim_run run;
    const check_fn check = scenario(run);
    run.start();
    const std::size_t nf = run.size();
    std::vector<bool> sleep(nf, false);
    std::vector<clock> step_clock;  // by depth
    std::vector<clock> fiber_clock(nf, clock(nf, 0));
    std::size_t prev = none;
    int preemptions = 0;
    bool blocked = false;
    std::string fail;
    std::size_t d = 0;
    for (;; ++d) {
      const auto en = run.enabled();
      if (en.empty()) break;
      if (d >= opt.max_steps) {
        fail = "execution exceeded " + std::to_string(opt.max_steps) + " steps";
        break;
      }
      if (d == stack.size()) {
        node n;
        n.enabled = en;
        n.pending.resize(nf);
        for (std::size_t q : en) n.pending[q] = run.pending(q);
        n.sleep = sleep;
        n.done.assign(nf, false);
        n.backtrack.assign(nf, false);
        n.prev = prev;
        n.preemptions = preemptions;
        if (opt.reduce) {
          // Every earlier access that races with a runnable fiber's next
          // one must also be tried in the other order.
          for (std::size_t p : en) {
            const pending_access& next = n.pending[p];
            for (std::size_t j = d; j-- > 0;) {
              const std::size_t q = stack[j].chosen;
              if (q == p || independent(stack[j].pending[q], next)) continue;
              if (fiber_clock[p][q] >= j + 1) continue;  // ordered already
              // Fibers that can start the reversed order: the first steps,
              // among those after j that do not depend on j, with no
              // earlier dependency inside that suffix.
              std::vector<std::size_t> first(nf, none);  // first suffix step per fiber
              std::vector<std::size_t> order;
              for (std::size_t i = j + 1; i < d; ++i) {
                const std::size_t r = stack[i].chosen;
                if (step_clock[i][q] < j + 1 && first[r] == none) {
                  first[r] = i;
                  order.push_back(r);
                }
              }
              std::vector<bool> initial(nf, false);
              for (std::size_t r : order) {
                const std::size_t i = first[r];
                bool ok = true;
                for (std::size_t o : order)
                  if (o != r && first[o] < i && step_clock[i][o] >= first[o] + 1) ok = false;
                initial[r] = ok;
              }
              if (first[p] == none) {
                bool ok = true;
                for (std::size_t i = j + 1; i < d && ok; ++i) {
                  const std::size_t r = stack[i].chosen;
                  if (step_clock[i][q] >= j + 1) continue;
                  if (fiber_clock[p][r] >= i + 1 || !independent(stack[i].pending[r], next)) ok = false;
                }
                initial[p] = ok;
              }
              node& at = stack[j];
              bool covered = false;
              std::size_t add = none;
              for (std::size_t r : at.enabled) {
                if (!initial[r]) continue;
                if (at.backtrack[r]) covered = true;
                if (add == none) add = r;
              }
              if (!covered) {
                if (add != none)
                  at.backtrack[add] = true;
                else
                  for (std::size_t r : at.enabled) at.backtrack[r] = true;
              }
            }
          }
        }
        std::size_t pick = none;
        if (prev != none && !sleep[prev] && contains(en, prev)) pick = prev;
        for (std::size_t q : en)
          if (pick == none && !sleep[q] && allowed(n, q)) pick = q;
        if (pick == none) {
          blocked = true;
          break;
        }
        n.chosen = pick;
        n.backtrack[pick] = true;
        if (!opt.reduce)
          for (std::size_t q : en) n.backtrack[q] = true;
        stack.push_back(std::move(n));
      } else if (stack[d].enabled != en) {
        throw std::logic_error("scenario is not deterministic under replay");
      }
      const node& n = stack[d];
      const std::size_t p = n.chosen;
      std::vector<bool> next(nf, false);
      if (opt.reduce)
        for (std::size_t q : n.enabled)
          if (q != p && (n.sleep[q] || n.done[q]) && independent(n.pending[q], n.pending[p])) next[q] = true;
      clock c = fiber_clock[p];
      for (std::size_t j = 0; j < d; ++j) {
        const std::size_t q = stack[j].chosen;
        if (q != p && !independent(stack[j].pending[q], n.pending[p]))
          for (std::size_t k = 0; k < nf; ++k) c[k] = std::max(c[k], step_clock[j][k]);
      }
      c[p] = static_cast<std::uint32_t>(d + 1);
      step_clock.push_back(c);
      fiber_clock[p] = std::move(c);
      if (prev != none && p != prev && contains(en, prev)) ++preemptions;
      run.step(p);
      prev = p;
      sleep = std::move(next);
    }
    res.steps += d;
    res.max_depth = std::max(res.max_depth, d);
    if (blocked) {
      ++res.blocked;
      run.teardown();
    } else {
      ++res.executions;
      const std::string msg = fail.empty() ? detail::finish(run, check) : fail;
      if (!fail.empty()) run.teardown();
      if (!msg.empty()) {
        std::vector<std::size_t> sched;
        for (std::size_t i = 0; i < d && i < stack.size(); ++i) sched.push_back(stack[i].chosen);
        res.failures.push_back({std::move(sched), msg});
      }
    }
    if (d < stack.size()) stack.resize(d);

    for (;;) {
      if (stack.empty()) return res;
      node& n = stack.back();
      n.done[n.chosen] = true;
      std::size_t pick = none;
      for (std::size_t q : n.enabled)
        if (n.backtrack[q] && !n.done[q] && !n.sleep[q] && allowed(n, q)) {
          pick = q;
          break;
        }
      if (pick != none) {
        n.chosen = pick;
        break;
      }
      stack.pop_back();
    }
    if (opt.max_executions && res.executions + res.blocked >= opt.max_executions) {
      res.complete = false;
      return res;
    }
  }
}

/// Seeded random schedules, for scenarios too large to enumerate.
inline explore_result sample(const scenario_fn& scenario, std::uint64_t seed, std::uint64_t count,
                             std::size_t max_steps = 1u << 20) {
  explore_result res;
  res.complete = false;
  std::mt19937_64 rng(seed);
  for (std::uint64_t k = 0; k < count; ++k) {
    sim_run run;
    const check_fn check = scenario(run);
    run.start();
    std::vector<std::size_t> sched;
    std::string fail;
    for (;;) {
      const auto en = run.enabled();
      if (en.empty()) break;
      if (sched.size() >= max_steps) {
        fail = "execution exceeded " + std::to_string(max_steps) + " steps";
        break;
      }
      const std::size_t f = en[std::uniform_int_distribution<std::size_t>(0, en.size() - 1)(rng)];
      sched.push_back(f);
      run.step(f);
    }
    res.steps += sched.size();
    res.max_depth = std::max(res.max_depth, sched.size());
    ++res.executions;
    const std::string msg = fail.empty() ? detail::finish(run, check) : (run.teardown(), fail);
    if (!msg.empty()) res.failures.push_back({std::move(sched), msg});
  }
  return res;
}

}  // namespace elb::sim
