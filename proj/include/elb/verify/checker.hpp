#pragma once

// Interval-semantics checker. Presence of a key over a time window is
// bounded from both sides by counting successful updates: `sure_in` under-
// approximates "present throughout", `may_in` over-approximates "present at
// some instant". Only provable violations are reported.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "elb/verify/history.hpp"

namespace elb {

enum class clause : char {
  missed_present = 'a',    // empty result although a key in range was certainly present
  not_present = 'b',       // result outside the range or certainly absent
  not_minimal = 'c',       // a smaller key in range was certainly present
  insert_conflict = 'd',   // insert result contradicts certain presence or absence
  unmatched_remove = 'e',  // a remove returned a key no insert could have supplied
};

inline const char* to_string(clause c) {
  switch (c) {
    case clause::missed_present: return "(a) missed-present";
    case clause::not_present: return "(b) not-present";
    case clause::not_minimal: return "(c) not-minimal";
    case clause::insert_conflict: return "(d) insert-conflict";
    case clause::unmatched_remove: return "(e) unmatched-remove";
  }
  return "?";
}

struct history_violation {
  clause what;
  std::size_t op;  // index into history::ops
  std::string detail;
};

struct malformed_record {
  std::size_t op;
  std::string detail;
};

struct check_report {
  std::vector<history_violation> violations;
  std::vector<malformed_record> malformed;

  bool ok() const noexcept { return violations.empty() && malformed.empty(); }
  std::size_t count(clause c) const {
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                  [c](const auto& v) { return v.what == c; }));
  }
};

/// Per-key timelines of successful updates, as sorted timestamp lists.
class membership_index {
public:
  explicit membership_index(const history& h) {
    for (const op_record& r : h.ops) {
      if (r.kind == op_kind::insert && r.result == 1) {
        auto& t = keys_[r.e1];
        t.insert_invoke.push_back(r.invoke);
        t.insert_response.push_back(r.response);
      } else if (r.kind == op_kind::remove && r.result != 0) {
        auto& t = keys_[r.result];
        t.remove_invoke.push_back(r.invoke);
        t.remove_response.push_back(r.response);
      }
    }
    for (auto& [k, t] : keys_) {
      std::sort(t.insert_invoke.begin(), t.insert_invoke.end());
      std::sort(t.insert_response.begin(), t.insert_response.end());
      std::sort(t.remove_invoke.begin(), t.remove_invoke.end());
      std::sort(t.remove_response.begin(), t.remove_response.end());
    }
  }

  /// Certainly present during all of [t1; t2): more inserts finished before
  /// t1 than removes started before t2.
  bool sure_in(key_type e, std::uint64_t t1, std::uint64_t t2) const {
    const timeline* t = find(e);
    if (t == nullptr) return false;
    return before(t->insert_response, t1) > before(t->remove_invoke, t2);
  }

  /// Possibly present at some instant of [t1; t2): more inserts started
  /// before t2 than removes finished before t1.
  bool may_in(key_type e, std::uint64_t t1, std::uint64_t t2) const {
    const timeline* t = find(e);
    if (t == nullptr) return false;
    return before(t->insert_invoke, t2) > before(t->remove_response, t1);
  }

  /// Smallest key in [e1; e2] that is certainly present over [t1; t2), or 0.
  key_type first_sure_in(key_type e1, key_type e2, std::uint64_t t1, std::uint64_t t2) const {
    for (auto it = keys_.lower_bound(e1); it != keys_.end() && it->first <= e2; ++it)
      if (sure_in(it->first, t1, t2)) return it->first;
    return 0;
  }

  /// Removes returning `e` that cannot be paired with a distinct successful
  /// insert invoked before the remove responded.
  std::size_t unmatched_removes(key_type e, std::vector<std::uint64_t>* at = nullptr) const {
    const timeline* t = find(e);
    if (t == nullptr) return 0;
    std::size_t unmatched = 0, used = 0;
    for (std::uint64_t resp : t->remove_response) {
      if (before(t->insert_invoke, resp) > used) {
        ++used;
      } else {
        ++unmatched;
        if (at) at->push_back(resp);
      }
    }
    return unmatched;
  }

  std::vector<key_type> keys() const {
    std::vector<key_type> out;
    for (const auto& kv : keys_) out.push_back(kv.first);
    return out;
  }

private:
  struct timeline {
    std::vector<std::uint64_t> insert_invoke, insert_response, remove_invoke, remove_response;
  };

  const timeline* find(key_type e) const {
    const auto it = keys_.find(e);
    return it == keys_.end() ? nullptr : &it->second;
  }

  static std::size_t before(const std::vector<std::uint64_t>& v, std::uint64_t t) {
    return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), t) - v.begin());
  }

  std::map<key_type, timeline> keys_;
};

/// Per-thread records must not overlap and every record must be well-formed.
inline std::vector<malformed_record> validate_history(const history& h) {
  std::vector<malformed_record> out;
  std::unordered_map<std::uint32_t, std::size_t> last;
  for (std::size_t i = 0; i < h.ops.size(); ++i) {
    const op_record& r = h.ops[i];
    if (r.invoke >= r.response) out.push_back({i, "invoke-ts not before response-ts"});
    if (!valid_key(r.e1) || !valid_key(r.e2)) out.push_back({i, "argument outside the key domain"});
    if (r.kind == op_kind::insert && (r.e1 != r.e2 || r.result > 1))
      out.push_back({i, "insert record must have e1 == e2 and result 0 or 1"});
    if (r.kind != op_kind::insert && r.e1 > r.e2) out.push_back({i, "e1 > e2"});
    const auto it = last.find(r.thread);
    if (it != last.end() && h.ops[it->second].response > r.invoke)
      out.push_back({i, "overlaps op " + std::to_string(it->second) + " of thread " +
                            std::to_string(r.thread)});
    last[r.thread] = i;
  }
  return out;
}

inline check_report check_history(const history& h) {
  check_report rep;
  rep.malformed = validate_history(h);
  const membership_index idx(h);
  auto flag = [&](clause c, std::size_t i, std::string d) { rep.violations.push_back({c, i, std::move(d)}); };

  for (std::size_t i = 0; i < h.ops.size(); ++i) {
    const op_record& r = h.ops[i];
    const std::uint64_t t1 = r.invoke, t2 = r.response;
    if (r.kind == op_kind::insert) {
      if (r.result == 1 && idx.sure_in(r.e1, t1, t2))
        flag(clause::insert_conflict, i, "insert succeeded while the key was certainly present");
      if (r.result == 0 && !idx.may_in(r.e1, t1, t2))
        flag(clause::insert_conflict, i, "insert failed while the key was certainly absent");
      continue;
    }
    const key_type present = idx.first_sure_in(r.e1, r.e2, t1, t2);
    if (r.result == 0) {
      if (present != 0)
        flag(clause::missed_present, i, "returned 0 but " + std::to_string(present) + " was present");
      continue;
    }
    if (r.result < r.e1 || r.result > r.e2) {
      flag(clause::not_present, i, "returned " + std::to_string(r.result) + " outside the range");
      continue;
    }
    if (!idx.may_in(r.result, t1, t2))
      flag(clause::not_present, i, "returned " + std::to_string(r.result) + " which was absent");
    if (r.kind == op_kind::remove && present != 0 && present < r.result)
      flag(clause::not_minimal, i,
           "returned " + std::to_string(r.result) + " but " + std::to_string(present) +
               " was present");
  }

  for (key_type e : idx.keys()) {
    std::vector<std::uint64_t> at;
    if (idx.unmatched_removes(e, &at) == 0) continue;
    for (std::uint64_t resp : at) {
      for (std::size_t i = 0; i < h.ops.size(); ++i) {
        const op_record& r = h.ops[i];
        if (r.kind == op_kind::remove && r.result == e && r.response == resp) {
          flag(clause::unmatched_remove, i, "no insert of " + std::to_string(e) + " left to pair with");
          break;
        }
      }
    }
  }
  std::stable_sort(rep.violations.begin(), rep.violations.end(),
                   [](const auto& a, const auto& b) { return a.op < b.op; });
  return rep;
}

struct progress_report {
  std::size_t completed = 0;
  std::uint64_t rebalances = 0;
  double ops_per_rebalance = 0;
  /// [start, end) of windows of at least W with an operation in flight and
  /// no completion.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> stalls;
};

inline progress_report progress_audit(const history& h, std::uint64_t rebalances, std::uint64_t window) {
  progress_report rep;
  rep.completed = h.ops.size();
  rep.rebalances = rebalances;
  rep.ops_per_rebalance = rebalances ? double(rep.completed) / double(rebalances) : 0.0;
  if (h.ops.empty()) return rep;

  std::vector<const op_record*> by_resp;
  for (const auto& r : h.ops) by_resp.push_back(&r);
  std::sort(by_resp.begin(), by_resp.end(),
            [](const op_record* a, const op_record* b) { return a->response < b->response; });
  // suffix_min[i]: earliest invoke among ops completing at or after by_resp[i].
  std::vector<std::uint64_t> suffix_min(by_resp.size() + 1, UINT64_MAX);
  for (std::size_t i = by_resp.size(); i-- > 0;)
    suffix_min[i] = std::min(suffix_min[i + 1], by_resp[i]->invoke);

  std::uint64_t prev = 0;  // last completion before the gap
  for (std::size_t i = 0; i < by_resp.size(); ++i) {
    const std::uint64_t next = by_resp[i]->response;
    const std::uint64_t active_from = std::max(prev, suffix_min[i]);
    if (next > active_from && next - active_from >= window) rep.stalls.emplace_back(active_from, next);
    prev = next;
  }
  return rep;
}

}  // namespace elb
