#pragma once

// Operation histories: records with invoke/response timestamps, per-thread
// recording buffers and the tab-separated trace format.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "elb/config.hpp"
#include "elb/verify/oracle.hpp"

namespace elb {

struct op_record {
  std::uint32_t thread = 0;
  op_kind kind = op_kind::search;
  key_type e1 = 0;
  key_type e2 = 0;  // equals e1 for insert
  std::uint64_t invoke = 0;
  std::uint64_t response = 0;
  key_type result = 0;  // insert: 1 success, 0 failure

  friend bool operator==(const op_record&, const op_record&) = default;
};

struct history {
  std::vector<op_record> ops;  // sorted by invoke
  std::optional<tree_config> config;

  void sort() {
    std::stable_sort(ops.begin(), ops.end(), [](const op_record& a, const op_record& b) {
      return a.invoke != b.invoke ? a.invoke < b.invoke : a.thread < b.thread;
    });
  }
};

/// Global timestamp source shared by all recording threads. Stamps are
/// strictly increasing across threads. In real-time mode a stamp is the
/// steady clock in nanoseconds, nudged forward when two reads collide; in
/// logical mode it is a plain counter, which makes serial traces repeatable.
class stamp_clock {
public:
  explicit stamp_clock(bool logical = false)
      : logical_(logical), origin_(std::chrono::steady_clock::now()) {}

  std::uint64_t now() {
    if (logical_) return last_.fetch_add(1, std::memory_order_acq_rel) + 1;
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - origin_)
                        .count();
    std::uint64_t t = static_cast<std::uint64_t>(ns) + 1;
    std::uint64_t prev = last_.load(std::memory_order_acquire);
    for (;;) {
      const std::uint64_t next = std::max(t, prev + 1);
      if (last_.compare_exchange_weak(prev, next, std::memory_order_acq_rel)) return next;
    }
  }

  bool logical() const noexcept { return logical_; }

private:
  bool logical_;
  std::chrono::steady_clock::time_point origin_;
  std::atomic<std::uint64_t> last_{0};
};

/// One append-only buffer per thread, merged after the run.
class history_recorder {
public:
  explicit history_recorder(std::size_t threads, std::size_t reserve = 0) : logs_(threads) {
    for (auto& l : logs_) l.reserve(reserve);
  }

  std::vector<op_record>& log(std::size_t thread) { return logs_.at(thread); }

  history merge() const {
    history h;
    for (const auto& l : logs_) h.ops.insert(h.ops.end(), l.begin(), l.end());
    h.sort();
    return h;
  }

private:
  std::vector<std::vector<op_record>> logs_;
};

class trace_error : public std::runtime_error {
public:
  trace_error(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

inline void write_trace(std::ostream& os, const history& h) {
  if (h.config)
    os << "# order=" << h.config->order << " leaf_capacity=" << h.config->leaf_capacity
       << " min_size=" << h.config->min_size << '\n';
  for (const op_record& r : h.ops)
    os << r.thread << '\t' << to_string(r.kind) << '\t' << r.e1 << '\t' << r.e2 << '\t' << r.invoke
       << '\t' << r.response << '\t' << r.result << '\n';
}

namespace detail {

inline std::uint64_t parse_u64(const std::string& field, std::size_t line, const char* name) {
  if (field.empty() || field.find_first_not_of("0123456789") != std::string::npos)
    throw trace_error(line, std::string("bad ") + name + " '" + field + "'");
  try {
    return std::stoull(field);
  } catch (const std::out_of_range&) {
    throw trace_error(line, std::string(name) + " out of range");
  }
}

inline void parse_config(const std::string& text, history& h) {
  std::istringstream is(text);
  std::string tok;
  tree_config c;
  bool any = false;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
    unsigned* dst = k == "order" ? &c.order
                    : k == "leaf_capacity" ? &c.leaf_capacity
                    : k == "min_size" ? &c.min_size
                                      : nullptr;
    if (dst == nullptr || v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
      continue;
    *dst = static_cast<unsigned>(std::stoul(v));
    any = true;
  }
  if (any) h.config = c;
}

}  // namespace detail

/// Reads a trace written by write_trace. Lines starting with '#' are
/// comments; the first one may carry the tree configuration.
inline history read_trace(std::istream& is) {
  history h;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (!h.config) detail::parse_config(line.substr(1), h);
      continue;
    }
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (;;) {
      const auto tab = line.find('\t', pos);
      f.push_back(line.substr(pos, tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (f.size() != 7) throw trace_error(n, "expected 7 fields, got " + std::to_string(f.size()));
    op_record r;
    const auto tid = detail::parse_u64(f[0], n, "thread-id");
    if (tid > UINT32_MAX) throw trace_error(n, "thread-id out of range");
    r.thread = static_cast<std::uint32_t>(tid);
    if (f[1] == "SEARCH")
      r.kind = op_kind::search;
    else if (f[1] == "REMOVE")
      r.kind = op_kind::remove;
    else if (f[1] == "INSERT")
      r.kind = op_kind::insert;
    else
      throw trace_error(n, "unknown kind '" + f[1] + "'");
    r.e1 = detail::parse_u64(f[2], n, "e1");
    r.e2 = detail::parse_u64(f[3], n, "e2");
    r.invoke = detail::parse_u64(f[4], n, "invoke-ts");
    r.response = detail::parse_u64(f[5], n, "response-ts");
    r.result = detail::parse_u64(f[6], n, "result");
    h.ops.push_back(r);
  }
  h.sort();
  return h;
}

}  // namespace elb
