#pragma once

// Run configuration and seeded operation streams.

#include <array>
#include <cstdint>
#include <random>
#include <string>

#include "elb/config.hpp"
#include "elb/reclaim.hpp"
#include "elb/verify/oracle.hpp"

namespace elb {

/// Search/insert/remove weights.
struct op_mix {
  double search = 0.5, insert = 0.25, remove = 0.25;
};

/// Parses "a:b:c" (search:insert:remove). Weights are normalised.
inline op_mix parse_mix(const std::string& text) {
  std::array<double, 3> w{};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const auto colon = text.find(':', pos);
    if ((i < 2) == (colon == std::string::npos)) throw config_error("mix must be a:b:c");
    const std::string part = text.substr(pos, colon == std::string::npos ? std::string::npos : colon - pos);
    std::size_t used = 0;
    try {
      w[i] = std::stod(part, &used);
    } catch (const std::exception&) {
      throw config_error("mix weight '" + part + "' is not a number");
    }
    if (used != part.size() || !(w[i] >= 0)) throw config_error("mix weight '" + part + "' is invalid");
    pos = colon + 1;
  }
  const double sum = w[0] + w[1] + w[2];
  if (!(sum > 0)) throw config_error("mix weights sum to zero");
  return {w[0] / sum, w[1] / sum, w[2] / sum};
}

struct run_config {
  tree_config tree;
  unsigned threads = 8;
  std::uint64_t ops = 100000;  // per thread
  key_type range = 1u << 16;   // keys are drawn from [1; range]
  key_type span = 16;          // search/remove ranges cover 1..span keys
  op_mix mix;
  std::uint64_t seed = 1;
  double duration = 0;  // seconds, 0 = until ops are done
  reclaim_mode reclaim = reclaim_mode::never_free;
  bool record = true;

  void validate() const {
    tree.validate();
    if (threads == 0 || threads > 256) throw config_error("threads must be in [1; 256]");
    if (range == 0 || range > max_key) throw config_error("range must be in [1; 2^63 - 1]");
    if (span == 0) throw config_error("span must be positive");
    if (duration < 0) throw config_error("duration must not be negative");
    const double sum = mix.search + mix.insert + mix.remove;
    if (!(mix.search >= 0 && mix.insert >= 0 && mix.remove >= 0) || sum < 0.999 || sum > 1.001)
      throw config_error("mix weights must be non-negative and sum to 1");
  }
};

struct planned_op {
  op_kind kind;
  key_type e1, e2;
};

/// Deterministic per-thread operation stream.
class op_stream {
public:
  op_stream(const run_config& c, unsigned thread)
      : rng_(seed_for(c.seed, thread)),
        kind_({c.mix.search, c.mix.insert, c.mix.remove}),
        key_(1, c.range),
        width_(0, c.span - 1),
        range_(c.range) {}

  planned_op next() {
    static constexpr op_kind kinds[] = {op_kind::search, op_kind::insert, op_kind::remove};
    const op_kind k = kinds[kind_(rng_)];
    const key_type e1 = key_(rng_);
    if (k == op_kind::insert) return {k, e1, e1};
    const key_type w = width_(rng_);
    return {k, e1, e1 + w > range_ || e1 + w < e1 ? range_ : e1 + w};
  }

private:
  static std::mt19937_64 seed_for(std::uint64_t seed, unsigned thread) {
    std::seed_seq seq{seed & 0xffffffffu, seed >> 32, std::uint64_t{thread}};
    return std::mt19937_64(seq);
  }

  std::mt19937_64 rng_;
  std::discrete_distribution<int> kind_;
  std::uniform_int_distribution<key_type> key_;
  std::uniform_int_distribution<key_type> width_;
  key_type range_;
};

}  // namespace elb
