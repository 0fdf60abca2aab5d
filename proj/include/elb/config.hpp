#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace elb {

class config_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Shape parameters of a tree.
///   order          K: maximum children of an internal node.
///   leaf_capacity  D: key slots per leaf.
///   min_size       S: minimum leaf population the balancing rules aim for.
struct tree_config {
  unsigned order = 32;
  unsigned leaf_capacity = 32;
  unsigned min_size = 8;

  // Descent restarts allowed per operation before it is reported as a
  // livelock. 0 means unlimited; the verification harness sets 10^6.
  std::size_t max_restarts = 0;

  static constexpr unsigned max_order = 4094;
  static constexpr unsigned max_leaf_capacity = 1u << 16;

  void validate() const {
    if (order < 3) throw config_error("order (K) must be at least 3");
    if (order > max_order) throw config_error("order (K) must be at most " + std::to_string(max_order));
    if (leaf_capacity < 4) throw config_error("leaf capacity (D) must be at least 4");
    if (leaf_capacity > max_leaf_capacity) throw config_error("leaf capacity (D) too large");
    if (min_size < 2) throw config_error("min size (S) must be at least 2");
    if (min_size > leaf_capacity / 2) throw config_error("min size (S) must be at most D/2");
  }

  /// Lower bound on the population of leaves produced by a rebalance:
  /// min(2S, D/2).
  unsigned balanced_min() const noexcept {
    return std::min(2 * min_size, leaf_capacity / 2);
  }

  /// A remove that finds fewer live keys than this in its leaf rebalances
  /// the leaf before removing. Chosen so that two leaves just below the
  /// threshold merge to at least balanced_min(), and a freshly balanced leaf
  /// admits at least one remove before triggering again.
  unsigned underflow_threshold() const noexcept { return (balanced_min() + 1) / 2 + 1; }

  /// Internal nodes below this many children are merged or redistributed.
  unsigned internal_min() const noexcept { return std::max(order / 4, std::min(2u, order / 2)); }
};

}  // namespace elb
