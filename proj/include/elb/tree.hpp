#pragma once

// Lock-free k-ary leaf-oriented search tree.
//
// Shape: a permanent root anchor with a single child, internal nodes with up
// to K children and K-1 separators, and leaves of D CAS-able key slots. All
// keys live in leaves; separators only route. Child j of a node holds keys in
// (separator[j-1]; separator[j]].
//
// Operations:
//   search(e1, e2)  a key in [e1; e2], or 0
//   remove(e1, e2)  removes and returns a key in [e1; e2] (the smallest one
//                   seen during an ascending scan), or 0
//   insert(e)       adds e unless it is already present
//
// Rebalancing replaces a parent node wholesale. The grandparent's status
// field advertises the rebalance (STEP1), the parent and the affected
// children are frozen, a replacement parent is built from the frozen
// contents (STEP2), the grandparent's child link is swapped, and the status
// field is cleared with its sequence bumped. Every thread that meets a
// non-NONE status helps the rebalance to completion, so no thread waits on
// another.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "elb/config.hpp"
#include "elb/keyspace.hpp"
#include "elb/memory.hpp"
#include "elb/node.hpp"
#include "elb/plan.hpp"
#include "elb/reclaim.hpp"
#include "elb/stats.hpp"
#include "elb/status.hpp"

namespace elb {

class livelock_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class structure_error : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Nested description of a subtree, used to build trees of a given shape
/// and to export the shape of a quiescent tree. A node without children is
/// a leaf; its `slots` are raw slot words in slot order (missing slots are
/// vacant).
struct layout {
  std::vector<key_type> separators;
  std::vector<layout> children;
  std::vector<std::uint64_t> slots;

  bool is_leaf() const noexcept { return children.empty(); }
  static layout leaf(std::vector<std::uint64_t> slots) { return {{}, {}, std::move(slots)}; }
  static layout internal(std::vector<key_type> seps, std::vector<layout> kids) {
    return {std::move(seps), std::move(kids), {}};
  }
  friend bool operator==(const layout&, const layout&) = default;
};

enum class violation_kind : unsigned char {
  root_degree,        // root anchor must have exactly one child
  multiple_parents,   // node reachable through more than one link
  separator_order,    // separators not strictly increasing
  separator_range,    // separator outside the node's own range
  child_count,        // |children| != |separators| + 1, or more than K children
  leaf_range,         // key outside the leaf's path-derived range
  duplicate_key,      // payload present twice
  invalid_key,        // payload outside (0; 2^63)
  frozen_reachable,   // read-only node or key reachable at quiescence
  pending_status,     // rebalance still advertised at quiescence
  uneven_depth,       // leaves at different depths
};

const char* to_string(violation_kind k);

struct violation {
  violation_kind kind;
  std::string where;
  std::string detail;
};

/// Result of one pass over a leaf's slots.
struct scan_result {
  int match = -1;             // slot holding the smallest live payload in range
  key_type match_key = 0;
  bool match_readonly = false;  // that payload is frozen
  int vacant = -1;            // first writable empty slot
  unsigned live = 0;          // non-empty payloads
  bool frozen = false;        // every slot is read-only
};

template <class Memory = native_memory>
class basic_tree {
public:
  using node_type = node<Memory>;
  using leaf_type = leaf_node<Memory>;
  using internal_type = internal_node<Memory>;

  struct path_entry {
    internal_type* node;
    std::uint32_t index;     // child taken
    status_word observed;    // status read before taking the child
  };

  /// Route from the root anchor to a leaf. `lower` is exclusive, `upper`
  /// inclusive: the leaf may only hold keys in (lower; upper].
  struct access_path {
    std::vector<path_entry> internals;
    leaf_type* leaf = nullptr;
    key_type lower = 0;
    key_type upper = max_key;
  };

  explicit basic_tree(tree_config cfg = {}, reclaim_mode mode = reclaim_mode::retire);
  basic_tree(tree_config cfg, const layout& top, reclaim_mode mode = reclaim_mode::never_free);
  ~basic_tree();
  basic_tree(const basic_tree&) = delete;
  basic_tree& operator=(const basic_tree&) = delete;

  key_type search(key_type e1, key_type e2);
  key_type remove(key_type e1, key_type e2);
  bool insert(key_type e);

  access_path descend(key_type key);
  static scan_result leaf_scan(leaf_type& leaf, key_type e1, key_type e2);

  /// Advertises and completes a rebalance of the node `level` steps above
  /// the leaf holding `key` (0 = the leaf). Returns false if another
  /// rebalance was pending on the grandparent; that one is helped instead.
  bool rebalance_at(key_type key, unsigned level = 0);

  /// Completes whatever rebalance `g` currently advertises.
  void help(internal_type* g, status_word s);

  // Quiescent-only views.
  std::vector<key_type> snapshot() const;
  std::vector<violation> check_structure() const;
  layout export_layout() const;
  unsigned height() const;
  status_word root_status() const { return status_word{root_->status.peek()}; }
  internal_type* root() const noexcept { return root_; }

  const tree_config& config() const noexcept { return cfg_; }
  rebalance_counters counters() const { return stats_.snapshot(); }
  reclaim_mode mode() const noexcept { return mode_; }

private:
  struct budget {
    std::size_t limit;
    std::size_t used = 0;
    rebalance_stats* stats;
    void tick() {
      rebalance_stats::bump(stats->restarts);
      if (limit != 0 && ++used > limit)
        throw livelock_error("operation exceeded " + std::to_string(limit) + " restarts");
    }
  };

  struct frozen_set {
    std::vector<node_type*> retired;    // nodes the swap unlinks, parent first
  };

  struct replacement {
    internal_type* parent = nullptr;
    std::vector<node_type*> fresh;      // every node allocated for this build
    rebalance_action action = rebalance_action::copy;
    std::vector<std::size_t> leaf_sizes;
    bool sole_leaf = false;
    bool preserved = true;
  };

  access_path descend(key_type key, budget& b);
  bool fix_path(const access_path& p);
  bool request(const access_path& p, std::size_t depth);
  bool request_split(const access_path& p);
  void help_leaf(const access_path& p);
  bool has_sibling(const access_path& p) const { return p.internals.back().node->degree > 1; }

  void help_impl(internal_type* g, status_word s, bool owner);
  void freeze_leaf(leaf_type* l);
  void freeze_internal(internal_type* n);
  frozen_set freeze_involved(internal_type* parent, std::uint32_t child, bool do_freeze);
  replacement build(internal_type* parent, std::uint32_t child);
  void record(const replacement& r);
  void clear_status(internal_type* g, status_word s);

  static bool is_frozen(internal_type* n) { return status_word{n->status.load()}.frozen(); }
  static std::uint32_t leaf_population(const leaf_type* l);

  void retire(node_type* n);
  void destroy_subtree(node_type* n);
  internal_type* build_layout(const layout& l, bool is_top);
  leaf_type* make_leaf(std::span<const std::uint64_t> slots) {
    return new leaf_type(cfg_.leaf_capacity, slots);
  }

  tree_config cfg_;
  reclaim_mode mode_;
  epoch_domain* domain_;
  internal_type* root_;
  std::atomic<node_type*> retired_head_{nullptr};
  mutable rebalance_stats stats_;
};

using tree = basic_tree<native_memory>;

}  // namespace elb

#include "elb/detail/operations_impl.hpp"
#include "elb/detail/rebalance_impl.hpp"
#include "elb/detail/audit_impl.hpp"
