#pragma once

// Rebalance planning. Every function here is a pure function of frozen node
// contents, so any number of helpers replaying the same rebalance build
// identical replacement nodes.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "elb/config.hpp"
#include "elb/keyspace.hpp"

namespace elb {

enum class rebalance_action : unsigned char {
  split,         // one full node becomes two
  merge,         // an underfull node and its sibling become one
  redistribute,  // an underfull node and its sibling are evened out
  copy,          // imbalance vanished before the freeze; replace with a compact copy
  grow,          // the root's child is split, the tree gains a level
  collapse,      // the root's child has a single internal child, the tree loses a level
};

inline constexpr std::size_t rebalance_action_count = 6;

inline const char* to_string(rebalance_action a) {
  switch (a) {
    case rebalance_action::split: return "split";
    case rebalance_action::merge: return "merge";
    case rebalance_action::redistribute: return "redistribute";
    case rebalance_action::copy: return "copy";
    case rebalance_action::grow: return "grow";
    case rebalance_action::collapse: return "collapse";
  }
  return "?";
}

/// Sibling used alongside child `index` of a parent with `degree` children:
/// the right neighbour, or the left one for the rightmost child. Returns
/// `degree` when the parent has a single child.
constexpr std::size_t sibling_index(std::size_t index, std::size_t degree) noexcept {
  if (degree < 2) return degree;
  return index + 1 < degree ? index + 1 : index - 1;
}

// ---------------------------------------------------------------------------
// Leaves

struct leaf_plan {
  rebalance_action action = rebalance_action::copy;
  std::vector<std::vector<key_type>> leaves;  // replacement leaves, left to right
  std::vector<key_type> separators;           // leaves.size() - 1 separators
};

inline bool leaf_needs_sibling(std::size_t live, bool has_sibling, const tree_config& cfg) {
  return has_sibling && live < cfg.leaf_capacity && live < cfg.balanced_min();
}

namespace detail {
inline void halve(std::vector<key_type> all, leaf_plan& out) {
  const std::size_t left = (all.size() + 1) / 2;
  out.leaves.emplace_back(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(left));
  out.leaves.emplace_back(all.begin() + static_cast<std::ptrdiff_t>(left), all.end());
  out.separators.push_back(out.leaves.front().back());
}
}  // namespace detail

/// Plans the rebalance of a frozen leaf holding the sorted live keys `keys`.
/// `sibling` is consulted only when leaf_needs_sibling() holds; `sibling_right`
/// says on which side of the leaf it sits.
inline leaf_plan plan_leaf(std::span<const key_type> keys, std::span<const key_type> sibling,
                           bool has_sibling, bool sibling_right, const tree_config& cfg) {
  leaf_plan p;
  if (keys.size() >= cfg.leaf_capacity) {
    p.action = rebalance_action::split;
    detail::halve({keys.begin(), keys.end()}, p);
    return p;
  }
  if (!leaf_needs_sibling(keys.size(), has_sibling, cfg)) {
    p.action = rebalance_action::copy;
    p.leaves.emplace_back(keys.begin(), keys.end());
    return p;
  }
  std::vector<key_type> all;
  all.reserve(keys.size() + sibling.size());
  const auto& lhs = sibling_right ? keys : sibling;
  const auto& rhs = sibling_right ? sibling : keys;
  all.insert(all.end(), lhs.begin(), lhs.end());
  all.insert(all.end(), rhs.begin(), rhs.end());
  if (all.size() + 1 <= cfg.leaf_capacity) {
    p.action = rebalance_action::merge;
    p.leaves.push_back(std::move(all));
  } else {
    p.action = rebalance_action::redistribute;
    detail::halve(std::move(all), p);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Internal nodes

template <class Child>
struct internal_part {
  std::vector<key_type> separators;
  std::vector<Child> children;

  std::size_t degree() const noexcept { return children.size(); }
  friend bool operator==(const internal_part&, const internal_part&) = default;
};

template <class Child>
struct internal_plan {
  rebalance_action action = rebalance_action::copy;
  std::vector<internal_part<Child>> nodes;
  std::vector<key_type> separators;  // nodes.size() - 1 separators
};

inline bool internal_needs_sibling(std::size_t degree, bool has_sibling, const tree_config& cfg) {
  return has_sibling && degree < cfg.order && degree < cfg.internal_min();
}

namespace detail {
template <class Child>
void halve(internal_part<Child> all, internal_plan<Child>& out) {
  const std::size_t left = (all.degree() + 1) / 2;
  internal_part<Child> l, r;
  l.children.assign(all.children.begin(), all.children.begin() + static_cast<std::ptrdiff_t>(left));
  r.children.assign(all.children.begin() + static_cast<std::ptrdiff_t>(left), all.children.end());
  l.separators.assign(all.separators.begin(),
                      all.separators.begin() + static_cast<std::ptrdiff_t>(left - 1));
  r.separators.assign(all.separators.begin() + static_cast<std::ptrdiff_t>(left),
                      all.separators.end());
  out.separators.push_back(all.separators[left - 1]);
  out.nodes.push_back(std::move(l));
  out.nodes.push_back(std::move(r));
}
}  // namespace detail

/// Plans the rebalance of a frozen internal node `u`. `between` is the parent
/// separator that lies between `u` and its sibling.
template <class Child>
internal_plan<Child> plan_internal(const internal_part<Child>& u, const internal_part<Child>* sibling,
                                   bool sibling_right, key_type between, const tree_config& cfg) {
  internal_plan<Child> p;
  if (u.degree() >= cfg.order) {
    p.action = rebalance_action::split;
    detail::halve(u, p);
    return p;
  }
  if (sibling == nullptr || !internal_needs_sibling(u.degree(), true, cfg)) {
    p.action = rebalance_action::copy;
    p.nodes.push_back(u);
    return p;
  }
  const auto& lhs = sibling_right ? u : *sibling;
  const auto& rhs = sibling_right ? *sibling : u;
  internal_part<Child> all;
  all.children = lhs.children;
  all.children.insert(all.children.end(), rhs.children.begin(), rhs.children.end());
  all.separators = lhs.separators;
  all.separators.push_back(between);
  all.separators.insert(all.separators.end(), rhs.separators.begin(), rhs.separators.end());
  if (all.degree() <= cfg.order) {
    p.action = rebalance_action::merge;
    p.nodes.push_back(std::move(all));
  } else {
    p.action = rebalance_action::redistribute;
    detail::halve(std::move(all), p);
  }
  return p;
}

/// Plans a rebalance of the root's child `top`. `only_child` is the content
/// of its single child when that child is internal, else null.
template <class Child>
internal_plan<Child> plan_root(const internal_part<Child>& top, const internal_part<Child>* only_child,
                               const tree_config& cfg) {
  internal_plan<Child> p;
  if (top.degree() >= cfg.order) {
    detail::halve(top, p);
    p.action = rebalance_action::grow;
    return p;
  }
  if (top.degree() == 1 && only_child != nullptr) {
    p.action = rebalance_action::collapse;
    p.nodes.push_back(*only_child);
    return p;
  }
  p.action = rebalance_action::copy;
  p.nodes.push_back(top);
  return p;
}

/// Replaces children [first, last] of `parent` with `replacement`, whose
/// inner separators are `between`. Separators strictly inside the replaced
/// range are dropped.
template <class Child>
internal_part<Child> splice(const internal_part<Child>& parent, std::size_t first, std::size_t last,
                            std::span<const Child> replacement, std::span<const key_type> between) {
  if (first > last || last >= parent.degree() || replacement.size() != between.size() + 1)
    throw std::logic_error("splice: bad range");
  internal_part<Child> out;
  const auto f = static_cast<std::ptrdiff_t>(first);
  const auto l = static_cast<std::ptrdiff_t>(last);
  out.children.assign(parent.children.begin(), parent.children.begin() + f);
  out.children.insert(out.children.end(), replacement.begin(), replacement.end());
  out.children.insert(out.children.end(), parent.children.begin() + l + 1, parent.children.end());
  out.separators.assign(parent.separators.begin(), parent.separators.begin() + f);
  out.separators.insert(out.separators.end(), between.begin(), between.end());
  out.separators.insert(out.separators.end(), parent.separators.begin() + l, parent.separators.end());
  return out;
}

}  // namespace elb
