#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "elb/keyspace.hpp"
#include "elb/memory.hpp"
#include "elb/plan.hpp"
#include "elb/status.hpp"

namespace elb {

template <class Memory>
struct node {
  const bool is_leaf;
  node* retired_next = nullptr;

protected:
  explicit node(bool leaf) noexcept : is_leaf(leaf) {}
  ~node() = default;
};

/// D independently CAS-able key slots. Slots move vacant -> key -> tombstone
/// and are never reused; a tombstone is the read-only empty word, so a freeze
/// leaves it unchanged.
template <class Memory>
struct leaf_node final : node<Memory> {
  using slot_type = shared_cell<std::uint64_t, Memory>;

  leaf_node(unsigned capacity, std::span<const std::uint64_t> initial)
      : node<Memory>(true), capacity(capacity), slots(new slot_type[capacity]) {
    const auto n = std::min<std::size_t>(initial.size(), capacity);
    for (std::size_t i = 0; i < n; ++i) slots[i].poke(initial[i]);
  }

  const unsigned capacity;
  const std::unique_ptr<slot_type[]> slots;

  // Sorted live payloads. Only meaningful once the leaf is frozen or the
  // tree is quiescent.
  std::vector<key_type> frozen_keys() const {
    std::vector<key_type> out;
    out.reserve(capacity);
    for (unsigned i = 0; i < capacity; ++i) {
      const key_word w{slots[i].peek()};
      if (!w.empty()) out.push_back(w.payload());
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

/// Immutable separators and child count; the child links and the status
/// field are the only mutable parts.
template <class Memory>
struct internal_node final : node<Memory> {
  using link_type = shared_cell<node<Memory>*, Memory>;

  explicit internal_node(const internal_part<node<Memory>*>& part,
                         status_word initial = status_word::idle(0))
      : node<Memory>(false),
        separators(part.separators),
        degree(static_cast<std::uint32_t>(part.children.size())),
        children(new link_type[part.children.size()]),
        status(initial.bits()) {
    for (std::size_t i = 0; i < part.children.size(); ++i) children[i].poke(part.children[i]);
  }

  const std::vector<key_type> separators;
  const std::uint32_t degree;
  const std::unique_ptr<link_type[]> children;
  shared_cell<std::uint64_t, Memory> status;

  // Content of a frozen (or quiescent) node.
  internal_part<node<Memory>*> frozen_part() const {
    internal_part<node<Memory>*> p;
    p.separators = separators;
    p.children.reserve(degree);
    for (std::uint32_t i = 0; i < degree; ++i) p.children.push_back(children[i].peek());
    return p;
  }
};

template <class Memory>
leaf_node<Memory>* as_leaf(node<Memory>* n) noexcept {
  return static_cast<leaf_node<Memory>*>(n);
}
template <class Memory>
internal_node<Memory>* as_internal(node<Memory>* n) noexcept {
  return static_cast<internal_node<Memory>*>(n);
}

template <class Memory>
void destroy_node(node<Memory>* n) noexcept {
  if (n == nullptr) return;
  if (n->is_leaf)
    delete as_leaf(n);
  else
    delete as_internal(n);
}

/// Index of the child whose range holds `key`: the smallest j with
/// key <= separators[j], or the last child. Ties go left.
inline std::uint32_t node_search(std::span<const key_type> separators, key_type key) noexcept {
  std::uint32_t j = 0;
  const auto n = static_cast<std::uint32_t>(separators.size());
  while (j < n && separators[j] < key) ++j;
  return j;
}

}  // namespace elb
