#pragma once

// Quiescent views of a tree: the represented key set, structural invariant
// checks and shape export. Callers guarantee no operation is in flight.

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace elb {

inline const char* to_string(violation_kind k) {
  switch (k) {
    case violation_kind::root_degree: return "root-degree";
    case violation_kind::multiple_parents: return "one-parent";
    case violation_kind::separator_order: return "separator-order";
    case violation_kind::separator_range: return "separator-range";
    case violation_kind::child_count: return "child-count";
    case violation_kind::leaf_range: return "leaf-range";
    case violation_kind::duplicate_key: return "duplicate-key";
    case violation_kind::invalid_key: return "invalid-key";
    case violation_kind::frozen_reachable: return "frozen-reachable";
    case violation_kind::pending_status: return "pending-status";
    case violation_kind::uneven_depth: return "uneven-depth";
  }
  return "?";
}

template <class Memory>
std::vector<key_type> basic_tree<Memory>::snapshot() const {
  std::vector<key_type> keys;
  std::vector<const node_type*> stack{root_};
  while (!stack.empty()) {
    const node_type* n = stack.back();
    stack.pop_back();
    if (n->is_leaf) {
      const auto* l = static_cast<const leaf_type*>(n);
      for (unsigned i = 0; i < l->capacity; ++i) {
        const key_word w{l->slots[i].peek()};
        if (!w.empty()) keys.push_back(w.payload());
      }
    } else {
      const auto* in = static_cast<const internal_type*>(n);
      for (std::uint32_t i = 0; i < in->degree; ++i) stack.push_back(in->children[i].peek());
    }
  }
  std::sort(keys.begin(), keys.end());
  const auto dup = std::adjacent_find(keys.begin(), keys.end());
  if (dup != keys.end()) throw structure_error("key " + std::to_string(*dup) + " stored twice");
  return keys;
}

template <class Memory>
std::vector<violation> basic_tree<Memory>::check_structure() const {
  std::vector<violation> out;
  std::unordered_set<const node_type*> seen;
  std::vector<std::pair<key_type, std::string>> keys;
  long leaf_depth = -1;

  auto report = [&](violation_kind k, const std::string& where, const std::string& detail) {
    out.push_back({k, where, detail});
  };

  auto walk = [&](auto&& self, const node_type* n, key_type lower, key_type upper, long depth,
                  const std::string& where) -> void {
    if (!seen.insert(n).second) {
      report(violation_kind::multiple_parents, where, "node reached twice");
      return;
    }
    if (n->is_leaf) {
      const auto* l = static_cast<const leaf_type*>(n);
      if (leaf_depth < 0) leaf_depth = depth;
      if (depth != leaf_depth)
        report(violation_kind::uneven_depth, where,
               "leaf at depth " + std::to_string(depth) + ", expected " + std::to_string(leaf_depth));
      for (unsigned i = 0; i < l->capacity; ++i) {
        const key_word w{l->slots[i].peek()};
        if (w.empty()) continue;
        if (w.readonly())
          report(violation_kind::frozen_reachable, where, "slot " + std::to_string(i) + " read-only");
        const key_type k = w.payload();
        if (k <= lower || k > upper) {
          std::ostringstream os;
          os << "key " << k << " outside (" << lower << "; " << upper << "]";
          report(violation_kind::leaf_range, where, os.str());
        }
        keys.emplace_back(k, where);
      }
      return;
    }
    const auto* in = static_cast<const internal_type*>(n);
    const status_word s{in->status.peek()};
    if (s.frozen()) report(violation_kind::frozen_reachable, where, "internal node frozen");
    if (s.pending()) {
      std::ostringstream os;
      os << "status " << s;
      report(violation_kind::pending_status, where, os.str());
    }
    if (in->degree != in->separators.size() + 1)
      report(violation_kind::child_count, where,
             std::to_string(in->degree) + " children, " + std::to_string(in->separators.size()) +
                 " separators");
    if (n != root_ && in->degree > cfg_.order)
      report(violation_kind::child_count, where, std::to_string(in->degree) + " children > K");
    for (std::size_t j = 0; j < in->separators.size(); ++j) {
      const key_type sj = in->separators[j];
      if (!valid_key(sj)) report(violation_kind::invalid_key, where, "separator " + std::to_string(sj));
      if (j > 0 && in->separators[j - 1] >= sj) {
        std::ostringstream os;
        os << "separator[" << j - 1 << "]=" << in->separators[j - 1] << " >= separator[" << j
           << "]=" << sj;
        report(violation_kind::separator_order, where, os.str());
      }
      if (sj <= lower || sj > upper) {
        std::ostringstream os;
        os << "separator " << sj << " outside (" << lower << "; " << upper << "]";
        report(violation_kind::separator_range, where, os.str());
      }
    }
    for (std::uint32_t j = 0; j < in->degree; ++j) {
      const key_type lo = j > 0 && j - 1 < in->separators.size() ? in->separators[j - 1] : lower;
      const key_type hi = j < in->separators.size() ? in->separators[j] : upper;
      self(self, in->children[j].peek(), std::max(lo, lower), std::min(hi, upper), depth + 1,
           where + "/" + std::to_string(j));
    }
  };

  if (root_->degree != 1)
    report(violation_kind::root_degree, "r", std::to_string(root_->degree) + " children");
  walk(walk, root_, 0, max_key, 0, "r");

  std::sort(keys.begin(), keys.end());
  for (std::size_t i = 1; i < keys.size(); ++i)
    if (keys[i].first == keys[i - 1].first)
      report(violation_kind::duplicate_key, keys[i].second,
             "key " + std::to_string(keys[i].first) + " also in " + keys[i - 1].second);
  return out;
}

template <class Memory>
layout basic_tree<Memory>::export_layout() const {
  auto walk = [&](auto&& self, const node_type* n) -> layout {
    if (n->is_leaf) {
      const auto* l = static_cast<const leaf_type*>(n);
      std::vector<std::uint64_t> slots;
      for (unsigned i = 0; i < l->capacity; ++i) slots.push_back(l->slots[i].peek());
      while (!slots.empty() && slots.back() == 0) slots.pop_back();
      return layout::leaf(std::move(slots));
    }
    const auto* in = static_cast<const internal_type*>(n);
    std::vector<layout> kids;
    for (std::uint32_t i = 0; i < in->degree; ++i) kids.push_back(self(self, in->children[i].peek()));
    return layout::internal(in->separators, std::move(kids));
  };
  return walk(walk, root_->children[0].peek());
}

template <class Memory>
unsigned basic_tree<Memory>::height() const {
  unsigned h = 0;
  const node_type* n = root_->children[0].peek();
  for (;;) {
    ++h;
    if (n->is_leaf) return h;
    n = static_cast<const internal_type*>(n)->children[0].peek();
  }
}

}  // namespace elb
