#pragma once

// The rebalance protocol: freeze, build, swap, clear. Every step is safe to
// replay by any number of helpers.

#include <algorithm>

namespace elb {

template <class Memory>
void basic_tree<Memory>::help(internal_type* g, status_word s) {
  help_impl(g, s, false);
}

template <class Memory>
void basic_tree<Memory>::help_impl(internal_type* g, status_word s, bool owner) {
  const std::uint64_t seq = s.sequence();
  for (;;) {
    if (!s.pending() || s.sequence() != seq) return;
    const std::uint32_t pi = s.parent_index();
    node_type* pn = g->children[pi].load();
    // The link only changes under this status, so a matching re-read pins
    // `pn` as the advertised parent (or its replacement, during STEP2).
    const status_word now{g->status.load()};
    if (now != s) {
      s = now;
      continue;
    }
    auto* parent = as_internal(pn);

    if (s.phase() == step::step1) {
      freeze_internal(parent);
      freeze_involved(parent, s.child_index(), true);
      Memory::event(protocol_event::nodes_frozen);
      std::uint64_t expected = s.bits();
      const status_word next = s.with_phase(step::step2);
      if (g->status.cas(expected, next.bits())) {
        Memory::event(protocol_event::step2_entered);
        s = next;
      } else {
        s = status_word{expected};
      }
      continue;
    }

    // STEP2. A parent that is not frozen is the replacement: the swap is done.
    if (!is_frozen(parent)) {
      clear_status(g, s);
      return;
    }
    replacement r = build(parent, s.child_index());
    node_type* expected = parent;
    if (g->children[pi].cas(expected, r.parent)) {
      rebalance_stats::bump(stats_.committed);
      if (!owner) rebalance_stats::bump(stats_.helper_commits);
      record(r);
      for (node_type* n : freeze_involved(parent, s.child_index(), false).retired) retire(n);
      Memory::event(protocol_event::link_swapped);
    } else {
      for (node_type* n : r.fresh) destroy_node(n);
      rebalance_stats::bump(stats_.discarded_builds);
    }
    clear_status(g, s);
    return;
  }
}

template <class Memory>
void basic_tree<Memory>::clear_status(internal_type* g, status_word s) {
  std::uint64_t expected = s.bits();
  if (g->status.cas(expected, s.cleared().bits())) {
    rebalance_stats::bump(stats_.cleared);
    Memory::event(protocol_event::status_cleared);
  }
}

template <class Memory>
void basic_tree<Memory>::freeze_leaf(leaf_type* l) {
  for (unsigned i = 0; i < l->capacity; ++i) {
    for (;;) {
      std::uint64_t v = l->slots[i].load();
      if (v & readonly_bit) break;
      if (l->slots[i].cas(v, v | readonly_bit)) break;
    }
  }
}

template <class Memory>
void basic_tree<Memory>::freeze_internal(internal_type* n) {
  for (;;) {
    const status_word s{n->status.load()};
    if (s.frozen()) return;
    if (s.pending()) {
      help(n, s);
      continue;
    }
    std::uint64_t expected = s.bits();
    if (n->status.cas(expected, s.with_phase(step::frozen).bits())) return;
  }
}

template <class Memory>
std::uint32_t basic_tree<Memory>::leaf_population(const leaf_type* l) {
  std::uint32_t n = 0;
  for (unsigned i = 0; i < l->capacity; ++i)
    if (!key_word{l->slots[i].peek()}.empty()) ++n;
  return n;
}

// Nodes taking part in the rebalance of `parent` (already frozen): the
// parent, the unbalanced child and, when the plan needs it, a sibling. The
// set is a function of frozen contents, so helpers agree on it.
template <class Memory>
auto basic_tree<Memory>::freeze_involved(internal_type* parent, std::uint32_t child, bool do_freeze)
    -> frozen_set {
  frozen_set f;
  f.retired.push_back(parent);
  auto freeze = [&](node_type* n) {
    if (!do_freeze) return;
    if (n->is_leaf)
      freeze_leaf(as_leaf(n));
    else
      freeze_internal(as_internal(n));
  };
  if (child == status_word::self_index) {
    if (parent->degree == 1) {
      node_type* c = parent->children[0].peek();
      if (!c->is_leaf) {
        freeze(c);
        f.retired.push_back(c);
      }
    }
    return f;
  }
  node_type* u = parent->children[child].peek();
  freeze(u);
  f.retired.push_back(u);
  const bool has_sib = parent->degree > 1;
  const bool need = u->is_leaf ? leaf_needs_sibling(leaf_population(as_leaf(u)), has_sib, cfg_)
                               : internal_needs_sibling(as_internal(u)->degree, has_sib, cfg_);
  if (need) {
    node_type* sib = parent->children[sibling_index(child, parent->degree)].peek();
    freeze(sib);
    f.retired.push_back(sib);
  }
  return f;
}

template <class Memory>
auto basic_tree<Memory>::build(internal_type* parent, std::uint32_t child) -> replacement {
  replacement r;
  const internal_part<node_type*> pp = parent->frozen_part();
  auto add_leaf = [&](const std::vector<key_type>& keys) -> node_type* {
    const std::vector<std::uint64_t> slots(keys.begin(), keys.end());
    auto* l = make_leaf(slots);
    r.fresh.push_back(l);
    return l;
  };
  auto add_internal = [&](const internal_part<node_type*>& part) -> node_type* {
    auto* n = new internal_type(part);
    r.fresh.push_back(n);
    return n;
  };
  auto concat_children = [](const auto& parts) {
    std::vector<node_type*> out;
    for (const auto& part : parts) out.insert(out.end(), part.children.begin(), part.children.end());
    return out;
  };

  if (child == status_word::self_index) {
    internal_part<node_type*> only;
    const bool collapse = pp.degree() == 1 && !pp.children[0]->is_leaf;
    if (collapse) only = as_internal(pp.children[0])->frozen_part();
    const auto ip = plan_root(pp, collapse ? &only : nullptr, cfg_);
    r.action = ip.action;
    if (ip.action == rebalance_action::grow) {
      internal_part<node_type*> top;
      top.separators = ip.separators;
      for (const auto& part : ip.nodes) top.children.push_back(add_internal(part));
      r.parent = as_internal(add_internal(top));
      r.preserved = concat_children(ip.nodes) == pp.children;
    } else {
      r.parent = as_internal(add_internal(ip.nodes.front()));
      r.preserved = ip.nodes.front().children == (collapse ? only.children : pp.children);
    }
    return r;
  }

  node_type* u = pp.children[child];
  const bool has_sib = pp.degree() > 1;
  const std::size_t si = sibling_index(child, pp.degree());
  const bool room = pp.degree() < cfg_.order;
  std::vector<node_type*> kids;
  std::size_t first = child, last = child;
  std::vector<key_type> between;

  if (u->is_leaf) {
    const std::vector<key_type> keys = as_leaf(u)->frozen_keys();
    const bool need = leaf_needs_sibling(keys.size(), has_sib, cfg_);
    std::vector<key_type> sib_keys;
    if (need) sib_keys = as_leaf(pp.children[si])->frozen_keys();
    leaf_plan lp = plan_leaf(keys, sib_keys, need, si > child, cfg_);
    if (lp.action == rebalance_action::split && !room) lp = leaf_plan{rebalance_action::copy, {keys}, {}};
    r.action = lp.action;
    std::vector<key_type> before = keys, after;
    before.insert(before.end(), sib_keys.begin(), sib_keys.end());
    std::sort(before.begin(), before.end());
    for (const auto& ks : lp.leaves) {
      kids.push_back(add_leaf(ks));
      r.leaf_sizes.push_back(ks.size());
      after.insert(after.end(), ks.begin(), ks.end());
    }
    r.preserved = before == after;
    between = lp.separators;
    if (need) {
      first = std::min<std::size_t>(child, si);
      last = std::max<std::size_t>(child, si);
    }
  } else {
    const internal_part<node_type*> up = as_internal(u)->frozen_part();
    const bool need = internal_needs_sibling(up.degree(), has_sib, cfg_);
    internal_part<node_type*> sp;
    if (need) sp = as_internal(pp.children[si])->frozen_part();
    const key_type sep = need ? pp.separators[std::min<std::size_t>(child, si)] : 0;
    auto ip = plan_internal(up, need ? &sp : nullptr, si > child, sep, cfg_);
    if (ip.action == rebalance_action::split && !room)
      ip = internal_plan<node_type*>{rebalance_action::copy, {up}, {}};
    r.action = ip.action;
    std::vector<internal_part<node_type*>> old{up};
    if (need) old.insert(si > child ? old.end() : old.begin(), sp);
    r.preserved = concat_children(old) == concat_children(ip.nodes);
    for (const auto& part : ip.nodes) kids.push_back(add_internal(part));
    between = ip.separators;
    if (need) {
      first = std::min<std::size_t>(child, si);
      last = std::max<std::size_t>(child, si);
    }
  }
  const auto np = splice<node_type*>(pp, first, last, kids, between);
  r.sole_leaf = u->is_leaf && np.degree() == 1;
  r.parent = as_internal(add_internal(np));
  return r;
}

template <class Memory>
void basic_tree<Memory>::record(const replacement& r) {
  rebalance_stats::bump(stats_.by_action[static_cast<std::size_t>(r.action)]);
  rebalance_stats::bump(stats_.preservation_checks);
  if (!r.preserved) rebalance_stats::bump(stats_.preservation_failures);
  const std::size_t lo = cfg_.balanced_min(), hi = cfg_.leaf_capacity - 1;
  for (std::size_t size : r.leaf_sizes) {
    rebalance_stats::bump(stats_.leaves_emitted);
    stats_.emitted(size);
    if (r.sole_leaf)
      rebalance_stats::bump(stats_.sole_leaves_emitted);
    else if (size < lo || size > hi)
      rebalance_stats::bump(stats_.size_bound_violations);
  }
}

}  // namespace elb
