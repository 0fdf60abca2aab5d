#pragma once

// Construction, descent and the three public operations of basic_tree.

namespace elb {

template <class Memory>
basic_tree<Memory>::basic_tree(tree_config cfg, reclaim_mode mode)
    : cfg_(cfg), mode_(mode), domain_(nullptr), root_(nullptr), stats_(cfg.leaf_capacity) {
  cfg_.validate();
  if constexpr (Memory::simulated) mode_ = reclaim_mode::never_free;
  if (mode_ == reclaim_mode::retire) domain_ = &epoch_domain::instance();
  auto* ln = make_leaf({});
  internal_part<node_type*> top;
  top.children.push_back(ln);
  auto* ic = new internal_type(top);
  internal_part<node_type*> anchor;
  anchor.children.push_back(ic);
  root_ = new internal_type(anchor);
}

template <class Memory>
basic_tree<Memory>::basic_tree(tree_config cfg, const layout& top, reclaim_mode mode)
    : cfg_(cfg), mode_(mode), domain_(nullptr), root_(nullptr), stats_(cfg.leaf_capacity) {
  cfg_.validate();
  if constexpr (Memory::simulated) mode_ = reclaim_mode::never_free;
  if (mode_ == reclaim_mode::retire) domain_ = &epoch_domain::instance();
  if (top.is_leaf()) throw config_error("layout: the root's child must be an internal node");
  internal_part<node_type*> anchor;
  anchor.children.push_back(build_layout(top, true));
  root_ = new internal_type(anchor);
}

template <class Memory>
auto basic_tree<Memory>::build_layout(const layout& l, bool is_top) -> internal_type* {
  if (l.children.size() > cfg_.order)
    throw config_error("layout: internal node with more than K children");
  internal_part<node_type*> part;
  part.separators = l.separators;
  for (const auto& c : l.children) {
    if (c.is_leaf()) {
      if (c.slots.size() > cfg_.leaf_capacity) throw config_error("layout: leaf with more than D slots");
      part.children.push_back(make_leaf(c.slots));
    } else {
      part.children.push_back(build_layout(c, false));
    }
  }
  (void)is_top;
  return new internal_type(part);
}

template <class Memory>
basic_tree<Memory>::~basic_tree() {
  destroy_subtree(root_);
  node_type* n = retired_head_.load(std::memory_order_acquire);
  while (n != nullptr) {
    node_type* next = n->retired_next;
    destroy_node(n);
    n = next;
  }
}

template <class Memory>
void basic_tree<Memory>::destroy_subtree(node_type* n) {
  if (n == nullptr) return;
  if (!n->is_leaf) {
    auto* in = as_internal(n);
    for (std::uint32_t i = 0; i < in->degree; ++i) destroy_subtree(in->children[i].peek());
  }
  destroy_node(n);
}

template <class Memory>
void basic_tree<Memory>::retire(node_type* n) {
  if (mode_ == reclaim_mode::never_free) {
    node_type* head = retired_head_.load(std::memory_order_relaxed);
    do {
      n->retired_next = head;
    } while (!retired_head_.compare_exchange_weak(head, n, std::memory_order_release,
                                                  std::memory_order_relaxed));
    return;
  }
  domain_->retire(n, [](void* p) { destroy_node(static_cast<node_type*>(p)); });
}

// ---------------------------------------------------------------------------
// Descent

template <class Memory>
auto basic_tree<Memory>::descend(key_type key) -> access_path {
  require_key(key);
  epoch_domain::guard g(domain_);
  budget b{cfg_.max_restarts, 0, &stats_};
  return descend(key, b);
}

template <class Memory>
auto basic_tree<Memory>::descend(key_type key, budget& b) -> access_path {
  access_path p;
  p.internals.reserve(8);
  for (;;) {
    p.internals.clear();
    p.lower = 0;
    p.upper = max_key;
    internal_type* n = root_;
    for (;;) {
      const status_word s{n->status.load()};
      if (s.pending()) {
        help(n, s);
        continue;
      }
      if (s.frozen()) break;
      const std::uint32_t idx = node_search(n->separators, key);
      p.internals.push_back({n, idx, s});
      if (idx > 0) p.lower = n->separators[idx - 1];
      if (idx + 1 < n->degree) p.upper = n->separators[idx];
      node_type* c = n->children[idx].load();
      if (c->is_leaf) {
        p.leaf = as_leaf(c);
        return p;
      }
      n = as_internal(c);
    }
    b.tick();
  }
}

template <class Memory>
scan_result basic_tree<Memory>::leaf_scan(leaf_type& leaf, key_type e1, key_type e2) {
  scan_result r;
  bool all_readonly = true;
  for (unsigned i = 0; i < leaf.capacity; ++i) {
    const key_word w{leaf.slots[i].load()};
    if (!w.readonly()) all_readonly = false;
    if (w.vacant()) {
      if (r.vacant < 0) r.vacant = static_cast<int>(i);
      continue;
    }
    if (w.empty()) continue;
    ++r.live;
    const key_type k = w.payload();
    if (k >= e1 && k <= e2 && (r.match < 0 || k < r.match_key)) {
      r.match = static_cast<int>(i);
      r.match_key = k;
      r.match_readonly = w.readonly();
    }
  }
  r.frozen = all_readonly;
  return r;
}

// ---------------------------------------------------------------------------
// Operations

template <class Memory>
key_type basic_tree<Memory>::search(key_type e1, key_type e2) {
  require_key(e1, "e1");
  require_key(e2, "e2");
  if (e1 > e2) throw std::domain_error("search: e1 > e2");
  epoch_domain::guard g(domain_);
  budget b{cfg_.max_restarts, 0, &stats_};
  key_type from = e1;
  for (;;) {
    const access_path p = descend(from, b);
    const scan_result s = leaf_scan(*p.leaf, from, e2);
    if (s.match >= 0) return s.match_key;
    if (p.upper >= e2) return 0;
    from = p.upper + 1;
  }
}

template <class Memory>
bool basic_tree<Memory>::insert(key_type e) {
  require_key(e);
  epoch_domain::guard g(domain_);
  budget b{cfg_.max_restarts, 0, &stats_};
  for (;;) {
    const access_path p = descend(e, b);
    if (!fix_path(p)) {
      for (;;) {
        const scan_result s = leaf_scan(*p.leaf, e, e);
        if (s.match >= 0) return false;
        // A frozen leaf has no vacant slot either; asking for a rebalance
        // then finds the grandparent busy and helps it.
        if (s.vacant < 0) {
          if (s.live >= cfg_.leaf_capacity)
            request_split(p);
          else
            request(p, p.internals.size());
          break;
        }
        std::uint64_t expected = 0;
        if (p.leaf->slots[s.vacant].cas(expected, e)) return true;
      }
    }
    b.tick();
  }
}

template <class Memory>
key_type basic_tree<Memory>::remove(key_type e1, key_type e2) {
  require_key(e1, "e1");
  require_key(e2, "e2");
  if (e1 > e2) throw std::domain_error("remove: e1 > e2");
  epoch_domain::guard g(domain_);
  budget b{cfg_.max_restarts, 0, &stats_};
  key_type from = e1;
  for (;;) {
    const access_path p = descend(from, b);
    bool advanced = false;
    if (!fix_path(p)) {
      for (;;) {
        const scan_result s = leaf_scan(*p.leaf, from, e2);
        if (s.match < 0) {
          if (p.upper >= e2) return 0;
          from = p.upper + 1;
          advanced = true;
          break;
        }
        if (s.match_readonly) {
          help_leaf(p);
          break;
        }
        if (s.live < cfg_.underflow_threshold() && has_sibling(p)) {
          request(p, p.internals.size());
          break;
        }
        std::uint64_t expected = s.match_key;
        if (p.leaf->slots[s.match].cas(expected, readonly_bit)) return s.match_key;
      }
    }
    if (!advanced) b.tick();
  }
}

// ---------------------------------------------------------------------------
// Rebalance triggers

// Depth counts from the root anchor: internals[d] is at depth d and the
// leaf is at depth internals.size(). Depth 1 is the root's child, whose
// rebalances are advertised on the anchor itself.
template <class Memory>
bool basic_tree<Memory>::request(const access_path& p, std::size_t depth) {
  if (depth < 1 || depth > p.internals.size()) throw std::logic_error("request: bad depth");
  const path_entry& ge = depth == 1 ? p.internals[0] : p.internals[depth - 2];
  const std::uint32_t child = depth == 1 ? status_word::self_index : p.internals[depth - 1].index;
  const status_word want = status_word::make(step::step1, ge.index, child, ge.observed.sequence());
  std::uint64_t expected = ge.observed.bits();
  if (ge.node->status.cas(expected, want.bits())) {
    rebalance_stats::bump(stats_.begun);
    Memory::event(protocol_event::rebalance_begun);
    help_impl(ge.node, want, true);
    return true;
  }
  const status_word now{expected};
  if (now.pending()) help(ge.node, now);
  return false;
}

// A split adds a child to the parent, so full ancestors are split first,
// top-most last-full one first. Reaching the root's child grows the tree.
template <class Memory>
bool basic_tree<Memory>::request_split(const access_path& p) {
  std::size_t depth = p.internals.size();
  while (depth >= 2 && p.internals[depth - 1].node->degree >= cfg_.order) --depth;
  return request(p, depth);
}

template <class Memory>
bool basic_tree<Memory>::fix_path(const access_path& p) {
  const auto& in = p.internals;
  if (in.size() > 2 && in[1].node->degree == 1) return request(p, 1), true;
  for (std::size_t d = 2; d < in.size(); ++d) {
    if (in[d].node->degree < cfg_.internal_min() && in[d - 1].node->degree > 1) {
      request(p, d);
      return true;
    }
  }
  return false;
}

// A frozen leaf is always being rebalanced under its grandparent.
template <class Memory>
void basic_tree<Memory>::help_leaf(const access_path& p) {
  internal_type* g = p.internals[p.internals.size() - 2].node;
  const status_word s{g->status.load()};
  if (s.pending()) help(g, s);
}

template <class Memory>
bool basic_tree<Memory>::rebalance_at(key_type key, unsigned level) {
  epoch_domain::guard g(domain_);
  budget b{cfg_.max_restarts, 0, &stats_};
  const access_path p = descend(key, b);
  const std::size_t leaf_depth = p.internals.size();
  const std::size_t depth = level >= leaf_depth ? 1 : leaf_depth - level;
  return request(p, depth);
}

}  // namespace elb
