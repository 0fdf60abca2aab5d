#pragma once

// Sequential reference: a sorted set driven by the same three operations.

#include <set>

#include "elb/keyspace.hpp"

namespace elb {

enum class op_kind : unsigned char { search, remove, insert };

inline const char* to_string(op_kind k) {
  switch (k) {
    case op_kind::search: return "SEARCH";
    case op_kind::remove: return "REMOVE";
    case op_kind::insert: return "INSERT";
  }
  return "?";
}

using oracle_set = std::set<key_type>;

/// Applies one operation. Search and remove return the smallest member of
/// [e1; e2] or 0; insert returns 1 on success, 0 if the key was present.
inline key_type oracle_apply(oracle_set& s, op_kind kind, key_type e1, key_type e2) {
  switch (kind) {
    case op_kind::insert:
      return s.insert(e1).second ? 1 : 0;
    case op_kind::search:
    case op_kind::remove: {
      auto it = s.lower_bound(e1);
      if (it == s.end() || *it > e2) return 0;
      const key_type k = *it;
      if (kind == op_kind::remove) s.erase(it);
      return k;
    }
  }
  return 0;
}

}  // namespace elb
