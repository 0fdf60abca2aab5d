#pragma once

// Status field of an internal node, packed into one CAS-able word:
//
//   bits  0..1   step      NONE | STEP1 | STEP2 | FROZEN
//   bits  2..13  parent    index of the rebalanced parent among this node's children
//   bits 14..25  child     index of the unbalanced node among the parent's children,
//                          or `self_index` when the parent itself is rebalanced
//   bits 26..63  sequence  bumped every time a rebalance clears the field
//
// A node whose status is STEP1 or STEP2 is the grandparent of a pending
// rebalance. FROZEN is terminal: the node is read-only and about to be
// replaced.

#include <cstdint>
#include <ostream>

namespace elb {

enum class step : std::uint8_t { none = 0, step1 = 1, step2 = 2, frozen = 3 };

class status_word {
public:
  static constexpr unsigned index_bits = 12;
  static constexpr std::uint32_t index_mask = (1u << index_bits) - 1;
  static constexpr std::uint32_t self_index = index_mask;
  static constexpr unsigned seq_shift = 2 + 2 * index_bits;

  constexpr status_word() noexcept = default;
  constexpr explicit status_word(std::uint64_t bits) noexcept : bits_(bits) {}

  static constexpr status_word make(step s, std::uint32_t parent, std::uint32_t child,
                                    std::uint64_t seq) noexcept {
    return status_word{static_cast<std::uint64_t>(s) |
                       (std::uint64_t{parent & index_mask} << 2) |
                       (std::uint64_t{child & index_mask} << (2 + index_bits)) |
                       (seq << seq_shift)};
  }
  static constexpr status_word idle(std::uint64_t seq) noexcept {
    return make(step::none, 0, 0, seq);
  }

  constexpr std::uint64_t bits() const noexcept { return bits_; }
  constexpr step phase() const noexcept { return static_cast<step>(bits_ & 3); }
  constexpr std::uint32_t parent_index() const noexcept {
    return static_cast<std::uint32_t>(bits_ >> 2) & index_mask;
  }
  constexpr std::uint32_t child_index() const noexcept {
    return static_cast<std::uint32_t>(bits_ >> (2 + index_bits)) & index_mask;
  }
  constexpr std::uint64_t sequence() const noexcept { return bits_ >> seq_shift; }

  constexpr bool pending() const noexcept {
    return phase() == step::step1 || phase() == step::step2;
  }
  constexpr bool frozen() const noexcept { return phase() == step::frozen; }

  constexpr status_word with_phase(step s) const noexcept {
    return status_word{(bits_ & ~std::uint64_t{3}) | static_cast<std::uint64_t>(s)};
  }
  // Cleared field for the next rebalance: NONE with sequence + 1.
  constexpr status_word cleared() const noexcept { return idle(sequence() + 1); }

  friend constexpr bool operator==(status_word, status_word) noexcept = default;

private:
  std::uint64_t bits_ = 0;
};

inline const char* to_string(step s) {
  switch (s) {
    case step::none: return "NONE";
    case step::step1: return "STEP1";
    case step::step2: return "STEP2";
    case step::frozen: return "FROZEN";
  }
  return "?";
}

inline std::ostream& operator<<(std::ostream& os, status_word s) {
  return os << '{' << s.parent_index() << ',' << s.child_index() << ',' << s.sequence()
            << ',' << to_string(s.phase()) << '}';
}

}  // namespace elb
