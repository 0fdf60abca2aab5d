#pragma once

// Key words: one 64-bit machine word holding a 63-bit key payload and a
// read-only flag in the most significant bit. Payload 0 marks an empty slot.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace elb {

using key_type = std::uint64_t;

inline constexpr std::uint64_t readonly_bit = std::uint64_t{1} << 63;
inline constexpr std::uint64_t payload_mask = readonly_bit - 1;
inline constexpr key_type min_key = 1;
inline constexpr key_type max_key = payload_mask;

class key_word {
public:
  constexpr key_word() noexcept = default;
  constexpr explicit key_word(std::uint64_t bits) noexcept : bits_(bits) {}

  constexpr std::uint64_t bits() const noexcept { return bits_; }
  constexpr key_type payload() const noexcept { return bits_ & payload_mask; }
  constexpr bool readonly() const noexcept { return (bits_ & readonly_bit) != 0; }
  constexpr bool empty() const noexcept { return payload() == 0; }

  // Writable empty slot: the only state an insert may CAS from.
  constexpr bool vacant() const noexcept { return bits_ == 0; }

  friend constexpr bool operator==(key_word, key_word) noexcept = default;

private:
  std::uint64_t bits_ = 0;
};

constexpr bool valid_key(std::uint64_t raw) noexcept {
  return raw >= min_key && raw <= max_key;
}

inline void require_key(std::uint64_t raw, const char* what = "key") {
  if (!valid_key(raw))
    throw std::domain_error(std::string(what) + " outside (0; 2^63): " +
                            std::to_string(raw));
}

inline key_word encode(std::uint64_t raw) {
  require_key(raw);
  return key_word{raw};
}

constexpr key_word set_readonly(key_word w) noexcept {
  return key_word{w.bits() | readonly_bit};
}

/// Packs `value` into the low `value_bits` bits below `key`, so the tree can
/// act as a dictionary (exact-key search) or a priority queue (remove over
/// the whole key range returns the smallest key with its value).
inline key_word pack(std::uint64_t key, std::uint64_t value, unsigned value_bits) {
  if (value_bits > 62)
    throw std::overflow_error("value_bits must be at most 62");
  if (key == 0)
    throw std::domain_error("packed key must be at least 1");
  const unsigned key_bits = 63 - value_bits;
  if (key >> key_bits != 0)
    throw std::overflow_error("key part does not fit in " + std::to_string(key_bits) + " bits");
  if ((value >> value_bits) != 0)
    throw std::overflow_error("value part does not fit in " + std::to_string(value_bits) + " bits");
  return key_word{(key << value_bits) | value};
}

struct packed_entry {
  std::uint64_t key = 0;
  std::uint64_t value = 0;
  friend constexpr bool operator==(packed_entry, packed_entry) noexcept = default;
};

constexpr packed_entry unpack(key_type payload, unsigned value_bits) noexcept {
  const std::uint64_t mask =
      value_bits == 0 ? 0 : (std::uint64_t{1} << value_bits) - 1;
  return {(payload & payload_mask) >> value_bits, payload & mask};
}

// Smallest and largest payload carrying `key` in its high part; use these as
// the [e1; e2] range to look up a dictionary entry.
constexpr std::pair<key_type, key_type> packed_range(std::uint64_t key,
                                                     unsigned value_bits) noexcept {
  const std::uint64_t lo = key << value_bits;
  const std::uint64_t hi = value_bits == 0 ? lo : lo | ((std::uint64_t{1} << value_bits) - 1);
  return {lo, hi};
}

}  // namespace elb
