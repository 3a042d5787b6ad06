#pragma once

#include <cstdint>
#include <limits>
#include <tuple>
#include <type_traits>

namespace jodes {

/// Reserved join key carried by dummy records. Never a valid real key.
inline constexpr std::int64_t kDummyKey = std::numeric_limits<std::int64_t>::max();

/// Fixed-width tuple shared by every operator.
///
/// `key` is the join/sort column B, `a` and `c` are the opaque payload
/// columns of R(A,B) and S(B,C). The remaining slots are working columns
/// written by the distributed operators; they are meaningless on dummies.
struct Record {
  std::int64_t key = kDummyKey;  // B
  std::int64_t a = 0;            // A
  std::int64_t c = 0;            // C
  std::int64_t z = 0;            // inactive rank in the PK join (-1 marks S-side rows)
  std::int64_t origin = 0;       // I: origin server id, 1-based
  std::int64_t target = 0;       // T: target server id, 1-based, 0 = discard
  std::int64_t pos = 0;          // L: target global position / alignment key, 1-based
  std::int64_t local = 0;        // P: target local position, 1-based
  std::int64_t deg_r = 0;        // D_R
  std::int64_t deg_s = 0;        // D_S
  std::int64_t group_start = 0;  // J
  std::int64_t rank = 0;         // I in the alignment phase: rank inside the B-group
  std::uint8_t dummy = 1;
  std::uint8_t has_c = 0;        // C is set (0 encodes C = bottom)
};

static_assert(std::is_trivially_copyable_v<Record>);
static_assert(sizeof(Record) % 8 == 0);

inline Record make_dummy() { return Record{}; }

inline Record make_row(std::int64_t key, std::int64_t a, std::int64_t c = 0, bool has_c = false) {
  Record r;
  r.key = key;
  r.a = a;
  r.c = c;
  r.has_c = has_c ? 1 : 0;
  r.dummy = 0;
  return r;
}

inline bool is_real(const Record& r) { return r.dummy == 0; }

/// Columns that travel with a tuple's content (as opposed to per-slot
/// routing columns). Used by the expansion fill.
inline void copy_content(Record& dest, const Record& src) {
  dest.key = src.key;
  dest.a = src.a;
  dest.c = src.c;
  dest.deg_r = src.deg_r;
  dest.deg_s = src.deg_s;
  dest.dummy = src.dummy;
  dest.has_c = src.has_c;
}

/// Logical (A, B, C) output row, used by oracles and comparisons.
struct JoinRow {
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t c = 0;
  bool has_c = true;

  friend bool operator==(const JoinRow&, const JoinRow&) = default;
  friend bool operator<(const JoinRow& x, const JoinRow& y) {
    return std::tie(x.a, x.b, x.has_c, x.c) < std::tie(y.a, y.b, y.has_c, y.c);
  }
};

inline JoinRow to_join_row(const Record& r) { return JoinRow{r.a, r.key, r.c, r.has_c != 0}; }

}  // namespace jodes
