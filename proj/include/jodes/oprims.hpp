#pragma once

// Standalone data-oblivious primitives. Every element access goes through
// Buffer::read/write so that the sequence of touched indices can be traced;
// for all primitives here that sequence depends only on the buffer length
// and the public parameters (p, U, m).

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "jodes/error.hpp"

namespace jodes {

// ---------------------------------------------------------------------------
// CMove

/// Branch-free conditional assignment: dest <- src iff cond.
template <class T>
  requires std::is_trivially_copyable_v<T>
inline void cmove(bool cond, T& dest, const T& src) noexcept {
  if constexpr (std::is_same_v<T, bool>) {
    dest = (dest & !cond) | (src & cond);
  } else if constexpr (std::is_integral_v<T>) {
    using U = std::make_unsigned_t<T>;
    const U mask = U(0) - static_cast<U>(cond);
    dest = static_cast<T>((static_cast<U>(dest) & ~mask) | (static_cast<U>(src) & mask));
  } else {
    const std::uint64_t mask = std::uint64_t{0} - static_cast<std::uint64_t>(cond);
    auto* d = reinterpret_cast<unsigned char*>(&dest);
    const auto* s = reinterpret_cast<const unsigned char*>(&src);
    std::size_t off = 0;
    for (; off + 8 <= sizeof(T); off += 8) {
      std::uint64_t x, y;
      std::memcpy(&x, d + off, 8);
      std::memcpy(&y, s + off, 8);
      x ^= (x ^ y) & mask;
      std::memcpy(d + off, &x, 8);
    }
    const auto bmask = static_cast<unsigned char>(mask);
    for (; off < sizeof(T); ++off) {
      d[off] = static_cast<unsigned char>(d[off] ^ ((d[off] ^ s[off]) & bmask));
    }
  }
}

/// cond ? a : b without a data-dependent branch.
template <class T>
inline T cselect(bool cond, const T& a, const T& b) noexcept {
  T out = b;
  cmove(cond, out, a);
  return out;
}

// ---------------------------------------------------------------------------
// Access tracing

/// Sequence of (read|write, index) pairs, packed as (index << 1) | is_write.
class AccessTrace {
 public:
  void read(std::size_t i) { entries_.push_back(static_cast<std::uint64_t>(i) << 1); }
  void write(std::size_t i) { entries_.push_back((static_cast<std::uint64_t>(i) << 1) | 1U); }
  void clear() { entries_.clear(); }

  std::size_t size() const { return entries_.size(); }
  const std::vector<std::uint64_t>& entries() const { return entries_; }

  friend bool operator==(const AccessTrace&, const AccessTrace&) = default;

 private:
  std::vector<std::uint64_t> entries_;
};

/// Computation counters kept per server.
struct OpCounters {
  std::uint64_t comparisons = 0;
  std::uint64_t cmoves = 0;

  OpCounters& operator+=(const OpCounters& o) {
    comparisons += o.comparisons;
    cmoves += o.cmoves;
    return *this;
  }
};

/// Owned element storage whose accesses may be traced and counted.
template <class T>
class Buffer {
 public:
  Buffer() = default;
  explicit Buffer(std::vector<T> items, AccessTrace* trace = nullptr, OpCounters* counters = nullptr)
      : items_(std::move(items)), trace_(trace), counters_(counters) {}

  std::size_t size() const { return items_.size(); }

  T read(std::size_t i) const {
    if (trace_) trace_->read(i);
    return items_[i];
  }

  void write(std::size_t i, const T& v) {
    if (trace_) trace_->write(i);
    items_[i] = v;
  }

  /// Public-size resize. Growth writes `fill` into every new slot.
  void resize(std::size_t n, const T& fill) {
    const std::size_t old = items_.size();
    items_.resize(n, fill);
    if (trace_) {
      for (std::size_t i = old; i < n; ++i) trace_->write(i);
    }
  }

  const std::vector<T>& items() const& { return items_; }
  std::vector<T> take() && { return std::move(items_); }

  AccessTrace* trace() const { return trace_; }
  OpCounters* counters() const { return counters_; }

  void count_compare() const {
    if (counters_) ++counters_->comparisons;
  }
  void count_cmove(std::uint64_t k = 1) const {
    if (counters_) counters_->cmoves += k;
  }

  /// A fresh buffer of another element type sharing this buffer's probes.
  template <class U>
  Buffer<U> sibling(std::vector<U> items) const {
    return Buffer<U>(std::move(items), trace_, counters_);
  }

 protected:
  void rebind_trace(AccessTrace* t) { trace_ = t; }

 private:
  std::vector<T> items_;
  AccessTrace* trace_ = nullptr;
  OpCounters* counters_ = nullptr;
};

/// Buffer that owns its access trace.
template <class T>
class TracedBuffer : public Buffer<T> {
 public:
  explicit TracedBuffer(std::vector<T> items = {})
      : Buffer<T>(std::move(items)), owned_(std::make_unique<AccessTrace>()) {
    this->rebind_trace(owned_.get());
  }

  const AccessTrace& access_trace() const { return *owned_; }

 private:
  std::unique_ptr<AccessTrace> owned_;
};

/// Oblivious swap: both slots are read and written whatever `cond` is.
template <class T>
inline void oswap(Buffer<T>& buf, std::size_t i, std::size_t j, bool cond) {
  T x = buf.read(i);
  T y = buf.read(j);
  const T tmp = x;
  cmove(cond, x, y);
  cmove(cond, y, tmp);
  buf.write(i, x);
  buf.write(j, y);
  buf.count_cmove(2);
}

// ---------------------------------------------------------------------------
// OSort: bitonic network for arbitrary n

namespace detail {

inline std::size_t greatest_pow2_below(std::size_t n) {
  // largest power of two strictly less than n (n >= 2)
  return std::bit_floor(n - 1);
}

template <class T, class Less>
void bitonic_merge(Buffer<T>& buf, std::size_t lo, std::size_t n, bool ascending, const Less& less) {
  if (n <= 1) return;
  const std::size_t m = greatest_pow2_below(n);
  for (std::size_t i = lo; i < lo + n - m; ++i) {
    T x = buf.read(i);
    T y = buf.read(i + m);
    buf.count_compare();
    const bool swap = ascending ? less(y, x) : less(x, y);
    const T tmp = x;
    cmove(swap, x, y);
    cmove(swap, y, tmp);
    buf.write(i, x);
    buf.write(i + m, y);
    buf.count_cmove(2);
  }
  bitonic_merge(buf, lo, m, ascending, less);
  bitonic_merge(buf, lo + m, n - m, ascending, less);
}

template <class T, class Less>
void bitonic_sort(Buffer<T>& buf, std::size_t lo, std::size_t n, bool ascending, const Less& less) {
  if (n <= 1) return;
  const std::size_t half = n / 2;
  bitonic_sort(buf, lo, half, !ascending, less);
  bitonic_sort(buf, lo + half, n - half, ascending, less);
  bitonic_merge(buf, lo, n, ascending, less);
}

}  // namespace detail

/// Sorts ascending under `less`. The comparator network depends only on size.
template <class T, class Less>
void osort(Buffer<T>& buf, const Less& less) {
  detail::bitonic_sort(buf, 0, buf.size(), true, less);
}

/// Sorts ascending by an extracted key.
template <class T, class KeyFn>
void osort_by(Buffer<T>& buf, const KeyFn& key) {
  osort(buf, [&](const T& x, const T& y) { return key(x) < key(y); });
}

// ---------------------------------------------------------------------------
// OCompact: recursive offline tight compaction, O(n log n) oblivious swaps

namespace detail {

// `prefix[k]` is the number of marked slots among the first k slots of the
// whole buffer, so ranges [lo, lo + n) read their counts as differences.
template <class T>
void off_compact(Buffer<T>& buf, const std::vector<std::size_t>& prefix, std::size_t lo, std::size_t n,
                 std::size_t z) {
  if (n <= 1) return;
  const std::size_t half = n / 2;
  const std::size_t mid = lo + half;
  const std::size_t m = prefix[mid] - prefix[lo];
  if (n == 2) {
    const std::size_t right_marked = prefix[lo + 2] - prefix[mid];
    const bool swap = (static_cast<std::size_t>(m == 0) & right_marked) != z;
    oswap(buf, lo, mid, swap);
    return;
  }
  const std::size_t z_left = z % half;
  const std::size_t z_right = (z + m) % half;
  off_compact(buf, prefix, lo, half, z_left);
  off_compact(buf, prefix, mid, half, z_right);
  const bool s = (z_left + m >= half) != (z >= half);
  for (std::size_t i = 0; i < half; ++i) {
    const bool b = s != (i >= z_right);
    oswap(buf, lo + i, mid + i, b);
  }
}

template <class T>
void compact(Buffer<T>& buf, const std::vector<std::size_t>& prefix, std::size_t lo, std::size_t n) {
  if (n <= 1) return;
  const std::size_t n1 = std::bit_floor(n);
  const std::size_t n2 = n - n1;
  if (n2 == 0) {
    off_compact(buf, prefix, lo, n, 0);
    return;
  }
  const std::size_t m = prefix[lo + n2] - prefix[lo];
  compact(buf, prefix, lo, n2);
  off_compact(buf, prefix, lo + n2, n1, (n1 - n2 + m) % n1);
  for (std::size_t i = 0; i < n2; ++i) {
    oswap(buf, lo + i, lo + n1 + i, i >= m);
  }
}

template <class T>
void compact_range(Buffer<T>& buf, std::size_t lo, std::size_t n, std::span<const std::uint8_t> marks) {
  std::vector<std::size_t> prefix(buf.size() + 1, 0);
  // Only [lo, lo + n] of the prefix is consulted; keep it relative to lo.
  for (std::size_t i = 0; i < n; ++i) prefix[lo + i + 1] = prefix[lo + i] + (marks[i] != 0);
  compact(buf, prefix, lo, n);
}

}  // namespace detail

/// Moves every marked slot in front of every unmarked slot.
/// Order inside each class is unspecified.
template <class T>
void ocompact(Buffer<T>& buf, std::span<const std::uint8_t> marks) {
  if (marks.size() != buf.size()) {
    throw InvalidArgument("ocompact: marks length differs from buffer length");
  }
  detail::compact_range(buf, 0, buf.size(), marks);
}

/// ocompact with marks computed by one linear scan over the buffer.
template <class T, class Pred>
void ocompact_if(Buffer<T>& buf, const Pred& marked) {
  std::vector<std::uint8_t> marks(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) marks[i] = marked(buf.read(i)) ? 1 : 0;
  ocompact(buf, std::span<const std::uint8_t>(marks));
}

// ---------------------------------------------------------------------------
// ODistribute

/// Places every item with nonzero target t at slot t (1-based) of an output
/// of exactly `m` slots. Items with target 0 are dummies and are discarded;
/// unoccupied slots hold dummies. Targets need not be sorted.
///
/// The input may be longer than `m` as long as at most `m` items are real.
template <class T, class TargetFn>
void odistribute(Buffer<T>& buf, std::size_t m, const TargetFn& target, const T& filler) {
  using U = std::uint64_t;
  auto sort_key = [&](const T& x) {
    const U t = static_cast<U>(target(x));
    return cselect<U>(t == 0, std::numeric_limits<U>::max(), t);
  };
  osort_by(buf, sort_key);

  bool duplicate = false;
  bool out_of_range = false;
  U prev = 0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const U t = static_cast<U>(target(buf.read(i)));
    const bool real = t != 0;
    duplicate |= real & (t == prev);
    out_of_range |= real & (t > m);
    prev = t;
  }
  if (duplicate) throw DuplicateTarget("odistribute: two real items share a target");
  if (out_of_range) throw TargetOutOfRange("odistribute: target exceeds output size");

  if (buf.size() > m) {
    std::vector<T> kept = std::move(buf).take();
    kept.resize(m);
    buf = buf.sibling(std::move(kept));
  } else {
    buf.resize(m, filler);
  }
  if (m <= 1) return;

  // Every real item at index i sits at or before its slot; route it right by
  // the binary digits of (slot - i), largest offset first.
  for (std::size_t j = std::bit_floor(m - 1); j >= 1; j >>= 1) {
    for (std::size_t k = m - j; k-- > 0;) {
      T x = buf.read(k);
      T y = buf.read(k + j);
      const U t = static_cast<U>(target(x));
      const bool move = (t != 0) & (t - 1 >= k + j);
      const T tmp = x;
      cmove(move, x, y);
      cmove(move, y, tmp);
      buf.write(k, x);
      buf.write(k + j, y);
      buf.count_cmove(2);
    }
  }
}

// ---------------------------------------------------------------------------
// OPartition

namespace detail {

template <class T>
struct Routed {
  T item;
  std::uint64_t route = 0;
};

inline std::vector<std::size_t> bucket_offsets(std::span<const std::size_t> capacities) {
  std::vector<std::size_t> off(capacities.size() + 1, 0);
  std::partial_sum(capacities.begin(), capacities.end(), off.begin() + 1);
  return off;
}

// Oblivious check that every slot of bucket j holds either a discarded
// item or an item targeted at j.
template <class T, class TargetFn>
bool misplaced(const Buffer<T>& buf, const std::vector<std::size_t>& off, const TargetFn& target) {
  bool bad = false;
  for (std::size_t j = 0; j + 1 < off.size(); ++j) {
    for (std::size_t i = off[j]; i < off[j + 1]; ++i) {
      const auto t = static_cast<std::uint64_t>(target(buf.read(i)));
      bad |= (t != 0) & (t != j + 1);
    }
  }
  return bad;
}

}  // namespace detail

/// Sort-based partitioning: osort by target, rank inside each target class,
/// odistribute to slot (t-1)U + rank. Output is p buckets of exactly U slots.
template <class T, class TargetFn>
void opartition_sort(Buffer<T>& buf, std::size_t p, std::size_t capacity, const TargetFn& target,
                     const T& filler) {
  using U = std::uint64_t;
  using R = detail::Routed<T>;
  std::vector<R> wrapped(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) wrapped[i].item = buf.read(i);
  Buffer<R> work = buf.sibling(std::move(wrapped));

  const U none = static_cast<U>(p) + 1;
  auto cls = [&](const R& r) {
    const U t = static_cast<U>(target(r.item));
    return cselect<U>(t == 0, none, t);
  };
  osort_by(work, cls);

  bool overflow = false;
  U prev = 0;
  U rank = 0;
  for (std::size_t i = 0; i < work.size(); ++i) {
    R r = work.read(i);
    const U t = static_cast<U>(target(r.item));
    const bool real = t != 0;
    rank = cselect<U>((i > 0) & (t == prev), rank + 1, 0);
    overflow |= real & (rank >= capacity);
    const U slot = (t - 1) * capacity + rank + 1;
    r.route = cselect<U>(real & (rank < capacity), slot, 0);
    work.write(i, r);
    prev = t;
  }

  odistribute(work, p * capacity, [](const R& r) { return r.route; }, R{filler, 0});

  std::vector<T> out(work.size());
  for (std::size_t i = 0; i < work.size(); ++i) out[i] = work.read(i).item;
  buf = buf.sibling(std::vector<T>(out.size(), filler));
  for (std::size_t i = 0; i < out.size(); ++i) buf.write(i, out[i]);
  if (overflow) throw PaddingOverflow("opartition_sort: a target class exceeds the bucket bound");
}

namespace detail {

template <class T, class TargetFn>
void partition_recurse(Buffer<T>& buf, const std::vector<std::size_t>& off, std::size_t l, std::size_t r,
                       const TargetFn& target) {
  if (r - l <= 1) return;
  using U = std::uint64_t;
  const std::size_t mid = (l + r) / 2;
  const std::size_t lo = off[l];
  const std::size_t hi = off[r];
  const std::size_t left_cap = off[mid] - lo;

  U count = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const U t = static_cast<U>(target(buf.read(i)));
    count += static_cast<U>((t != 0) & (t <= mid));
  }
  std::vector<std::uint8_t> marks(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) {
    const U t = static_cast<U>(target(buf.read(i)));
    const bool fill_left = (t == 0) & (count < left_cap);
    count += static_cast<U>(fill_left);
    marks[i - lo] = static_cast<std::uint8_t>(fill_left | ((t != 0) & (t <= mid)));
  }
  compact_range(buf, lo, hi - lo, std::span<const std::uint8_t>(marks));

  partition_recurse(buf, off, l, mid, target);
  partition_recurse(buf, off, mid, r, target);
}

}  // namespace detail

/// Quicksort-style partitioning with per-bucket capacities: recursion over
/// target ranges with a midpoint pivot, each level one ocompact.
/// Output bucket j occupies slots [sum(cap[<j]), sum(cap[<=j])).
template <class T, class TargetFn>
void opartition_quick(Buffer<T>& buf, std::span<const std::size_t> capacities, const TargetFn& target,
                      const T& filler) {
  const std::vector<std::size_t> off = detail::bucket_offsets(capacities);
  const std::size_t total = off.back();
  bool overflow = false;

  if (buf.size() > total) {
    // More slots than the output can hold: pull real items forward first.
    std::vector<std::uint8_t> marks(buf.size());
    std::size_t reals = 0;
    for (std::size_t i = 0; i < buf.size(); ++i) {
      const bool real = target(buf.read(i)) != 0;
      marks[i] = real ? 1 : 0;
      reals += static_cast<std::size_t>(real);
    }
    overflow |= reals > total;
    ocompact(buf, std::span<const std::uint8_t>(marks));
    std::vector<T> kept = std::move(buf).take();
    kept.resize(total);
    buf = buf.sibling(std::move(kept));
  } else {
    buf.resize(total, filler);
  }

  detail::partition_recurse(buf, off, 0, capacities.size(), target);
  overflow |= detail::misplaced(buf, off, target);
  if (overflow) throw PaddingOverflow("opartition_quick: a target class exceeds the bucket bound");
}

/// Uniform-capacity form: p buckets of U slots each.
template <class T, class TargetFn>
void opartition_quick(Buffer<T>& buf, std::size_t p, std::size_t capacity, const TargetFn& target,
                      const T& filler) {
  const std::vector<std::size_t> caps(p, capacity);
  opartition_quick(buf, std::span<const std::size_t>(caps), target, filler);
}

// ---------------------------------------------------------------------------
// Local scans

enum class ScanDirection { prefix, suffix };

/// Associative operator lifted to (key, value) pairs: values combine with
/// `combine` while keys match and restart when the key changes. An unkeyed
/// scan uses a constant key.
template <class T, class V, class KeyFn, class GetFn, class SetFn, class CombineFn>
struct ScanOperator {
  using element_type = T;
  using value_type = V;

  KeyFn key;
  GetFn get;
  SetFn set;
  CombineFn combine;
  V identity{};
};

template <class T, class V, class KeyFn, class GetFn, class SetFn, class CombineFn>
auto make_scan_operator(KeyFn key, GetFn get, SetFn set, CombineFn combine, V identity = V{}) {
  return ScanOperator<T, V, KeyFn, GetFn, SetFn, CombineFn>{key, get, set, combine, identity};
}

/// Running state at the end of a scan: the last key and accumulated value.
template <class V>
struct ScanCarry {
  bool any = false;
  std::int64_t key = 0;
  V value{};
};

/// Single pass, data-independent accesses. For a suffix scan, position i
/// holds x_i (+) ... (+) x_end-of-run.
template <class T, class Op>
ScanCarry<typename Op::value_type> scan_local(Buffer<T>& buf, ScanDirection dir, const Op& op) {
  using V = typename Op::value_type;
  ScanCarry<V> carry{false, 0, op.identity};
  const std::size_t n = buf.size();
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t i = dir == ScanDirection::prefix ? step : n - 1 - step;
    T x = buf.read(i);
    const std::int64_t k = op.key(x);
    V v = op.get(x);
    const V combined = dir == ScanDirection::prefix ? op.combine(carry.value, v) : op.combine(v, carry.value);
    cmove(carry.any & (k == carry.key), v, combined);
    buf.count_cmove();
    op.set(x, v);
    buf.write(i, x);
    carry.any = true;
    carry.key = k;
    carry.value = v;
  }
  return carry;
}

/// Folds an incoming carry (from the servers before, or after, this one)
/// into the leading (prefix) or trailing (suffix) run that continues it.
template <class T, class Op>
void scan_apply_carry(Buffer<T>& buf, ScanDirection dir, const Op& op,
                      const ScanCarry<typename Op::value_type>& carry) {
  using V = typename Op::value_type;
  const std::size_t n = buf.size();
  bool open = carry.any;
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t i = dir == ScanDirection::prefix ? step : n - 1 - step;
    T x = buf.read(i);
    V v = op.get(x);
    const V combined = dir == ScanDirection::prefix ? op.combine(carry.value, v) : op.combine(v, carry.value);
    open = open & (op.key(x) == carry.key);
    cmove(open, v, combined);
    buf.count_cmove();
    op.set(x, v);
    buf.write(i, x);
  }
}

/// Combines two carries in sequence order (left before right).
template <class Op>
ScanCarry<typename Op::value_type> combine_carries(ScanDirection dir, const Op& op,
                                                   const ScanCarry<typename Op::value_type>& left,
                                                   const ScanCarry<typename Op::value_type>& right) {
  using V = typename Op::value_type;
  // prefix: the running carry is `left`, extended by `right`;
  // suffix: the running carry is `right`, extended by `left`.
  const auto& base = dir == ScanDirection::prefix ? left : right;
  const auto& next = dir == ScanDirection::prefix ? right : left;
  ScanCarry<V> out = next;
  const V combined = dir == ScanDirection::prefix ? op.combine(base.value, next.value)
                                                  : op.combine(next.value, base.value);
  cmove(base.any & next.any & (base.key == next.key), out.value, combined);
  // An empty segment is transparent.
  cmove(!next.any, out, base);
  return out;
}

}  // namespace jodes
