#pragma once

// Shuffle family: padded shuffle by a target column, random shuffle and
// shuffle by key. Records are routed by their `target` field (1-based server
// id, 0 = discard).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "jodes/cluster.hpp"
#include "jodes/error.hpp"
#include "jodes/oprims.hpp"
#include "jodes/padding.hpp"
#include "jodes/record.hpp"

namespace jodes {

/// Public hash h: key -> [1, p], identical on every server.
class KeyHasher {
 public:
  using Fn = std::function<std::size_t(std::int64_t key, std::int64_t z)>;

  KeyHasher(std::size_t p, std::uint64_t seed) : p_(p), seed_(seed) {
    if (p < 1) throw InvalidArgument("hasher: p must be >= 1");
  }

  /// Replaces the mixing function, e.g. with a fixed table in tests.
  static KeyHasher with_function(std::size_t p, Fn fn) {
    KeyHasher h(p, 0);
    h.fn_ = std::move(fn);
    return h;
  }

  std::size_t servers() const { return p_; }

  std::size_t operator()(std::int64_t key, std::int64_t z = 0) const {
    if (fn_) return fn_(key, z);
    std::uint64_t x = seed_ ^ mix(static_cast<std::uint64_t>(key) + 0x9e3779b97f4a7c15ULL);
    x = mix(x ^ (static_cast<std::uint64_t>(z) * 0xd1b54a32d192ed03ULL));
    return static_cast<std::size_t>(x % p_) + 1;
  }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
  }

  std::size_t p_;
  std::uint64_t seed_;
  Fn fn_;
};

/// Uniform targets in [1, p], one draw per position.
inline std::vector<std::size_t> random_targets(std::mt19937_64& g, std::size_t n, std::size_t p) {
  std::uniform_int_distribution<std::size_t> pick(1, p);
  std::vector<std::size_t> out(n);
  for (auto& t : out) t = pick(g);
  return out;
}

inline constexpr std::string_view kRandomShufflePurpose = "random-shuffle";

namespace shuffle_detail {

inline std::uint64_t route_of(const Record& r) { return static_cast<std::uint64_t>(r.target); }

}  // namespace shuffle_detail

/// Padded shuffle: sender i sends caps[i][j] slots to server j. Each
/// sender partitions obliviously; the message sizes are exactly caps.
inline DistTable shuffle_with_capacities(Cluster& cluster, DistTable table,
                                         const std::vector<std::vector<std::size_t>>& caps, const std::string& label,
                                         const Record& filler = make_dummy()) {
  const std::size_t p = cluster.servers();
  std::vector<std::vector<std::vector<Record>>> out(p);
  cluster.for_each_server([&](std::size_t i) {
    auto buf = cluster.buffer(i, std::move(table.parts[i]));
    opartition_quick(buf, std::span<const std::size_t>(caps[i]), shuffle_detail::route_of, filler);
    std::vector<Record> all = std::move(buf).take();
    out[i].resize(p);
    std::size_t at = 0;
    for (std::size_t j = 0; j < p; ++j) {
      out[i][j].assign(all.begin() + static_cast<std::ptrdiff_t>(at),
                       all.begin() + static_cast<std::ptrdiff_t>(at + caps[i][j]));
      at += caps[i][j];
    }
  });
  table.parts = cluster.exchange(std::move(out), label);
  return table;
}

/// Padded shuffle with a per-sender bound: sender i sends U_i slots to every
/// server.
inline DistTable shuffle(Cluster& cluster, DistTable table, std::span<const std::size_t> bounds,
                         const std::string& label, const Record& filler = make_dummy()) {
  const std::size_t p = cluster.servers();
  std::vector<std::vector<std::size_t>> caps(p);
  for (std::size_t i = 0; i < p; ++i) caps[i].assign(p, bounds[i]);
  return shuffle_with_capacities(cluster, std::move(table), caps, label, filler);
}

/// Unpadded random shuffle. Every record (dummies included) goes to an
/// independent uniform server; grouping is plain, non-oblivious code. Draws
/// are made per position, so sizes depend only on the seed and n_i.
inline DistTable shuffle_random(Cluster& cluster, DistTable table, const std::string& label = "random_shuffle") {
  const std::size_t p = cluster.servers();
  std::vector<std::vector<std::vector<Record>>> out(p);
  cluster.for_each_server([&](std::size_t i) {
    auto g = cluster.rng(i, kRandomShufflePurpose);
    const auto targets = random_targets(g, table.parts[i].size(), p);
    out[i].resize(p);
    for (std::size_t k = 0; k < targets.size(); ++k) out[i][targets[k] - 1].push_back(table.parts[i][k]);
  });
  table.parts = cluster.exchange(std::move(out), label);
  return table;
}

using CompositeKey = std::pair<std::int64_t, std::int64_t>;

namespace shuffle_detail {

// Oblivious local check that composite keys are distinct among real records.
// Sorts the partition by (dummy, key) as a side effect.
template <class KeyFn>
bool has_duplicate_keys(Buffer<Record>& buf, const KeyFn& key) {
  osort(buf, [&](const Record& x, const Record& y) {
    const auto kx = key(x);
    const auto ky = key(y);
    return std::tie(x.dummy, kx.first, kx.second) < std::tie(y.dummy, ky.first, ky.second);
  });
  bool dup = false;
  if (buf.size() == 0) return false;
  Record prev = buf.read(0);
  for (std::size_t i = 1; i < buf.size(); ++i) {
    const Record cur = buf.read(i);
    dup |= is_real(prev) & is_real(cur) & (key(prev) == key(cur));
    prev = cur;
  }
  return dup;
}

}  // namespace shuffle_detail

struct KeyedShuffle {
  DistTable table;
  PaddingPlan plan;
};

/// Shuffle by key: real records go to server h(key). Bounds come from the
/// shuffle-by-key plan over the current partition sizes.
template <class KeyFn>
KeyedShuffle shuffle_by_key(Cluster& cluster, DistTable table, const KeyHasher& hasher, const KeyFn& key,
                            const std::string& label = "shuffle_by_key", bool check_distinct = true,
                            const Record& filler = make_dummy()) {
  const std::size_t p = cluster.servers();
  std::vector<std::uint8_t> dup(p, 0);
  cluster.for_each_server([&](std::size_t i) {
    auto buf = cluster.buffer(i, std::move(table.parts[i]));
    if (check_distinct) dup[i] = shuffle_detail::has_duplicate_keys(buf, key) ? 1 : 0;
    for (std::size_t k = 0; k < buf.size(); ++k) {
      Record r = buf.read(k);
      const auto kk = key(r);
      r.target = cselect<std::int64_t>(is_real(r), static_cast<std::int64_t>(hasher(kk.first, kk.second)), 0);
      buf.write(k, r);
    }
    table.parts[i] = std::move(buf).take();
  });
  for (std::size_t i = 0; i < p; ++i) {
    if (dup[i]) throw DuplicateLocalKey("shuffle_by_key: server " + std::to_string(i + 1) + " holds a repeated key");
  }
  const auto sizes = table.sizes();
  PaddingPlan plan = pad_shuffle_by_key(sizes, p, cluster.sigma());
  DistTable moved = shuffle(cluster, std::move(table), plan.bounds, label, filler);
  return KeyedShuffle{std::move(moved), std::move(plan)};
}

/// Shuffle by the join key B alone.
inline KeyedShuffle shuffle_by_key(Cluster& cluster, DistTable table, const KeyHasher& hasher) {
  return shuffle_by_key(cluster, std::move(table), hasher,
                        [](const Record& r) { return CompositeKey{r.key, 0}; });
}

}  // namespace jodes
