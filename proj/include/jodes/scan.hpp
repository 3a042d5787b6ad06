#pragma once

// Distributed prefix/suffix scans. Each server scans locally, servers 2..p
// send their carry to server 1, which folds them in partition order and
// sends every server the carry of its predecessors (prefix) or successors
// (suffix). Keys are assumed contiguous across partitions.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "jodes/cluster.hpp"
#include "jodes/oprims.hpp"
#include "jodes/record.hpp"

namespace jodes {

template <class Op>
ScanCarry<typename Op::value_type> scan_distributed(Cluster& cluster, DistTable& table, ScanDirection dir,
                                                    const Op& op, const std::string& label = "scan") {
  using V = typename Op::value_type;
  using Carry = ScanCarry<V>;
  const std::size_t p = cluster.servers();

  std::vector<Carry> local(p);
  cluster.for_each_server([&](std::size_t i) {
    auto buf = cluster.buffer(i, std::move(table.parts[i]));
    local[i] = scan_local(buf, dir, op);
    table.parts[i] = std::move(buf).take();
  });

  std::vector<std::vector<std::vector<Carry>>> up(p, std::vector<std::vector<Carry>>(p));
  for (std::size_t i = 1; i < p; ++i) up[i][0].push_back(local[i]);
  auto gathered = cluster.exchange(std::move(up), label + ":gather", RoundKind::bookkeeping);

  std::vector<Carry> all(p);
  all[0] = local[0];
  for (std::size_t i = 1; i < p; ++i) all[i] = gathered[0][i - 1];

  std::vector<Carry> incoming(p, Carry{false, 0, op.identity});
  Carry acc{false, 0, op.identity};
  if (dir == ScanDirection::prefix) {
    for (std::size_t i = 0; i < p; ++i) {
      incoming[i] = acc;
      acc = combine_carries(dir, op, acc, all[i]);
    }
  } else {
    for (std::size_t i = p; i-- > 0;) {
      incoming[i] = acc;
      acc = combine_carries(dir, op, all[i], acc);
    }
  }

  std::vector<std::vector<std::vector<Carry>>> down(p, std::vector<std::vector<Carry>>(p));
  for (std::size_t i = 1; i < p; ++i) down[0][i].push_back(incoming[i]);
  auto scattered = cluster.exchange(std::move(down), label + ":scatter", RoundKind::bookkeeping);
  for (std::size_t i = 1; i < p; ++i) incoming[i] = scattered[i][0];

  cluster.for_each_server([&](std::size_t i) {
    auto buf = cluster.buffer(i, std::move(table.parts[i]));
    scan_apply_carry(buf, dir, op, incoming[i]);
    table.parts[i] = std::move(buf).take();
  });
  return acc;
}

/// Sum of `field` over real records, known to every server afterwards.
inline std::int64_t distributed_sum(Cluster& cluster, const DistTable& table, std::int64_t Record::*field,
                                    const std::string& label = "sum") {
  const std::size_t p = cluster.servers();
  std::vector<std::int64_t> partial(p, 0);
  for (std::size_t i = 0; i < p; ++i) {
    for (const auto& r : table.parts[i]) partial[i] += cselect<std::int64_t>(is_real(r), r.*field, 0);
  }
  std::vector<std::vector<std::vector<std::int64_t>>> up(p, std::vector<std::vector<std::int64_t>>(p));
  for (std::size_t i = 1; i < p; ++i) up[i][0].push_back(partial[i]);
  auto gathered = cluster.exchange(std::move(up), label + ":gather", RoundKind::bookkeeping);
  std::int64_t total = partial[0];
  for (auto v : gathered[0]) total += v;
  std::vector<std::vector<std::vector<std::int64_t>>> down(p, std::vector<std::vector<std::int64_t>>(p));
  for (std::size_t i = 1; i < p; ++i) down[0][i].push_back(total);
  cluster.exchange(std::move(down), label + ":scatter", RoundKind::bookkeeping);
  return total;
}

// ---------------------------------------------------------------------------
// Scan operators used by the join pipeline

/// Sum of `field` within a run of equal keys, in place.
inline auto sum_by_key(std::int64_t Record::*field) {
  return make_scan_operator<Record, std::int64_t>(
      [](const Record& r) { return r.key; }, [field](const Record& r) { return r.*field; },
      [field](Record& r, std::int64_t v) { r.*field = v; }, [](std::int64_t a, std::int64_t b) { return a + b; },
      std::int64_t{0});
}

/// Max of `field` within a run of equal keys, in place.
inline auto max_by_key(std::int64_t Record::*field) {
  return make_scan_operator<Record, std::int64_t>(
      [](const Record& r) { return r.key; }, [field](const Record& r) { return r.*field; },
      [field](Record& r, std::int64_t v) { r.*field = v; },
      [](std::int64_t a, std::int64_t b) { return a > b ? a : b; }, std::int64_t{0});
}

/// Min of `field` within a run of equal keys, in place.
inline auto min_by_key(std::int64_t Record::*field) {
  return make_scan_operator<Record, std::int64_t>(
      [](const Record& r) { return r.key; }, [field](const Record& r) { return r.*field; },
      [field](Record& r, std::int64_t v) { r.*field = v; },
      [](std::int64_t a, std::int64_t b) { return a < b ? a : b; }, std::numeric_limits<std::int64_t>::max());
}

/// Unkeyed running sum of `field`, in place.
inline auto running_sum(std::int64_t Record::*field) {
  return make_scan_operator<Record, std::int64_t>(
      [](const Record&) { return std::int64_t{0}; }, [field](const Record& r) { return r.*field; },
      [field](Record& r, std::int64_t v) { r.*field = v; }, [](std::int64_t a, std::int64_t b) { return a + b; },
      std::int64_t{0});
}

/// Rank inside each run of equal keys (1, 2, ...), written to `field`.
inline void count_by_key(Cluster& cluster, DistTable& table, std::int64_t Record::*field, const std::string& label) {
  for (auto& part : table.parts) {
    for (auto& r : part) r.*field = 1;
  }
  scan_distributed(cluster, table, ScanDirection::prefix, sum_by_key(field), label);
}

/// Fill: x1 (+) x2 = x2 if x1 is a dummy, else x1. Applied as a suffix scan
/// each dummy slot takes the content of the first real slot after it.
inline auto fill_from_next() {
  return make_scan_operator<Record, Record>(
      [](const Record&) { return std::int64_t{0}; }, [](const Record& r) { return r; },
      [](Record& r, const Record& v) { copy_content(r, v); },
      [](const Record& a, const Record& b) { return cselect(a.dummy != 0, b, a); }, make_dummy());
}

}  // namespace jodes
