#pragma once

// Distributed sort: Leighton's column sort with the p servers as columns of
// r rows. Four local sorts, transpose, untranspose, shift and unshift; the
// shift wraps the last column's lower half onto server 1, which sorts the
// two halves it holds separately.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "jodes/cluster.hpp"
#include "jodes/oprims.hpp"
#include "jodes/record.hpp"

namespace jodes {

/// Column height for partition sizes n_i: at least max n_i and 2(p-1)^2,
/// rounded up to a multiple of lcm(p, 2).
inline std::size_t column_rows(std::span<const std::size_t> sizes, std::size_t p) {
  std::size_t r = 0;
  for (auto n : sizes) r = std::max(r, n);
  r = std::max(r, 2 * (p - 1) * (p - 1));
  const std::size_t step = std::lcm(p, std::size_t{2});
  r = (r + step - 1) / step * step;
  return std::max(r, step);
}

/// Output partition sizes: column j keeps its share of the N real slots.
inline std::vector<std::size_t> column_output_sizes(std::size_t total, std::size_t p, std::size_t r) {
  std::vector<std::size_t> out(p);
  for (std::size_t j = 0; j < p; ++j) {
    const std::size_t lo = j * r;
    out[j] = total > lo ? std::min(r, total - lo) : 0;
  }
  return out;
}

namespace sort_detail {

struct Slot {
  Record rec;
  std::uint64_t sentinel = 0;  // padding added by the sort itself
};

template <class Less>
auto slot_less(const Less& less) {
  return [&less](const Slot& x, const Slot& y) {
    // Sentinels last; among equal sentinel flags use the record order.
    return (x.sentinel < y.sentinel) | ((x.sentinel == y.sentinel) & less(x.rec, y.rec));
  };
}

template <class Less>
void sort_range(Cluster& cluster, std::size_t server, std::vector<Slot>& v, std::size_t lo, std::size_t hi,
                const Less& less) {
  std::vector<Slot> part(v.begin() + static_cast<std::ptrdiff_t>(lo), v.begin() + static_cast<std::ptrdiff_t>(hi));
  Buffer<Slot> buf(std::move(part), nullptr, &cluster.counters(server));
  osort(buf, slot_less(less));
  std::copy(buf.items().begin(), buf.items().end(), v.begin() + static_cast<std::ptrdiff_t>(lo));
}

}  // namespace sort_detail

/// Globally sorts `table` by `less` (partition order, then local order).
/// Output partition sizes are column_output_sizes(N, p, r).
template <class Less>
DistTable sort_distributed(Cluster& cluster, DistTable table, const Less& less, const std::string& label = "sort") {
  using sort_detail::Slot;
  const std::size_t p = cluster.servers();
  const auto sizes = table.sizes();
  const std::size_t total = table.total();
  const std::size_t r = column_rows(sizes, p);
  const std::size_t half = r / 2;

  std::vector<std::vector<Slot>> cols(p);
  for (std::size_t i = 0; i < p; ++i) {
    cols[i].reserve(r);
    for (const auto& rec : table.parts[i]) cols[i].push_back(Slot{rec, 0});
    cols[i].resize(r, Slot{make_dummy(), 1});
  }
  auto sort_all = [&] {
    cluster.for_each_server([&](std::size_t i) { sort_detail::sort_range(cluster, i, cols[i], 0, r, less); });
  };
  using Outbox = std::vector<std::vector<std::vector<Slot>>>;
  auto fresh = [&] { return Outbox(p, std::vector<std::vector<Slot>>(p)); };

  // 1-2: sort, transpose (element k of column j lands in column k mod p).
  sort_all();
  {
    Outbox out = fresh();
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t k = 0; k < r; ++k) out[j][k % p].push_back(cols[j][k]);
    }
    cols = cluster.exchange(std::move(out), label + ":transpose");
  }
  // 3-4: sort, untranspose (row-major index rho*p + c back to column-major).
  sort_all();
  {
    Outbox out = fresh();
    for (std::size_t c = 0; c < p; ++c) {
      for (std::size_t rho = 0; rho < r; ++rho) out[c][(rho * p + c) / r].push_back(cols[c][rho]);
    }
    std::vector<std::vector<Slot>> in = cluster.exchange(std::move(out), label + ":untranspose");
    // Inbox order is by sender; restore column-major row order.
    for (std::size_t d = 0; d < p; ++d) {
      std::vector<Slot> col(r);
      std::size_t at = 0;
      for (std::size_t c = 0; c < p; ++c) {
        for (std::size_t rho = 0; rho < r; ++rho) {
          const std::size_t idx = rho * p + c;
          if (idx / r == d) col[idx % r] = in[d][at++];
        }
      }
      cols[d] = std::move(col);
    }
  }
  // 5-6: sort, shift lower halves one column right (last wraps to first).
  sort_all();
  if (p > 1) {
    Outbox out = fresh();
    for (std::size_t j = 0; j < p; ++j) {
      out[j][(j + 1) % p].assign(cols[j].begin() + static_cast<std::ptrdiff_t>(half), cols[j].end());
      out[j][j].assign(cols[j].begin(), cols[j].begin() + static_cast<std::ptrdiff_t>(half));
    }
    // Self copies stay local; only the neighbour halves cross the network.
    Outbox wire = fresh();
    for (std::size_t j = 0; j < p; ++j) wire[j][(j + 1) % p] = out[j][(j + 1) % p];
    auto in = cluster.exchange(std::move(wire), label + ":shift");
    for (std::size_t j = 0; j < p; ++j) {
      std::vector<Slot> col;
      col.reserve(r);
      if (j == 0) {
        col = out[0][0];
        col.insert(col.end(), in[0].begin(), in[0].end());
      } else {
        col = in[j];
        col.insert(col.end(), out[j][j].begin(), out[j][j].end());
      }
      cols[j] = std::move(col);
    }
    // 7: server 1 holds [own upper half | wrapped lower half of column p].
    cluster.for_each_server([&](std::size_t i) {
      if (i == 0) {
        sort_detail::sort_range(cluster, 0, cols[0], 0, half, less);
        sort_detail::sort_range(cluster, 0, cols[0], half, r, less);
      } else {
        sort_detail::sort_range(cluster, i, cols[i], 0, r, less);
      }
    });
    // 8: unshift.
    Outbox back = fresh();
    for (std::size_t j = 0; j < p; ++j) {
      const std::size_t dest = (j + p - 1) % p;
      if (j == 0) {
        back[0][dest].assign(cols[0].begin() + static_cast<std::ptrdiff_t>(half), cols[0].end());
      } else {
        back[j][dest].assign(cols[j].begin(), cols[j].begin() + static_cast<std::ptrdiff_t>(half));
      }
    }
    auto ret = cluster.exchange(std::move(back), label + ":unshift");
    for (std::size_t j = 0; j < p; ++j) {
      std::vector<Slot> col;
      col.reserve(r);
      if (j == 0) {
        col.assign(cols[0].begin(), cols[0].begin() + static_cast<std::ptrdiff_t>(half));
      } else {
        col.assign(cols[j].begin() + static_cast<std::ptrdiff_t>(half), cols[j].end());
      }
      col.insert(col.end(), ret[j].begin(), ret[j].end());
      cols[j] = std::move(col);
    }
  } else {
    cluster.exchange(fresh(), label + ":shift");
    cluster.exchange(fresh(), label + ":unshift");
  }

  // Sentinels occupy the global tail, whose position is public.
  const auto out_sizes = column_output_sizes(total, p, r);
  DistTable result(p, table.columns);
  for (std::size_t j = 0; j < p; ++j) {
    result.parts[j].reserve(out_sizes[j]);
    for (std::size_t k = 0; k < out_sizes[j]; ++k) result.parts[j].push_back(cols[j][k].rec);
  }
  return result;
}

/// Order used by the join pipeline: real records by B, dummies last.
inline bool by_join_key(const Record& x, const Record& y) {
  return (x.dummy < y.dummy) | ((x.dummy == y.dummy) & (x.key < y.key));
}

}  // namespace jodes
