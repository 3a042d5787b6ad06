#pragma once

// Oblivious expansion: each real record x_i is repeated d_i times into an
// output of exactly p*m slots (m per server), blocks in input order and
// dummy slots at the tail.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "jodes/cluster.hpp"
#include "jodes/error.hpp"
#include "jodes/oprims.hpp"
#include "jodes/padding.hpp"
#include "jodes/record.hpp"
#include "jodes/scan.hpp"
#include "jodes/shuffle.hpp"

namespace jodes {

inline std::size_t slots_per_server(std::size_t output_size, std::size_t p) { return (output_size + p - 1) / p; }

struct Expansion {
  DistTable table;
  PaddingPlan plan;
  std::size_t m = 0;  // slots per server
};

/// Expands `table` by the repetition counts in `degree`. The output bound is
/// M; p*ceil(M/p) slots are produced. Throws BoundExceeded if sum d > M.
inline Expansion expand(Cluster& cluster, DistTable table, std::int64_t Record::*degree, std::size_t output_size,
                        const std::string& label = "expand") {
  const std::size_t p = cluster.servers();
  if (output_size < 1) throw InvalidArgument("expand: M must be >= 1");
  const std::size_t m = slots_per_server(output_size, p);
  const auto mm = static_cast<std::int64_t>(m);

  // L = prefix sum of D.
  for (auto& part : table.parts) {
    for (auto& r : part) r.pos = cselect<std::int64_t>(is_real(r), r.*degree, 0);
  }
  const auto total = scan_distributed(cluster, table, ScanDirection::prefix, running_sum(&Record::pos), label + ":prefix");
  if (total.value > static_cast<std::int64_t>(output_size)) {
    throw BoundExceeded("expand: total repetition " + std::to_string(total.value) + " exceeds M = " +
                        std::to_string(output_size));
  }

  cluster.for_each_server([&](std::size_t i) {
    auto buf = cluster.buffer(i, std::move(table.parts[i]));
    for (std::size_t k = 0; k < buf.size(); ++k) {
      Record r = buf.read(k);
      const std::int64_t l = r.pos;
      const std::int64_t t = (l + mm - 1) / mm;
      r.target = t;
      r.local = l - (t - 1) * mm;
      cmove(!is_real(r) | (r.*degree <= 0), r, make_dummy());
      buf.count_cmove();
      buf.write(k, r);
    }
    table.parts[i] = std::move(buf).take();
  });

  const std::size_t big_n = table.total();
  table = shuffle_random(cluster, std::move(table), label + ":sf0");
  const auto sizes = table.sizes();
  PaddingPlan plan = pad_expansion(sizes, big_n, p * m, p, cluster.sigma());
  table = shuffle(cluster, std::move(table), plan.bounds, label + ":sf1");

  cluster.for_each_server([&](std::size_t i) {
    auto buf = cluster.buffer(i, std::move(table.parts[i]));
    odistribute(buf, m, [](const Record& r) { return static_cast<std::uint64_t>(r.dummy ? 0 : r.local); },
                make_dummy());
    table.parts[i] = std::move(buf).take();
  });

  scan_distributed(cluster, table, ScanDirection::suffix, fill_from_next(), label + ":fill");

  // Every slot learns its public global position; routing columns reset.
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < table.parts[i].size(); ++k) {
      Record& r = table.parts[i][k];
      r.pos = static_cast<std::int64_t>(i * m + k + 1);
      r.target = 0;
      r.local = 0;
    }
  }
  return Expansion{std::move(table), std::move(plan), m};
}

}  // namespace jodes
