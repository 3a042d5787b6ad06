#pragma once

// PK join, degree computation and the general join.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "jodes/cluster.hpp"
#include "jodes/error.hpp"
#include "jodes/expand.hpp"
#include "jodes/oprims.hpp"
#include "jodes/padding.hpp"
#include "jodes/record.hpp"
#include "jodes/scan.hpp"
#include "jodes/shuffle.hpp"
#include "jodes/sort.hpp"

namespace jodes {

/// Columns copied from the matching right-hand row into each left row.
struct PkTransfer {
  std::vector<std::int64_t Record::*> fields{&Record::c};
  bool set_match = true;  // has_c <- 1 on a match, 0 otherwise

  static PkTransfer payload() { return {}; }
  static PkTransfer degree(std::int64_t Record::*field) { return PkTransfer{{field}, false}; }
};

namespace join_detail {

inline bool by_key_then_z(const Record& x, const Record& y) {
  return std::tie(x.dummy, x.key, x.z) < std::tie(y.dummy, y.key, y.z);
}

inline void copy_transfer(bool cond, Record& dst, const Record& src, const PkTransfer& tr) {
  for (auto f : tr.fields) cmove(cond, dst.*f, src.*f);
  if (tr.set_match) cmove(cond, dst.has_c, src.has_c);
}

inline void clear_transfer(Record& r, const PkTransfer& tr) {
  for (auto f : tr.fields) r.*f = 0;
  if (tr.set_match) r.has_c = 0;
}

}  // namespace join_detail

struct PkJoinResult {
  DistTable table;
  PaddingPlan left_plan;
  PaddingPlan right_plan;
};

/// Left-outer PK join: every left row receives the transfer columns of the
/// right row with the same key (zeros and has_c = 0 when there is none).
/// Output is co-partitioned with the left input. Right keys must be globally
/// distinct.
inline PkJoinResult pk_join(Cluster& cluster, DistTable left, DistTable right, const KeyHasher& hasher,
                            const PkTransfer& transfer = PkTransfer::payload(), const std::string& label = "pk_join") {
  using join_detail::by_key_then_z;
  const std::size_t p = cluster.servers();
  const auto left_sizes = left.sizes();

  // Representatives: Z = 0 for the first row of each local key run, Z = j
  // (1-based local index) for the others.
  cluster.for_each_server([&](std::size_t i) {
    auto buf = cluster.buffer(i, std::move(left.parts[i]));
    for (std::size_t k = 0; k < buf.size(); ++k) {
      Record r = buf.read(k);
      r.z = 0;
      r.origin = static_cast<std::int64_t>(i + 1);
      join_detail::clear_transfer(r, transfer);
      buf.write(k, r);
    }
    osort(buf, by_key_then_z);
    if (buf.size() > 0) {
      Record prev = buf.read(0);
      for (std::size_t j = 1; j < buf.size(); ++j) {
        Record cur = buf.read(j);
        cmove((cur.key == prev.key) & is_real(cur) & is_real(prev), cur.z, static_cast<std::int64_t>(j + 1));
        buf.count_cmove();
        buf.write(j, cur);
        prev = cur;
      }
    }
    left.parts[i] = std::move(buf).take();
  });

  // Local primary-key check on the right table.
  std::vector<std::uint8_t> dup(p, 0);
  cluster.for_each_server([&](std::size_t i) {
    auto buf = cluster.buffer(i, std::move(right.parts[i]));
    dup[i] = shuffle_detail::has_duplicate_keys(buf, [](const Record& r) { return CompositeKey{r.key, 0}; });
    right.parts[i] = std::move(buf).take();
  });
  for (std::size_t i = 0; i < p; ++i) {
    if (dup[i]) throw DuplicatePrimaryKey("pk_join: right table repeats a key on server " + std::to_string(i + 1));
  }

  auto lk = shuffle_by_key(cluster, std::move(left), hasher,
                           [](const Record& r) { return CompositeKey{r.key, r.z}; }, label + ":left", false);
  Record right_filler = make_dummy();
  right_filler.z = -1;
  auto rk = shuffle_by_key(cluster, std::move(right), hasher,
                           [](const Record& r) { return CompositeKey{r.key, 0}; }, label + ":right", false,
                           right_filler);

  // Local merge. Right rows carry Z = -1 so they sort just before the
  // representative of their key.
  DistTable merged(p, lk.table.columns);
  std::vector<std::uint8_t> global_dup(p, 0);
  cluster.for_each_server([&](std::size_t i) {
    const std::size_t n0 = lk.table.parts[i].size();
    std::vector<Record> v = std::move(lk.table.parts[i]);
    for (Record r : rk.table.parts[i]) {
      r.z = -1;
      v.push_back(r);
    }
    auto buf = cluster.buffer(i, std::move(v));
    osort(buf, by_key_then_z);
    bool repeated = false;
    if (buf.size() > 0) {
      Record prev = buf.read(0);
      for (std::size_t j = 1; j < buf.size(); ++j) {
        Record cur = buf.read(j);
        const bool same = (cur.key == prev.key) & is_real(cur) & is_real(prev);
        repeated |= same & (cur.z == -1) & (prev.z == -1);
        join_detail::copy_transfer(same & (cur.z == 0), cur, prev, transfer);
        buf.count_cmove();
        buf.write(j, cur);
        prev = cur;
      }
    }
    global_dup[i] = repeated ? 1 : 0;
    ocompact_if(buf, [](const Record& r) { return r.z >= 0; });
    std::vector<Record> kept = std::move(buf).take();
    kept.resize(n0);
    for (auto& r : kept) r.target = cselect<std::int64_t>(is_real(r), r.origin, 0);
    merged.parts[i] = std::move(kept);
  });
  for (std::size_t i = 0; i < p; ++i) {
    if (global_dup[i]) throw DuplicatePrimaryKey("pk_join: right table repeats a key across servers");
  }

  // Shuffle back with the forward bounds: server j returns U_i slots to i.
  std::vector<std::vector<std::size_t>> caps(p, lk.plan.bounds);
  DistTable home = shuffle_with_capacities(cluster, std::move(merged), caps, label + ":back");

  DistTable out(p, home.columns);
  cluster.for_each_server([&](std::size_t i) {
    auto buf = cluster.buffer(i, std::move(home.parts[i]));
    osort(buf, by_key_then_z);
    if (buf.size() > 0) {
      Record prev = buf.read(0);
      for (std::size_t j = 1; j < buf.size(); ++j) {
        Record cur = buf.read(j);
        join_detail::copy_transfer((cur.key == prev.key) & is_real(cur) & is_real(prev), cur, prev, transfer);
        buf.count_cmove();
        buf.write(j, cur);
        prev = cur;
      }
    }
    ocompact_if(buf, [](const Record& r) { return is_real(r); });
    std::vector<Record> rows = std::move(buf).take();
    rows.resize(left_sizes[i]);
    for (auto& r : rows) {
      r.z = 0;
      r.origin = 0;
      r.target = 0;
    }
    out.parts[i] = std::move(rows);
  });
  return PkJoinResult{std::move(out), std::move(lk.plan), std::move(rk.plan)};
}

namespace join_detail {

// For each server i, the first key held by the nearest non-empty server
// after i (if any). Sizes are public, so the message pattern is too.
inline std::vector<std::optional<std::int64_t>> successor_keys(Cluster& cluster, const DistTable& t,
                                                               const std::string& label) {
  const std::size_t p = cluster.servers();
  std::vector<std::vector<std::vector<std::int64_t>>> out(p, std::vector<std::vector<std::int64_t>>(p));
  std::vector<std::size_t> source(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    if (t.parts[i].empty()) continue;
    for (std::size_t j = i + 1; j < p; ++j) {
      if (!t.parts[j].empty()) {
        source[i] = j;
        out[j][i].push_back(t.parts[j].front().key);
        break;
      }
    }
  }
  auto in = cluster.exchange(std::move(out), label, RoundKind::bookkeeping);
  std::vector<std::optional<std::int64_t>> next(p);
  for (std::size_t i = 0; i < p; ++i) {
    if (source[i] < p) next[i] = in[i].front();
  }
  return next;
}

}  // namespace join_detail

/// Degree columns for `left` against `right` (both globally sorted by B):
/// left.own <- deg_left(B), left.peer <- deg_right(B) or 0 when absent.
inline DistTable compute_degrees(Cluster& cluster, DistTable left, DistTable right, const KeyHasher& hasher,
                                 std::int64_t Record::*own, std::int64_t Record::*peer,
                                 const std::string& label = "degrees") {
  const std::size_t p = cluster.servers();
  count_by_key(cluster, left, own, label + ":left_count");
  scan_distributed(cluster, left, ScanDirection::suffix, max_by_key(own), label + ":left_max");
  count_by_key(cluster, right, peer, label + ":right_count");
  scan_distributed(cluster, right, ScanDirection::suffix, max_by_key(peer), label + ":right_max");

  // Keep the last row of each key run of the right table.
  const auto next = join_detail::successor_keys(cluster, right, label + ":boundary");
  cluster.for_each_server([&](std::size_t i) {
    auto buf = cluster.buffer(i, std::move(right.parts[i]));
    const std::size_t n = buf.size();
    for (std::size_t j = 0; j < n; ++j) {
      Record cur = buf.read(j);
      bool drop = false;
      if (j + 1 < n) {
        drop = buf.read(j + 1).key == cur.key;
      } else if (next[i]) {
        drop = *next[i] == cur.key;
      }
      cmove(drop & is_real(cur), cur, make_dummy());
      buf.count_cmove();
      buf.write(j, cur);
    }
    right.parts[i] = std::move(buf).take();
  });

  return pk_join(cluster, std::move(left), std::move(right), hasher, PkTransfer::degree(peer), label + ":pk").table;
}

/// |R join S| from the degree-annotated left table.
inline std::size_t infer_output_size(Cluster& cluster, const DistTable& left_with_degrees) {
  return static_cast<std::size_t>(distributed_sum(cluster, left_with_degrees, &Record::deg_s, "infer_m"));
}

/// Alignment position of an S-row copy: q = I - 1 is its rank in the key
/// group, J the group's first global position.
inline std::int64_t alignment_position(std::int64_t rank, std::int64_t deg_r, std::int64_t deg_s,
                                       std::int64_t group_start) {
  const std::int64_t q = rank - 1;
  return q / deg_r + (q % deg_r) * deg_s + group_start;
}

struct JoinResult {
  DistTable table;          // p partitions of m slots
  std::size_t output_size = 0;  // M used
  std::size_t m = 0;
};

/// General equi-join of R(A,B) and S(B,C). With `bound` unset the output
/// size is inferred (and revealed) from the degrees.
inline JoinResult jodes_join(Cluster& cluster, DistTable r_table, DistTable s_table, const KeyHasher& hasher,
                             std::optional<std::size_t> bound = std::nullopt, const std::string& label = "join") {
  const std::size_t p = cluster.servers();
  for (auto* t : {&r_table, &s_table}) {
    for (auto& part : t->parts) {
      for (auto& r : part) {
        r.deg_r = 0;
        r.deg_s = 0;
      }
    }
  }

  DistTable rs = sort_distributed(cluster, std::move(r_table), by_join_key, label + ":sort_r");
  DistTable ss = sort_distributed(cluster, std::move(s_table), by_join_key, label + ":sort_s");

  DistTable r_deg = compute_degrees(cluster, rs, ss, hasher, &Record::deg_r, &Record::deg_s, label + ":deg_r");
  DistTable s_deg = compute_degrees(cluster, std::move(ss), std::move(rs), hasher, &Record::deg_s, &Record::deg_r,
                                    label + ":deg_s");

  std::size_t output_size = 0;
  if (bound) {
    output_size = *bound;
  } else {
    output_size = infer_output_size(cluster, r_deg);
  }
  if (output_size == 0) {
    return JoinResult{DistTable(p, {"A", "B", "C"}), 0, 0};
  }

  Expansion r_bar = expand(cluster, std::move(r_deg), &Record::deg_s, output_size, label + ":expand_r");
  Expansion s_bar = expand(cluster, std::move(s_deg), &Record::deg_r, output_size, label + ":expand_s");
  const std::size_t m = r_bar.m;
  const auto mm = static_cast<std::int64_t>(m);

  DistTable& sb = s_bar.table;
  count_by_key(cluster, sb, &Record::rank, label + ":rank");
  for (auto& part : sb.parts) {
    for (auto& r : part) r.group_start = r.pos;
  }
  scan_distributed(cluster, sb, ScanDirection::prefix, min_by_key(&Record::group_start), label + ":group_start");

  cluster.for_each_server([&](std::size_t i) {
    auto buf = cluster.buffer(i, std::move(sb.parts[i]));
    for (std::size_t k = 0; k < buf.size(); ++k) {
      Record r = buf.read(k);
      const bool real = is_real(r);
      const std::int64_t dr = cselect<std::int64_t>(real & (r.deg_r > 0), r.deg_r, 1);
      const std::int64_t ds = cselect<std::int64_t>(real, r.deg_s, 0);
      const std::int64_t l = alignment_position(r.rank, dr, ds, r.group_start);
      // Dummy slots keep their own position.
      r.pos = cselect<std::int64_t>(real, l, r.pos);
      r.target = (r.pos + mm - 1) / mm;
      buf.count_cmove(2);
      buf.write(k, r);
    }
    sb.parts[i] = std::move(buf).take();
  });

  sb = shuffle_random(cluster, std::move(sb), label + ":align_sf0");
  const auto sizes = sb.sizes();
  PaddingPlan plan = pad_align(sizes, p, cluster.sigma());
  sb = shuffle(cluster, std::move(sb), plan.bounds, label + ":align_sf1");

  DistTable out(p, {"A", "B", "C"});
  cluster.for_each_server([&](std::size_t i) {
    auto buf = cluster.buffer(i, std::move(sb.parts[i]));
    // Padding fillers (target 0) sort after every routed slot.
    osort(buf, [](const Record& x, const Record& y) {
      const bool fx = x.target == 0;
      const bool fy = y.target == 0;
      return (fx < fy) | ((fx == fy) & (x.pos < y.pos));
    });
    std::vector<Record> aligned = std::move(buf).take();
    aligned.resize(m, make_dummy());
    const auto& rb = r_bar.table.parts[i];
    std::vector<Record> rows(m);
    for (std::size_t j = 0; j < m; ++j) {
      Record v = make_dummy();
      v.key = rb[j].key;
      v.a = rb[j].a;
      v.c = aligned[j].c;
      v.has_c = aligned[j].has_c;
      v.dummy = static_cast<std::uint8_t>(rb[j].dummy | aligned[j].dummy);
      cmove(v.dummy != 0, v, make_dummy());
      rows[j] = v;
    }
    out.parts[i] = std::move(rows);
  });
  return JoinResult{std::move(out), output_size, m};
}

}  // namespace jodes
