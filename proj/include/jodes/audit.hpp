#pragma once

// Executable obliviousness checks, brute-force join reference and padding
// failure probes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "jodes/cluster.hpp"
#include "jodes/cost.hpp"
#include "jodes/error.hpp"
#include "jodes/join.hpp"
#include "jodes/oprims.hpp"
#include "jodes/padding.hpp"
#include "jodes/record.hpp"
#include "jodes/scan.hpp"
#include "jodes/shuffle.hpp"
#include "jodes/simulate.hpp"
#include "jodes/sort.hpp"

namespace jodes {

// ---------------------------------------------------------------------------
// Reference join

/// Nested-loop natural join of R(A,B) and S(B,C), rows sorted.
inline std::vector<JoinRow> oracle_join(const std::vector<std::pair<std::int64_t, std::int64_t>>& r,
                                        const std::vector<std::pair<std::int64_t, std::int64_t>>& s) {
  std::vector<JoinRow> out;
  for (const auto& [a, b] : r) {
    for (const auto& [b2, c] : s) {
      if (b == b2) out.push_back(JoinRow{a, b, c, true});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Real rows of a join output as sorted (A, B, C).
inline std::vector<JoinRow> join_rows(const DistTable& t) {
  std::vector<JoinRow> out;
  for (const auto& r : t.real_rows()) out.push_back(to_join_row(r));
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Verdicts

struct Witness {
  std::size_t trial = 0;
  std::size_t index = 0;  // round (transcripts) or trace position
  std::size_t sender = 0;
  std::size_t receiver = 0;
  std::uint64_t expected = 0;
  std::uint64_t observed = 0;
  std::string detail;
};

struct AuditVerdict {
  std::string check;
  bool passed = true;
  std::size_t trials = 0;
  std::optional<Witness> witness;

  void fail(Witness w) {
    if (passed) witness = std::move(w);
    passed = false;
  }
};

inline nlohmann::ordered_json to_json(const AuditVerdict& v) {
  nlohmann::ordered_json j{{"check", v.check}, {"passed", v.passed}, {"trials", v.trials}};
  if (v.witness) {
    const auto& w = *v.witness;
    j["witness"] = {{"trial", w.trial},       {"index", w.index},         {"sender", w.sender},
                    {"receiver", w.receiver}, {"expected", w.expected}, {"observed", w.observed},
                    {"detail", w.detail}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Communication obliviousness

using TranscriptRun = std::function<Transcript(std::size_t trial)>;

/// PASS iff every trial's transcript equals trial 0's and, when given, the
/// simulated transcript.
inline AuditVerdict check_comm_oblivious(std::string id, const TranscriptRun& run, std::size_t trials,
                                         const std::optional<Transcript>& simulated = std::nullopt) {
  AuditVerdict v{std::move(id), true, trials, std::nullopt};
  std::optional<Transcript> first;
  auto compare = [&](const Transcript& expect, const Transcript& got, std::size_t trial, const std::string& what) {
    if (auto d = expect.first_divergence(got)) {
      v.fail(Witness{trial, d->round, d->sender, d->receiver, d->left, d->right, what + ": " + d->detail});
    }
  };
  for (std::size_t t = 0; t < trials; ++t) {
    Transcript tr = run(t);
    if (!first) {
      first = tr;
      if (simulated) compare(*simulated, tr, t, "simulated vs run");
    } else {
      compare(*first, tr, t, "trial 0 vs run");
    }
  }
  return v;
}

/// Input-size profile for a communication check.
struct SizeProfile {
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> other_sizes;
  std::optional<std::size_t> output_size;
};

namespace audit_detail {

inline std::vector<std::int64_t> distinct_keys(std::size_t n, std::mt19937_64& g) {
  std::vector<std::int64_t> keys(n);
  std::iota(keys.begin(), keys.end(), 1);
  for (auto& k : keys) k = k * 1000 + static_cast<std::int64_t>(g() % 1000);
  std::shuffle(keys.begin(), keys.end(), g);
  return keys;
}

inline DistTable table_with_sizes(const std::vector<std::size_t>& sizes, const std::vector<Record>& rows) {
  DistTable t(sizes.size());
  std::size_t at = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    t.parts[i].assign(rows.begin() + static_cast<std::ptrdiff_t>(at),
                      rows.begin() + static_cast<std::ptrdiff_t>(at + sizes[i]));
    at += sizes[i];
  }
  return t;
}

inline std::size_t total(const std::vector<std::size_t>& v) { return std::accumulate(v.begin(), v.end(), std::size_t{0}); }

// Random R(A,B) and S(B,C) of the requested sizes whose join has at most
// `bound` rows.
inline std::pair<std::vector<Record>, std::vector<Record>> join_inputs(std::size_t n1, std::size_t n2,
                                                                      std::size_t bound, std::mt19937_64& g) {
  const std::size_t domain = std::max<std::size_t>(1, std::max(n1, n2));
  for (;;) {
    std::vector<Record> r, s;
    std::map<std::int64_t, std::size_t> dr;
    for (std::size_t k = 0; k < n1; ++k) {
      const auto b = static_cast<std::int64_t>(g() % domain);
      ++dr[b];
      r.push_back(make_row(b, static_cast<std::int64_t>(g() % 1000000)));
    }
    std::size_t size = 0;
    for (std::size_t k = 0; k < n2; ++k) {
      const auto b = static_cast<std::int64_t>(g() % domain);
      size += dr.count(b) ? dr[b] : 0;
      s.push_back(make_row(b, 0, static_cast<std::int64_t>(g() % 1000000), true));
    }
    if (size <= bound) return {std::move(r), std::move(s)};
  }
}

}  // namespace audit_detail

/// Shuffle by key without padding: bucket sizes are the true counts.
/// Exists only as a negative control for the communication check.
inline DistTable leaky_shuffle(Cluster& cluster, DistTable table, const KeyHasher& hasher) {
  const std::size_t p = cluster.servers();
  std::vector<std::vector<std::vector<Record>>> out(p, std::vector<std::vector<Record>>(p));
  for (std::size_t i = 0; i < p; ++i) {
    for (const auto& r : table.parts[i]) out[i][hasher(r.key) - 1].push_back(r);
  }
  table.parts = cluster.exchange(std::move(out), "shuffle_by_key");
  return table;
}

inline const std::vector<std::string>& padded_operator_names() {
  static const std::vector<std::string> names{"shuffle_by_key", "shuffle_random", "sort",   "scan",
                                              "pk_join",        "compute_degrees", "expand", "jodes_join"};
  return names;
}

/// Runner that draws fresh data of the profile's sizes per trial and runs
/// the named operator on a fresh cluster with `config`.
inline TranscriptRun comm_runner(const std::string& op, const SizeProfile& profile, const ClusterConfig& config,
                                 std::uint64_t data_seed = 1) {
  using namespace audit_detail;
  const std::size_t p = config.servers;
  return [=](std::size_t trial) {
    std::mt19937_64 g(data_seed * 1000003 + trial);
    Cluster cluster(config);
    const KeyHasher hasher(p, config.seed ^ 0x5eedULL);
    const std::size_t n = total(profile.sizes);
    if (op == "shuffle_by_key" || op == "leaky_shuffle") {
      std::vector<Record> rows;
      // Odd trials use dense consecutive keys, even trials sparse random ones.
      for (std::size_t i = 0; i < p; ++i) {
        if (trial % 2 == 1) {
          const auto base = static_cast<std::int64_t>(g() % 1000);
          for (std::size_t k = 0; k < profile.sizes[i]; ++k) {
            const auto key = base + static_cast<std::int64_t>(k);
            rows.push_back(make_row(key, key));
          }
        } else {
          for (auto k : distinct_keys(profile.sizes[i], g)) rows.push_back(make_row(k, k));
        }
      }
      auto t = table_with_sizes(profile.sizes, rows);
      if (op == "leaky_shuffle") {
        leaky_shuffle(cluster, std::move(t), hasher);
      } else {
        shuffle_by_key(cluster, std::move(t), hasher);
      }
    } else if (op == "shuffle_random" || op == "sort" || op == "scan") {
      std::vector<Record> rows;
      for (std::size_t k = 0; k < n; ++k) {
        Record r = make_row(static_cast<std::int64_t>(g() % 100), static_cast<std::int64_t>(k));
        r.pos = static_cast<std::int64_t>(g() % 10);
        rows.push_back(r);
      }
      auto t = table_with_sizes(profile.sizes, rows);
      if (op == "shuffle_random") {
        shuffle_random(cluster, std::move(t));
      } else if (op == "sort") {
        sort_distributed(cluster, std::move(t), by_join_key);
      } else {
        scan_distributed(cluster, t, ScanDirection::prefix, running_sum(&Record::pos));
      }
    } else if (op == "pk_join" || op == "compute_degrees") {
      const std::size_t n2 = total(profile.other_sizes);
      std::vector<Record> r, s;
      const std::size_t domain = std::max<std::size_t>(1, n2 + n / 2);
      for (std::size_t k = 0; k < n; ++k) r.push_back(make_row(static_cast<std::int64_t>(g() % domain), k));
      if (op == "pk_join") {
        for (std::size_t k = 0; k < n2; ++k) {
          s.push_back(make_row(static_cast<std::int64_t>(2 * k + g() % 2), 0, static_cast<std::int64_t>(k), true));
        }
        std::shuffle(s.begin(), s.end(), g);
      } else {
        for (std::size_t k = 0; k < n2; ++k) s.push_back(make_row(static_cast<std::int64_t>(g() % domain), 0, k, true));
        std::sort(r.begin(), r.end(), by_join_key);
        std::sort(s.begin(), s.end(), by_join_key);
      }
      auto rt = table_with_sizes(profile.sizes, r);
      auto st = table_with_sizes(profile.other_sizes, s);
      if (op == "pk_join") {
        pk_join(cluster, std::move(rt), std::move(st), hasher);
      } else {
        compute_degrees(cluster, std::move(rt), std::move(st), hasher, &Record::deg_r, &Record::deg_s);
      }
    } else if (op == "expand") {
      if (!profile.output_size) throw InvalidArgument("audit: expand needs M");
      const std::size_t bound = *profile.output_size;
      std::vector<Record> rows(n);
      for (std::size_t k = 0; k < n; ++k) rows[k] = make_row(static_cast<std::int64_t>(k), static_cast<std::int64_t>(k));
      const std::size_t units = n ? g() % (bound + 1) : 0;
      for (std::size_t u = 0; u < units; ++u) ++rows[g() % n].deg_s;
      expand(cluster, table_with_sizes(profile.sizes, rows), &Record::deg_s, bound);
    } else if (op == "jodes_join") {
      if (!profile.output_size) throw InvalidArgument("audit: jodes_join needs M");
      auto [r, s] = join_inputs(n, total(profile.other_sizes), *profile.output_size, g);
      jodes_join(cluster, table_with_sizes(profile.sizes, r), table_with_sizes(profile.other_sizes, s), hasher,
                 profile.output_size);
    } else {
      throw UnknownOperator("audit: no operator named '" + op + "'");
    }
    return cluster.transcript();
  };
}

/// Communication check for a named operator; compares against the size-only
/// simulation where one exists.
inline AuditVerdict audit_comm(const std::string& op, const SizeProfile& profile, const ClusterConfig& config,
                               std::size_t trials, std::uint64_t data_seed = 1) {
  std::optional<Transcript> sim;
  if (op != "leaky_shuffle") {
    OperatorDescriptor d{op, profile.sizes, profile.other_sizes, profile.output_size, ""};
    sim = simulate_transcript(d, config);
  }
  return check_comm_oblivious("comm:" + op, comm_runner(op, profile, config, data_seed), trials, sim);
}

// ---------------------------------------------------------------------------
// Computation obliviousness

using TraceRun = std::function<AccessTrace(std::mt19937_64& g)>;

/// PASS iff, for each of `pairs` pairs of fresh inputs, the two access traces
/// are identical.
inline AuditVerdict check_comp_oblivious(std::string id, const TraceRun& run, std::size_t pairs,
                                         std::uint64_t seed = 1) {
  AuditVerdict v{std::move(id), true, pairs, std::nullopt};
  std::mt19937_64 g(seed);
  for (std::size_t t = 0; t < pairs && v.passed; ++t) {
    const AccessTrace a = run(g);
    const AccessTrace b = run(g);
    if (a == b) continue;
    const auto& x = a.entries();
    const auto& y = b.entries();
    std::size_t i = 0;
    while (i < x.size() && i < y.size() && x[i] == y[i]) ++i;
    Witness w{t, i, 0, 0, i < x.size() ? x[i] : 0, i < y.size() ? y[i] : 0,
              "trace lengths " + std::to_string(x.size()) + " and " + std::to_string(y.size())};
    v.fail(std::move(w));
  }
  return v;
}

/// Textbook in-place quicksort (Lomuto, last-element pivot). Its accesses
/// follow the data; used as the negative control.
template <class T, class Less>
void naive_quicksort(Buffer<T>& buf, std::size_t lo, std::size_t hi, const Less& less) {
  if (hi - lo < 2) return;
  const T pivot = buf.read(hi - 1);
  std::size_t store = lo;
  for (std::size_t i = lo; i + 1 < hi; ++i) {
    const T x = buf.read(i);
    if (less(x, pivot)) {
      const T y = buf.read(store);
      buf.write(store, x);
      buf.write(i, y);
      ++store;
    }
  }
  const T y = buf.read(store);
  buf.write(store, pivot);
  buf.write(hi - 1, y);
  naive_quicksort(buf, lo, store, less);
  naive_quicksort(buf, store + 1, hi, less);
}

inline const std::vector<std::string>& traced_primitive_names() {
  static const std::vector<std::string> names{"osort", "ocompact", "odistribute", "opartition_sort",
                                              "opartition_quick", "scan"};
  return names;
}

/// Runner producing the access trace of one primitive on a fresh random
/// input of size n.
inline TraceRun trace_runner(const std::string& primitive, std::size_t n) {
  return [=](std::mt19937_64& g) {
    std::vector<Record> items(n);
    for (std::size_t k = 0; k < n; ++k) {
      items[k] = make_row(static_cast<std::int64_t>(g() % (n + 1)), static_cast<std::int64_t>(k));
    }
    TracedBuffer<Record> buf(items);
    auto by_key = [](const Record& x, const Record& y) { return x.key < y.key; };
    if (primitive == "osort") {
      osort(buf, by_key);
    } else if (primitive == "ocompact") {
      std::vector<std::uint8_t> marks(n);
      for (auto& m : marks) m = static_cast<std::uint8_t>(g() % 2);
      ocompact(buf, std::span<const std::uint8_t>(marks));
    } else if (primitive == "odistribute") {
      const std::size_t m = 2 * n;
      std::vector<std::int64_t> slots(m);
      std::iota(slots.begin(), slots.end(), 1);
      std::shuffle(slots.begin(), slots.end(), g);
      std::vector<Record> routed = items;
      for (std::size_t k = 0; k < n; ++k) routed[k].target = g() % 4 == 0 ? 0 : slots[k];
      TracedBuffer<Record> b2(routed);
      odistribute(b2, m, [](const Record& r) { return static_cast<std::uint64_t>(r.target); }, make_dummy());
      return b2.access_trace();
    } else if (primitive == "opartition_sort" || primitive == "opartition_quick") {
      const std::size_t p = 4;
      std::vector<Record> routed = items;
      for (auto& r : routed) r.target = static_cast<std::int64_t>(g() % (p + 1));
      TracedBuffer<Record> b2(routed);
      auto route = [](const Record& r) { return static_cast<std::uint64_t>(r.target); };
      if (primitive == "opartition_sort") {
        opartition_sort(b2, p, n, route, make_dummy());
      } else {
        opartition_quick(b2, p, n, route, make_dummy());
      }
      return b2.access_trace();
    } else if (primitive == "scan") {
      std::sort(items.begin(), items.end(), by_key);
      TracedBuffer<Record> b2(items);
      scan_local(b2, ScanDirection::prefix, sum_by_key(&Record::a));
      return b2.access_trace();
    } else if (primitive == "naive_quicksort") {
      naive_quicksort(buf, 0, n, by_key);
    } else {
      throw UnknownOperator("audit: no traced primitive named '" + primitive + "'");
    }
    return buf.access_trace();
  };
}

inline AuditVerdict audit_comp(const std::string& primitive, std::size_t n, std::size_t pairs,
                               std::uint64_t seed = 1) {
  return check_comp_oblivious("comp:" + primitive + ":" + std::to_string(n), trace_runner(primitive, n), pairs, seed);
}

// ---------------------------------------------------------------------------
// Failure probe

struct ProbeResult {
  std::size_t trials = 0;
  std::size_t overflows = 0;
  unsigned sigma = 0;

  double rate() const { return trials ? static_cast<double>(overflows) / static_cast<double>(trials) : 0.0; }
  double target() const { return std::ldexp(1.0, -static_cast<int>(sigma)); }
  /// Standard error of the rate at the target probability.
  double standard_error() const {
    const double q = target();
    return trials ? std::sqrt(q * (1 - q) / static_cast<double>(trials)) : 0.0;
  }
  bool within_target() const { return rate() <= target() + 3 * standard_error(); }
};

/// Counts PaddingOverflow events of shuffle by key over `trials` fresh
/// hash functions. Every server holds the same n distinct keys, so bucket
/// loads are fully correlated across senders. With `no_slack` the bound is
/// forced to ceil(n/p).
inline ProbeResult failure_probe(std::size_t p, std::size_t n, unsigned sigma, std::size_t trials,
                                 std::uint64_t seed = 1, bool no_slack = false) {
  ProbeResult res{trials, 0, sigma};
  ClusterConfig cfg;
  cfg.servers = p;
  cfg.sigma = sigma;
  cfg.seed = seed;
  std::vector<std::size_t> sizes(p, n);
  std::vector<std::size_t> bounds = pad_shuffle_by_key(sizes, p, sigma).bounds;
  if (no_slack) bounds.assign(p, (n + p - 1) / p);
  for (std::size_t t = 0; t < trials; ++t) {
    Cluster cluster(cfg);
    const KeyHasher hasher(p, seed * 0x9e3779b97f4a7c15ULL + t);
    DistTable table(p);
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        Record r = make_row(static_cast<std::int64_t>(k + 1), static_cast<std::int64_t>(k));
        r.target = static_cast<std::int64_t>(hasher(r.key));
        table.parts[i].push_back(r);
      }
    }
    try {
      shuffle(cluster, std::move(table), bounds, "probe");
    } catch (const PaddingOverflow&) {
      ++res.overflows;
    }
  }
  return res;
}

}  // namespace jodes
