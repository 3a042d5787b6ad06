#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "jodes/join.hpp"
#include "oracles.hpp"

using namespace jodes;

namespace {

Cluster make_cluster(std::size_t p, std::uint64_t seed = 7, unsigned sigma = 40) {
  ClusterConfig cfg;
  cfg.servers = p;
  cfg.sigma = sigma;
  cfg.seed = seed;
  return Cluster(cfg);
}

DistTable left_table(const std::vector<oracle::Row>& rows, std::size_t p) {
  std::vector<Record> recs;
  for (const auto& r : rows) recs.push_back(make_row(r.b, r.a));
  return DistTable::split(recs, p, {"A", "B"});
}

DistTable right_table(const std::vector<oracle::KeyVal>& rows, std::size_t p) {
  std::vector<Record> recs;
  for (const auto& r : rows) recs.push_back(make_row(r.b, 0, r.c, true));
  return DistTable::split(recs, p, {"B", "C"});
}

std::vector<oracle::Triple> triples(const DistTable& t) {
  std::vector<oracle::Triple> out;
  for (const auto& r : t.real_rows()) out.push_back({r.a, r.key, r.has_c ? r.c : 0, r.has_c != 0});
  std::sort(out.begin(), out.end());
  return out;
}

std::multiset<std::int64_t> key_set(const std::vector<Record>& v) {
  std::multiset<std::int64_t> s;
  for (const auto& r : v) {
    if (is_real(r)) s.insert(r.key);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Cluster

TEST(Cluster, EmptyProgram) {
  auto c = make_cluster(3);
  auto res = run_rounds(c, DistTable(3), {});
  EXPECT_TRUE(res.transcript.rounds().empty());
  EXPECT_EQ(res.transcript.total_elements(), 0u);
}

TEST(Cluster, SingleMessage) {
  auto c = make_cluster(2);
  DistTable t(2);
  t.parts[0] = {make_row(1, 1), make_row(2, 2), make_row(3, 3)};
  Program prog{{"send", [](std::size_t i, std::vector<Record>& local, Cluster&) {
                  std::vector<std::vector<Record>> out(2);
                  if (i == 0) out[1] = local;
                  return out;
                }}};
  auto res = run_rounds(c, t, prog);
  ASSERT_EQ(res.transcript.rounds().size(), 1u);
  const auto& r = res.transcript.rounds()[0];
  EXPECT_EQ(r.at(0, 1), 3u);
  EXPECT_EQ(r.total(), 3u);
  EXPECT_EQ(res.table.parts[1].size(), 3u);
  const auto entries = res.transcript.entries();
  ASSERT_EQ(entries.size(), 4u);
  EXPECT_EQ(entries[1].bytes, 3 * c.config().element_width);
}

TEST(Cluster, InvalidConfig) {
  ClusterConfig cfg;
  cfg.servers = 0;
  EXPECT_THROW(Cluster{cfg}, InvalidArgument);
  cfg.servers = 2;
  cfg.sigma = 0;
  EXPECT_THROW(Cluster{cfg}, InvalidArgument);
}

TEST(Cluster, ThreadedPhasesMatchSequential) {
  std::mt19937_64 g(3);
  std::vector<oracle::Row> r;
  std::vector<oracle::KeyVal> s;
  for (int i = 0; i < 300; ++i) r.push_back({i, static_cast<std::int64_t>(g() % 40)});
  for (int i = 0; i < 200; ++i) s.push_back({static_cast<std::int64_t>(g() % 40), i});
  ClusterConfig cfg;
  cfg.servers = 4;
  cfg.seed = 11;
  Cluster seq(cfg);
  cfg.threads = 4;
  Cluster par(cfg);
  KeyHasher h(4, 5);
  auto a = jodes_join(seq, left_table(r, 4), right_table(s, 4), h);
  auto b = jodes_join(par, left_table(r, 4), right_table(s, 4), h);
  EXPECT_EQ(seq.transcript(), par.transcript());
  EXPECT_EQ(triples(a.table), triples(b.table));
}

// ---------------------------------------------------------------------------
// Shuffles

TEST(Shuffle, RoutesByTarget) {
  auto c = make_cluster(2);
  DistTable t(2);
  auto rec = [](std::int64_t key, std::int64_t target) {
    Record r = make_row(key, key);
    r.target = target;
    return r;
  };
  t.parts[0] = {rec(1, 2), rec(2, 1)};
  t.parts[1] = {rec(3, 1), rec(4, 2)};
  const std::vector<std::size_t> bounds{1, 1};
  auto out = shuffle(c, t, bounds, "s");
  EXPECT_EQ(key_set(out.parts[0]), (std::multiset<std::int64_t>{2, 3}));
  EXPECT_EQ(key_set(out.parts[1]), (std::multiset<std::int64_t>{1, 4}));
}

TEST(Shuffle, LocalTargetsStillPadEveryPeer) {
  auto c = make_cluster(3);
  DistTable t(3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (int k = 0; k < 4; ++k) {
      Record r = make_row(k, k);
      r.target = static_cast<std::int64_t>(i + 1);
      t.parts[i].push_back(r);
    }
  }
  const std::vector<std::size_t> bounds{4, 4, 4};
  auto out = shuffle(c, t, bounds, "s");
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(out.parts[i].size(), 12u);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(c.transcript().rounds()[0].at(i, j), 4u);
  }
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(key_set(out.parts[i]).size(), 4u);
}

TEST(Shuffle, RandomInstanceMatchesRouting) {
  std::mt19937_64 g(9);
  const std::size_t p = 4;
  auto c = make_cluster(p);
  DistTable t(p);
  std::vector<std::multiset<std::int64_t>> expect(p);
  for (std::size_t i = 0; i < p; ++i) {
    for (int k = 0; k < 50; ++k) {
      Record r = make_row(static_cast<std::int64_t>(g() % 1000), 0);
      r.target = static_cast<std::int64_t>(g() % p) + 1;
      expect[r.target - 1].insert(r.key);
      t.parts[i].push_back(r);
    }
  }
  const std::vector<std::size_t> bounds(p, 50);
  auto out = shuffle(c, t, bounds, "s");
  for (std::size_t j = 0; j < p; ++j) EXPECT_EQ(key_set(out.parts[j]), expect[j]);
}

TEST(Shuffle, OverflowIsReported) {
  auto c = make_cluster(2);
  DistTable t(2);
  for (int k = 0; k < 3; ++k) {
    Record r = make_row(k, k);
    r.target = 1;
    t.parts[0].push_back(r);
  }
  const std::vector<std::size_t> bounds{2, 2};
  EXPECT_THROW(shuffle(c, t, bounds, "s"), PaddingOverflow);
}

TEST(ShuffleRandom, SingleServerIsIdentity) {
  auto c = make_cluster(1);
  DistTable t(1);
  for (int k = 0; k < 10; ++k) t.parts[0].push_back(make_row(k, k));
  auto out = shuffle_random(c, t);
  EXPECT_EQ(key_set(out.parts[0]), key_set(t.parts[0]));
}

TEST(ShuffleRandom, SizesIgnoreValues) {
  auto run = [](std::int64_t base) {
    auto c = make_cluster(4, 99);
    DistTable t(4);
    for (std::size_t i = 0; i < 4; ++i) {
      for (int k = 0; k < 25; ++k) t.parts[i].push_back(make_row(base + k, base * k));
    }
    shuffle_random(c, t);
    return c.transcript();
  };
  EXPECT_EQ(run(1), run(1000));
}

TEST(ShuffleRandom, BalancedWithinBinomialTail) {
  const std::size_t p = 8, n = 100000;
  auto c = make_cluster(p, 5);
  std::vector<Record> rows(n, make_row(1, 1));
  auto out = shuffle_random(c, DistTable::split(rows, p));
  const double mean = static_cast<double>(n) / p;
  const double sd = std::sqrt(n * (1.0 / p) * (1 - 1.0 / p));
  for (const auto& part : out.parts) {
    EXPECT_LE(std::abs(static_cast<double>(part.size()) - mean), 5 * sd);
    EXPECT_LE(std::abs(static_cast<double>(part.size()) - mean), 0.05 * mean);
  }
}

TEST(ShuffleByKey, StubHasherColocation) {
  auto c = make_cluster(2);
  auto h = KeyHasher::with_function(2, [](std::int64_t k, std::int64_t) { return (k == 2 || k == 3) ? 1u : 2u; });
  DistTable t(2);
  t.parts[0] = {make_row(1, 0), make_row(2, 0)};
  t.parts[1] = {make_row(3, 0), make_row(4, 0)};
  auto out = shuffle_by_key(c, t, h);
  EXPECT_EQ(key_set(out.table.parts[0]), (std::multiset<std::int64_t>{2, 3}));
  EXPECT_EQ(key_set(out.table.parts[1]), (std::multiset<std::int64_t>{1, 4}));
}

TEST(ShuffleByKey, SingleServer) {
  auto c = make_cluster(1);
  DistTable t(1);
  for (int k = 0; k < 10; ++k) t.parts[0].push_back(make_row(k, 0));
  auto out = shuffle_by_key(c, t, KeyHasher(1, 0));
  EXPECT_EQ(key_set(out.table.parts[0]).size(), 10u);
}

TEST(ShuffleByKey, Colocation) {
  const std::size_t p = 4;
  auto c = make_cluster(p);
  std::vector<Record> rows;
  for (int k = 0; k < 10000; ++k) rows.push_back(make_row(k * 7 + 3, k));
  KeyHasher h(p, 17);
  auto out = shuffle_by_key(c, DistTable::split(rows, p), h);
  std::map<std::int64_t, std::set<std::size_t>> where;
  for (std::size_t j = 0; j < p; ++j) {
    for (const auto& r : out.table.parts[j]) {
      if (is_real(r)) where[r.key].insert(j);
    }
  }
  EXPECT_EQ(where.size(), 10000u);
  for (const auto& [k, s] : where) {
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(*s.begin() + 1, h(k));
  }
}

TEST(ShuffleByKey, DuplicateLocalKey) {
  auto c = make_cluster(2);
  DistTable t(2);
  t.parts[0] = {make_row(5, 0), make_row(5, 1)};
  t.parts[1] = {make_row(6, 0)};
  EXPECT_THROW(shuffle_by_key(c, t, KeyHasher(2, 0)), DuplicateLocalKey);
}

// ---------------------------------------------------------------------------
// Sort and scan

TEST(SortDistributed, ReversedSequence) {
  auto c = make_cluster(2);
  std::vector<Record> rows;
  for (int k = 36; k >= 1; --k) rows.push_back(make_row(k, k));
  auto out = sort_distributed(c, DistTable::split(rows, 2), by_join_key);
  std::vector<std::int64_t> keys;
  for (const auto& r : out.flatten()) keys.push_back(r.key);
  std::vector<std::int64_t> expect(36);
  std::iota(expect.begin(), expect.end(), 1);
  EXPECT_EQ(keys, expect);
  EXPECT_EQ(c.transcript().total_elements(), 3 * 36u);
}

TEST(SortDistributed, RandomAgainstReference) {
  std::mt19937_64 g(4);
  for (std::size_t p : {1, 2, 3, 4, 5, 8}) {
    for (std::size_t n : {0, 1, 17, 200, 1500}) {
      auto c = make_cluster(p);
      std::vector<Record> rows;
      std::vector<std::int64_t> expect;
      for (std::size_t k = 0; k < n; ++k) {
        const auto key = static_cast<std::int64_t>(g() % 97);
        rows.push_back(make_row(key, static_cast<std::int64_t>(k)));
        expect.push_back(key);
      }
      std::sort(expect.begin(), expect.end());
      auto out = sort_distributed(c, DistTable::split(rows, p), by_join_key);
      std::vector<std::int64_t> keys;
      std::multiset<std::int64_t> payload;
      for (const auto& r : out.flatten()) {
        keys.push_back(r.key);
        payload.insert(r.a);
      }
      EXPECT_EQ(keys, expect) << "p=" << p << " n=" << n;
      EXPECT_EQ(payload.size(), n);
      const auto sizes = DistTable::split(rows, p).sizes();
      const std::size_t r = column_rows(sizes, p);
      if (p > 1) EXPECT_EQ(c.transcript().total_elements(), 3 * p * r);
    }
  }
}

TEST(SortDistributed, SortedInputUnchanged) {
  auto c = make_cluster(3);
  std::vector<Record> rows;
  for (int k = 0; k < 30; ++k) rows.push_back(make_row(k, k));
  auto out = sort_distributed(c, DistTable::split(rows, 3), by_join_key);
  const auto flat = out.flatten();
  for (int k = 0; k < 30; ++k) EXPECT_EQ(flat[k].a, k);
}

TEST(ScanDistributed, PrefixSumExample) {
  const std::vector<std::int64_t> d{1, 3, 1, 0, 5, 2, 1, 1, 2};
  for (std::size_t p : {1, 3}) {
    auto c = make_cluster(p);
    std::vector<Record> rows;
    for (auto x : d) {
      Record r = make_row(0, 0);
      r.pos = x;
      rows.push_back(r);
    }
    auto t = DistTable::split(rows, p);
    const auto total = scan_distributed(c, t, ScanDirection::prefix, running_sum(&Record::pos));
    std::vector<std::int64_t> got;
    for (const auto& r : t.flatten()) got.push_back(r.pos);
    EXPECT_EQ(got, (std::vector<std::int64_t>{1, 4, 5, 5, 10, 12, 13, 14, 16}));
    EXPECT_EQ(total.value, 16);
    EXPECT_EQ(c.transcript().total_elements(), 2 * (p - 1));
  }
}

TEST(ScanDistributed, KeyedAgainstSequential) {
  std::mt19937_64 g(8);
  for (std::size_t p : {2, 4, 7}) {
    for (auto dir : {ScanDirection::prefix, ScanDirection::suffix}) {
      std::vector<Record> rows;
      std::int64_t key = 0;
      for (int k = 0; k < 300; ++k) {
        if (g() % 6 == 0) key += 1 + static_cast<std::int64_t>(g() % 3);
        Record r = make_row(key, 0);
        r.deg_r = static_cast<std::int64_t>(g() % 10);
        rows.push_back(r);
      }
      std::vector<std::int64_t> expect(rows.size());
      if (dir == ScanDirection::prefix) {
        for (std::size_t k = 0; k < rows.size(); ++k) {
          const bool cont = k > 0 && rows[k].key == rows[k - 1].key;
          expect[k] = std::max(rows[k].deg_r, cont ? expect[k - 1] : 0);
        }
      } else {
        for (std::size_t k = rows.size(); k-- > 0;) {
          const bool cont = k + 1 < rows.size() && rows[k].key == rows[k + 1].key;
          expect[k] = std::max(rows[k].deg_r, cont ? expect[k + 1] : 0);
        }
      }
      auto c = make_cluster(p);
      auto t = DistTable::split(rows, p);
      scan_distributed(c, t, dir, max_by_key(&Record::deg_r));
      std::vector<std::int64_t> got;
      for (const auto& r : t.flatten()) got.push_back(r.deg_r);
      EXPECT_EQ(got, expect);
      EXPECT_EQ(c.transcript().total_elements(), 2 * (p - 1));
    }
  }
}

// ---------------------------------------------------------------------------
// PK join

TEST(PkJoin, SmallExample) {
  for (std::size_t p : {1, 2, 3}) {
    auto c = make_cluster(p);
    const std::vector<oracle::Row> r{{1, 1}, {2, 1}, {3, 2}};
    const std::vector<oracle::KeyVal> s{{1, 100}, {2, 200}};
    auto out = pk_join(c, left_table(r, p), right_table(s, p), KeyHasher(p, 3));
    EXPECT_EQ(triples(out.table), oracle::left_outer(r, s));
    EXPECT_EQ(out.table.sizes(), left_table(r, p).sizes());
  }
}

TEST(PkJoin, EmptyRight) {
  auto c = make_cluster(2);
  const std::vector<oracle::Row> r{{1, 1}, {2, 5}};
  auto out = pk_join(c, left_table(r, 2), right_table({}, 2), KeyHasher(2, 3));
  for (const auto& t : triples(out.table)) EXPECT_FALSE(t.has_c);
  EXPECT_EQ(triples(out.table).size(), 2u);
}

TEST(PkJoin, RandomAgainstOracle) {
  std::mt19937_64 g(21);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t p = std::size_t{1} << (trial % 4);
    const std::size_t n1 = g() % 400, domain = 1 + g() % 200;
    std::vector<oracle::Row> r;
    for (std::size_t k = 0; k < n1; ++k) r.push_back({static_cast<std::int64_t>(k), static_cast<std::int64_t>(g() % domain)});
    std::vector<oracle::KeyVal> s;
    for (std::size_t k = 0; k < domain; ++k) {
      if (g() % 3) s.push_back({static_cast<std::int64_t>(k), static_cast<std::int64_t>(g() % 1000)});
    }
    std::shuffle(s.begin(), s.end(), g);
    auto c = make_cluster(p, trial);
    auto out = pk_join(c, left_table(r, p), right_table(s, p), KeyHasher(p, trial));
    EXPECT_EQ(triples(out.table), oracle::left_outer(r, s)) << "trial " << trial;
  }
}

TEST(PkJoin, DuplicatePrimaryKey) {
  auto c = make_cluster(2);
  const std::vector<oracle::Row> r{{1, 1}};
  EXPECT_THROW(pk_join(c, left_table(r, 2), right_table({{1, 1}, {1, 2}, {3, 3}, {4, 4}}, 2), KeyHasher(2, 0)),
               DuplicatePrimaryKey);
  auto c2 = make_cluster(2);
  // Same key on two servers.
  EXPECT_THROW(pk_join(c2, left_table(r, 2), right_table({{1, 1}, {1, 2}}, 2), KeyHasher(2, 0)),
               DuplicatePrimaryKey);
}

// ---------------------------------------------------------------------------
// Expansion

TEST(Expand, WorkedExample) {
  const std::vector<std::int64_t> d{1, 3, 1, 0, 5, 2, 1, 1, 2};
  auto c = make_cluster(3);
  std::vector<Record> rows;
  for (std::size_t k = 0; k < d.size(); ++k) {
    Record r = make_row(static_cast<std::int64_t>(k + 1), static_cast<std::int64_t>(k + 1));
    r.deg_s = d[k];
    rows.push_back(r);
  }
  auto out = expand(c, DistTable::split(rows, 3), &Record::deg_s, 18);
  EXPECT_EQ(out.m, 6u);
  const auto flat = out.table.flatten();
  ASSERT_EQ(flat.size(), 18u);
  std::vector<std::int64_t> got;
  for (const auto& r : flat) got.push_back(is_real(r) ? r.a : 0);
  EXPECT_EQ(got, (std::vector<std::int64_t>{1, 2, 2, 2, 3, 5, 5, 5, 5, 5, 6, 6, 7, 8, 9, 9, 0, 0}));
}

TEST(Expand, IdentityExpansion) {
  auto c = make_cluster(4);
  std::vector<Record> rows;
  for (int k = 0; k < 20; ++k) {
    Record r = make_row(k, k);
    r.deg_s = 1;
    rows.push_back(r);
  }
  auto out = expand(c, DistTable::split(rows, 4), &Record::deg_s, 20);
  const auto flat = out.table.flatten();
  for (int k = 0; k < 20; ++k) EXPECT_EQ(flat[k].a, k);
}

TEST(Expand, RandomAgainstRepeat) {
  std::mt19937_64 g(33);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t p = 1 + g() % 8;
    std::vector<Record> rows;
    std::vector<std::int64_t> xs, ds;
    for (int k = 0; k < 500; ++k) {
      Record r = make_row(k, k);
      r.deg_s = static_cast<std::int64_t>(g() % 5);
      rows.push_back(r);
      xs.push_back(k);
      ds.push_back(r.deg_s);
    }
    std::int64_t sum = 0;
    for (auto x : ds) sum += x;
    const std::size_t bound = static_cast<std::size_t>(sum) + g() % 50;
    auto c = make_cluster(p, trial);
    auto out = expand(c, DistTable::split(rows, p), &Record::deg_s, bound);
    const std::size_t slots = p * slots_per_server(bound, p);
    const auto expect = oracle::repeat(xs, ds, slots);
    const auto flat = out.table.flatten();
    ASSERT_EQ(flat.size(), slots);
    for (std::size_t k = 0; k < slots; ++k) {
      ASSERT_EQ(is_real(flat[k]), expect[k].has_value()) << k;
      if (expect[k]) EXPECT_EQ(flat[k].a, *expect[k]);
    }
  }
}

TEST(Expand, BoundExceeded) {
  auto c = make_cluster(2);
  std::vector<Record> rows{make_row(1, 1), make_row(2, 2)};
  rows[0].deg_s = 3;
  rows[1].deg_s = 3;
  EXPECT_THROW(expand(c, DistTable::split(rows, 2), &Record::deg_s, 5), BoundExceeded);
}

// ---------------------------------------------------------------------------
// Degrees and the general join

TEST(ComputeDegrees, Example) {
  for (std::size_t p : {1, 2, 3}) {
    auto c = make_cluster(p);
    auto r = left_table({{1, 1}, {2, 1}, {3, 2}}, p);
    auto s = right_table({{1, 0}, {2, 0}, {2, 1}, {3, 0}}, p);
    auto out = compute_degrees(c, r, s, KeyHasher(p, 1), &Record::deg_r, &Record::deg_s);
    std::map<std::int64_t, std::pair<std::int64_t, std::int64_t>> got;
    for (const auto& x : out.real_rows()) got[x.a] = {x.deg_r, x.deg_s};
    EXPECT_EQ(got[1], std::make_pair(std::int64_t{2}, std::int64_t{1}));
    EXPECT_EQ(got[2], std::make_pair(std::int64_t{2}, std::int64_t{1}));
    EXPECT_EQ(got[3], std::make_pair(std::int64_t{1}, std::int64_t{2}));
    auto c2 = make_cluster(p);
    EXPECT_EQ(infer_output_size(c2, out), 4u);
  }
}

TEST(ComputeDegrees, AbsentKeyGetsZero) {
  auto c = make_cluster(2);
  auto out = compute_degrees(c, left_table({{1, 5}}, 2), right_table({{6, 0}}, 2), KeyHasher(2, 1), &Record::deg_r,
                             &Record::deg_s);
  ASSERT_EQ(out.real_rows().size(), 1u);
  EXPECT_EQ(out.real_rows()[0].deg_s, 0);
  EXPECT_EQ(out.real_rows()[0].deg_r, 1);
}

TEST(ComputeDegrees, SingleMatch) {
  auto c = make_cluster(1);
  auto out = compute_degrees(c, left_table({{1, 5}}, 1), right_table({{5, 0}}, 1), KeyHasher(1, 1), &Record::deg_r,
                             &Record::deg_s);
  EXPECT_EQ(out.real_rows()[0].deg_r, 1);
  EXPECT_EQ(out.real_rows()[0].deg_s, 1);
}

TEST(AlignmentPosition, GroupBijection) {
  for (std::int64_t dr = 1; dr <= 12; ++dr) {
    for (std::int64_t ds = 1; ds <= 12; ++ds) {
      std::set<std::int64_t> seen;
      for (std::int64_t q = 1; q <= dr * ds; ++q) seen.insert(alignment_position(q, dr, ds, 1));
      ASSERT_EQ(seen.size(), static_cast<std::size_t>(dr * ds));
      EXPECT_EQ(*seen.begin(), 1);
      EXPECT_EQ(*seen.rbegin(), dr * ds);
    }
  }
}

TEST(JodesJoin, ManyToMany) {
  for (std::size_t p : {1, 2, 4}) {
    const std::vector<oracle::Row> r{{1, 1}, {2, 1}};
    const std::vector<oracle::KeyVal> s{{1, 10}, {1, 20}};
    auto c = make_cluster(p);
    auto out = jodes_join(c, left_table(r, p), right_table(s, p), KeyHasher(p, 2), 4);
    EXPECT_EQ(triples(out.table), oracle::nested_loop(r, s));
    for (const auto& part : out.table.parts) EXPECT_EQ(part.size(), out.m);
  }
}

TEST(JodesJoin, InferredSize) {
  auto c = make_cluster(2);
  const std::vector<oracle::Row> r{{1, 1}, {2, 1}, {3, 2}};
  const std::vector<oracle::KeyVal> s{{1, 0}, {2, 0}, {2, 1}, {3, 0}};
  auto out = jodes_join(c, left_table(r, 2), right_table(s, 2), KeyHasher(2, 2));
  EXPECT_EQ(out.output_size, 4u);
  EXPECT_EQ(triples(out.table), oracle::nested_loop(r, s));
}

TEST(JodesJoin, DisjointKeys) {
  auto c = make_cluster(3);
  auto out = jodes_join(c, left_table({{1, 1}}, 3), right_table({{2, 0}}, 3), KeyHasher(3, 2));
  EXPECT_EQ(out.output_size, 0u);
  EXPECT_TRUE(out.table.real_rows().empty());
}

TEST(JodesJoin, BoundExceeded) {
  auto c = make_cluster(2);
  EXPECT_THROW(jodes_join(c, left_table({{1, 1}, {2, 1}}, 2), right_table({{1, 0}, {1, 1}}, 2), KeyHasher(2, 2), 3),
               BoundExceeded);
}

TEST(JodesJoin, PkShapedMatchesPkJoin) {
  std::mt19937_64 g(5);
  std::vector<oracle::Row> r;
  std::vector<oracle::KeyVal> s;
  for (int k = 0; k < 300; ++k) r.push_back({k, static_cast<std::int64_t>(g() % 80)});
  for (int k = 0; k < 80; k += 2) s.push_back({k, k * 3});
  auto c1 = make_cluster(4);
  auto pk = pk_join(c1, left_table(r, 4), right_table(s, 4), KeyHasher(4, 9));
  auto c2 = make_cluster(4);
  auto j = jodes_join(c2, left_table(r, 4), right_table(s, 4), KeyHasher(4, 9));
  std::vector<oracle::Triple> matched;
  for (const auto& t : triples(pk.table)) {
    if (t.has_c) matched.push_back(t);
  }
  EXPECT_EQ(triples(j.table), matched);
}

TEST(JodesJoin, RandomZipf) {
  std::mt19937_64 g(77);
  for (int trial = 0; trial < 24; ++trial) {
    const std::size_t p = std::size_t{2} << (trial % 3);
    const double z = 0.5 * (trial % 4);
    const std::size_t n1 = 50 + g() % 300, n2 = 50 + g() % 300, domain = 1 + g() % 100;
    const auto k1 = oracle::zipf_keys(n1, domain, z, g);
    const auto k2 = oracle::zipf_keys(n2, domain, z, g);
    std::vector<oracle::Row> r;
    std::vector<oracle::KeyVal> s;
    for (std::size_t k = 0; k < n1; ++k) r.push_back({static_cast<std::int64_t>(k), k1[k]});
    for (std::size_t k = 0; k < n2; ++k) s.push_back({k2[k], static_cast<std::int64_t>(k)});
    auto c = make_cluster(p, trial);
    const auto expect = oracle::nested_loop(r, s);
    const bool given = trial % 2;
    auto out = jodes_join(c, left_table(r, p), right_table(s, p), KeyHasher(p, trial),
                          given ? std::optional<std::size_t>(expect.size() + 13) : std::nullopt);
    EXPECT_EQ(triples(out.table), expect) << "trial " << trial;
  }
}

}  // namespace
