#pragma once

// Cost ledger: measured communication from a transcript, per-server
// operation counters, closed-form bounds and dataset skew statistics, all
// serializable to JSON.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jodes/cluster.hpp"
#include "jodes/oprims.hpp"
#include "jodes/padding.hpp"

namespace jodes {

/// Allowed lower-order slack: 5% of the bound plus 4p^2 elements.
inline double bound_slack(double bound, std::size_t p) { return 0.05 * bound + 4.0 * static_cast<double>(p * p); }

inline double jodes_comm_bound(std::size_t n, std::size_t m, std::size_t p) {
  const double dn = static_cast<double>(n), dm = static_cast<double>(m);
  return 7 * dn + 2 * dm + std::min(2 * dm, dn * static_cast<double>(p));
}
inline double pk_join_comm_bound(std::size_t n1, std::size_t n2) {
  return 2.0 * static_cast<double>(n1) + static_cast<double>(n2);
}
inline double sort_comm_bound(std::size_t n) { return 3.0 * static_cast<double>(n); }
inline double scan_comm_bound(std::size_t p) { return 2.0 * static_cast<double>(p - 1); }
inline double expansion_comm_bound(std::size_t n, std::size_t m, std::size_t p) {
  return static_cast<double>(n) + std::min(static_cast<double>(m), static_cast<double>(n * p));
}

enum class BoundKind {
  exact,     // measured == bound
  at_most,   // measured <= bound + slack
  equal_up_to,  // |measured - bound| <= slack
};

struct BoundCheck {
  std::string name;
  std::string formula;
  BoundKind kind = BoundKind::at_most;
  double bound = 0;
  std::uint64_t measured = 0;
  double allowed = 0;  // slack permitted on top of the bound

  double epsilon() const { return static_cast<double>(measured) - bound; }
  bool ok() const {
    switch (kind) {
      case BoundKind::exact: return static_cast<double>(measured) == bound;
      case BoundKind::at_most: return epsilon() <= allowed;
      case BoundKind::equal_up_to: return epsilon() <= allowed && -epsilon() <= allowed;
    }
    return false;
  }
};

inline BoundCheck make_check(std::string name, std::string formula, BoundKind kind, double bound,
                             std::uint64_t measured, std::size_t p) {
  BoundCheck c{std::move(name), std::move(formula), kind, bound, measured, 0};
  if (kind != BoundKind::exact) c.allowed = bound_slack(bound, p);
  return c;
}

/// Skew statistics of a join instance.
struct DatasetStats {
  std::size_t n1 = 0, n2 = 0;
  std::uint64_t output = 0;  // M = |R join S|
  std::size_t alpha1 = 0, alpha2 = 0;
  double phi = 0;  // alpha1 * alpha2 / M

  static DatasetStats from_keys(const std::vector<std::int64_t>& r_keys, const std::vector<std::int64_t>& s_keys) {
    std::map<std::int64_t, std::size_t> dr, ds;
    for (auto k : r_keys) ++dr[k];
    for (auto k : s_keys) ++ds[k];
    DatasetStats st;
    st.n1 = r_keys.size();
    st.n2 = s_keys.size();
    for (const auto& [k, d] : dr) {
      st.alpha1 = std::max(st.alpha1, d);
      auto it = ds.find(k);
      if (it != ds.end()) st.output += static_cast<std::uint64_t>(d) * it->second;
    }
    for (const auto& [k, d] : ds) st.alpha2 = std::max(st.alpha2, d);
    st.phi = st.output ? static_cast<double>(st.alpha1) * static_cast<double>(st.alpha2) / st.output : 0.0;
    return st;
  }
};

/// Sum of elements over rounds whose label contains `needle`.
inline std::uint64_t elements_matching(const Transcript& t, const std::string& needle) {
  std::uint64_t total = 0;
  for (const auto& r : t.rounds()) {
    if (r.label.find(needle) != std::string::npos) total += r.total();
  }
  return total;
}

struct CostReport {
  ClusterConfig config;
  std::string operator_name;
  Transcript transcript;
  std::vector<OpCounters> counters;
  std::vector<BoundCheck> bounds;
  std::vector<PaddingPlan> plans;
  std::optional<DatasetStats> stats;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  std::uint64_t comm_elements() const { return transcript.total_elements(); }
  std::uint64_t comm_bytes() const { return transcript.total_bytes(); }
  bool bounds_ok() const {
    return std::all_of(bounds.begin(), bounds.end(), [](const BoundCheck& b) { return b.ok(); });
  }

  static CostReport from_cluster(const Cluster& cluster, std::string name) {
    CostReport rep;
    rep.config = cluster.config();
    rep.operator_name = std::move(name);
    rep.transcript = cluster.transcript();
    rep.counters = cluster.counters();
    return rep;
  }
};

inline const char* to_string(BoundKind k) {
  switch (k) {
    case BoundKind::exact: return "exact";
    case BoundKind::at_most: return "at_most";
    case BoundKind::equal_up_to: return "equal_up_to";
  }
  return "unknown";
}

inline nlohmann::ordered_json to_json(const Transcript& t) {
  auto rounds = nlohmann::ordered_json::array();
  for (const auto& r : t.rounds()) {
    auto matrix = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r.servers; ++i) {
      auto row = nlohmann::ordered_json::array();
      for (std::size_t j = 0; j < r.servers; ++j) row.push_back(r.at(i, j));
      matrix.push_back(std::move(row));
    }
    rounds.push_back({{"label", r.label},
                      {"kind", r.kind == RoundKind::data ? "data" : "bookkeeping"},
                      {"matrix", std::move(matrix)}});
  }
  return rounds;
}

inline nlohmann::ordered_json to_json(const PaddingPlan& plan) {
  nlohmann::ordered_json j{{"rule", to_string(plan.rule)},
                           {"servers", plan.servers},
                           {"sigma", plan.sigma},
                           {"sizes", plan.sizes},
                           {"slack", plan.slack},
                           {"bounds", plan.bounds}};
  if (plan.rule == PaddingRule::expansion) {
    j["total_input"] = plan.total_input;
    j["output_size"] = plan.output_size;
  }
  return j;
}

inline nlohmann::ordered_json to_json(const CostReport& rep) {
  nlohmann::ordered_json j;
  j["config"] = {{"servers", rep.config.servers},
                 {"sigma", rep.config.sigma},
                 {"element_width", rep.config.element_width},
                 {"seed", rep.config.seed}};
  j["operator"] = rep.operator_name;
  j["rounds"] = to_json(rep.transcript);
  j["totals"] = {{"comm_elements", rep.comm_elements()},
                 {"comm_bytes", rep.comm_bytes()},
                 {"data_elements", rep.transcript.total_elements(RoundKind::data)},
                 {"bookkeeping_elements", rep.transcript.total_elements(RoundKind::bookkeeping)},
                 {"rounds", rep.transcript.rounds().size()}};
  auto counters = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < rep.counters.size(); ++i) {
    counters.push_back(
        {{"server", i + 1}, {"comparisons", rep.counters[i].comparisons}, {"cmoves", rep.counters[i].cmoves}});
  }
  j["op_counters"] = std::move(counters);
  auto bounds = nlohmann::ordered_json::array();
  for (const auto& b : rep.bounds) {
    bounds.push_back({{"name", b.name},
                      {"formula", b.formula},
                      {"kind", to_string(b.kind)},
                      {"bound", b.bound},
                      {"measured", b.measured},
                      {"epsilon", b.epsilon()},
                      {"allowed_epsilon", b.allowed},
                      {"bound_ok", b.ok()}});
  }
  j["bound_formulas"] = std::move(bounds);
  j["bound_ok"] = rep.bounds_ok();
  if (!rep.plans.empty()) {
    auto plans = nlohmann::ordered_json::array();
    for (const auto& p : rep.plans) plans.push_back(to_json(p));
    j["padding_plans"] = std::move(plans);
  }
  if (rep.stats) {
    const auto& s = *rep.stats;
    j["dataset"] = {{"N1", s.n1}, {"N2", s.n2}, {"M", s.output}, {"alpha1", s.alpha1}, {"alpha2", s.alpha2},
                    {"phi", s.phi}};
  }
  if (!rep.extra.empty()) j["result"] = rep.extra;
  return j;
}

}  // namespace jodes
