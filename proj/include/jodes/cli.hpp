#pragma once

// Command-line front end. run_cli() returns the process exit code:
// 0 success, 2 input or operator error, 3 padding overflow, 4 audit failure.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "jodes/audit.hpp"
#include "jodes/cost.hpp"
#include "jodes/expand.hpp"
#include "jodes/io.hpp"
#include "jodes/join.hpp"
#include "jodes/sort.hpp"

namespace jodes {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitOverflow = 3;
inline constexpr int kExitAudit = 4;

inline std::uint64_t default_seed() {
  if (const char* s = std::getenv("JODES_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw InvalidArgument("JODES_SEED must be an unsigned integer");
    }
  }
  return 1;
}

struct Padding {
  std::optional<std::size_t> given;  // nullopt = infer

  static Padding parse(const std::string& s) {
    if (s == "infer" || s == "none") return {};
    if (s.rfind("given:", 0) == 0) {
      std::int64_t m = parse_int(s.substr(6), 0);
      if (m < 1) throw InvalidArgument("--padding given:M needs M >= 1");
      return Padding{static_cast<std::size_t>(m)};
    }
    throw InvalidArgument("--padding must be 'infer' or 'given:M'");
  }
};

namespace cli_detail {

struct Common {
  std::size_t servers = 4;
  unsigned sigma = 40;
  std::uint64_t seed = 1;
  std::string report;

  ClusterConfig config() const {
    ClusterConfig cfg;
    cfg.servers = servers;
    cfg.sigma = sigma;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
  }
  KeyHasher hasher() const { return KeyHasher(servers, seed ^ 0x6a09e667f3bcc908ULL); }
};

inline void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--servers,-p", c.servers, "number of servers")->capture_default_str();
  cmd->add_option("--sigma", c.sigma, "statistical security parameter")->capture_default_str();
  cmd->add_option("--seed", c.seed, "RNG seed (default: $JODES_SEED or 1)")->capture_default_str();
  cmd->add_option("--report", c.report, "write a JSON report here");
}

inline void write_report(const std::string& path, const nlohmann::ordered_json& j) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

// Column `key` becomes the record key; `value` (or the first other column)
// becomes the payload in `payload_field`.
struct Side {
  std::vector<Record> records;
  std::string key_name, value_name;
  std::vector<std::int64_t> keys;
};

inline Side load_side(const CsvTable& t, const std::string& key, const std::string& value, Payloads& dict,
                      bool right) {
  Side s;
  const std::size_t kc = key.empty() ? 0 : t.column(key);
  std::size_t vc = 0;
  if (!value.empty()) {
    vc = t.column(value);
  } else {
    if (t.header.size() < 2) throw InvalidArgument("table needs a key column and a value column");
    vc = kc == 0 ? 1 : 0;
  }
  s.key_name = t.header[kc];
  s.value_name = t.header[vc];
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto k = parse_int(t.rows[i][kc], i + 2);
    const auto v = dict.intern(t.rows[i][vc]);
    s.records.push_back(right ? make_row(k, 0, v, true) : make_row(k, v));
    s.keys.push_back(k);
  }
  return s;
}

inline std::vector<std::string> output_header(const Side& r, const Side& s) {
  std::vector<std::string> h{r.value_name, r.key_name, s.value_name};
  std::vector<std::string> sorted = h;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    h = {"R." + r.value_name, "R." + r.key_name, "S." + s.value_name};
  }
  return h;
}

}  // namespace cli_detail

inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli_detail;
  using json = nlohmann::ordered_json;

  CLI::App app{"Oblivious distributed join on a simulated cluster", "jodes"};
  app.require_subcommand(1);
  Common common;
  std::uint64_t seed_default = 1;
  try {
    seed_default = default_seed();
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitInput;
  }
  common.seed = seed_default;

  // gen
  std::size_t rows = 1000, domain = 100;
  double z = 0;
  std::string out_path;
  auto* gen = app.add_subcommand("gen", "generate a Zipf-keyed two-column table");
  add_common(gen, common);
  gen->add_option("--rows", rows)->capture_default_str();
  gen->add_option("--domain", domain)->capture_default_str();
  gen->add_option("--z", z, "Zipf exponent")->capture_default_str();
  gen->add_option("--out", out_path)->required();

  // load-edges
  std::string in_path;
  auto* edges = app.add_subcommand("load-edges", "convert an edge list to a (src,dst) table");
  add_common(edges, common);
  edges->add_option("--in", in_path)->required();
  edges->add_option("--out", out_path)->required();

  // join / pkjoin
  std::string left_path, right_path, left_key, right_key, left_value, right_value, padding = "infer";
  auto add_join_inputs = [&](CLI::App* cmd) {
    add_common(cmd, common);
    cmd->add_option("--left", left_path, "R table")->required();
    cmd->add_option("--right", right_path, "S table")->required();
    cmd->add_option("--left-key", left_key, "join column of R (default: first)");
    cmd->add_option("--right-key", right_key, "join column of S (default: first)");
    cmd->add_option("--left-value", left_value, "payload column of R");
    cmd->add_option("--right-value", right_value, "payload column of S");
    cmd->add_option("--out", out_path, "output table");
  };
  auto* join = app.add_subcommand("join", "many-to-many equi-join");
  add_join_inputs(join);
  join->add_option("--padding", padding, "infer or given:M")->capture_default_str();
  auto* pkjoin = app.add_subcommand("pkjoin", "left-outer join on a primary key of S");
  add_join_inputs(pkjoin);

  // sort
  std::string key_col;
  auto* sort = app.add_subcommand("sort", "sort a table by an integer column");
  add_common(sort, common);
  sort->add_option("--in", in_path)->required();
  sort->add_option("--key", key_col, "sort column (default: first)");
  sort->add_option("--out", out_path);

  // expand
  std::string degree_col = "degree", value_col;
  std::size_t output_size = 0;
  auto* exp = app.add_subcommand("expand", "repeat each row by its degree column");
  add_common(exp, common);
  exp->add_option("--in", in_path)->required();
  exp->add_option("--key", key_col);
  exp->add_option("--value", value_col);
  exp->add_option("--degree", degree_col)->capture_default_str();
  exp->add_option("--output-size,-M", output_size, "output bound M")->required();
  exp->add_option("--out", out_path);

  // audit
  auto* audit = app.add_subcommand("audit", "obliviousness and padding checks");
  audit->require_subcommand(1);
  std::string op_name;
  std::vector<std::size_t> sizes, other_sizes;
  std::size_t trials = 20, size = 64, probe_n = 256;
  bool no_slack = false;
  auto* comm = audit->add_subcommand("comm", "transcript equality over same-size inputs");
  add_common(comm, common);
  comm->add_option("--op", op_name, "operator (or leaky_shuffle)")->required();
  comm->add_option("--sizes", sizes, "n_i per server")->delimiter(',');
  comm->add_option("--other-sizes", other_sizes, "right-input n_i per server")->delimiter(',');
  comm->add_option("--output-size,-M", output_size);
  comm->add_option("--trials", trials)->capture_default_str();
  auto* comp = audit->add_subcommand("comp", "access-trace equality over same-size inputs");
  add_common(comp, common);
  comp->add_option("--primitive", op_name, "primitive (or naive_quicksort)")->required();
  comp->add_option("--size", size)->capture_default_str();
  comp->add_option("--trials", trials, "input pairs")->capture_default_str();
  auto* probe = audit->add_subcommand("probe", "Monte-Carlo padding overflow rate");
  add_common(probe, common);
  probe->add_option("--n", probe_n, "records per server")->capture_default_str();
  probe->add_option("--trials", trials)->capture_default_str();
  probe->add_flag("--no-slack", no_slack, "force U = ceil(n/p)");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitInput;
  }

  try {
    if (*gen) {
      const auto t = gen_zipf(rows, domain, z, common.seed);
      write_csv_file(out_path, t);
      std::vector<std::int64_t> keys;
      for (const auto& r : t.rows) keys.push_back(parse_int(r[0], 0));
      const auto st = key_stats(keys);
      json j{{"operator", "gen"},
             {"config", {{"seed", common.seed}}},
             {"dataset", {{"rows", st.rows}, {"domain", domain}, {"z", z}, {"distinct", st.distinct}, {"alpha", st.alpha}}}};
      write_report(common.report, j);
      out << "rows=" << st.rows << " distinct=" << st.distinct << " alpha=" << st.alpha << '\n';
      return kExitOk;
    }

    if (*edges) {
      std::ifstream in(in_path);
      if (!in) throw InvalidArgument("cannot open '" + in_path + "'");
      const auto t = load_edges(in);
      write_csv_file(out_path, t);
      write_report(common.report, json{{"operator", "load-edges"}, {"dataset", {{"rows", t.rows.size()}}}});
      out << "edges=" << t.rows.size() << '\n';
      return kExitOk;
    }

    if (*join || *pkjoin) {
      const auto cfg = common.config();
      const std::size_t p = cfg.servers;
      Payloads dict;
      const auto r = load_side(read_csv_file(left_path), left_key, left_value, dict, false);
      const auto s = load_side(read_csv_file(right_path), right_key, right_value, dict, true);
      Cluster cluster(cfg);
      CsvTable result{output_header(r, s), {}};
      const std::size_t n1 = r.records.size(), n2 = s.records.size();
      auto rt = DistTable::split(r.records, p, {"A", "B"});
      auto st = DistTable::split(s.records, p, {"B", "C"});
      CostReport rep;
      if (*join) {
        const auto pad = Padding::parse(padding);
        auto res = jodes_join(cluster, std::move(rt), std::move(st), common.hasher(), pad.given);
        for (const auto& row : res.table.real_rows()) {
          result.rows.push_back({dict.at(row.a), std::to_string(row.key), dict.at(row.c)});
        }
        rep = CostReport::from_cluster(cluster, "jodes_join");
        rep.stats = DatasetStats::from_keys(r.keys, s.keys);
        const std::size_t n = n1 + n2, m = res.output_size;
        rep.bounds.push_back(make_check("jodes_join", "7N + 2M + min(2M, Np)", BoundKind::at_most,
                                        jodes_comm_bound(n, m, p), rep.comm_elements(), p));
        rep.extra = {{"padding", pad.given ? "given" : "infer"},
                     {"output_size", m},
                     {"slots_per_server", res.m},
                     {"real_rows", result.rows.size()}};
      } else {
        auto res = pk_join(cluster, std::move(rt), std::move(st), common.hasher());
        for (const auto& row : res.table.real_rows()) {
          result.rows.push_back({dict.at(row.a), std::to_string(row.key), row.has_c ? dict.at(row.c) : ""});
        }
        rep = CostReport::from_cluster(cluster, "pk_join");
        rep.plans = {res.left_plan, res.right_plan};
        rep.stats = DatasetStats::from_keys(r.keys, s.keys);
        rep.bounds.push_back(make_check("pk_join", "2N1 + N2", BoundKind::equal_up_to, pk_join_comm_bound(n1, n2),
                                        rep.comm_elements(), p));
        rep.extra = {{"real_rows", result.rows.size()}};
      }
      if (!out_path.empty()) write_csv_file(out_path, result);
      write_report(common.report, to_json(rep));
      out << "rows=" << result.rows.size() << " comm_elements=" << rep.comm_elements()
          << " bound_ok=" << (rep.bounds_ok() ? "true" : "false") << '\n';
      return kExitOk;
    }

    if (*sort) {
      const auto cfg = common.config();
      const std::size_t p = cfg.servers;
      const auto t = read_csv_file(in_path);
      const std::size_t kc = key_col.empty() ? 0 : t.column(key_col);
      std::vector<Record> recs;
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        recs.push_back(make_row(parse_int(t.rows[i][kc], i + 2), static_cast<std::int64_t>(i)));
      }
      Cluster cluster(cfg);
      const auto split = DistTable::split(recs, p, t.header);
      const std::size_t padded = column_rows(split.sizes(), p) * p;
      auto sorted = sort_distributed(cluster, split, by_join_key);
      CsvTable result{t.header, {}};
      for (const auto& r : sorted.real_rows()) result.rows.push_back(t.rows[static_cast<std::size_t>(r.a)]);
      auto rep = CostReport::from_cluster(cluster, "sort");
      rep.bounds.push_back(
          make_check("sort", "3N (N padded to p*r)", BoundKind::exact, sort_comm_bound(padded), rep.comm_elements(), p));
      rep.extra = {{"N", t.rows.size()}, {"N_padded", padded}};
      if (!out_path.empty()) write_csv_file(out_path, result);
      write_report(common.report, to_json(rep));
      out << "rows=" << result.rows.size() << " comm_elements=" << rep.comm_elements()
          << " bound_ok=" << (rep.bounds_ok() ? "true" : "false") << '\n';
      return kExitOk;
    }

    if (*exp) {
      const auto cfg = common.config();
      const std::size_t p = cfg.servers;
      const auto t = read_csv_file(in_path);
      const std::size_t kc = key_col.empty() ? 0 : t.column(key_col);
      const std::size_t dc = t.column(degree_col);
      std::size_t vc = value_col.empty() ? t.header.size() : t.column(value_col);
      if (vc == t.header.size()) {
        for (vc = 0; vc == kc || vc == dc; ++vc) {
        }
        if (vc >= t.header.size()) throw InvalidArgument("expand: table needs a value column");
      }
      Payloads dict;
      std::vector<Record> recs;
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        Record r = make_row(parse_int(t.rows[i][kc], i + 2), dict.intern(t.rows[i][vc]));
        r.deg_s = parse_int(t.rows[i][dc], i + 2);
        recs.push_back(r);
      }
      Cluster cluster(cfg);
      auto res = expand(cluster, DistTable::split(recs, p, {}), &Record::deg_s, output_size);
      CsvTable result{{t.header[kc], t.header[vc]}, {}};
      for (const auto& r : res.table.real_rows()) result.rows.push_back({std::to_string(r.key), dict.at(r.a)});
      auto rep = CostReport::from_cluster(cluster, "expand");
      rep.plans = {res.plan};
      rep.bounds.push_back(make_check("expansion", "N + min(M, Np)", BoundKind::at_most,
                                      expansion_comm_bound(recs.size(), output_size, p),
                                      elements_matching(cluster.transcript(), "expand:sf"), p));
      rep.extra = {{"output_size", output_size}, {"slots_per_server", res.m}, {"real_rows", result.rows.size()}};
      if (!out_path.empty()) write_csv_file(out_path, result);
      write_report(common.report, to_json(rep));
      out << "rows=" << result.rows.size() << " comm_elements=" << rep.comm_elements()
          << " bound_ok=" << (rep.bounds_ok() ? "true" : "false") << '\n';
      return kExitOk;
    }

    if (*audit) {
      const auto cfg = common.config();
      json j;
      bool passed = false;
      if (*comm) {
        SizeProfile prof{sizes, other_sizes, std::nullopt};
        if (prof.sizes.empty()) prof.sizes.assign(cfg.servers, 32);
        if (prof.other_sizes.empty()) prof.other_sizes = prof.sizes;
        if (output_size) prof.output_size = output_size;
        if (!prof.output_size && (op_name == "expand" || op_name == "jodes_join")) {
          std::size_t n = 0;
          for (auto v : prof.sizes) n += v;
          prof.output_size = 2 * n;
        }
        const auto v = audit_comm(op_name, prof, cfg, trials, cfg.seed);
        passed = v.passed;
        j = to_json(v);
      } else if (*comp) {
        const auto v = audit_comp(op_name, size, trials, cfg.seed);
        passed = v.passed;
        j = to_json(v);
      } else {
        const auto res = failure_probe(cfg.servers, probe_n, cfg.sigma, trials, cfg.seed, no_slack);
        passed = res.within_target();
        j = {{"check", "probe:shuffle_by_key"},
             {"passed", passed},
             {"trials", res.trials},
             {"overflows", res.overflows},
             {"rate", res.rate()},
             {"target", res.target()},
             {"standard_error", res.standard_error()},
             {"no_slack", no_slack}};
      }
      write_report(common.report, j);
      out << j.dump() << '\n';
      return passed ? kExitOk : kExitAudit;
    }
  } catch (const PaddingOverflow& e) {
    err << e.what() << '\n';
    return kExitOverflow;
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace jodes
