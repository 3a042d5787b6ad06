#pragma once

// CSV tables at the storage boundary, edge-list ingestion and the Zipf
// generator. Keys are integers; payload columns are opaque strings that get
// interned to integer ids while inside the cluster.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "jodes/error.hpp"

namespace jodes {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InvalidArgument("table has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

namespace io_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace io_detail

inline std::int64_t parse_int(const std::string& s, std::size_t line) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw ParseError("line " + std::to_string(line) + ": '" + s + "' is not an integer");
  }
  return v;
}

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (io_detail::trim(line).empty()) continue;
    auto fields = io_detail::split_commas(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw ParseError("line " + std::to_string(no) + ": expected " + std::to_string(t.header.size()) +
                       " fields, got " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) throw ParseError("line 1: missing header");
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  return read_csv(in);
}

inline void write_csv(std::ostream& out, const CsvTable& t) {
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
    out << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

inline void write_csv_file(const std::string& path, const CsvTable& t) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  write_csv(out, t);
}

/// Interns payload strings to dense ids starting at 1.
class Payloads {
 public:
  std::int64_t intern(const std::string& s) {
    auto [it, fresh] = ids_.try_emplace(s, static_cast<std::int64_t>(values_.size() + 1));
    if (fresh) values_.push_back(s);
    return it->second;
  }
  const std::string& at(std::int64_t id) const {
    if (id < 1 || static_cast<std::size_t>(id) > values_.size()) throw InvalidArgument("unknown payload id");
    return values_[static_cast<std::size_t>(id - 1)];
  }

 private:
  std::vector<std::string> values_;
  std::unordered_map<std::string, std::int64_t> ids_;
};

/// Edge list: two integers per line separated by whitespace or a comma;
/// '#' starts a comment.
inline CsvTable load_edges(std::istream& in) {
  CsvTable t{{"src", "dst"}, {}};
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream words(line);
    std::vector<std::string> w;
    for (std::string s; words >> s;) w.push_back(s);
    if (w.empty()) continue;
    if (w.size() != 2) {
      throw ParseError("line " + std::to_string(no) + ": expected 2 fields, got " + std::to_string(w.size()));
    }
    parse_int(w[0], no);
    parse_int(w[1], no);
    t.rows.push_back(std::move(w));
  }
  return t;
}

struct KeyStats {
  std::size_t rows = 0;
  std::size_t distinct = 0;
  std::size_t alpha = 0;  // max key frequency
};

inline KeyStats key_stats(const std::vector<std::int64_t>& keys) {
  std::map<std::int64_t, std::size_t> freq;
  for (auto k : keys) ++freq[k];
  KeyStats st{keys.size(), freq.size(), 0};
  for (const auto& [k, f] : freq) st.alpha = std::max(st.alpha, f);
  return st;
}

/// `rows` keys drawn from Zipf(z) over [1, domain]; value = row index.
inline CsvTable gen_zipf(std::size_t rows, std::size_t domain, double z, std::uint64_t seed) {
  if (rows < 1 || domain < 1 || z < 0) throw InvalidArgument("gen: need rows >= 1, domain >= 1, z >= 0");
  std::vector<double> w(domain);
  for (std::size_t k = 0; k < domain; ++k) w[k] = 1.0 / std::pow(static_cast<double>(k + 1), z);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::mt19937_64 g(seed);
  CsvTable t{{"key", "value"}, {}};
  for (std::size_t i = 0; i < rows; ++i) t.rows.push_back({std::to_string(pick(g) + 1), std::to_string(i)});
  return t;
}

}  // namespace jodes
