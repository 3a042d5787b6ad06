#pragma once

// Plain sequential references for the distributed operators. Nothing here
// is oblivious and nothing is shared with the library's code paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <tuple>
#include <vector>

#include "jodes/record.hpp"

namespace oracle {

struct Row {
  std::int64_t a;
  std::int64_t b;
};

struct KeyVal {
  std::int64_t b;
  std::int64_t c;
};

struct Triple {
  std::int64_t a, b, c;
  bool has_c;
  friend bool operator==(const Triple&, const Triple&) = default;
  friend bool operator<(const Triple& x, const Triple& y) {
    return std::tie(x.a, x.b, x.has_c, x.c) < std::tie(y.a, y.b, y.has_c, y.c);
  }
};

inline std::vector<Triple> nested_loop(const std::vector<Row>& r, const std::vector<KeyVal>& s) {
  std::vector<Triple> out;
  for (const auto& x : r) {
    for (const auto& y : s) {
      if (x.b == y.b) out.push_back({x.a, x.b, y.c, true});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<Triple> left_outer(const std::vector<Row>& r, const std::vector<KeyVal>& s) {
  std::vector<Triple> out;
  for (const auto& x : r) {
    bool hit = false;
    for (const auto& y : s) {
      if (x.b == y.b) {
        out.push_back({x.a, x.b, y.c, true});
        hit = true;
      }
    }
    if (!hit) out.push_back({x.a, x.b, 0, false});
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::map<std::int64_t, std::int64_t> degrees(const std::vector<std::int64_t>& keys) {
  std::map<std::int64_t, std::int64_t> d;
  for (auto k : keys) ++d[k];
  return d;
}

/// x_i repeated d_i times, then dummies (nullopt) up to `slots`.
template <class T>
std::vector<std::optional<T>> repeat(const std::vector<T>& xs, const std::vector<std::int64_t>& d, std::size_t slots) {
  std::vector<std::optional<T>> out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::int64_t k = 0; k < d[i]; ++k) out.push_back(xs[i]);
  }
  out.resize(slots);
  return out;
}

inline std::vector<std::int64_t> prefix_sums(const std::vector<std::int64_t>& v) {
  std::vector<std::int64_t> out;
  std::int64_t acc = 0;
  for (auto x : v) out.push_back(acc += x);
  return out;
}

/// Zipf(z) sample over [1, domain] by inverse CDF on explicit weights.
inline std::vector<std::int64_t> zipf_keys(std::size_t n, std::size_t domain, double z, std::mt19937_64& g) {
  std::vector<double> w(domain);
  for (std::size_t k = 0; k < domain; ++k) w[k] = 1.0 / std::pow(static_cast<double>(k + 1), z);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::vector<std::int64_t> out(n);
  for (auto& k : out) k = static_cast<std::int64_t>(pick(g)) + 1;
  return out;
}

}  // namespace oracle
