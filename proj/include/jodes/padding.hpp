#pragma once

// Closed-form padding planners. Each shuffle sender i pads every outgoing
// bucket to U_i = ceil((1 + c_i) * base_i) elements, where the Chernoff
// slack c_i keeps the overflow probability of the whole shuffle <= 2^-sigma.
// All logarithms are base 2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jodes/error.hpp"

namespace jodes {

/// Printed constant of the tail bound (close to, but not equal to, 3 ln 2).
inline constexpr double kChernoffConstant = 2.08;

enum class PaddingRule { shuffle_by_key, expansion, align };

inline const char* to_string(PaddingRule t) {
  switch (t) {
    case PaddingRule::shuffle_by_key: return "shuffle_by_key";
    case PaddingRule::expansion: return "expansion";
    case PaddingRule::align: return "align";
  }
  return "unknown";
}

struct PaddingPlan {
  PaddingRule rule = PaddingRule::shuffle_by_key;
  std::vector<std::size_t> bounds;  // U_i per sender
  std::vector<double> slack;        // c_i per sender
  std::vector<std::size_t> sizes;   // n_i echoed
  std::size_t servers = 1;
  unsigned sigma = 40;
  std::size_t total_input = 0;   // N (expansion only)
  std::size_t output_size = 0;   // M (expansion only)

  /// Elements the padded shuffle puts on the wire: p * sum_i U_i.
  std::uint64_t wire_elements() const {
    std::uint64_t total = 0;
    for (auto u : bounds) total += u;
    return total * servers;
  }
};

namespace padding_detail {

inline void check_common(std::size_t p, unsigned sigma) {
  if (p < 1) throw InvalidArgument("padding: p must be >= 1");
  if (sigma < 1) throw InvalidArgument("padding: sigma must be >= 1");
}

inline double union_bits(std::size_t p, unsigned sigma) {
  return static_cast<double>(sigma) + 2.0 * std::log2(static_cast<double>(p));
}

inline std::size_t ceil_bound(double x) {
  return static_cast<std::size_t>(std::ceil(x));
}

}  // namespace padding_detail

/// Slack c = sqrt(2.08 p (sigma + 2 log p) / n); zero for an empty sender.
inline double shuffle_slack(std::size_t n, std::size_t p, unsigned sigma) {
  if (n == 0) return 0.0;
  return std::sqrt(kChernoffConstant * static_cast<double>(p) * padding_detail::union_bits(p, sigma) /
                   static_cast<double>(n));
}

/// U = ceil((1 + c) n / p) for one sender holding n distinct keys.
inline std::size_t shuffle_bound(std::size_t n, std::size_t p, unsigned sigma) {
  const double c = shuffle_slack(n, p, sigma);
  return padding_detail::ceil_bound((1.0 + c) * static_cast<double>(n) / static_cast<double>(p));
}

inline PaddingPlan pad_shuffle_by_key(std::span<const std::size_t> sizes, std::size_t p, unsigned sigma) {
  padding_detail::check_common(p, sigma);
  PaddingPlan plan;
  plan.rule = PaddingRule::shuffle_by_key;
  plan.servers = p;
  plan.sigma = sigma;
  plan.sizes.assign(sizes.begin(), sizes.end());
  for (std::size_t n : sizes) {
    plan.slack.push_back(shuffle_slack(n, p, sigma));
    plan.bounds.push_back(shuffle_bound(n, p, sigma));
  }
  return plan;
}

/// Same closed form as shuffle-by-key, applied to the sizes left by the
/// random shuffle that precedes the alignment shuffle.
inline PaddingPlan pad_align(std::span<const std::size_t> sizes, std::size_t p, unsigned sigma) {
  PaddingPlan plan = pad_shuffle_by_key(sizes, p, sigma);
  plan.rule = PaddingRule::align;
  return plan;
}

/// Expansion shuffle plan: U_i = ceil((1 + c_i) n_i min(m/N, 1)) with
/// c_i = sqrt(2.08 max(N/m, 1) (sigma + 2 log p) / n_i), m = M / p.
inline PaddingPlan pad_expansion(std::span<const std::size_t> sizes, std::size_t total_input, std::size_t output_size,
                                 std::size_t p, unsigned sigma) {
  padding_detail::check_common(p, sigma);
  if (output_size < 1) throw InvalidArgument("pad_expansion: M must be >= 1");
  PaddingPlan plan;
  plan.rule = PaddingRule::expansion;
  plan.servers = p;
  plan.sigma = sigma;
  plan.total_input = total_input;
  plan.output_size = output_size;
  plan.sizes.assign(sizes.begin(), sizes.end());
  const double m = static_cast<double>(output_size) / static_cast<double>(p);
  const double big_n = std::max<double>(1.0, static_cast<double>(total_input));
  const double share = std::min(m / big_n, 1.0);
  const double spread = std::max(big_n / m, 1.0);
  for (std::size_t n : sizes) {
    const double c = n == 0 ? 0.0
                            : std::sqrt(kChernoffConstant * spread * padding_detail::union_bits(p, sigma) /
                                        static_cast<double>(n));
    plan.slack.push_back(c);
    plan.bounds.push_back(padding_detail::ceil_bound((1.0 + c) * static_cast<double>(n) * share));
  }
  return plan;
}

}  // namespace jodes
