#pragma once

// Size-only simulation of operator transcripts. Entries are computed from
// the public partition sizes, p, sigma, M and the seed; no record is
// touched. Random-shuffle rounds replay the same seeded draws as a real run.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "jodes/cluster.hpp"
#include "jodes/error.hpp"
#include "jodes/expand.hpp"
#include "jodes/padding.hpp"
#include "jodes/shuffle.hpp"
#include "jodes/sort.hpp"

namespace jodes {

struct OperatorDescriptor {
  std::string name;                      // shuffle_by_key, shuffle_random, sort, scan, pk_join, expand,
                                         // compute_degrees, jodes_join
  std::vector<std::size_t> sizes;        // n_i of the (left) input
  std::vector<std::size_t> other_sizes;  // n_i of the right input, when there is one
  std::optional<std::size_t> output_size;  // M (expansion, join)
  std::string label;                     // round label prefix; empty = operator default
};

class SizeSimulator {
 public:
  SizeSimulator(const ClusterConfig& config, std::size_t first_round = 0)
      : config_(config), transcript_(config.servers, config.element_width), offset_(first_round) {
    config_.validate();
  }

  const Transcript& transcript() const { return transcript_; }
  std::size_t p() const { return config_.servers; }

  using Sizes = std::vector<std::size_t>;

  Sizes padded(const std::string& label, const std::vector<std::vector<std::size_t>>& caps,
               RoundKind kind = RoundKind::data) {
    auto round = blank(label, kind);
    Sizes out(p(), 0);
    for (std::size_t i = 0; i < p(); ++i) {
      for (std::size_t j = 0; j < p(); ++j) {
        set(round, i, j, caps[i][j]);
        out[j] += caps[i][j];
      }
    }
    transcript_.append(std::move(round));
    return out;
  }

  Sizes padded_uniform(const std::string& label, const Sizes& bounds) {
    std::vector<std::vector<std::size_t>> caps(p());
    for (std::size_t i = 0; i < p(); ++i) caps[i].assign(p(), bounds[i]);
    return padded(label, caps);
  }

  Sizes random(const std::string& label, const Sizes& sizes) {
    auto round = blank(label, RoundKind::data);
    Sizes out(p(), 0);
    const std::size_t k = offset_ + transcript_.rounds().size();
    for (std::size_t i = 0; i < p(); ++i) {
      auto g = Cluster::stream(config_.seed, i, k, kRandomShufflePurpose);
      std::vector<std::size_t> counts(p(), 0);
      for (auto t : random_targets(g, sizes[i], p())) ++counts[t - 1];
      for (std::size_t j = 0; j < p(); ++j) {
        set(round, i, j, counts[j]);
        out[j] += counts[j];
      }
    }
    transcript_.append(std::move(round));
    return out;
  }

  void scan(const std::string& label) {
    auto up = blank(label + ":gather", RoundKind::bookkeeping);
    auto down = blank(label + ":scatter", RoundKind::bookkeeping);
    for (std::size_t i = 1; i < p(); ++i) {
      set(up, i, 0, 1);
      set(down, 0, i, 1);
    }
    transcript_.append(std::move(up));
    transcript_.append(std::move(down));
  }

  Sizes sort(const std::string& label, const Sizes& sizes) {
    const std::size_t r = column_rows(sizes, p());
    std::size_t total = 0;
    for (auto n : sizes) total += n;
    auto tr = blank(label + ":transpose", RoundKind::data);
    auto un = blank(label + ":untranspose", RoundKind::data);
    auto sh = blank(label + ":shift", RoundKind::data);
    auto us = blank(label + ":unshift", RoundKind::data);
    for (std::size_t i = 0; i < p(); ++i) {
      for (std::size_t j = 0; j < p(); ++j) {
        set(tr, i, j, r / p());
        set(un, i, j, r / p());
      }
      set(sh, i, (i + 1) % p(), r / 2);
      set(us, i, (i + p() - 1) % p(), r / 2);
    }
    for (auto* round : {&tr, &un, &sh, &us}) transcript_.append(std::move(*round));
    return column_output_sizes(total, p(), r);
  }

  void boundary(const std::string& label, const Sizes& sizes) {
    auto round = blank(label, RoundKind::bookkeeping);
    for (std::size_t i = 0; i < p(); ++i) {
      if (sizes[i] == 0) continue;
      for (std::size_t j = i + 1; j < p(); ++j) {
        if (sizes[j] != 0) {
          set(round, j, i, 1);
          break;
        }
      }
    }
    transcript_.append(std::move(round));
  }

  Sizes shuffle_by_key(const std::string& label, const Sizes& sizes) {
    return padded_uniform(label, pad_shuffle_by_key(sizes, p(), config_.sigma).bounds);
  }

  Sizes pk_join(const std::string& label, const Sizes& left, const Sizes& right) {
    const auto lb = pad_shuffle_by_key(left, p(), config_.sigma).bounds;
    padded_uniform(label + ":left", lb);
    shuffle_by_key(label + ":right", right);
    std::vector<std::vector<std::size_t>> caps(p(), lb);
    padded(label + ":back", caps);
    return left;
  }

  Sizes compute_degrees(const std::string& label, const Sizes& left, const Sizes& right) {
    scan(label + ":left_count");
    scan(label + ":left_max");
    scan(label + ":right_count");
    scan(label + ":right_max");
    boundary(label + ":boundary", right);
    return pk_join(label + ":pk", left, right);
  }

  Sizes expand(const std::string& label, const Sizes& sizes, std::size_t output_size) {
    if (output_size < 1) throw InvalidArgument("expand: M must be >= 1");
    const std::size_t m = slots_per_server(output_size, p());
    std::size_t total = 0;
    for (auto n : sizes) total += n;
    scan(label + ":prefix");
    const auto after = random(label + ":sf0", sizes);
    padded_uniform(label + ":sf1", pad_expansion(after, total, p() * m, p(), config_.sigma).bounds);
    scan(label + ":fill");
    return Sizes(p(), m);
  }

  Sizes jodes_join(const std::string& label, const Sizes& r_sizes, const Sizes& s_sizes,
                   std::size_t output_size, bool inferred) {
    const auto rs = sort(label + ":sort_r", r_sizes);
    const auto ss = sort(label + ":sort_s", s_sizes);
    compute_degrees(label + ":deg_r", rs, ss);
    compute_degrees(label + ":deg_s", ss, rs);
    if (inferred) scan("infer_m");
    if (output_size == 0) return Sizes(p(), 0);
    const auto rb = expand(label + ":expand_r", rs, output_size);
    expand(label + ":expand_s", ss, output_size);
    scan(label + ":rank");
    scan(label + ":group_start");
    const auto after = random(label + ":align_sf0", rb);
    padded_uniform(label + ":align_sf1", pad_align(after, p(), config_.sigma).bounds);
    return rb;
  }

 private:
  TranscriptRound blank(const std::string& label, RoundKind kind) const {
    return TranscriptRound{label, kind, p(), std::vector<std::uint64_t>(p() * p(), 0)};
  }
  // A single server never puts anything on the wire.
  void set(TranscriptRound& r, std::size_t i, std::size_t j, std::size_t v) const {
    if (p() > 1) r.sizes[i * p() + j] = v;
  }

  ClusterConfig config_;
  Transcript transcript_;
  std::size_t offset_;
};

/// Transcript of one operator computed from sizes and public parameters.
/// For jodes_join without a supplied bound, `output_size` is the inferred
/// (revealed) M and `label` must be empty or "join".
inline Transcript simulate_transcript(const OperatorDescriptor& op, const ClusterConfig& config,
                                      bool inferred_output = false) {
  SizeSimulator sim(config);
  const std::size_t p = config.servers;
  auto need = [&](const std::vector<std::size_t>& v, const char* what) {
    if (v.size() != p) throw InvalidArgument(std::string("simulate: ") + what + " must list p sizes");
  };
  auto label = [&](const char* fallback) { return op.label.empty() ? std::string(fallback) : op.label; };
  need(op.sizes, "sizes");
  if (op.name == "shuffle_by_key") {
    sim.shuffle_by_key(label("shuffle_by_key"), op.sizes);
  } else if (op.name == "shuffle_random") {
    sim.random(label("random_shuffle"), op.sizes);
  } else if (op.name == "sort") {
    sim.sort(label("sort"), op.sizes);
  } else if (op.name == "scan") {
    sim.scan(label("scan"));
  } else if (op.name == "pk_join") {
    need(op.other_sizes, "other_sizes");
    sim.pk_join(label("pk_join"), op.sizes, op.other_sizes);
  } else if (op.name == "compute_degrees") {
    need(op.other_sizes, "other_sizes");
    sim.compute_degrees(label("degrees"), op.sizes, op.other_sizes);
  } else if (op.name == "expand") {
    if (!op.output_size) throw InvalidArgument("simulate: expand needs M");
    sim.expand(label("expand"), op.sizes, *op.output_size);
  } else if (op.name == "jodes_join") {
    need(op.other_sizes, "other_sizes");
    if (!op.output_size) throw InvalidArgument("simulate: jodes_join needs M");
    sim.jodes_join(label("join"), op.sizes, op.other_sizes, *op.output_size, inferred_output);
  } else {
    throw UnknownOperator("simulate: no operator named '" + op.name + "'");
  }
  return sim.transcript();
}

}  // namespace jodes
