#pragma once

// Deterministic in-process simulation of p servers exchanging messages in
// rounds. Every exchange appends a p x p matrix of message sizes to the
// transcript; zero-size messages are recorded so each communication phase
// has exactly p^2 entries.

#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "jodes/error.hpp"
#include "jodes/oprims.hpp"
#include "jodes/record.hpp"

namespace jodes {

inline constexpr std::size_t kDefaultElementWidth = sizeof(Record);

struct ClusterConfig {
  std::size_t servers = 1;  // p
  unsigned sigma = 40;
  std::size_t element_width = kDefaultElementWidth;  // bytes per serialized record
  std::uint64_t seed = 0;
  std::size_t threads = 1;  // local phases run on up to this many threads

  void validate() const {
    if (servers < 1) throw InvalidArgument("cluster: p must be >= 1");
    if (sigma < 1) throw InvalidArgument("cluster: sigma must be >= 1");
    if (element_width < 1) throw InvalidArgument("cluster: element width must be >= 1");
  }
};

enum class RoundKind {
  data,         // moves table elements
  bookkeeping,  // scan partials, boundary keys, size announcements
};

struct TranscriptRound {
  std::string label;
  RoundKind kind = RoundKind::data;
  std::size_t servers = 0;
  std::vector<std::uint64_t> sizes;  // row-major [sender][receiver]

  std::uint64_t at(std::size_t sender, std::size_t receiver) const { return sizes[sender * servers + receiver]; }
  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto s : sizes) t += s;
    return t;
  }

  friend bool operator==(const TranscriptRound&, const TranscriptRound&) = default;
};

/// One observable entry s_ijk (0-based indices).
struct TranscriptEntry {
  std::size_t round = 0;
  std::size_t sender = 0;
  std::size_t receiver = 0;
  std::uint64_t elements = 0;
  std::uint64_t bytes = 0;
};

struct TranscriptDivergence {
  std::size_t round = 0;
  std::size_t sender = 0;
  std::size_t receiver = 0;
  std::uint64_t left = 0;
  std::uint64_t right = 0;
  std::string detail;
};

class Transcript {
 public:
  Transcript() = default;
  Transcript(std::size_t servers, std::size_t element_width) : servers_(servers), element_width_(element_width) {}

  void append(TranscriptRound round) { rounds_.push_back(std::move(round)); }

  const std::vector<TranscriptRound>& rounds() const { return rounds_; }
  std::size_t servers() const { return servers_; }
  std::size_t element_width() const { return element_width_; }

  /// Entries ordered by (round, sender, receiver).
  std::vector<TranscriptEntry> entries() const {
    std::vector<TranscriptEntry> out;
    for (std::size_t k = 0; k < rounds_.size(); ++k) {
      for (std::size_t i = 0; i < servers_; ++i) {
        for (std::size_t j = 0; j < servers_; ++j) {
          const auto e = rounds_[k].at(i, j);
          out.push_back({k, i, j, e, e * element_width_});
        }
      }
    }
    return out;
  }

  std::uint64_t total_elements() const {
    std::uint64_t t = 0;
    for (const auto& r : rounds_) t += r.total();
    return t;
  }
  std::uint64_t total_elements(RoundKind kind) const {
    std::uint64_t t = 0;
    for (const auto& r : rounds_) {
      if (r.kind == kind) t += r.total();
    }
    return t;
  }
  std::uint64_t total_bytes() const { return total_elements() * element_width_; }

  /// Transcript restricted to rounds [first, end).
  Transcript slice(std::size_t first) const {
    Transcript out(servers_, element_width_);
    for (std::size_t k = first; k < rounds_.size(); ++k) out.append(rounds_[k]);
    return out;
  }

  /// First entry at which two transcripts differ, if any.
  std::optional<TranscriptDivergence> first_divergence(const Transcript& other) const {
    if (servers_ != other.servers_) {
      return TranscriptDivergence{0, 0, 0, servers_, other.servers_, "server count"};
    }
    const std::size_t common = std::min(rounds_.size(), other.rounds_.size());
    for (std::size_t k = 0; k < common; ++k) {
      const auto& a = rounds_[k];
      const auto& b = other.rounds_[k];
      if (a.label != b.label) return TranscriptDivergence{k, 0, 0, 0, 0, "label " + a.label + " vs " + b.label};
      for (std::size_t i = 0; i < servers_; ++i) {
        for (std::size_t j = 0; j < servers_; ++j) {
          if (a.at(i, j) != b.at(i, j)) return TranscriptDivergence{k, i, j, a.at(i, j), b.at(i, j), a.label};
        }
      }
    }
    if (rounds_.size() != other.rounds_.size()) {
      return TranscriptDivergence{common, 0, 0, rounds_.size(), other.rounds_.size(), "round count"};
    }
    return std::nullopt;
  }

  friend bool operator==(const Transcript& a, const Transcript& b) {
    return a.servers_ == b.servers_ && a.rounds_ == b.rounds_;
  }

 private:
  std::size_t servers_ = 0;
  std::size_t element_width_ = kDefaultElementWidth;
  std::vector<TranscriptRound> rounds_;
};

/// A logically single table split over p servers. Partition sizes are public.
struct DistTable {
  std::vector<std::vector<Record>> parts;
  std::vector<std::string> columns;

  DistTable() = default;
  explicit DistTable(std::size_t p, std::vector<std::string> cols = {}) : parts(p), columns(std::move(cols)) {}

  std::size_t servers() const { return parts.size(); }
  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out;
    for (const auto& part : parts) out.push_back(part.size());
    return out;
  }
  std::size_t total() const {
    std::size_t t = 0;
    for (const auto& part : parts) t += part.size();
    return t;
  }

  /// All records in partition order.
  std::vector<Record> flatten() const {
    std::vector<Record> out;
    for (const auto& part : parts) out.insert(out.end(), part.begin(), part.end());
    return out;
  }
  std::vector<Record> real_rows() const {
    std::vector<Record> out;
    for (const auto& part : parts) {
      for (const auto& r : part) {
        if (is_real(r)) out.push_back(r);
      }
    }
    return out;
  }

  /// Contiguous split: the first N mod p servers hold one extra row.
  static DistTable split(const std::vector<Record>& rows, std::size_t p, std::vector<std::string> cols = {}) {
    DistTable t(p, std::move(cols));
    const std::size_t base = rows.size() / p;
    const std::size_t extra = rows.size() % p;
    std::size_t at = 0;
    for (std::size_t i = 0; i < p; ++i) {
      const std::size_t len = base + (i < extra ? 1 : 0);
      t.parts[i].assign(rows.begin() + static_cast<std::ptrdiff_t>(at),
                        rows.begin() + static_cast<std::ptrdiff_t>(at + len));
      at += len;
    }
    return t;
  }
};

namespace cluster_detail {

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : s) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace cluster_detail

class Cluster {
 public:
  explicit Cluster(ClusterConfig config)
      : config_(config), transcript_(config.servers, config.element_width), counters_(config.servers) {
    config_.validate();
  }

  const ClusterConfig& config() const { return config_; }
  std::size_t servers() const { return config_.servers; }
  unsigned sigma() const { return config_.sigma; }

  const Transcript& transcript() const { return transcript_; }
  const std::vector<OpCounters>& counters() const { return counters_; }
  OpCounters& counters(std::size_t server) { return counters_[server]; }

  /// Number of exchanges performed so far.
  std::size_t round_index() const { return transcript_.rounds().size(); }

  /// Random stream private to (server, upcoming round, purpose). Independent
  /// of any data value, so identical runs consume identical randomness.
  std::mt19937_64 rng(std::size_t server, std::string_view purpose) const {
    return stream(config_.seed, server, round_index(), purpose);
  }

  static std::mt19937_64 stream(std::uint64_t seed, std::size_t server, std::size_t round, std::string_view purpose) {
    const std::uint64_t h = cluster_detail::fnv1a(purpose);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(server), static_cast<std::uint32_t>(round),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    return std::mt19937_64(seq);
  }

  /// Barrier exchange: server j's inbox is the concatenation of
  /// outboxes[0][j], ..., outboxes[p-1][j]. With a single server nothing
  /// crosses the network and the self entry is recorded as 0.
  template <class T>
  std::vector<std::vector<T>> exchange(std::vector<std::vector<std::vector<T>>> outboxes, std::string label,
                                       RoundKind kind = RoundKind::data) {
    const std::size_t p = servers();
    if (outboxes.size() != p) throw InvalidArgument("exchange: need one outbox set per server");
    TranscriptRound round{std::move(label), kind, p, std::vector<std::uint64_t>(p * p, 0)};
    std::vector<std::vector<T>> inboxes(p);
    for (std::size_t i = 0; i < p; ++i) {
      if (outboxes[i].size() != p) throw InvalidArgument("exchange: need one message per receiver");
      for (std::size_t j = 0; j < p; ++j) {
        if (p > 1) round.sizes[i * p + j] = outboxes[i][j].size();
      }
    }
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t i = 0; i < p; ++i) {
        auto& msg = outboxes[i][j];
        inboxes[j].insert(inboxes[j].end(), std::make_move_iterator(msg.begin()), std::make_move_iterator(msg.end()));
      }
    }
    transcript_.append(std::move(round));
    return inboxes;
  }

  /// Records a round whose sizes are known without materializing messages.
  void record_round(TranscriptRound round) { transcript_.append(std::move(round)); }

  /// Runs a local phase on every server. Phases of distinct servers touch
  /// disjoint state; results do not depend on the thread count. The first
  /// failure in server order is rethrown.
  void for_each_server(const std::function<void(std::size_t)>& phase) {
    const std::size_t p = servers();
    std::vector<std::exception_ptr> errors(p);
    if (config_.threads <= 1 || p == 1) {
      for (std::size_t i = 0; i < p; ++i) {
        try {
          phase(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    } else {
      const std::size_t workers = std::min(config_.threads, p);
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          for (std::size_t i = w; i < p; i += workers) {
            try {
              phase(i);
            } catch (...) {
              errors[i] = std::current_exception();
            }
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  /// Buffer over a server's records that feeds that server's counters.
  Buffer<Record> buffer(std::size_t server, std::vector<Record> items) {
    return Buffer<Record>(std::move(items), nullptr, &counters_[server]);
  }

 private:
  ClusterConfig config_;
  Transcript transcript_;
  std::vector<OpCounters> counters_;
};

// ---------------------------------------------------------------------------
// Generic round programs

/// One round: every server runs `local` on its records and returns p
/// outgoing messages; the inbox becomes the server's new records.
struct RoundStep {
  std::string label;
  std::function<std::vector<std::vector<Record>>(std::size_t server, std::vector<Record>& local, Cluster& cluster)>
      local;
};

using Program = std::vector<RoundStep>;

struct RunResult {
  DistTable table;
  Transcript transcript;
};

inline RunResult run_rounds(Cluster& cluster, DistTable input, const Program& program) {
  const std::size_t first = cluster.round_index();
  const std::size_t p = cluster.servers();
  for (const auto& step : program) {
    std::vector<std::vector<std::vector<Record>>> out(p);
    cluster.for_each_server([&](std::size_t i) {
      out[i] = step.local(i, input.parts[i], cluster);
      out[i].resize(p);
    });
    input.parts = cluster.exchange(std::move(out), step.label);
  }
  return RunResult{std::move(input), cluster.transcript().slice(first)};
}

}  // namespace jodes
