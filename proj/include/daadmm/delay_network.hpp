#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace daadmm::delay {

class DelayError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct DelayConfig {
  double p_delay = 0.0;
  int d_max = 0;
  std::uint64_t seed = 0;

  /// Throws DelayError unless 0 <= p_delay <= 1 and 0 <= d_max < horizon.
  void validate(int horizon) const;
};

enum class Round { LocalToGlobal, GlobalToLocal };

/// Per directed pair (i, j): age of the message from j as seen by i.
struct DelayState {
  int n = 0;
  std::vector<int> age_lg;
  std::vector<int> age_gl;

  static DelayState fresh(int n_agents);
  int age(Round round, int i, int j) const;
  int max_age() const;
};

/// Portable Bernoulli draw from a 64-bit engine (53-bit uniform in [0,1)).
bool bernoulli(std::mt19937_64& rng, double p);

/// One iteration of the age process. Every off-diagonal pair draws once per
/// round, LG pairs first, then GL, each in row-major (i, j) order.
DelayState sample_delays(const DelayState& state, const DelayConfig& config, std::mt19937_64& rng);

/// Latest-message mailbox for every directed pair and round.
template <typename Payload>
class StaleBuffer {
 public:
  explicit StaleBuffer(int n_agents) : n_(n_agents), slots_(2 * static_cast<std::size_t>(n_agents) * n_agents) {}

  int agents() const { return n_; }

  void send(Round round, int to, int from, Payload payload, int produced_at) {
    auto& slot = slots_[index(round, to, from)];
    if (slot && produced_at < slot->produced_at) {
      throw DelayError("out-of-order send on " + describe(round, to, from));
    }
    slot = Entry{std::move(payload), produced_at};
  }

  struct Fetched {
    const Payload& payload;
    int age;
  };

  Fetched fetch(Round round, int to, int from, int now) const {
    const auto& slot = slots_[index(round, to, from)];
    if (!slot) throw DelayError("fetch from unprimed channel " + describe(round, to, from));
    if (now < slot->produced_at) throw DelayError("fetch before production on " + describe(round, to, from));
    return {slot->payload, now - slot->produced_at};
  }

  bool primed(Round round, int to, int from) const { return slots_[index(round, to, from)].has_value(); }

 private:
  struct Entry {
    Payload payload;
    int produced_at;
  };

  std::size_t index(Round round, int to, int from) const {
    if (to < 0 || to >= n_ || from < 0 || from >= n_) throw DelayError("channel index out of range");
    return (round == Round::LocalToGlobal ? 0 : 1) * static_cast<std::size_t>(n_) * n_ +
           static_cast<std::size_t>(to) * n_ + from;
  }

  static std::string describe(Round round, int to, int from) {
    return std::string(round == Round::LocalToGlobal ? "LG" : "GL") + " " + std::to_string(from) + "->" +
           std::to_string(to);
  }

  int n_;
  std::vector<std::optional<Entry>> slots_;
};

}  // namespace daadmm::delay
