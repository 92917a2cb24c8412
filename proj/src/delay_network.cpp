#include "daadmm/delay_network.hpp"

#include <algorithm>

namespace daadmm::delay {

void DelayConfig::validate(int horizon) const {
  if (!(p_delay >= 0.0 && p_delay <= 1.0)) throw DelayError("p_delay must lie in [0, 1]");
  if (d_max < 0 || d_max >= horizon) throw DelayError("d_max must lie in [0, horizon)");
}

DelayState DelayState::fresh(int n_agents) {
  const auto cells = static_cast<std::size_t>(n_agents) * n_agents;
  return {n_agents, std::vector<int>(cells, 0), std::vector<int>(cells, 0)};
}

int DelayState::age(Round round, int i, int j) const {
  return (round == Round::LocalToGlobal ? age_lg : age_gl)[static_cast<std::size_t>(i) * n + j];
}

int DelayState::max_age() const {
  int m = 0;
  for (int a : age_lg) m = std::max(m, a);
  for (int a : age_gl) m = std::max(m, a);
  return m;
}

bool bernoulli(std::mt19937_64& rng, double p) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return u < p;
}

DelayState sample_delays(const DelayState& state, const DelayConfig& config, std::mt19937_64& rng) {
  DelayState next = state;
  for (auto* ages : {&next.age_lg, &next.age_gl}) {
    for (int i = 0; i < state.n; ++i) {
      for (int j = 0; j < state.n; ++j) {
        if (i == j) continue;
        int& age = (*ages)[static_cast<std::size_t>(i) * state.n + j];
        const bool failed = bernoulli(rng, config.p_delay);
        age = (failed && age + 1 <= config.d_max) ? age + 1 : 0;
      }
    }
  }
  return next;
}

}  // namespace daadmm::delay
