#pragma once

#include <array>
#include <cstdint>

#include "tbqkd/core_model.hpp"

namespace tbqkd {

// Arrival slot after the pump and receiver interferometers:
// Early = short-short, Central = long-short or short-long, Late = long-long.
enum class TimeBin : std::uint8_t { kEarly = 0, kCentral = 1, kLate = 2 };

struct PairOutcome {
  TimeBin bin_a = TimeBin::kEarly;
  int port_a = 0;
  TimeBin bin_b = TimeBin::kEarly;
  int port_b = 0;

  friend bool operator==(const PairOutcome&, const PairOutcome&) = default;
};

// Joint distribution over the 36 (bin_a, port_a, bin_b, port_b) outcomes.
class OutcomeDistribution {
 public:
  static constexpr std::size_t kSize = 36;

  // Throws on negative entries or a sum farther than 1e-12 from one.
  static OutcomeDistribution from_probabilities(const std::array<double, kSize>& p);

  static std::size_t index(const PairOutcome& o);
  static PairOutcome outcome(std::size_t index);

  double probability(const PairOutcome& o) const { return p_[index(o)]; }
  const std::array<double, kSize>& probabilities() const { return p_; }

  double bin_probability(TimeBin a, TimeBin b) const;
  // P(port_a = i, port_b = j | both photons Central).
  double conditional_central(int port_a, int port_b) const;

  PairOutcome sample(Rng& rng) const;

 private:
  explicit OutcomeDistribution(const std::array<double, kSize>& p);

  std::array<double, kSize> p_{};
  std::array<double, kSize> cdf_{};
};

// Outcome distribution of one pair from the state
// (|early,early> + e^{i phi}|late,late>)/sqrt(2) sent through the two receiver
// interferometers. The Central/Central block follows
// 1/16 (1 + (-1)^{i+j} V cos(alpha + beta - phi)); all other reachable bin
// combinations carry 1/32 per port combination.
OutcomeDistribution joint_outcome_distribution(double alpha, double beta, double phi,
                                               double visibility);

PairOutcome sample_pair_outcome(const OutcomeDistribution& dist, Rng& rng);

}  // namespace tbqkd
