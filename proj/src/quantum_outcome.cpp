#include "tbqkd/quantum_outcome.hpp"

#include <algorithm>
#include <cmath>

#include "tbqkd/error.hpp"

namespace tbqkd {

std::size_t OutcomeDistribution::index(const PairOutcome& o) {
  const auto a = static_cast<std::size_t>(o.bin_a);
  const auto b = static_cast<std::size_t>(o.bin_b);
  return ((a * 2 + static_cast<std::size_t>(o.port_a)) * 3 + b) * 2 +
         static_cast<std::size_t>(o.port_b);
}

PairOutcome OutcomeDistribution::outcome(std::size_t index) {
  PairOutcome o;
  o.port_b = static_cast<int>(index % 2);
  index /= 2;
  o.bin_b = static_cast<TimeBin>(index % 3);
  index /= 3;
  o.port_a = static_cast<int>(index % 2);
  o.bin_a = static_cast<TimeBin>(index / 2);
  return o;
}

OutcomeDistribution::OutcomeDistribution(const std::array<double, kSize>& p) : p_(p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < kSize; ++i) {
    acc += p_[i];
    cdf_[i] = acc;
  }
  cdf_.back() = 1.0;
}

OutcomeDistribution OutcomeDistribution::from_probabilities(
    const std::array<double, kSize>& p) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw Error(ErrorCategory::kDomain, "outcome probability must be >= 0");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw Error(ErrorCategory::kDomain, "outcome probabilities must sum to 1");
  return OutcomeDistribution(p);
}

double OutcomeDistribution::bin_probability(TimeBin a, TimeBin b) const {
  double s = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) s += probability({a, i, b, j});
  return s;
}

double OutcomeDistribution::conditional_central(int port_a, int port_b) const {
  const double cc = bin_probability(TimeBin::kCentral, TimeBin::kCentral);
  if (cc <= 0.0) return 0.0;
  return probability({TimeBin::kCentral, port_a, TimeBin::kCentral, port_b}) / cc;
}

PairOutcome OutcomeDistribution::sample(Rng& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), x);
  auto i = static_cast<std::size_t>(it - cdf_.begin());
  if (i >= kSize) i = kSize - 1;
  // Rounding slack at the top of the cdf can land on a trailing zero entry.
  while (p_[i] == 0.0 && i > 0) --i;
  return outcome(i);
}

OutcomeDistribution joint_outcome_distribution(double alpha, double beta, double phi,
                                               double visibility) {
  if (!(visibility >= 0.0 && visibility <= 1.0))
    throw Error(ErrorCategory::kDomain, "visibility must lie in [0, 1]");

  std::array<double, OutcomeDistribution::kSize> p{};
  const double interference = visibility * std::cos(alpha + beta - phi);
  for (std::size_t k = 0; k < p.size(); ++k) {
    const PairOutcome o = OutcomeDistribution::outcome(k);
    const bool opposite_extremes =
        (o.bin_a == TimeBin::kEarly && o.bin_b == TimeBin::kLate) ||
        (o.bin_a == TimeBin::kLate && o.bin_b == TimeBin::kEarly);
    if (opposite_extremes) {
      p[k] = 0.0;
    } else if (o.bin_a == TimeBin::kCentral && o.bin_b == TimeBin::kCentral) {
      const double sign = ((o.port_a + o.port_b) % 2 == 0) ? 1.0 : -1.0;
      p[k] = (1.0 + sign * interference) / 16.0;
    } else {
      p[k] = 1.0 / 32.0;
    }
  }
  return OutcomeDistribution::from_probabilities(p);
}

PairOutcome sample_pair_outcome(const OutcomeDistribution& dist, Rng& rng) {
  return dist.sample(rng);
}

}  // namespace tbqkd
