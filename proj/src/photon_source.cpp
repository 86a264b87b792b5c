#include "tbqkd/photon_source.hpp"

#include <algorithm>
#include <cmath>

#include "tbqkd/error.hpp"

namespace tbqkd {

namespace {

void check_mu(double mu) {
  if (!(mu >= 0.0 && mu <= 0.5))
    throw Error(ErrorCategory::kConfig, "mean pairs per pulse must lie in [0, 0.5]");
}

}  // namespace

double bin_offset(TimeBin bin, const SourceParams& source) {
  return static_cast<double>(static_cast<int>(bin)) * source.interferometer_delay();
}

int sample_pair_count(double mu, Rng& rng) {
  check_mu(mu);
  if (mu == 0.0) return 0;
  std::poisson_distribution<int> d(mu);
  return d(rng);
}

PairEmissionStream::PairEmissionStream(const SourceParams& source, double mu,
                                       const OutcomeDistribution& dist,
                                       std::int64_t first_pulse, std::int64_t end_pulse,
                                       std::uint64_t seed, double survival_a,
                                       double survival_b, std::size_t pairing)
    : source_(source),
      dist_(dist),
      first_pulse_(first_pulse),
      end_pulse_(end_pulse),
      pairing_(pairing),
      rng_(seed) {
  check_mu(mu);
  if (!(survival_a >= 0 && survival_a <= 1 && survival_b >= 0 && survival_b <= 1))
    throw Error(ErrorCategory::kConfig, "survival probabilities must lie in [0, 1]");
  const double any = 1.0 - (1.0 - survival_a) * (1.0 - survival_b);
  rate_ = mu * any;
  if (any > 0.0) {
    both_ = survival_a * survival_b / any;
    a_only_ = survival_a * (1.0 - survival_b) / any;
  }
}

std::optional<PairEmissionStream::Emission> PairEmissionStream::next() {
  if (rate_ <= 0.0) return std::nullopt;
  std::exponential_distribution<double> gap(rate_);
  position_ += gap(rng_);
  const double span = static_cast<double>(end_pulse_ - first_pulse_);
  if (!(position_ < span)) {
    position_ = span;
    return std::nullopt;
  }
  Emission e;
  e.event.pulse_index = first_pulse_ + static_cast<std::int64_t>(std::floor(position_));
  e.event.pairing = pairing_;
  e.event.outcome = dist_.sample(rng_);
  const double t0 = static_cast<double>(e.event.pulse_index) * source_.repetition_period;
  e.event.emission_time_a = t0 + bin_offset(e.event.outcome.bin_a, source_);
  e.event.emission_time_b = t0 + bin_offset(e.event.outcome.bin_b, source_);
  if (both_ < 1.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x = u(rng_);
    e.a_survives = x < both_ + a_only_;
    e.b_survives = x < both_ || x >= both_ + a_only_;
  }
  return e;
}

std::vector<PhotonPairEvent> generate_events(const SourceParams& source, const ChannelPlan& plan,
                                             const std::vector<OutcomeDistribution>& outcome_by_pairing,
                                             double duration, Rng& rng) {
  std::vector<PhotonPairEvent> events;
  if (plan.pairings.empty() || !(duration > 0.0)) return events;
  if (outcome_by_pairing.size() != plan.pairings.size())
    throw Error(ErrorCategory::kConfig, "one outcome distribution per pairing is required");
  const auto end_pulse =
      static_cast<std::int64_t>(std::ceil(duration / source.repetition_period));
  for (std::size_t i = 0; i < plan.pairings.size(); ++i) {
    PairEmissionStream stream(source, plan.pairings[i].mu, outcome_by_pairing[i], 0, end_pulse,
                              rng(), 1.0, 1.0, i);
    while (auto e = stream.next()) events.push_back(e->event);
  }
  std::stable_sort(events.begin(), events.end(), [](const auto& x, const auto& y) {
    return x.pulse_index < y.pulse_index;
  });
  return events;
}

double sample_pulse_envelope(const SourceParams& source, Rng& rng) {
  if (source.pulse_width <= 0.0) return 0.0;
  std::normal_distribution<double> n(0.0, source.pulse_width * kFwhmToSigma);
  return n(rng);
}

}  // namespace tbqkd
