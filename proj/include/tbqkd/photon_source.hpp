#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tbqkd/core_model.hpp"
#include "tbqkd/quantum_outcome.hpp"
#include "tbqkd/spectrum.hpp"
#include "tbqkd/wdm_demux.hpp"

namespace tbqkd {

struct PhotonPairEvent {
  std::int64_t pulse_index = 0;
  std::size_t pairing = 0;  // index into ChannelPlan::pairings
  PairOutcome outcome;
  double emission_time_a = 0.0;  // s, on the grid n*T_rep + {0, D, 2D}
  double emission_time_b = 0.0;
};

// Offset of a time bin relative to its pump pulse: {0, D, 2D}.
double bin_offset(TimeBin bin, const SourceParams& source);

// Poisson number of pairs in one pulse. mu must lie in [0, 0.5].
int sample_pair_count(double mu, Rng& rng);

// Pair emissions of one channel pair over pulses [first_pulse, end_pulse).
// Pulse counts are Poisson(mu), realized through exponential gaps on the
// pulse axis so empty pulses cost nothing.
//
// With survival probabilities p_a, p_b < 1 the stream is pre-thinned: it
// yields only pairs where at least one photon survives and marks which ones
// did. The surviving photons have the same law as running the full stream
// through independent Bernoulli(p_a), Bernoulli(p_b) losses.
class PairEmissionStream {
 public:
  struct Emission {
    PhotonPairEvent event;
    bool a_survives = true;
    bool b_survives = true;
  };

  PairEmissionStream(const SourceParams& source, double mu, const OutcomeDistribution& dist,
                     std::int64_t first_pulse, std::int64_t end_pulse, std::uint64_t seed,
                     double survival_a = 1.0, double survival_b = 1.0,
                     std::size_t pairing = 0);

  std::optional<Emission> next();

  // Rate of yielded pairs per pulse.
  double yield_per_pulse() const { return rate_; }

 private:
  SourceParams source_;
  OutcomeDistribution dist_;
  std::int64_t first_pulse_;
  std::int64_t end_pulse_;
  double position_ = 0.0;  // pulses since first_pulse
  double rate_ = 0.0;
  double both_ = 1.0;      // P(both survive | at least one)
  double a_only_ = 0.0;    // P(only a survives | at least one)
  std::size_t pairing_;
  Rng rng_;
};

// All pair emissions of every channel pair over [0, duration), ordered by
// pulse index (ties by pairing). Each channel pair draws from its own stream
// seeded from `rng`. Suited to short durations; long runs should consume a
// PairEmissionStream directly.
std::vector<PhotonPairEvent> generate_events(const SourceParams& source, const ChannelPlan& plan,
                                             const std::vector<OutcomeDistribution>& outcome_by_pairing,
                                             double duration, Rng& rng);

// Common timing offset of both photons within the pump pulse envelope.
double sample_pulse_envelope(const SourceParams& source, Rng& rng);

}  // namespace tbqkd
