#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tbqkd/core_model.hpp"
#include "tbqkd/quantum_outcome.hpp"

namespace tbqkd {

// One photon on its way to a receiver. `pulse_index` and `bin` are
// simulation ground truth carried along for diagnostics only.
struct Photon {
  double time = 0.0;  // s, global (source) time
  int port = 0;       // receiver interferometer output
  std::int64_t pulse_index = 0;
  TimeBin bin = TimeBin::kEarly;
};

inline constexpr double kGroupDelayPerKm = 4.9e-6;  // s/km

// Thermal change of the propagation delay: coeff [ps/(km K)] * L * dT.
double thermal_delay_shift(double length_km, double delta_t_k, double coeff_ps_per_km_k = 39.0);

class FiberLink {
 public:
  // `window_width_ghz` is the demux window feeding this link; it sets the
  // dispersion broadening. The thermal ramp is thermal_rate_k_per_run per
  // `run_length` seconds of global time.
  explicit FiberLink(const LinkParams& params, double window_width_ghz = 100.0,
                     double run_length = 90.0);

  const LinkParams& params() const { return params_; }

  double transmission_probability() const;
  double base_delay() const { return params_.length_km * kGroupDelayPerKm; }
  // Accumulated thermal delay at global time t.
  double drift_at(double t) const;
  // Gaussian arrival spread: D * L * (window width in nm) / 2.355.
  double dispersion_sigma() const;

  // Loss, delay and dispersion. Output is time ordered.
  std::vector<Photon> propagate(std::span<const Photon> emitted, Rng& rng) const;
  // Delay and dispersion only, for photons whose survival was already drawn.
  std::vector<Photon> delay(std::span<const Photon> emitted, Rng& rng) const;

 private:
  LinkParams params_;
  double window_width_ghz_;
  double run_length_;
};

double transmission_probability(const FiberLink& link);

}  // namespace tbqkd
