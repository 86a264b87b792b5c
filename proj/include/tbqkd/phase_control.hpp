#pragma once

#include <cstddef>
#include <deque>
#include <optional>

#include "tbqkd/core_model.hpp"

namespace tbqkd {

// Phase shift of an interferometer for a temperature change: coeff * dT.
// coeff must lie in the measured range [0.033 pi, 0.045 pi] rad/mK.
double phase_from_temperature(double delta_t_mk, double coeff = kTempCoeffNominal);

struct PhaseErrorEstimate {
  double radians = 0.0;  // |delta|, sign unknowable
  bool clamped = false;  // q fell outside [(1 - V)/2, (1 + V)/2]
};

// Inverts q = (1 - V cos delta) / 2.
PhaseErrorEstimate infer_phase_error(double q_phase, double visibility);

struct ControlRecord {
  double time = 0.0;  // s
  double qber = 0.0;
  double adjustment_mk = 0.0;
};

struct ControllerState {
  int last_direction = +1;
  std::optional<double> last_qber;
  double step_mk = 0.0;                 // magnitude of the last nonzero step
  std::deque<ControlRecord> history;    // newest at the back
  bool adjusted_last_call = false;
  std::optional<double> qber_at_last_adjustment;

  double visibility = 0.99;             // assumed floor (1 - V)/2 is subtracted
  double deadband = 0.005;              // on the QBER above the floor
  double coeff = kTempCoeffNominal;     // rad/mK used to convert steps
  double resolution_mk = 0.5;
  double cap_mk = 10.0;
  std::size_t history_capacity = 256;
};

struct ControlDecision {
  double adjustment_mk = 0.0;
  ControllerState state;
};

// One hill-descent decision from a phase-basis QBER. `bits` is the number of
// phase-basis bits behind the estimate; 0 means noiseless. With bits > 0 the
// step is skipped while the 2-sigma interval of the QBER reaches into the
// deadband. Direction memory: a step that made things worse is reversed on the
// next call, one that helped is repeated.
ControlDecision control_step(ControllerState state, double new_qber, std::size_t bits = 0,
                             double time = 0.0);

// Slow phase drift of an interferometer: a random walk with bias
// rate [rad/h] and diffusion [rad/sqrt(h)].
class PhaseDrift {
 public:
  PhaseDrift(double rate_rad_per_h, double diffusion_rad_per_sqrt_h, std::uint64_t seed);
  // Phase increment over the next dt seconds.
  double advance(double dt);
  double total() const { return total_; }

 private:
  double rate_;
  double diffusion_;
  double total_ = 0.0;
  Rng rng_;
};

// Accumulated drift after `time` seconds with diffusion equal to the bias
// rate, stepped once per minute.
double drift_process(double time, double drift_rate_rad_per_h, Rng& rng);

}  // namespace tbqkd
