#include "tbqkd/phase_control.hpp"

#include <algorithm>
#include <cmath>

#include "tbqkd/error.hpp"

namespace tbqkd {

double phase_from_temperature(double delta_t_mk, double coeff) {
  if (!(coeff >= kTempCoeffMin * (1 - 1e-12) && coeff <= kTempCoeffMax * (1 + 1e-12)))
    throw Error(ErrorCategory::kDomain, "temperature coefficient outside [0.033 pi, 0.045 pi]");
  return coeff * delta_t_mk;
}

PhaseErrorEstimate infer_phase_error(double q_phase, double visibility) {
  if (!(visibility > 0.0 && visibility <= 1.0))
    throw Error(ErrorCategory::kDomain, "visibility must lie in (0, 1]");
  PhaseErrorEstimate e;
  double c = (1.0 - 2.0 * q_phase) / visibility;
  if (c > 1.0 || c < -1.0) {
    e.clamped = true;
    c = std::clamp(c, -1.0, 1.0);
  }
  e.radians = std::acos(c);
  return e;
}

ControlDecision control_step(ControllerState state, double new_qber, std::size_t bits,
                             double time) {
  const double floor = (1.0 - state.visibility) / 2.0;
  const double excess = new_qber - floor;
  double spread = 0.0;
  if (bits > 0) {
    const double q = std::clamp(new_qber, 1e-3, 0.5);
    spread = 2.0 * std::sqrt(q * (1.0 - q) / static_cast<double>(bits));
  }

  double adjustment = 0.0;
  if (excess - spread >= state.deadband) {
    int direction = state.last_direction;
    if (state.adjusted_last_call && state.qber_at_last_adjustment &&
        new_qber > *state.qber_at_last_adjustment)
      direction = -direction;

    const double delta = infer_phase_error(new_qber, state.visibility).radians;
    double mk = std::round(delta / state.coeff / state.resolution_mk) * state.resolution_mk;
    mk = std::clamp(mk, state.resolution_mk,
                    std::floor(state.cap_mk / state.resolution_mk) * state.resolution_mk);
    adjustment = direction * mk;
    state.last_direction = direction;
    state.step_mk = mk;
    state.qber_at_last_adjustment = new_qber;
  }
  state.adjusted_last_call = adjustment != 0.0;
  state.last_qber = new_qber;
  state.history.push_back({time, new_qber, adjustment});
  while (state.history.size() > state.history_capacity) state.history.pop_front();
  return {adjustment, std::move(state)};
}

PhaseDrift::PhaseDrift(double rate_rad_per_h, double diffusion_rad_per_sqrt_h, std::uint64_t seed)
    : rate_(rate_rad_per_h), diffusion_(diffusion_rad_per_sqrt_h), rng_(seed) {
  if (!(diffusion_ >= 0.0)) throw Error(ErrorCategory::kConfig, "drift diffusion must be >= 0");
}

double PhaseDrift::advance(double dt) {
  if (dt <= 0.0) return 0.0;
  const double hours = dt / 3600.0;
  double d = rate_ * hours;
  if (diffusion_ > 0.0) {
    std::normal_distribution<double> n(0.0, diffusion_ * std::sqrt(hours));
    d += n(rng_);
  }
  total_ += d;
  return d;
}

double drift_process(double time, double drift_rate_rad_per_h, Rng& rng) {
  if (drift_rate_rad_per_h == 0.0 || time <= 0.0) return 0.0;
  PhaseDrift drift(drift_rate_rad_per_h, std::abs(drift_rate_rad_per_h), rng());
  for (double t = 0.0; t < time; t += 60.0) drift.advance(std::min(60.0, time - t));
  return drift.total();
}

}  // namespace tbqkd
