#include "tbqkd/fiber_channel.hpp"

#include <algorithm>
#include <cmath>

#include "tbqkd/error.hpp"

namespace tbqkd {

double thermal_delay_shift(double length_km, double delta_t_k, double coeff_ps_per_km_k) {
  if (length_km < 0) throw Error(ErrorCategory::kDomain, "fiber length must be non-negative");
  return coeff_ps_per_km_k * 1e-12 * length_km * delta_t_k;
}

FiberLink::FiberLink(const LinkParams& params, double window_width_ghz, double run_length)
    : params_(params), window_width_ghz_(window_width_ghz), run_length_(run_length) {
  params_.validate();
  if (window_width_ghz_ < 0) throw Error(ErrorCategory::kConfig, "window width must be >= 0");
  if (!(run_length_ > 0)) throw Error(ErrorCategory::kConfig, "run length must be positive");
}

double FiberLink::transmission_probability() const {
  return std::pow(10.0, -params_.total_loss_db() / 10.0);
}

double transmission_probability(const FiberLink& link) { return link.transmission_probability(); }

double FiberLink::drift_at(double t) const {
  if (params_.thermal_rate_k_per_run == 0.0) return 0.0;
  return thermal_delay_shift(params_.length_km, params_.thermal_rate_k_per_run * t / run_length_,
                             params_.thermal_delay_ps_per_km_k);
}

double FiberLink::dispersion_sigma() const {
  const double width_nm = bandwidth_ghz_to_nm(window_width_ghz_);
  return params_.dispersion_ps_per_nm_km * 1e-12 * params_.length_km * width_nm * kFwhmToSigma;
}

std::vector<Photon> FiberLink::delay(std::span<const Photon> emitted, Rng& rng) const {
  std::vector<Photon> out(emitted.begin(), emitted.end());
  const double base = base_delay();
  const double sigma = dispersion_sigma();
  std::normal_distribution<double> spread(0.0, sigma > 0 ? sigma : 1.0);
  for (auto& p : out) {
    p.time += base + drift_at(p.time);
    if (sigma > 0) p.time += spread(rng);
  }
  if (!std::is_sorted(out.begin(), out.end(),
                      [](const Photon& x, const Photon& y) { return x.time < y.time; }))
    std::stable_sort(out.begin(), out.end(),
                     [](const Photon& x, const Photon& y) { return x.time < y.time; });
  return out;
}

std::vector<Photon> FiberLink::propagate(std::span<const Photon> emitted, Rng& rng) const {
  const double p = transmission_probability();
  std::vector<Photon> kept;
  kept.reserve(static_cast<std::size_t>(static_cast<double>(emitted.size()) * p) + 16);
  std::bernoulli_distribution survive(p);
  for (const auto& ph : emitted)
    if (p >= 1.0 || survive(rng)) kept.push_back(ph);
  return delay(kept, rng);
}

}  // namespace tbqkd
