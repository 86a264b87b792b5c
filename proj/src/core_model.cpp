#include "tbqkd/core_model.hpp"

#include <cmath>
#include <string>

#include "tbqkd/error.hpp"

namespace tbqkd {

std::string_view to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kDomain: return "domain";
    case ErrorCategory::kConfig: return "validation";
    case ErrorCategory::kAllocation: return "allocation";
    case ErrorCategory::kSyncFailure: return "sync-failure";
    case ErrorCategory::kIo: return "io";
  }
  return "unknown";
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCategory::kConfig, what);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(master);
  for (auto t : tags) h = splitmix64(h ^ splitmix64(t + 0x632be59bd9b4e019ULL));
  return h;
}

void SourceParams::validate() const {
  require(repetition_period > 0, "source: repetition period must be positive");
  require(pulse_width >= 0, "source: pulse width must be non-negative");
  require(visibility >= 0 && visibility <= 1, "source: visibility must lie in [0, 1]");
  require(shg_power_uw >= 0, "source: SHG power must be non-negative");
  // Peaks are spaced by the grid; the pump pulse must fit between them.
  require(pulse_width < grid_spacing(),
          "source: pulse width must be below the arrival-grid spacing");
}

void DetectorParams::validate() const {
  require(efficiency >= 0 && efficiency <= 1, "detector: efficiency must lie in [0, 1]");
  require(dead_time >= 0, "detector: dead time must be non-negative");
  require(jitter_fwhm >= 0, "detector: jitter must be non-negative");
  require(dark_count_rate >= 0, "detector: dark count rate must be non-negative");
}

void LinkParams::validate() const {
  require(length_km >= 0, "link: length must be non-negative");
  require(attenuation_db_per_km >= 0, "link: attenuation must be non-negative");
  require(extra_loss_db >= 0, "link: extra loss must be non-negative");
  require(dispersion_ps_per_nm_km >= 0, "link: dispersion must be non-negative");
  require(thermal_delay_ps_per_km_k >= 0, "link: thermal delay coefficient must be non-negative");
}

void ClockParams::validate() const {
  require(resolution > 0, "clock: resolution must be positive");
  require(std::abs(frequency_error) < 1e-3, "clock: |frequency error| must be below 1e-3");
  require(random_walk_sigma >= 0, "clock: random walk sigma must be non-negative");
}

double wrap_phase(double radians) {
  double r = std::remainder(radians, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

double PhaseState::mismatch() const { return wrap_phase(alpha + beta - phi); }

void PhaseState::validate() const {
  const double eps = 1e-12;
  require(temp_coeff_a >= kTempCoeffMin - eps && temp_coeff_a <= kTempCoeffMax + eps,
          "phase: temperature coefficient A outside [0.033pi, 0.045pi] per mK");
  require(temp_coeff_b >= kTempCoeffMin - eps && temp_coeff_b <= kTempCoeffMax + eps,
          "phase: temperature coefficient B outside [0.033pi, 0.045pi] per mK");
  require(temp_resolution_mk > 0, "phase: temperature resolution must be positive");
}

double draw_temp_coeff(Rng& rng) {
  std::uniform_real_distribution<double> u(kTempCoeffMin, kTempCoeffMax);
  return u(rng);
}

double itu_channel_center_frequency(int channel) {
  if (channel < 8 || channel > 72)
    throw Error(ErrorCategory::kDomain,
                "ITU channel " + std::to_string(channel) + " outside C8..C72");
  return 190.0 + 0.1 * channel;
}

int symmetric_channel_pair(int channel) {
  if (channel < kFirstPairedChannel || channel > kLastPairedChannel)
    throw Error(ErrorCategory::kDomain,
                "channel " + std::to_string(channel) + " has no symmetric partner in C17..C50");
  return 67 - channel;
}

double frequency_to_wavelength_nm(double thz) {
  return kSpeedOfLight / (thz * 1e12) * 1e9;
}

double bandwidth_ghz_to_nm(double width_ghz, double center_thz) {
  const double lambda_m = kSpeedOfLight / (center_thz * 1e12);
  return lambda_m * lambda_m * (width_ghz * 1e9) / kSpeedOfLight * 1e9;
}

}  // namespace tbqkd
