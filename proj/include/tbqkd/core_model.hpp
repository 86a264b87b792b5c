#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tbqkd {

using Rng = std::mt19937_64;

// Local time-tagger timestamps are integer picoseconds.
using Picoseconds = std::int64_t;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kFwhmToSigma = 1.0 / 2.3548200450309493;

// Center of the SPDC spectrum, midway between ITU C33 and C34.
inline constexpr double kSpdcCenterThz = 193.35;

// Mixes a master seed with stream tags (SplitMix64 finalizer per tag), so
// every pair / participant / run draws from its own reproducible stream.
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> tags);

struct SourceParams {
  double repetition_period = 1.0 / 219.78e6;  // s
  double pulse_width = 300e-12;               // s, FWHM of the pump pulse
  double pump_phase = 0.0;                    // rad, source interferometer
  double visibility = 0.99;
  double shg_power_uw = 30.0;

  // Delay of all (matched) interferometers. Pinned to the interleaving
  // condition 2 * T_rep = 3 * delay.
  double interferometer_delay() const { return repetition_period * 2.0 / 3.0; }
  // Spacing of the interleaved arrival-time grid (T_rep / 3).
  double grid_spacing() const { return repetition_period / 3.0; }

  void validate() const;
};

struct DetectorParams {
  double efficiency = 0.20;
  double dead_time = 10e-6;      // s
  double jitter_fwhm = 250e-12;  // s
  double dark_count_rate = 1e3;  // counts/s per detector

  void validate() const;
};

struct LinkParams {
  double length_km = 0.0;
  double attenuation_db_per_km = 0.22;
  double extra_loss_db = 0.0;
  double dispersion_ps_per_nm_km = 17.0;
  double thermal_rate_k_per_run = 0.0;  // K per 90 s, whole link
  double thermal_delay_ps_per_km_k = 39.0;

  double total_loss_db() const {
    return length_km * attenuation_db_per_km + extra_loss_db;
  }
  void validate() const;
};

struct ClockParams {
  double offset = 0.0;             // s
  double frequency_error = 0.0;    // fractional (5e-6 == 5 ppm)
  double random_walk_sigma = 0.0;  // s / sqrt(s)
  double resolution = 13e-12;      // s

  void validate() const;
};

// Default random walk for free-running time taggers. Not a measured value:
// chosen so that a 9.7 kcps receiver tracks without slips on typical runs.
inline constexpr double kDefaultClockRandomWalk = 100e-12;

struct PhaseState {
  double alpha = 0.0;  // rad, receiver A
  double beta = 0.0;   // rad, receiver B
  double phi = 0.0;    // rad, source
  double temp_coeff_a = 0.039 * kPi;  // rad/mK
  double temp_coeff_b = 0.039 * kPi;
  double temp_resolution_mk = 0.5;

  // alpha + beta - phi reduced to (-pi, pi].
  double mismatch() const;
  void validate() const;
};

inline constexpr double kTempCoeffMin = 0.033 * kPi;  // rad/mK
inline constexpr double kTempCoeffMax = 0.045 * kPi;
inline constexpr double kTempCoeffNominal = 0.039 * kPi;

// Reduces an angle to (-pi, pi].
double wrap_phase(double radians);

// Draws a receiver temperature coefficient uniformly from the measured range.
double draw_temp_coeff(Rng& rng);

// ITU 100 GHz grid: 190.0 THz + n * 0.1 THz, valid for 8 <= n <= 72.
double itu_channel_center_frequency(int channel);

// Partner of a channel in the 17 symmetric AWG pairs C17..C50.
int symmetric_channel_pair(int channel);

inline constexpr int kFirstPairedChannel = 17;
inline constexpr int kLastPairedChannel = 50;

double frequency_to_wavelength_nm(double thz);
// Converts a spectral width at the given center frequency into nm.
double bandwidth_ghz_to_nm(double width_ghz, double center_thz = kSpdcCenterThz);

}  // namespace tbqkd
