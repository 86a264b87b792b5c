#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tbqkd/core_model.hpp"
#include "tbqkd/quantum_outcome.hpp"

namespace tbqkd {

enum class Basis : std::uint8_t { kTime = 0, kPhase = 1 };

struct Qubit {
  std::int64_t pulse_index = 0;
  Basis basis = Basis::kTime;
  int bit = 0;
  int port = 0;
  TimeBin bin = TimeBin::kEarly;
};

// Early/Late give time-basis bits 0/1; Central gives the detector port as a
// phase-basis bit.
Qubit make_qubit(std::int64_t pulse_index, TimeBin bin, int port);

// Arrival grid: point g sits at phase + g * spacing. With T_rep = 3 * spacing
// and delay = 2 * spacing, pulse n puts Early on 3n, Central on 3n + 2 and
// Late on 3n + 4, so every grid point belongs to exactly one (pulse, bin).
struct GridModel {
  double spacing = 0.0;
  double phase = 0.0;
};

struct Classification {
  std::int64_t pulse_index = 0;
  TimeBin bin = TimeBin::kEarly;

  friend bool operator==(const Classification&, const Classification&) = default;
};

// Decodes an integer grid index; nullopt for points that map to a negative
// pulse (g = 1, or g < 0).
std::optional<Classification> decode_grid_index(std::int64_t g);

// Snaps t to the nearest grid point and decodes it. Points farther than
// window_half_width from the grid are rejected.
std::optional<Classification> classify(double t, const GridModel& grid,
                                       double window_half_width);

struct SiftResult {
  std::vector<std::uint8_t> key_bits_a;
  std::vector<std::uint8_t> key_bits_b;
  std::vector<std::int64_t> matched_indices;  // pulse index of each key bit
  std::vector<Basis> bases;
  std::size_t time_count = 0;
  std::size_t phase_count = 0;
  std::size_t time_errors = 0;
  std::size_t phase_errors = 0;
  double qber_time = 0.0;
  double qber_phase = 0.0;
  double qber_total = 0.0;

  std::size_t sifted_count() const { return key_bits_a.size(); }
};

// Pulses with exactly one qubit on each side and matching bases contribute
// one bit each, in pulse order. Pulses where either side registered more
// than one qubit are dropped.
SiftResult sift(std::span<const Qubit> a, std::span<const Qubit> b);

struct QberEstimate {
  double qber = 0.0;
  std::vector<std::size_t> disclosed;  // positions into the sifted key, sorted
};

// Publicly compares ceil(fraction * n) randomly chosen sifted bits.
// nullopt when nothing can be compared.
std::optional<QberEstimate> estimate_qber(const SiftResult& sift, double disclosed_fraction,
                                          Rng& rng);

double binary_entropy(double q);

// r_sift * (1 - (1 + f) h(q)), clamped at zero.
double secure_rate(double r_sift, double q, double f);

struct RateReport {
  double r_sift = 0.0;
  double q = 0.0;
  double f = 1.5;
  double r_sec = 0.0;
};

RateReport rate_report(double r_sift, double q, double f = 1.5);

}  // namespace tbqkd
