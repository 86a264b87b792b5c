#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tbqkd/core_model.hpp"

namespace tbqkd {

// ---------------------------------------------------------------------------
// Cross-correlation of two timestamp streams.

struct CorrelationResult {
  double offset = 0.0;       // s, center of the peak bin (b ~ a + offset)
  std::int64_t peak_bin = 0; // offset / bin_width
  std::uint64_t peak_count = 0;
  double background = 0.0;   // mean count per bin
  double log10_false_alarm = 0.0;  // log10 of (bins x Poisson tail at peak)
  bool significant = false;
};

struct CorrelationOptions {
  double search_range = 2.5e-3;  // s, +- around zero
  double bin_width = 500e-12;    // s
  // Peak accepted when bins * P(X >= peak | background) is below this.
  double false_alarm = 1e-6;
};

// Histogram of b - a over all pairs within the search range, bins centered
// on multiples of bin_width. Both inputs must be sorted ascending (seconds).
// The sweep visits only pairs inside the range.
CorrelationResult crosscorrelate_offset(std::span<const double> stream_a,
                                        std::span<const double> stream_b,
                                        const CorrelationOptions& options = {});

// Exhaustive O(N^2) reference for crosscorrelate_offset's argmax. Refuses
// streams longer than 5000 events; ties resolve to the most negative bin.
double brute_force_offset(std::span<const double> stream_a, std::span<const double> stream_b,
                          double search_range, double bin_width = 500e-12);

inline constexpr std::size_t kBruteForceLimit = 5000;

// ---------------------------------------------------------------------------
// Clock recovery from one party's own arrival times.

// Integer grid index plus the residual in grid units, in [-0.5, 0.5).
struct GridPosition {
  std::int64_t index = 0;
  double frac = 0.0;
};

struct PhaseKnot {
  double t = 0.0;      // s since the track origin (local time)
  double phase = 0.0;  // s, unwrapped offset of the grid
};

// Piecewise-linear phase track of the arrival grid within one run, mapping
// local timestamps to grid coordinates u = index_offset + (t - phase(t)) / spacing.
// Extrapolates linearly past either end.
struct GridTrack {
  Picoseconds origin = 0;
  double spacing = 0.0;  // s, local-time grid spacing of this track
  std::int64_t index_offset = 0;
  std::vector<PhaseKnot> knots;
  double start_slope = 0.0;
  double end_slope = 0.0;

  bool empty() const { return knots.empty(); }
  double phase_at(double t) const;
  GridPosition position(Picoseconds ts) const;
  // Grid coordinate times the nominal spacing: the timestamp expressed in the
  // source's pulse frame, in seconds.
  double corrected_time(Picoseconds ts, double nominal_spacing) const;
};

enum class SyncQuality { kUnlocked, kLocked, kSlipped };

struct SyncState {
  double t0_offset = 0.0;        // s, last accepted cross-correlation offset
  double period_estimate = 0.0;  // s, pulse period in local time
  double phase_estimate = 0.0;   // s in [0, period): Early slot at track end
  double drift_estimate = 0.0;   // period_estimate / nominal - 1
  SyncQuality last_run_quality = SyncQuality::kUnlocked;
  GridTrack track;
  int residue_shift = 0;         // grid steps corrected by bin-pattern check

  bool locked() const { return last_run_quality == SyncQuality::kLocked; }
};

struct RecoveryOptions {
  std::size_t min_events = 500;
  std::size_t block_events = 128;
  std::size_t max_blocks = 20000;
  std::size_t slope_window = 16;  // blocks used for the running slope
  bool estimate_period = true;    // false: period pinned to nominal (shared clock)
};

// Grid indices of the first run start at this base so pulse numbers stay
// positive for any realistic clock offset.
inline constexpr std::int64_t kGridIndexBase = 3LL << 30;

// Estimates the period and phase of the arrival grid (T_rep / 3 spacing) in
// local time by phase folding:
//   1. fold each block of events modulo the current spacing (circular mean),
//   2. unwrap the block phases against a running linear prediction, starting
//      from the prior track's extrapolation when one exists,
//   3. regress phase on time to correct the spacing and repeat once,
//   4. pick the residue class (mod 3) holding the Central peak, which carries
//      twice the weight of Early or Late, and shift the index so Central
//      lands on residue 2.
// Too few events carry the prior forward with quality kUnlocked.
SyncState recover_clock(std::span<const Picoseconds> timestamps, double nominal_period,
                        const SyncState& prior, const RecoveryOptions& options = {});

// True iff the time-basis QBER strictly exceeds the threshold.
bool detect_slip(double time_basis_qber, double threshold = 0.20);

inline constexpr double kDefaultSlipThreshold = 0.20;

// Relative integer grid offset between two parties from their corrected
// streams: b's grid index minus a's for the same pulse.
struct GridAlignment {
  std::int64_t grid_offset = 0;
  CorrelationResult correlation;
};

std::optional<GridAlignment> align_grids(std::span<const double> corrected_a,
                                         std::span<const double> corrected_b,
                                         double nominal_spacing,
                                         const CorrelationOptions& options = {});

}  // namespace tbqkd
