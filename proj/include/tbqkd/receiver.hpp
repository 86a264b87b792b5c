#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tbqkd/core_model.hpp"
#include "tbqkd/fiber_channel.hpp"

namespace tbqkd {

enum class ClickOrigin : std::uint8_t { kSignal = 0, kDark = 1 };

struct Click {
  double time = 0.0;  // s, global time of the detector click
  int port = 0;
  ClickOrigin origin = ClickOrigin::kSignal;
  std::int64_t pulse_index = -1;  // ground truth, signal clicks only
  TimeBin bin = TimeBin::kEarly;
};

// detector_id = 2 * participant + port.
inline int detector_id(int participant, int port) { return 2 * participant + port; }

struct DetectionRecord {
  int detector_id = 0;
  double true_time = 0.0;
  Picoseconds local_timestamp = 0;
  ClickOrigin origin = ClickOrigin::kSignal;
  std::int64_t pulse_index = -1;
  TimeBin bin = TimeBin::kEarly;

  int port() const { return detector_id % 2; }
};

// Efficiency thinning, Gaussian jitter, Poisson dark counts on both detectors
// over [t_begin, t_end), then non-extending dead time per detector.
// Output is time ordered, ties broken by port.
std::vector<Click> detect(std::span<const Photon> arrivals, const DetectorParams& det,
                          double t_begin, double t_end, Rng& rng);
inline std::vector<Click> detect(std::span<const Photon> arrivals, const DetectorParams& det,
                                 double duration, Rng& rng) {
  return detect(arrivals, det, 0.0, duration, rng);
}

// Non-extending dead time on one detector's time-ordered clicks.
std::vector<Click> apply_dead_time(std::span<const Click> clicks, double dead_time);

// Free-running tagger clock: local = offset + (1 + eps) t + W(t), with W a
// Brownian path sampled on fixed knots and interpolated linearly. The path
// is realized lazily but in knot order, so it depends only on the seed.
class LocalClock {
 public:
  LocalClock(const ClockParams& params, std::uint64_t seed, double knot_spacing = 10e-3);

  const ClockParams& params() const { return params_; }

  // Unquantized local time in seconds.
  long double local_time(double t);
  // Quantized to the tagger resolution.
  Picoseconds timestamp(double t);

 private:
  void extend_to(double t);

  ClockParams params_;
  double knot_spacing_;
  std::vector<double> walk_;  // W at k * knot_spacing
  Picoseconds resolution_ps_;
  Rng rng_;
  std::normal_distribution<double> unit_normal_{0.0, 1.0};
};

std::vector<DetectionRecord> timestamp(std::span<const Click> clicks, LocalClock& clock,
                                       int participant);

// Timestamp exchange format: CSV with header "local_timestamp_ps,detector_id",
// one click per line, integer picoseconds.
void write_timestamps_csv(std::ostream& os, std::span<const DetectionRecord> records);
std::vector<DetectionRecord> read_timestamps_csv(std::istream& is);
void write_timestamps_csv(const std::string& path, std::span<const DetectionRecord> records);
std::vector<DetectionRecord> read_timestamps_csv(const std::string& path);

}  // namespace tbqkd
