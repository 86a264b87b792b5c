#include "tbqkd/receiver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tbqkd/error.hpp"

namespace tbqkd {

namespace {

bool click_before(const Click& x, const Click& y) {
  if (x.time != y.time) return x.time < y.time;
  return x.port < y.port;
}

}  // namespace

std::vector<Click> apply_dead_time(std::span<const Click> clicks, double dead_time) {
  std::vector<Click> out;
  out.reserve(clicks.size());
  double last = -INFINITY;
  for (const auto& c : clicks) {
    if (out.empty() || c.time - last >= dead_time) {
      out.push_back(c);
      last = c.time;
    }
  }
  return out;
}

std::vector<Click> detect(std::span<const Photon> arrivals, const DetectorParams& det,
                          double t_begin, double t_end, Rng& rng) {
  det.validate();
  std::array<std::vector<Click>, 2> per_port;
  std::bernoulli_distribution keep(det.efficiency);
  const double sigma = det.jitter_fwhm * kFwhmToSigma;
  std::normal_distribution<double> jitter(0.0, sigma > 0 ? sigma : 1.0);
  for (const auto& ph : arrivals) {
    if (det.efficiency < 1.0 && !keep(rng)) continue;
    Click c;
    c.time = ph.time + (sigma > 0 ? jitter(rng) : 0.0);
    c.port = ph.port;
    c.origin = ClickOrigin::kSignal;
    c.pulse_index = ph.pulse_index;
    c.bin = ph.bin;
    per_port[static_cast<std::size_t>(ph.port & 1)].push_back(c);
  }
  if (det.dark_count_rate > 0 && t_end > t_begin) {
    std::exponential_distribution<double> gap(det.dark_count_rate);
    for (int port = 0; port < 2; ++port) {
      for (double t = t_begin + gap(rng); t < t_end; t += gap(rng)) {
        Click c;
        c.time = t;
        c.port = port;
        c.origin = ClickOrigin::kDark;
        per_port[static_cast<std::size_t>(port)].push_back(c);
      }
    }
  }
  std::vector<Click> merged;
  for (auto& clicks : per_port) {
    std::stable_sort(clicks.begin(), clicks.end(), click_before);
    auto alive = apply_dead_time(clicks, det.dead_time);
    merged.insert(merged.end(), alive.begin(), alive.end());
  }
  std::stable_sort(merged.begin(), merged.end(), click_before);
  return merged;
}

LocalClock::LocalClock(const ClockParams& params, std::uint64_t seed, double knot_spacing)
    : params_(params), knot_spacing_(knot_spacing), rng_(seed) {
  params_.validate();
  if (!(knot_spacing_ > 0)) throw Error(ErrorCategory::kConfig, "clock knot spacing must be > 0");
  resolution_ps_ = std::max<Picoseconds>(1, std::llround(params_.resolution * 1e12));
  walk_.push_back(0.0);
}

void LocalClock::extend_to(double t) {
  if (params_.random_walk_sigma == 0.0) return;
  const auto needed = static_cast<std::size_t>(std::ceil(t / knot_spacing_)) + 2;
  const double step_sigma = params_.random_walk_sigma * std::sqrt(knot_spacing_);
  // A step below -(1 + eps) * spacing would run the clock backwards.
  const double floor_step = -(1.0 + params_.frequency_error) * knot_spacing_ * 0.5;
  while (walk_.size() < needed) {
    double s = step_sigma * unit_normal_(rng_);
    while (s <= floor_step) s = step_sigma * unit_normal_(rng_);
    walk_.push_back(walk_.back() + s);
  }
}

long double LocalClock::local_time(double t) {
  long double w = 0.0L;
  if (params_.random_walk_sigma != 0.0 && t > 0.0) {
    extend_to(t);
    const double x = t / knot_spacing_;
    const auto k = static_cast<std::size_t>(x);
    const double frac = x - static_cast<double>(k);
    w = walk_[k] + (walk_[k + 1] - walk_[k]) * frac;
  }
  return static_cast<long double>(params_.offset) +
         (1.0L + static_cast<long double>(params_.frequency_error)) * static_cast<long double>(t) +
         w;
}

Picoseconds LocalClock::timestamp(double t) {
  const long double ps = local_time(t) * 1e12L;
  return std::llround(ps / static_cast<long double>(resolution_ps_)) * resolution_ps_;
}

std::vector<DetectionRecord> timestamp(std::span<const Click> clicks, LocalClock& clock,
                                       int participant) {
  std::vector<DetectionRecord> out;
  out.reserve(clicks.size());
  for (const auto& c : clicks) {
    DetectionRecord r;
    r.detector_id = detector_id(participant, c.port);
    r.true_time = c.time;
    r.local_timestamp = clock.timestamp(c.time);
    r.origin = c.origin;
    r.pulse_index = c.pulse_index;
    r.bin = c.bin;
    out.push_back(r);
  }
  return out;
}

void write_timestamps_csv(std::ostream& os, std::span<const DetectionRecord> records) {
  os << "local_timestamp_ps,detector_id\n";
  for (const auto& r : records) os << r.local_timestamp << ',' << r.detector_id << '\n';
}

std::vector<DetectionRecord> read_timestamps_csv(std::istream& is) {
  std::vector<DetectionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.rfind("local_timestamp_ps", 0) == 0) continue;
    std::istringstream ls(line);
    DetectionRecord r;
    char comma = 0;
    if (!(ls >> r.local_timestamp >> comma >> r.detector_id) || comma != ',')
      throw Error(ErrorCategory::kIo, "malformed timestamp line " + std::to_string(lineno));
    r.origin = ClickOrigin::kSignal;
    r.true_time = NAN;
    out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return x.local_timestamp < y.local_timestamp;
  });
  return out;
}

void write_timestamps_csv(const std::string& path, std::span<const DetectionRecord> records) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCategory::kIo, "cannot write " + path);
  write_timestamps_csv(os, records);
}

std::vector<DetectionRecord> read_timestamps_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCategory::kIo, "cannot read " + path);
  return read_timestamps_csv(is);
}

}  // namespace tbqkd
