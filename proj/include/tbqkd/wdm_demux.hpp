#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "tbqkd/spectrum.hpp"

namespace tbqkd {

enum class DemuxDevice { kAwg, kWss };

// Two participants sharing a symmetric window pair. Participant `a` receives
// the lower-frequency window.
struct Pairing {
  std::string a;
  std::string b;
  FrequencyWindow window_a;
  FrequencyWindow window_b;
  double mu = 0.0;
  int channel_a = 0;  // ITU channel (AWG plans only)
  int channel_b = 0;

  std::string id() const { return a + "-" + b; }
};

struct ChannelPlan {
  DemuxDevice device = DemuxDevice::kAwg;
  double spacing_ghz = 100.0;  // AWG channel spacing or WSS granularity
  std::vector<Pairing> pairings;

  std::map<std::string, std::vector<FrequencyWindow>> allocations() const;
  const Pairing* find(const std::string& participant) const;
};

struct PumpSettings {
  double shg_power_uw = kReferencePumpUw;
  SpectrumModel spectrum;
};

struct AwgRequest {
  std::string a;
  std::string b;
  int channel = 0;  // a receives `channel`, b receives 67 - channel
};

struct BandwidthDemand {
  std::string a;
  std::string b;
  double bandwidth_ghz = 0.0;
};

inline constexpr double kWssGranularityGhz = 12.5;

// Fixed 100 GHz grid: each request occupies the channel pair (c, 67 - c).
ChannelPlan awg_plan(std::span<const AwgRequest> requests, const PumpSettings& pump = {});

// Flexgrid WSS: symmetric window pairs packed outward from the spectrum
// center in demand order.
ChannelPlan wss_plan(std::span<const BandwidthDemand> demands, const PumpSettings& pump = {});

// A WSS plan rebuilt for new demands; the source is untouched.
ChannelPlan reconfigure(const ChannelPlan& current, std::span<const BandwidthDemand> demands,
                        const PumpSettings& pump = {});

// Independent check of every plan invariant. Empty result means valid.
std::vector<std::string> validate_plan(const ChannelPlan& plan,
                                       const SpectrumModel& spectrum = {});

struct GridSpec {
  double spacing_ghz = 100.0;
  double first_center_thz = 191.7;  // C17
  double last_center_thz = 195.0;   // C50
};

// 2 x (number of symmetric channel pairs whose centers fit the passband).
int max_participants(const GridSpec& grid, double passband_half_width_thz,
                     double center_thz = kSpdcCenterThz);

}  // namespace tbqkd
