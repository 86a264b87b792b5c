#include "tbqkd/wdm_demux.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "tbqkd/error.hpp"

namespace tbqkd {

namespace {

constexpr double kSymmetryTolThz = 1e-3;  // 1 GHz

[[noreturn]] void fail(const std::string& what) {
  throw Error(ErrorCategory::kAllocation, what);
}

void check_participants(const std::string& a, const std::string& b,
                        std::set<std::string>& seen) {
  if (a.empty() || b.empty()) fail("participant names must be non-empty");
  if (a == b) fail("participant " + a + " cannot be paired with itself");
  for (const auto& p : {a, b})
    if (!seen.insert(p).second) fail("participant " + p + " appears in more than one pairing");
}

bool overlaps(const FrequencyWindow& x, const FrequencyWindow& y) {
  const double eps = 1e-9;
  return x.lo_thz() < y.hi_thz() - eps && y.lo_thz() < x.hi_thz() - eps;
}

}  // namespace

std::map<std::string, std::vector<FrequencyWindow>> ChannelPlan::allocations() const {
  std::map<std::string, std::vector<FrequencyWindow>> out;
  for (const auto& p : pairings) {
    out[p.a].push_back(p.window_a);
    out[p.b].push_back(p.window_b);
  }
  return out;
}

const Pairing* ChannelPlan::find(const std::string& participant) const {
  for (const auto& p : pairings)
    if (p.a == participant || p.b == participant) return &p;
  return nullptr;
}

ChannelPlan awg_plan(std::span<const AwgRequest> requests, const PumpSettings& pump) {
  ChannelPlan plan;
  plan.device = DemuxDevice::kAwg;
  plan.spacing_ghz = 100.0;
  std::set<int> used;
  std::set<std::string> seen;
  for (const auto& r : requests) {
    if (r.channel < kFirstPairedChannel || r.channel > kLastPairedChannel)
      fail("AWG channel C" + std::to_string(r.channel) + " outside C17..C50");
    const int partner = symmetric_channel_pair(r.channel);
    if (used.count(r.channel)) fail("AWG channel C" + std::to_string(r.channel) + " already allocated");
    if (used.count(partner))
      fail("partner channel C" + std::to_string(partner) + " of C" + std::to_string(r.channel) +
           " already allocated");
    check_participants(r.a, r.b, seen);
    used.insert(r.channel);
    used.insert(partner);

    Pairing p;
    p.a = r.a;
    p.b = r.b;
    p.channel_a = r.channel;
    p.channel_b = partner;
    p.window_a = {itu_channel_center_frequency(r.channel), 100.0};
    p.window_b = {itu_channel_center_frequency(partner), 100.0};
    p.mu = mu_from_pump(pump.shg_power_uw, p.window_a, pump.spectrum);
    plan.pairings.push_back(std::move(p));
  }
  return plan;
}

ChannelPlan wss_plan(std::span<const BandwidthDemand> demands, const PumpSettings& pump) {
  ChannelPlan plan;
  plan.device = DemuxDevice::kWss;
  plan.spacing_ghz = kWssGranularityGhz;
  const SpectrumModel& s = pump.spectrum;
  std::set<std::string> seen;
  double offset_ghz = 0.0;
  for (const auto& d : demands) {
    check_participants(d.a, d.b, seen);
    const double units = d.bandwidth_ghz / kWssGranularityGhz;
    if (d.bandwidth_ghz < kWssGranularityGhz || std::abs(units - std::round(units)) > 1e-9) {
      std::ostringstream os;
      os << "demand " << d.a << "-" << d.b << " of " << d.bandwidth_ghz
         << " GHz is not a positive multiple of 12.5 GHz";
      fail(os.str());
    }
    if ((offset_ghz + d.bandwidth_ghz) * 1e-3 > s.filter_half_width_thz + 1e-9) {
      std::ostringstream os;
      os << "passband exhausted: demand " << d.a << "-" << d.b << " needs " << d.bandwidth_ghz
         << " GHz beyond " << offset_ghz << " GHz of " << s.filter_half_width_thz * 1e3
         << " GHz per side";
      fail(os.str());
    }
    const double half = (offset_ghz + d.bandwidth_ghz / 2.0) * 1e-3;
    Pairing p;
    p.a = d.a;
    p.b = d.b;
    p.window_a = {s.center_thz - half, d.bandwidth_ghz};
    p.window_b = {s.center_thz + half, d.bandwidth_ghz};
    p.mu = mu_from_pump(pump.shg_power_uw, p.window_a, s);
    plan.pairings.push_back(std::move(p));
    offset_ghz += d.bandwidth_ghz;
  }
  return plan;
}

ChannelPlan reconfigure(const ChannelPlan& current, std::span<const BandwidthDemand> demands,
                        const PumpSettings& pump) {
  if (current.device != DemuxDevice::kWss)
    fail("only WSS plans can be reconfigured electronically");
  return wss_plan(demands, pump);
}

std::vector<std::string> validate_plan(const ChannelPlan& plan, const SpectrumModel& spectrum) {
  std::vector<std::string> issues;
  std::vector<FrequencyWindow> windows;
  std::set<std::string> seen;
  for (const auto& p : plan.pairings) {
    for (const auto* name : {&p.a, &p.b})
      if (!seen.insert(*name).second) issues.push_back("participant " + *name + " paired twice");
    for (const auto* w : {&p.window_a, &p.window_b}) {
      if (!spectrum.within_passband(*w))
        issues.push_back("pairing " + p.id() + " has a window outside the passband");
      if (w->width_ghz <= 0) issues.push_back("pairing " + p.id() + " has an empty window");
      windows.push_back(*w);
    }
    if (std::abs(p.window_a.center_thz + p.window_b.center_thz - 2.0 * spectrum.center_thz) >
        kSymmetryTolThz)
      issues.push_back("pairing " + p.id() + " windows are not symmetric about the center");
    if (std::abs(p.window_a.width_ghz - p.window_b.width_ghz) > 1e-9)
      issues.push_back("pairing " + p.id() + " windows differ in width");
    if (!(p.mu >= 0.0 && p.mu <= 0.5))
      issues.push_back("pairing " + p.id() + " has mu outside [0, 0.5]");
  }
  for (std::size_t i = 0; i < windows.size(); ++i)
    for (std::size_t j = i + 1; j < windows.size(); ++j)
      if (overlaps(windows[i], windows[j])) {
        std::ostringstream os;
        os << "windows at " << windows[i].center_thz << " THz and " << windows[j].center_thz
           << " THz overlap";
        issues.push_back(os.str());
      }
  return issues;
}

int max_participants(const GridSpec& grid, double passband_half_width_thz, double center_thz) {
  if (grid.spacing_ghz <= 0 || passband_half_width_thz <= 0) return 0;
  const double step = grid.spacing_ghz * 1e-3;
  const double tol = step * 1e-6;
  const auto n = static_cast<long>(
      std::floor((grid.last_center_thz - grid.first_center_thz) / step + 1e-6));
  std::vector<double> usable;
  for (long k = 0; k <= n; ++k) {
    const double f = grid.first_center_thz + static_cast<double>(k) * step;
    if (std::abs(f - center_thz) <= passband_half_width_thz + tol) usable.push_back(f);
  }
  int count = 0;
  for (double f : usable) {
    if (std::abs(f - center_thz) < tol) continue;  // the center has no partner
    const double mirror = 2.0 * center_thz - f;
    for (double g : usable)
      if (std::abs(g - mirror) < tol) {
        ++count;
        break;
      }
  }
  return count;
}

}  // namespace tbqkd
