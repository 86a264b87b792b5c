#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tbqkd/error.hpp"
#include "tbqkd/simkit.hpp"

namespace tbqkd {

namespace {

using nlohmann::json;

class Reader {
 public:
  void keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      errors.push_back(path + ": expected an object");
      return;
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!ok.count(it.key())) errors.push_back(path + ": unknown key '" + it.key() + "'");
  }

  template <class T>
  void get(const json& j, const char* key, T& out, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) return;
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception&) {
      errors.push_back(path + "." + key + ": wrong type");
    }
  }

  // Reads a value stored in display units: out = value * scale.
  void scaled(const json& j, const char* key, double& out, double scale, const std::string& path) {
    double v = out / scale;
    get(j, key, v, path);
    out = v * scale;
  }

  std::vector<std::string> errors;
};

const char* device_name(DemuxDevice d) { return d == DemuxDevice::kAwg ? "awg" : "wss"; }

json participant_json(const ParticipantConfig& p) {
  return {
      {"name", p.name},
      {"link",
       {{"length_km", p.link.length_km},
        {"attenuation_db_per_km", p.link.attenuation_db_per_km},
        {"extra_loss_db", p.link.extra_loss_db},
        {"dispersion_ps_per_nm_km", p.link.dispersion_ps_per_nm_km},
        {"thermal_rate_k_per_run", p.link.thermal_rate_k_per_run},
        {"thermal_delay_ps_per_km_k", p.link.thermal_delay_ps_per_km_k}}},
      {"detector",
       {{"efficiency", p.detector.efficiency},
        {"dead_time_us", p.detector.dead_time * 1e6},
        {"jitter_fwhm_ps", p.detector.jitter_fwhm * 1e12},
        {"dark_count_rate", p.detector.dark_count_rate}}},
      {"clock",
       {{"offset_ns", p.clock.offset * 1e9},
        {"frequency_error_ppm", p.clock.frequency_error * 1e6},
        {"random_walk_ps_per_sqrt_s", p.clock.random_walk_sigma * 1e12},
        {"resolution_ps", p.clock.resolution * 1e12}}},
      {"clock_recovery", p.clock_recovery},
      {"initial_phase_rad", p.initial_phase},
  };
}

json scenario_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["source"] = {{"repetition_rate_mhz", 1e-6 / s.source.repetition_period},
                 {"pulse_width_ps", s.source.pulse_width * 1e12},
                 {"pump_phase_rad", s.source.pump_phase},
                 {"visibility", s.source.visibility},
                 {"shg_power_uw", s.source.shg_power_uw}};
  j["spectrum"] = {{"center_thz", s.spectrum.center_thz},
                   {"fwhm_thz", s.spectrum.fwhm_thz},
                   {"filter_half_width_thz", s.spectrum.filter_half_width_thz}};
  if (s.mu) j["mu"] = *s.mu;
  json pairs = json::array();
  if (s.plan.device == DemuxDevice::kAwg)
    for (const auto& r : s.plan.awg) pairs.push_back({{"a", r.a}, {"b", r.b}, {"channel", r.channel}});
  else
    for (const auto& d : s.plan.wss)
      pairs.push_back({{"a", d.a}, {"b", d.b}, {"bandwidth_ghz", d.bandwidth_ghz}});
  j["plan"] = {{"device", device_name(s.plan.device)}, {"pairs", pairs}};
  j["participants"] = json::array();
  for (const auto& p : s.participants) j["participants"].push_back(participant_json(p));
  j["schedule"] = {{"runs", s.schedule.runs},
                   {"run_length_s", s.schedule.run_length},
                   {"intermission_s", s.schedule.intermission},
                   {"pipelined", s.schedule.pipelined}};
  j["drift"] = {{"rate_rad_per_h", s.drift.rate_rad_per_h}};
  if (s.drift.diffusion_rad_per_sqrt_h)
    j["drift"]["diffusion_rad_per_sqrt_h"] = *s.drift.diffusion_rad_per_sqrt_h;
  j["control"] = {{"enabled", s.control.enabled},
                  {"participants", s.control.participants},
                  {"interval_runs", s.control.interval_runs},
                  {"deadband", s.control.deadband},
                  {"cap_mk", s.control.cap_mk}};
  j["sync"] = {{"search_range_ms", s.sync.search_range * 1e3},
               {"bin_width_ps", s.sync.bin_width * 1e12},
               {"false_alarm", s.sync.false_alarm},
               {"correlation_window_s", s.sync.correlation_window},
               {"slip_threshold", s.sync.slip_threshold},
               {"window_half_width_ps", s.sync.window_half_width * 1e12},
               {"min_events", s.sync.min_events},
               {"forced_slip_runs", s.sync.forced_slip_runs}};
  j["disclosed_fraction"] = s.disclosed_fraction;
  j["reconciliation_efficiency"] = s.reconciliation_efficiency;
  j["export_timestamps"] = s.export_timestamps;
  return j;
}

Scenario scenario_from(const json& j, Reader& rd) {
  Scenario s;
  rd.keys(j, "config", {"name", "seed", "source", "spectrum", "mu", "plan", "participants",
                        "schedule", "drift", "control", "sync", "disclosed_fraction",
                        "reconciliation_efficiency", "export_timestamps", "sweep"});
  rd.get(j, "name", s.name, "config");
  rd.get(j, "seed", s.seed, "config");
  if (j.contains("source")) {
    const auto& x = j["source"];
    rd.keys(x, "source", {"repetition_rate_mhz", "pulse_width_ps", "pump_phase_rad", "visibility",
                          "shg_power_uw"});
    double mhz = 1e-6 / s.source.repetition_period;
    rd.get(x, "repetition_rate_mhz", mhz, "source");
    if (mhz > 0) s.source.repetition_period = 1e-6 / mhz;
    else rd.errors.push_back("source.repetition_rate_mhz: must be > 0");
    rd.scaled(x, "pulse_width_ps", s.source.pulse_width, 1e-12, "source");
    rd.get(x, "pump_phase_rad", s.source.pump_phase, "source");
    rd.get(x, "visibility", s.source.visibility, "source");
    rd.get(x, "shg_power_uw", s.source.shg_power_uw, "source");
  }
  if (j.contains("spectrum")) {
    const auto& x = j["spectrum"];
    rd.keys(x, "spectrum", {"center_thz", "fwhm_thz", "filter_half_width_thz"});
    rd.get(x, "center_thz", s.spectrum.center_thz, "spectrum");
    rd.get(x, "fwhm_thz", s.spectrum.fwhm_thz, "spectrum");
    rd.get(x, "filter_half_width_thz", s.spectrum.filter_half_width_thz, "spectrum");
  }
  if (j.contains("mu")) {
    double mu = 0.0;
    rd.get(j, "mu", mu, "config");
    s.mu = mu;
  }
  if (j.contains("plan")) {
    const auto& x = j["plan"];
    rd.keys(x, "plan", {"device", "pairs"});
    std::string dev = "awg";
    rd.get(x, "device", dev, "plan");
    if (dev == "awg") s.plan.device = DemuxDevice::kAwg;
    else if (dev == "wss") s.plan.device = DemuxDevice::kWss;
    else rd.errors.push_back("plan.device: expected 'awg' or 'wss'");
    if (x.contains("pairs") && x["pairs"].is_array()) {
      for (std::size_t i = 0; i < x["pairs"].size(); ++i) {
        const auto& p = x["pairs"][i];
        const std::string path = "plan.pairs[" + std::to_string(i) + "]";
        if (s.plan.device == DemuxDevice::kAwg) {
          rd.keys(p, path, {"a", "b", "channel"});
          AwgRequest r;
          rd.get(p, "a", r.a, path);
          rd.get(p, "b", r.b, path);
          rd.get(p, "channel", r.channel, path);
          s.plan.awg.push_back(r);
        } else {
          rd.keys(p, path, {"a", "b", "bandwidth_ghz"});
          BandwidthDemand d;
          rd.get(p, "a", d.a, path);
          rd.get(p, "b", d.b, path);
          rd.get(p, "bandwidth_ghz", d.bandwidth_ghz, path);
          s.plan.wss.push_back(d);
        }
      }
    }
  }
  if (j.contains("participants") && j["participants"].is_array()) {
    for (std::size_t i = 0; i < j["participants"].size(); ++i) {
      const auto& x = j["participants"][i];
      const std::string path = "participants[" + std::to_string(i) + "]";
      rd.keys(x, path, {"name", "link", "detector", "clock", "clock_recovery", "initial_phase_rad"});
      ParticipantConfig p;
      rd.get(x, "name", p.name, path);
      rd.get(x, "clock_recovery", p.clock_recovery, path);
      rd.get(x, "initial_phase_rad", p.initial_phase, path);
      if (x.contains("link")) {
        const auto& l = x["link"];
        const std::string lp = path + ".link";
        rd.keys(l, lp, {"length_km", "attenuation_db_per_km", "extra_loss_db",
                        "dispersion_ps_per_nm_km", "thermal_rate_k_per_run",
                        "thermal_delay_ps_per_km_k"});
        rd.get(l, "length_km", p.link.length_km, lp);
        rd.get(l, "attenuation_db_per_km", p.link.attenuation_db_per_km, lp);
        rd.get(l, "extra_loss_db", p.link.extra_loss_db, lp);
        rd.get(l, "dispersion_ps_per_nm_km", p.link.dispersion_ps_per_nm_km, lp);
        rd.get(l, "thermal_rate_k_per_run", p.link.thermal_rate_k_per_run, lp);
        rd.get(l, "thermal_delay_ps_per_km_k", p.link.thermal_delay_ps_per_km_k, lp);
      }
      if (x.contains("detector")) {
        const auto& d = x["detector"];
        const std::string dp = path + ".detector";
        rd.keys(d, dp, {"efficiency", "dead_time_us", "jitter_fwhm_ps", "dark_count_rate"});
        rd.get(d, "efficiency", p.detector.efficiency, dp);
        rd.scaled(d, "dead_time_us", p.detector.dead_time, 1e-6, dp);
        rd.scaled(d, "jitter_fwhm_ps", p.detector.jitter_fwhm, 1e-12, dp);
        rd.get(d, "dark_count_rate", p.detector.dark_count_rate, dp);
      }
      if (x.contains("clock")) {
        const auto& c = x["clock"];
        const std::string cp = path + ".clock";
        rd.keys(c, cp, {"offset_ns", "frequency_error_ppm", "random_walk_ps_per_sqrt_s",
                        "resolution_ps"});
        rd.scaled(c, "offset_ns", p.clock.offset, 1e-9, cp);
        rd.scaled(c, "frequency_error_ppm", p.clock.frequency_error, 1e-6, cp);
        rd.scaled(c, "random_walk_ps_per_sqrt_s", p.clock.random_walk_sigma, 1e-12, cp);
        rd.scaled(c, "resolution_ps", p.clock.resolution, 1e-12, cp);
      }
      s.participants.push_back(p);
    }
  }
  if (j.contains("schedule")) {
    const auto& x = j["schedule"];
    rd.keys(x, "schedule", {"runs", "run_length_s", "intermission_s", "pipelined"});
    rd.get(x, "runs", s.schedule.runs, "schedule");
    rd.get(x, "run_length_s", s.schedule.run_length, "schedule");
    rd.get(x, "intermission_s", s.schedule.intermission, "schedule");
    rd.get(x, "pipelined", s.schedule.pipelined, "schedule");
  }
  if (j.contains("drift")) {
    const auto& x = j["drift"];
    rd.keys(x, "drift", {"rate_rad_per_h", "diffusion_rad_per_sqrt_h"});
    rd.get(x, "rate_rad_per_h", s.drift.rate_rad_per_h, "drift");
    if (x.contains("diffusion_rad_per_sqrt_h")) {
      double d = 0.0;
      rd.get(x, "diffusion_rad_per_sqrt_h", d, "drift");
      s.drift.diffusion_rad_per_sqrt_h = d;
    }
  }
  if (j.contains("control")) {
    const auto& x = j["control"];
    rd.keys(x, "control", {"enabled", "participants", "interval_runs", "deadband", "cap_mk"});
    rd.get(x, "participants", s.control.participants, "control");
    rd.get(x, "enabled", s.control.enabled, "control");
    rd.get(x, "interval_runs", s.control.interval_runs, "control");
    rd.get(x, "deadband", s.control.deadband, "control");
    rd.get(x, "cap_mk", s.control.cap_mk, "control");
  }
  if (j.contains("sync")) {
    const auto& x = j["sync"];
    rd.keys(x, "sync", {"search_range_ms", "bin_width_ps", "false_alarm", "correlation_window_s",
                        "slip_threshold", "window_half_width_ps", "min_events",
                        "forced_slip_runs"});
    rd.scaled(x, "search_range_ms", s.sync.search_range, 1e-3, "sync");
    rd.scaled(x, "bin_width_ps", s.sync.bin_width, 1e-12, "sync");
    rd.get(x, "false_alarm", s.sync.false_alarm, "sync");
    rd.get(x, "correlation_window_s", s.sync.correlation_window, "sync");
    rd.get(x, "slip_threshold", s.sync.slip_threshold, "sync");
    rd.scaled(x, "window_half_width_ps", s.sync.window_half_width, 1e-12, "sync");
    rd.get(x, "min_events", s.sync.min_events, "sync");
    rd.get(x, "forced_slip_runs", s.sync.forced_slip_runs, "sync");
  }
  rd.get(j, "disclosed_fraction", s.disclosed_fraction, "config");
  rd.get(j, "reconciliation_efficiency", s.reconciliation_efficiency, "config");
  rd.get(j, "export_timestamps", s.export_timestamps, "config");
  return s;
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCategory::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
}

// Unit conversions leave noise in the last digits (120.00000000000001 ns);
// twelve significant digits keep every configured value exact.
void tidy(json& j) {
  if (j.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", j.get<double>());
    j = std::strtod(buf, nullptr);
  } else if (j.is_structured()) {
    for (auto& x : j) tidy(x);
  }
}

std::string dump(json j) {
  tidy(j);
  return j.dump(2) + "\n";
}

const char* quality_name(SyncQuality q) {
  switch (q) {
    case SyncQuality::kLocked: return "locked";
    case SyncQuality::kSlipped: return "slipped";
    default: return "unlocked";
  }
}

json report_json(const RunReport& r) {
  return {{"run_index", r.run_index},       {"pair", r.pair},
          {"sifted_count", r.sifted_count}, {"r_sift_bps", r.r_sift_bps},
          {"qber_time", r.qber_time},       {"qber_phase", r.qber_phase},
          {"qber_total", r.qber_total},     {"r_sec_bps", r.r_sec_bps},
          {"delta_T_mK", r.delta_t_mk},     {"recalibrated", r.recalibrated},
          {"slipped", r.slipped}};
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text) {
  const json j = parse(text);
  Reader rd;
  Scenario s = scenario_from(j, rd);
  if (j.contains("sweep")) {
    rd.keys(j["sweep"], "sweep", {"first_channel", "last_channel"});
  }
  if (!rd.errors.empty()) {
    std::ostringstream os;
    os << "config has " << rd.errors.size() << " problem(s):";
    for (const auto& e : rd.errors) os << "\n  " << e;
    throw Error(ErrorCategory::kConfig, os.str());
  }
  return s;
}

std::optional<SweepConfig> sweep_from_json_text(const std::string& text) {
  const json j = parse(text);
  if (!j.is_object() || !j.contains("sweep")) return std::nullopt;
  SweepConfig c;
  Reader rd;
  rd.get(j["sweep"], "first_channel", c.first_channel, "sweep");
  rd.get(j["sweep"], "last_channel", c.last_channel, "sweep");
  if (!rd.errors.empty()) throw Error(ErrorCategory::kConfig, rd.errors.front());
  return c;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCategory::kIo, "cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return scenario_from_json_text(ss.str());
}

std::string scenario_to_json_text(const Scenario& s) { return dump(scenario_json(s)); }

std::string scenario_to_json_text(const Scenario& s, const SweepConfig& sweep) {
  json j = scenario_json(s);
  j["sweep"] = {{"first_channel", sweep.first_channel}, {"last_channel", sweep.last_channel}};
  return dump(j);
}

std::string result_to_json_text(const ScenarioResult& r) {
  json j;
  j["name"] = r.name;
  j["qubit_exchange_time_s"] = r.qubit_exchange_time;
  j["schedule_time_s"] = r.wall_schedule_time;
  j["reports"] = json::array();
  for (const auto& x : r.reports) j["reports"].push_back(report_json(x));
  j["pairs"] = json::array();
  for (const auto& t : r.traces) {
    json p = {{"pair", t.pair},
              {"t0_offset_s", t.t0_offset},
              {"t0_grid_offset", t.t0_grid_offset},
              {"t0_true_grid_offset", t.t0_true_grid_offset},
              {"runs", json::array()}};
    for (const auto& d : t.runs) {
      json x = {{"run_index", d.run_index},
                {"clicks_a", d.clicks_a},
                {"clicks_b", d.clicks_b},
                {"time_bits", d.time_bits},
                {"phase_bits", d.phase_bits},
                {"quality_a", quality_name(d.quality_a)},
                {"quality_b", quality_name(d.quality_b)},
                {"period_a_s", d.period_a},
                {"period_b_s", d.period_b},
                {"residue_shift_a", d.residue_shift_a},
                {"residue_shift_b", d.residue_shift_b},
                {"grid_offset", d.grid_offset},
                {"true_grid_offset", d.true_grid_offset},
                {"mismatch_rad", d.mismatch},
                {"adjustment_mK", d.adjustment_mk}};
      if (d.recalibration_offset) x["recalibration_offset_s"] = *d.recalibration_offset;
      if (d.controller_qber >= 0) x["controller_qber"] = d.controller_qber;
      p["runs"].push_back(x);
    }
    j["pairs"].push_back(p);
  }
  return dump(j);
}

std::vector<RunReport> reports_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCategory::kIo, std::string("raw results are not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("reports") || !j["reports"].is_array())
    throw Error(ErrorCategory::kIo, "raw results carry no 'reports' array");
  std::vector<RunReport> out;
  try {
    for (const auto& x : j["reports"]) {
      RunReport r;
      r.run_index = x.at("run_index").get<int>();
      r.pair = x.at("pair").get<std::string>();
      r.sifted_count = x.at("sifted_count").get<std::size_t>();
      r.r_sift_bps = x.at("r_sift_bps").get<double>();
      r.qber_time = x.at("qber_time").get<double>();
      r.qber_phase = x.at("qber_phase").get<double>();
      r.qber_total = x.at("qber_total").get<double>();
      r.r_sec_bps = x.at("r_sec_bps").get<double>();
      r.delta_t_mk = x.at("delta_T_mK").get<double>();
      r.recalibrated = x.at("recalibrated").get<bool>();
      r.slipped = x.at("slipped").get<bool>();
      out.push_back(r);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::kIo, std::string("malformed report entry: ") + e.what());
  }
  return out;
}

}  // namespace tbqkd
