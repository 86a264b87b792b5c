#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tbqkd/clock_sync.hpp"
#include "tbqkd/core_model.hpp"
#include "tbqkd/wdm_demux.hpp"

namespace tbqkd {

struct ParticipantConfig {
  std::string name;
  LinkParams link;
  DetectorParams detector;
  ClockParams clock;
  // Free-running tagger whose period is recovered from the photons. When
  // false the participant shares the source clock and only the grid phase
  // is tracked.
  bool clock_recovery = false;
  double initial_phase = 0.0;  // rad, receiver interferometer
};

struct ScheduleConfig {
  int runs = 10;               // reported runs; one calibration run precedes them
  double run_length = 90.0;    // s
  double intermission = 6.0;   // s
  bool pipelined = false;      // evaluation overlaps recording: no intermission
  double period() const { return run_length + (pipelined ? 0.0 : intermission); }
};

struct DriftConfig {
  double rate_rad_per_h = 0.0;
  std::optional<double> diffusion_rad_per_sqrt_h;  // defaults to |rate|
};

struct ControlConfig {
  bool enabled = true;
  // Interferometers under control, one per pair. A pair with neither member
  // listed controls its `a` side.
  std::vector<std::string> participants;
  int interval_runs = 2;
  double deadband = 0.005;
  double cap_mk = 10.0;
};

struct SyncConfig {
  double search_range = 2.5e-3;
  double bin_width = 500e-12;
  double false_alarm = 1e-6;
  double correlation_window = 10.0;  // s of each run fed to the cross-correlation
  double slip_threshold = kDefaultSlipThreshold;
  double window_half_width = 500e-12;
  std::size_t min_events = 500;
  std::vector<int> forced_slip_runs;  // report runs whose alignment is knocked one grid step off
};

struct PlanConfig {
  DemuxDevice device = DemuxDevice::kAwg;
  std::vector<AwgRequest> awg;
  std::vector<BandwidthDemand> wss;
};

struct Scenario {
  std::string name = "scenario";
  SourceParams source;
  SpectrumModel spectrum;
  std::optional<double> mu;  // overrides the spectrum-derived value for every pairing
  PlanConfig plan;
  std::vector<ParticipantConfig> participants;
  ScheduleConfig schedule;
  DriftConfig drift;
  ControlConfig control;
  SyncConfig sync;
  double disclosed_fraction = 0.1;
  double reconciliation_efficiency = 1.5;
  std::uint64_t seed = 1;
  bool export_timestamps = false;  // first reported run, one CSV per participant

  const ParticipantConfig* participant(const std::string& name) const;
};

// Every violation found; empty means the scenario can run.
std::vector<std::string> validate(const Scenario& scenario);

ChannelPlan build_plan(const Scenario& scenario);

struct RunReport {
  int run_index = 0;
  std::string pair;
  std::size_t sifted_count = 0;
  double r_sift_bps = 0.0;
  double qber_time = 0.0;
  double qber_phase = 0.0;
  double qber_total = 0.0;
  double r_sec_bps = 0.0;
  double delta_t_mk = 0.0;
  bool recalibrated = false;
  bool slipped = false;
};

// Per-run internals that do not belong in the report columns.
struct RunDiagnostics {
  int run_index = 0;
  std::string pair;
  std::size_t clicks_a = 0;
  std::size_t clicks_b = 0;
  std::size_t time_bits = 0;
  std::size_t phase_bits = 0;
  SyncQuality quality_a = SyncQuality::kUnlocked;
  SyncQuality quality_b = SyncQuality::kUnlocked;
  double period_a = 0.0;
  double period_b = 0.0;
  int residue_shift_a = 0;
  int residue_shift_b = 0;
  std::int64_t grid_offset = 0;       // used for classification
  std::int64_t true_grid_offset = 0;  // from simulation labels
  std::optional<double> recalibration_offset;  // s, when the correlation ran
  double mismatch = 0.0;              // alpha + beta - phi during the run
  double controller_qber = -1.0;      // input of the control step after this run, if any
  double adjustment_mk = 0.0;
};

struct PairTrace {
  std::string pair;
  double t0_offset = 0.0;  // s, calibration run
  std::int64_t t0_grid_offset = 0;
  std::int64_t t0_true_grid_offset = 0;
  std::vector<RunDiagnostics> runs;
};

struct ScenarioResult {
  std::string name;
  std::vector<RunReport> reports;  // ordered by run, then pairing
  std::vector<PairTrace> traces;   // one per pairing
  double qubit_exchange_time = 0.0;  // s, runs x run_length
  double wall_schedule_time = 0.0;   // s, including intermissions
};

struct RunOptions {
  bool parallel = true;
  std::optional<std::filesystem::path> export_dir;
};

// Deterministic in the scenario (including its seed) whether or not the
// pairs run concurrently.
ScenarioResult run_scenario(const Scenario& scenario, const RunOptions& options = {});

struct SweepRow {
  int channel = 0;
  int partner = 0;
  double mu = 0.0;
  double r_sift_mean = 0.0;
  double r_sift_std = 0.0;
  double qber_mean = 0.0;
  double r_sec_mean = 0.0;
};

// One symmetric AWG pair per channel, each simulated with the scenario's
// first two participants and schedule.
std::vector<SweepRow> run_channel_sweep(const Scenario& base, int first_channel = 17,
                                        int last_channel = 33, const RunOptions& options = {});

enum class ReportFormat { kCsv, kText };

struct PairSummary {
  std::string pair;
  std::size_t runs = 0;
  double r_sift_mean = 0.0, r_sift_std = 0.0;
  double qber_mean = 0.0, qber_std = 0.0;
  double r_sec_mean = 0.0, r_sec_std = 0.0;
  std::size_t recalibrations = 0;
  std::size_t slips = 0;
};

// Mean and sample standard deviation per pair, pairs in first-seen order.
std::vector<PairSummary> summarize(const std::vector<RunReport>& reports);

inline constexpr const char* kCsvHeader =
    "run_index,pair,sifted_count,r_sift_bps,qber_time,qber_phase,qber_total,r_sec_bps,"
    "delta_T_mK,recalibrated,slipped";

void write_csv(std::ostream& os, const std::vector<RunReport>& reports);
std::vector<RunReport> read_csv(std::istream& is);
void write_summary(std::ostream& os, const std::vector<RunReport>& reports,
                   const std::string& title = {});
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

// Writes reports.csv or summary.txt into `dir`.
std::filesystem::path emit_report(const std::vector<RunReport>& reports, ReportFormat format,
                                  const std::filesystem::path& dir, const std::string& title = {});

// Config I/O (JSON). Missing keys take their defaults; unknown keys are
// validation errors.
Scenario scenario_from_json_text(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);
std::string scenario_to_json_text(const Scenario& scenario);

// Optional sweep section of a config file.
struct SweepConfig {
  int first_channel = 17;
  int last_channel = 33;
};
std::optional<SweepConfig> sweep_from_json_text(const std::string& text);
std::string scenario_to_json_text(const Scenario& scenario, const SweepConfig& sweep);

// Raw results: reports plus diagnostics as JSON, readable by `report`.
std::string result_to_json_text(const ScenarioResult& result);
std::vector<RunReport> reports_from_json_text(const std::string& text);

struct Preset {
  std::string name;
  std::string description;
  std::vector<Scenario> scenarios;
  std::optional<SweepConfig> sweep;
};

const std::vector<Preset>& presets();
const Preset* find_preset(const std::string& name);
// Full-length schedule for a preset scenario.
Scenario full_length(Scenario scenario);

}  // namespace tbqkd
