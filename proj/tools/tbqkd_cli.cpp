#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tbqkd/error.hpp"
#include "tbqkd/simkit.hpp"

namespace fs = std::filesystem;
using namespace tbqkd;

namespace {

constexpr const char* kOutputEnv = "TBQKD_OUTPUT_DIR";

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  return "tbqkd-out";
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kConfig:
    case ErrorCategory::kAllocation:
    case ErrorCategory::kDomain: return 2;
    case ErrorCategory::kSyncFailure: return 3;
    case ErrorCategory::kIo: return 4;
  }
  return 1;
}

void report_error(std::string_view category, const std::string& message) {
  nlohmann::json j = {{"error", category}, {"message", message}};
  std::cerr << j.dump() << '\n';
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw Error(ErrorCategory::kIo, "cannot read " + p.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  if (!os || !(os << text)) throw Error(ErrorCategory::kIo, "cannot write " + p.string());
}

fs::path prepare(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorCategory::kIo, "cannot create output directory " + dir.string());
  return dir;
}

void run_and_write(const Scenario& s, const fs::path& dir, bool parallel) {
  prepare(dir);
  RunOptions o;
  o.parallel = parallel;
  o.export_dir = dir;
  const auto result = run_scenario(s, o);
  emit_report(result.reports, ReportFormat::kCsv, dir);
  emit_report(result.reports, ReportFormat::kText, dir, "scenario " + s.name);
  write_file(dir / "raw.json", result_to_json_text(result));
  write_summary(std::cout, result.reports, "scenario " + s.name);
  std::cout << "qubit exchange " << result.qubit_exchange_time << " s, schedule "
            << result.wall_schedule_time << " s; wrote " << dir.string() << '\n';
}

void sweep_and_write(const Scenario& s, const SweepConfig& c, const fs::path& dir) {
  prepare(dir);
  const auto rows = run_channel_sweep(s, c.first_channel, c.last_channel);
  std::ofstream os(dir / "sweep.csv");
  if (!os) throw Error(ErrorCategory::kIo, "cannot write " + (dir / "sweep.csv").string());
  write_sweep_csv(os, rows);
  write_sweep_csv(std::cout, rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-bin entangled QKD network simulator"};
  app.require_subcommand(1);
  std::string out_flag;
  app.add_option("-o,--output-dir", out_flag,
                 std::string("output directory (overrides $") + kOutputEnv + ")");
  bool serial = false;
  app.add_flag("--serial", serial, "simulate pairs one after another");

  std::string config_path;
  auto* simulate = app.add_subcommand("simulate", "run a scenario config");
  simulate->add_option("config", config_path, "scenario JSON")->required();
  bool full = false;
  simulate->add_flag("--full", full, "full-length schedule for preset-derived configs");

  auto* presets_cmd = app.add_subcommand("presets", "built-in scenarios");
  presets_cmd->require_subcommand(1);
  auto* plist = presets_cmd->add_subcommand("list", "list presets");
  std::string preset_name;
  auto* prun = presets_cmd->add_subcommand("run", "run a preset");
  prun->add_option("name", preset_name)->required();
  bool preset_full = false;
  prun->add_flag("--full", preset_full, "full-length schedule");
  auto* pshow = presets_cmd->add_subcommand("show", "print a preset as config JSON");
  std::string show_name;
  pshow->add_option("name", show_name)->required();

  auto* sweep = app.add_subcommand("sweep", "AWG channel sweep over a base config");
  std::string sweep_path;
  sweep->add_option("config", sweep_path)->required();
  int first = 0, last = 0;
  sweep->add_option("--first", first, "first channel (default from config, else 17)");
  sweep->add_option("--last", last, "last channel (default from config, else 33)");

  auto* report = app.add_subcommand("report", "render raw results");
  std::string raw_path, format = "text";
  report->add_option("raw", raw_path, "raw.json or reports.csv")->required();
  report->add_option("--format", format)->check(CLI::IsMember({"csv", "text"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) {
      Scenario s = load_scenario(config_path);
      if (full) s = full_length(s);
      run_and_write(s, output_dir(out_flag), !serial);
    } else if (*plist) {
      for (const auto& p : presets()) std::cout << p.name << "  " << p.description << '\n';
    } else if (*pshow) {
      const Preset* p = find_preset(show_name);
      if (!p) throw Error(ErrorCategory::kConfig, "unknown preset " + show_name);
      for (const auto& s : p->scenarios)
        std::cout << (p->sweep ? scenario_to_json_text(s, *p->sweep) : scenario_to_json_text(s));
    } else if (*prun) {
      const Preset* p = find_preset(preset_name);
      if (!p) throw Error(ErrorCategory::kConfig, "unknown preset " + preset_name);
      const fs::path base = output_dir(out_flag);
      for (const auto& s0 : p->scenarios) {
        const Scenario s = preset_full ? full_length(s0) : s0;
        if (p->sweep)
          sweep_and_write(s, *p->sweep, base / s.name);
        else
          run_and_write(s, base / s.name, !serial);
      }
    } else if (*sweep) {
      const std::string text = read_file(sweep_path);
      const Scenario s = scenario_from_json_text(text);
      SweepConfig c = sweep_from_json_text(text).value_or(SweepConfig{});
      if (first) c.first_channel = first;
      if (last) c.last_channel = last;
      sweep_and_write(s, c, output_dir(out_flag));
    } else if (*report) {
      const std::string text = read_file(raw_path);
      std::vector<RunReport> reports;
      if (text.rfind(kCsvHeader, 0) == 0) {
        std::istringstream is(text);
        reports = read_csv(is);
      } else {
        reports = reports_from_json_text(text);
      }
      if (reports.empty()) throw Error(ErrorCategory::kIo, "no reports in " + raw_path);
      const auto fmt = format == "csv" ? ReportFormat::kCsv : ReportFormat::kText;
      if (fmt == ReportFormat::kCsv) write_csv(std::cout, reports);
      else write_summary(std::cout, reports);
      if (!out_flag.empty() || std::getenv(kOutputEnv))
        emit_report(reports, fmt, prepare(output_dir(out_flag)));
    }
  } catch (const Error& e) {
    report_error(to_string(e.category()), e.what());
    return exit_code(e.category());
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 1;
  }
  return 0;
}
