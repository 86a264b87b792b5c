#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "tbqkd/error.hpp"
#include "tbqkd/simkit.hpp"

namespace tbqkd {

namespace {

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

struct Moments {
  double mean = 0.0, std = 0.0;
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  if (x.empty()) return m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  if (x.size() > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - m.mean) * (v - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(x.size() - 1));
  }
  return m;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw Error(ErrorCategory::kIo, "bad boolean '" + s + "' in report");
}

}  // namespace

std::vector<PairSummary> summarize(const std::vector<RunReport>& reports) {
  std::vector<PairSummary> out;
  std::vector<std::vector<const RunReport*>> rows;
  for (const auto& r : reports) {
    std::size_t i = 0;
    while (i < out.size() && out[i].pair != r.pair) ++i;
    if (i == out.size()) {
      out.push_back({});
      out.back().pair = r.pair;
      rows.emplace_back();
    }
    rows[i].push_back(&r);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::vector<double> rs, q, sec;
    for (const auto* r : rows[i]) {
      out[i].recalibrations += r->recalibrated;
      out[i].slips += r->slipped;
      if (r->slipped) continue;
      rs.push_back(r->r_sift_bps);
      q.push_back(r->qber_total);
      sec.push_back(r->r_sec_bps);
    }
    out[i].runs = rs.size();
    const auto a = moments(rs), b = moments(q), c = moments(sec);
    out[i].r_sift_mean = a.mean;
    out[i].r_sift_std = a.std;
    out[i].qber_mean = b.mean;
    out[i].qber_std = b.std;
    out[i].r_sec_mean = c.mean;
    out[i].r_sec_std = c.std;
  }
  return out;
}

void write_csv(std::ostream& os, const std::vector<RunReport>& reports) {
  os << kCsvHeader << '\n';
  for (const auto& r : reports) {
    os << r.run_index << ',' << r.pair << ',' << r.sifted_count << ','
       << fmt("%.4f", r.r_sift_bps) << ',' << fmt("%.6f", r.qber_time) << ','
       << fmt("%.6f", r.qber_phase) << ',' << fmt("%.6f", r.qber_total) << ','
       << fmt("%.4f", r.r_sec_bps) << ',' << fmt("%.1f", r.delta_t_mk) << ','
       << (r.recalibrated ? "true" : "false") << ',' << (r.slipped ? "true" : "false") << '\n';
  }
}

std::vector<RunReport> read_csv(std::istream& is) {
  std::vector<RunReport> out;
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader)
    throw Error(ErrorCategory::kIo, "report CSV header mismatch");
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 11)
      throw Error(ErrorCategory::kIo, "report CSV line " + std::to_string(lineno) + ": 11 fields expected");
    try {
      RunReport r;
      r.run_index = std::stoi(f[0]);
      r.pair = f[1];
      r.sifted_count = std::stoull(f[2]);
      r.r_sift_bps = std::stod(f[3]);
      r.qber_time = std::stod(f[4]);
      r.qber_phase = std::stod(f[5]);
      r.qber_total = std::stod(f[6]);
      r.r_sec_bps = std::stod(f[7]);
      r.delta_t_mk = std::stod(f[8]);
      r.recalibrated = parse_bool(f[9]);
      r.slipped = parse_bool(f[10]);
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw Error(ErrorCategory::kIo, "report CSV line " + std::to_string(lineno) + ": bad number");
    }
  }
  return out;
}

void write_summary(std::ostream& os, const std::vector<RunReport>& reports,
                   const std::string& title) {
  if (!title.empty()) os << title << '\n';
  for (const auto& s : summarize(reports)) {
    os << "pair " << s.pair << " (" << s.runs << " good runs)\n"
       << "  sifted rate  " << fmt("%.2f", s.r_sift_mean) << " +- " << fmt("%.2f", s.r_sift_std)
       << " bit/s\n"
       << "  QBER         " << fmt("%.2f", 100 * s.qber_mean) << " +- "
       << fmt("%.2f", 100 * s.qber_std) << " %\n"
       << "  secure rate  " << fmt("%.2f", s.r_sec_mean) << " +- " << fmt("%.2f", s.r_sec_std)
       << " bit/s\n"
       << "  recalibrations " << s.recalibrations << ", slipped runs " << s.slips << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "channel,partner,mu,r_sift_mean_bps,r_sift_std_bps,qber_mean,r_sec_mean_bps\n";
  for (const auto& r : rows)
    os << r.channel << ',' << r.partner << ',' << fmt("%.6f", r.mu) << ','
       << fmt("%.4f", r.r_sift_mean) << ',' << fmt("%.4f", r.r_sift_std) << ','
       << fmt("%.6f", r.qber_mean) << ',' << fmt("%.4f", r.r_sec_mean) << '\n';
}

std::filesystem::path emit_report(const std::vector<RunReport>& reports, ReportFormat format,
                                  const std::filesystem::path& dir, const std::string& title) {
  if (reports.empty()) throw Error(ErrorCategory::kDomain, "no reports to emit");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto path = dir / (format == ReportFormat::kCsv ? "reports.csv" : "summary.txt");
  std::ofstream os(path);
  if (!os) throw Error(ErrorCategory::kIo, "cannot write " + path.string());
  if (format == ReportFormat::kCsv)
    write_csv(os, reports);
  else
    write_summary(os, reports, title);
  if (!os) throw Error(ErrorCategory::kIo, "write failed for " + path.string());
  return path;
}

}  // namespace tbqkd
