#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <map>
#include <sstream>

#include "tbqkd/error.hpp"
#include "tbqkd/fiber_channel.hpp"
#include "tbqkd/keyproto.hpp"
#include "tbqkd/phase_control.hpp"
#include "tbqkd/photon_source.hpp"
#include "tbqkd/receiver.hpp"
#include "tbqkd/simkit.hpp"

namespace tbqkd {

namespace {

constexpr std::uint64_t kTagClock = 0xC10C;
constexpr std::uint64_t kTagDrift = 0xD21F;
constexpr std::uint64_t kTagCoeff = 0xC0EF;
constexpr std::uint64_t kTagEmission = 1;
constexpr std::uint64_t kTagChannel = 2;
constexpr std::uint64_t kTagControl = 3;

struct PartyRun {
  std::vector<Picoseconds> ts;
  std::vector<std::uint8_t> port;
  std::vector<std::int64_t> pulse;  // -1 for dark counts
  std::vector<TimeBin> bin;

  std::size_t size() const { return ts.size(); }
};

class Party {
 public:
  Party(const Scenario& s, const ParticipantConfig& cfg, int index, double window_ghz)
      : cfg_(cfg),
        index_(index),
        link_(cfg.link, window_ghz, s.schedule.run_length),
        clock_(cfg.clock, derive_seed(s.seed, {kTagClock, static_cast<std::uint64_t>(index)})),
        drift_(s.drift.rate_rad_per_h,
               s.drift.diffusion_rad_per_sqrt_h.value_or(std::abs(s.drift.rate_rad_per_h)),
               derive_seed(s.seed, {kTagDrift, static_cast<std::uint64_t>(index)})) {
    Rng r(derive_seed(s.seed, {kTagCoeff, static_cast<std::uint64_t>(index)}));
    coeff_ = draw_temp_coeff(r);
    unit_detector_ = cfg.detector;
    unit_detector_.efficiency = 1.0;
  }

  const ParticipantConfig& cfg() const { return cfg_; }
  int index() const { return index_; }
  const FiberLink& link() const { return link_; }
  double survival() const { return link_.transmission_probability() * cfg_.detector.efficiency; }
  const DetectorParams& unit_detector() const { return unit_detector_; }
  LocalClock& clock() { return clock_; }

  double phase() const { return cfg_.initial_phase + drift_.total() + coeff_ * delta_t_mk_; }
  double delta_t_mk() const { return delta_t_mk_; }
  void adjust(double mk) { delta_t_mk_ += mk; }
  void advance_drift(double dt) { drift_.advance(dt); }

  SyncState sync;

 private:
  ParticipantConfig cfg_;
  int index_;
  FiberLink link_;
  LocalClock clock_;
  PhaseDrift drift_;
  double coeff_ = kTempCoeffNominal;
  double delta_t_mk_ = 0.0;
  DetectorParams unit_detector_;
};

// Non-extending dead time per detector, carried across chunks of one run.
struct DeadTime {
  std::array<double, 2> last{-INFINITY, -INFINITY};
  bool accept(const Click& c, double dead_time) {
    double& l = last[static_cast<std::size_t>(c.port & 1)];
    if (c.time - l < dead_time) return false;
    l = c.time;
    return true;
  }
};

void append(PartyRun& r, const std::vector<Click>& clicks, LocalClock& clock, DeadTime& dt,
            double dead_time) {
  for (const auto& c : clicks) {
    if (!dt.accept(c, dead_time)) continue;
    r.ts.push_back(clock.timestamp(c.time));
    r.port.push_back(static_cast<std::uint8_t>(c.port));
    r.pulse.push_back(c.origin == ClickOrigin::kSignal ? c.pulse_index : -1);
    r.bin.push_back(c.bin);
  }
}

// Jitter near chunk edges and tagger quantization can swap neighbours.
void make_sorted(PartyRun& r) {
  if (std::is_sorted(r.ts.begin(), r.ts.end())) return;
  std::vector<std::size_t> order(r.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return r.ts[x] < r.ts[y]; });
  PartyRun s;
  s.ts.reserve(r.size());
  s.port.reserve(r.size());
  s.pulse.reserve(r.size());
  s.bin.reserve(r.size());
  for (auto i : order) {
    s.ts.push_back(r.ts[i]);
    s.port.push_back(r.port[i]);
    s.pulse.push_back(r.pulse[i]);
    s.bin.push_back(r.bin[i]);
  }
  r = std::move(s);
}

std::vector<Qubit> classify_party(const PartyRun& run, const GridTrack& track,
                                  std::int64_t shift, double nominal_spacing, double half_width) {
  std::vector<Qubit> out;
  out.reserve(run.size());
  for (std::size_t i = 0; i < run.size(); ++i) {
    const GridPosition p = track.position(run.ts[i]);
    if (std::abs(p.frac) * nominal_spacing > half_width) continue;
    const auto c = decode_grid_index(p.index - shift);
    if (!c) continue;
    out.push_back(make_qubit(c->pulse_index, c->bin, run.port[i]));
  }
  return out;
}

std::vector<double> corrected_stream(const PartyRun& run, const GridTrack& track,
                                      double nominal_spacing, double window) {
  std::vector<double> out;
  if (run.ts.empty()) return out;
  const Picoseconds end = run.ts.front() + static_cast<Picoseconds>(std::llround(window * 1e12));
  for (std::size_t i = 0; i < run.size() && run.ts[i] < end; ++i)
    out.push_back(track.corrected_time(run.ts[i], nominal_spacing));
  std::sort(out.begin(), out.end());
  return out;
}

// Most common (grid index - true grid point) over labelled signal clicks.
std::int64_t true_index_offset(const PartyRun& run, const GridTrack& track) {
  std::map<std::int64_t, std::size_t> hist;
  std::size_t used = 0;
  for (std::size_t i = 0; i < run.size() && used < 20000; ++i) {
    if (run.pulse[i] < 0) continue;
    const GridPosition p = track.position(run.ts[i]);
    if (std::abs(p.frac) > 0.3) continue;
    ++hist[p.index - (3 * run.pulse[i] + 2 * static_cast<int>(run.bin[i]))];
    ++used;
  }
  std::int64_t best = 0;
  std::size_t count = 0;
  for (auto [k, n] : hist)
    if (n > count) {
      best = k;
      count = n;
    }
  return best;
}

class PairSession {
 public:
  PairSession(const Scenario& s, const ChannelPlan& plan, std::size_t pairing,
              const RunOptions& options)
      : s_(s),
        plan_(plan),
        pairing_(plan.pairings.at(pairing)),
        pairing_index_(pairing),
        options_(options),
        a_(make_party(pairing_.a, pairing_.window_a.width_ghz)),
        b_(make_party(pairing_.b, pairing_.window_b.width_ghz)) {
    control_.deadband = s.control.deadband;
    control_.cap_mk = s.control.cap_mk;
    control_.visibility = s.source.visibility;
    const auto& cp = s.control.participants;
    auto listed = [&](const std::string& n) { return std::find(cp.begin(), cp.end(), n) != cp.end(); };
    controlled_ = listed(pairing_.b) && !listed(pairing_.a) ? &b_ : &a_;
  }

  PairTrace run(std::vector<RunReport>& reports);

 private:
  Party make_party(const std::string& name, double window_ghz) {
    for (std::size_t i = 0; i < s_.participants.size(); ++i)
      if (s_.participants[i].name == name)
        return Party(s_, s_.participants[i], static_cast<int>(i), window_ghz);
    throw Error(ErrorCategory::kConfig, "pairing references unknown participant " + name);
  }

  std::uint64_t seed(int run, std::uint64_t tag) const {
    return derive_seed(s_.seed, {static_cast<std::uint64_t>(pairing_index_),
                                 static_cast<std::uint64_t>(run), tag});
  }

  void simulate(int run, PartyRun& ra, PartyRun& rb);
  bool recover(const PartyRun& ra, const PartyRun& rb);
  std::optional<GridAlignment> correlate(const PartyRun& ra, const PartyRun& rb) const;
  void export_run(int run, const PartyRun& ra, const PartyRun& rb) const;

  const Scenario& s_;
  const ChannelPlan& plan_;
  Pairing pairing_;
  std::size_t pairing_index_;
  RunOptions options_;
  Party a_;
  Party b_;
  std::int64_t grid_offset_ = 0;
  ControllerState control_;
  Party* controlled_ = nullptr;
};

void PairSession::simulate(int run, PartyRun& ra, PartyRun& rb) {
  const double period = s_.source.repetition_period;
  const double t_start = run * s_.schedule.period();
  const double t_end = t_start + s_.schedule.run_length;
  const auto first = static_cast<std::int64_t>(std::ceil(t_start / period));
  const auto end = static_cast<std::int64_t>(std::ceil(t_end / period));

  const auto dist = joint_outcome_distribution(a_.phase(), b_.phase(), s_.source.pump_phase,
                                               s_.source.visibility);
  PairEmissionStream stream(s_.source, pairing_.mu, dist, first, end, seed(run, kTagEmission),
                            a_.survival(), b_.survival(), pairing_index_);
  Rng rng(seed(run, kTagChannel));
  std::normal_distribution<double> envelope(0.0, s_.source.pulse_width * kFwhmToSigma);

  struct Side {
    Party* party;
    PartyRun* out;
    std::vector<Photon> pending;  // delayed photons not yet past the chunk edge
    std::vector<Photon> fresh;
    DeadTime dead;
    double edge = 0.0;            // arrival time up to which clicks are final
  };
  ra = PartyRun{};
  rb = PartyRun{};
  std::array<Side, 2> sides{Side{&a_, &ra, {}, {}, {}, t_start + a_.link().base_delay()},
                            Side{&b_, &rb, {}, {}, {}, t_start + b_.link().base_delay()}};
  // Photons move by less than this between emission and arrival, relative
  // to the base delay: dispersion, thermal drift and the pump envelope.
  constexpr double kMargin = 100e-9;
  const auto chunk = static_cast<std::int64_t>(std::ceil(0.25 / period));

  auto flush = [&](Side& sd, double limit, double dark_end) {
    auto delayed = sd.party->link().delay(sd.fresh, rng);
    sd.fresh.clear();
    std::vector<Photon> merged;
    merged.reserve(sd.pending.size() + delayed.size());
    std::merge(sd.pending.begin(), sd.pending.end(), delayed.begin(), delayed.end(),
               std::back_inserter(merged),
               [](const Photon& x, const Photon& y) { return x.time < y.time; });
    const auto cut = std::lower_bound(merged.begin(), merged.end(), limit,
                                      [](const Photon& p, double t) { return p.time < t; });
    std::vector<Photon> now(merged.begin(), cut);
    sd.pending.assign(cut, merged.end());
    const auto clicks = detect(now, sd.party->unit_detector(), sd.edge, dark_end, rng);
    sd.edge = dark_end;
    append(*sd.out, clicks, sd.party->clock(), sd.dead, sd.party->cfg().detector.dead_time);
  };

  std::optional<PairEmissionStream::Emission> e = stream.next();
  for (std::int64_t c0 = first; c0 < end; c0 += chunk) {
    const std::int64_t c1 = std::min(end, c0 + chunk);
    while (e && e->event.pulse_index < c1) {
      const double env = s_.source.pulse_width > 0 ? envelope(rng) : 0.0;
      const auto& ev = e->event;
      if (e->a_survives)
        sides[0].fresh.push_back(
            {ev.emission_time_a + env, ev.outcome.port_a, ev.pulse_index, ev.outcome.bin_a});
      if (e->b_survives)
        sides[1].fresh.push_back(
            {ev.emission_time_b + env, ev.outcome.port_b, ev.pulse_index, ev.outcome.bin_b});
      e = stream.next();
    }
    const bool last = c1 == end;
    for (auto& sd : sides) {
      const double base = sd.party->link().base_delay();
      const double limit = last ? t_end + base
                                : static_cast<double>(c1) * period + base - kMargin;
      flush(sd, last ? INFINITY : limit, limit);
    }
  }
  make_sorted(ra);
  make_sorted(rb);
}

bool PairSession::recover(const PartyRun& ra, const PartyRun& rb) {
  RecoveryOptions oa;
  oa.min_events = s_.sync.min_events;
  RecoveryOptions ob = oa;
  oa.estimate_period = a_.cfg().clock_recovery;
  ob.estimate_period = b_.cfg().clock_recovery;
  a_.sync = recover_clock(ra.ts, s_.source.repetition_period, a_.sync, oa);
  b_.sync = recover_clock(rb.ts, s_.source.repetition_period, b_.sync, ob);
  return a_.sync.locked() && b_.sync.locked();
}

std::optional<GridAlignment> PairSession::correlate(const PartyRun& ra, const PartyRun& rb) const {
  const double sn = s_.source.grid_spacing();
  const auto xa = corrected_stream(ra, a_.sync.track, sn, s_.sync.correlation_window);
  const auto xb = corrected_stream(rb, b_.sync.track, sn, s_.sync.correlation_window);
  if (xa.empty() || xb.empty()) return std::nullopt;
  CorrelationOptions co;
  co.search_range = s_.sync.search_range;
  co.bin_width = s_.sync.bin_width;
  co.false_alarm = s_.sync.false_alarm;
  return align_grids(xa, xb, sn, co);
}

void PairSession::export_run(int run, const PartyRun& ra, const PartyRun& rb) const {
  if (!options_.export_dir) return;
  auto write = [&](const Party& p, const PartyRun& r) {
    std::vector<DetectionRecord> recs(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      recs[i].detector_id = detector_id(p.index(), r.port[i]);
      recs[i].local_timestamp = r.ts[i];
    }
    const auto path = *options_.export_dir /
                      ("timestamps_" + p.cfg().name + "_run" + std::to_string(run) + ".csv");
    write_timestamps_csv(path.string(), recs);
  };
  write(a_, ra);
  write(b_, rb);
}

PairTrace PairSession::run(std::vector<RunReport>& reports) {
  PairTrace trace;
  trace.pair = pairing_.id();
  const double sn = s_.source.grid_spacing();
  const double step = s_.schedule.period();
  auto advance = [&] {
    a_.advance_drift(step);
    b_.advance_drift(step);
  };

  PartyRun ra, rb;
  simulate(0, ra, rb);
  if (!recover(ra, rb))
    throw Error(ErrorCategory::kSyncFailure,
                "pair " + trace.pair + ": clock recovery failed in the calibration run");
  const auto t0 = correlate(ra, rb);
  if (!t0)
    throw Error(ErrorCategory::kSyncFailure,
                "pair " + trace.pair + ": no significant cross-correlation peak");
  grid_offset_ = t0->grid_offset;
  trace.t0_offset = t0->correlation.offset;
  trace.t0_grid_offset = grid_offset_;
  trace.t0_true_grid_offset =
      true_index_offset(rb, b_.sync.track) - true_index_offset(ra, a_.sync.track);
  a_.sync.t0_offset = b_.sync.t0_offset = trace.t0_offset;
  advance();

  Rng control_rng(seed(0, kTagControl));
  bool needs_calibration = false;
  std::size_t last_good_time_bits = 0;
  int good_runs = 0;
  std::size_t acc_phase_bits = 0, acc_phase_err = 0, acc_time_bits = 0, acc_time_err = 0;

  for (int run = 1; run <= s_.schedule.runs; ++run) {
    simulate(run, ra, rb);
    if (s_.export_timestamps && run == 1) export_run(run, ra, rb);

    RunReport rep;
    rep.run_index = run;
    rep.pair = trace.pair;
    rep.delta_t_mk = controlled_->delta_t_mk();
    RunDiagnostics diag;
    diag.run_index = run;
    diag.pair = trace.pair;
    diag.clicks_a = ra.size();
    diag.clicks_b = rb.size();
    diag.mismatch = wrap_phase(a_.phase() + b_.phase() - s_.source.pump_phase);

    const bool locked = recover(ra, rb);
    diag.quality_a = a_.sync.last_run_quality;
    diag.quality_b = b_.sync.last_run_quality;
    diag.period_a = a_.sync.period_estimate;
    diag.period_b = b_.sync.period_estimate;
    diag.residue_shift_a = a_.sync.residue_shift;
    diag.residue_shift_b = b_.sync.residue_shift;

    auto recalibrate = [&] {
      const auto al = correlate(ra, rb);
      if (al) {
        grid_offset_ = al->grid_offset;
        diag.recalibration_offset = al->correlation.offset;
        a_.sync.t0_offset = b_.sync.t0_offset = al->correlation.offset;
        rep.recalibrated = true;
        needs_calibration = false;
      } else {
        needs_calibration = true;
      }
    };

    if (std::find(s_.sync.forced_slip_runs.begin(), s_.sync.forced_slip_runs.end(), run) !=
        s_.sync.forced_slip_runs.end())
      grid_offset_ += 1;

    if (locked) {
      diag.true_grid_offset =
          true_index_offset(rb, b_.sync.track) - true_index_offset(ra, a_.sync.track);
    }

    if (!locked) {
      rep.slipped = true;
      needs_calibration = true;
      a_.sync.last_run_quality = b_.sync.last_run_quality = SyncQuality::kSlipped;
    } else if (needs_calibration) {
      recalibrate();
      rep.slipped = true;
    } else {
      const auto qa = classify_party(ra, a_.sync.track, 0, sn, s_.sync.window_half_width);
      const auto qb =
          classify_party(rb, b_.sync.track, grid_offset_, sn, s_.sync.window_half_width);
      const SiftResult sr = sift(qa, qb);
      rep.qber_time = sr.qber_time;
      rep.qber_phase = sr.qber_phase;
      rep.qber_total = sr.qber_total;
      diag.time_bits = sr.time_count;
      diag.phase_bits = sr.phase_count;
      diag.grid_offset = grid_offset_;

      const bool qber_slip =
          sr.time_count >= 100 && detect_slip(sr.qber_time, s_.sync.slip_threshold);
      const bool collapse = last_good_time_bits >= 200 && 10 * sr.time_count < last_good_time_bits;
      if (qber_slip || collapse) {
        rep.slipped = true;
        a_.sync.last_run_quality = b_.sync.last_run_quality = SyncQuality::kSlipped;
        recalibrate();
      } else {
        rep.sifted_count = sr.sifted_count();
        rep.r_sift_bps = static_cast<double>(rep.sifted_count) / s_.schedule.run_length;
        last_good_time_bits = sr.time_count;
        ++good_runs;

        if (const auto est = estimate_qber(sr, s_.disclosed_fraction, control_rng)) {
          for (auto i : est->disclosed) {
            const bool err = sr.key_bits_a[i] != sr.key_bits_b[i];
            if (sr.bases[i] == Basis::kPhase) {
              ++acc_phase_bits;
              acc_phase_err += err;
            } else {
              ++acc_time_bits;
              acc_time_err += err;
            }
          }
        }
        if (s_.control.enabled && good_runs % s_.control.interval_runs == 0 &&
            acc_phase_bits >= 100) {
          const double q_phase =
              static_cast<double>(acc_phase_err) / static_cast<double>(acc_phase_bits);
          const double q_time =
              acc_time_bits ? static_cast<double>(acc_time_err) / static_cast<double>(acc_time_bits)
                            : 0.0;
          control_.visibility = std::clamp(s_.source.visibility * (1.0 - 2.0 * q_time), 0.5, 1.0);
          auto decision = control_step(std::move(control_), q_phase, acc_phase_bits,
                                       run * step);
          control_ = std::move(decision.state);
          controlled_->adjust(decision.adjustment_mk);
          diag.controller_qber = q_phase;
          diag.adjustment_mk = decision.adjustment_mk;
          acc_phase_bits = acc_phase_err = acc_time_bits = acc_time_err = 0;
        }
      }
    }
    rep.r_sec_bps = secure_rate(rep.r_sift_bps, std::clamp(rep.qber_total, 0.0, 0.5),
                                s_.reconciliation_efficiency);
    reports.push_back(rep);
    trace.runs.push_back(diag);
    advance();
  }
  return trace;
}

}  // namespace

const ParticipantConfig* Scenario::participant(const std::string& n) const {
  for (const auto& p : participants)
    if (p.name == n) return &p;
  return nullptr;
}

ChannelPlan build_plan(const Scenario& s) {
  PumpSettings pump{s.source.shg_power_uw, s.spectrum};
  ChannelPlan plan = s.plan.device == DemuxDevice::kAwg ? awg_plan(s.plan.awg, pump)
                                                        : wss_plan(s.plan.wss, pump);
  if (s.mu)
    for (auto& p : plan.pairings) p.mu = *s.mu;
  return plan;
}

std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> v;
  auto check = [&](const std::string& what, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      v.push_back(what + ": " + e.what());
    }
  };
  check("source", [&] { s.source.validate(); });
  if (s.participants.empty()) v.push_back("participants: at least two are required");
  for (std::size_t i = 0; i < s.participants.size(); ++i) {
    const auto& p = s.participants[i];
    const std::string tag = "participant " + (p.name.empty() ? std::to_string(i) : p.name);
    if (p.name.empty()) v.push_back(tag + ": empty name");
    for (std::size_t j = 0; j < i; ++j)
      if (s.participants[j].name == p.name) v.push_back(tag + ": duplicate name");
    check(tag + " link", [&] { p.link.validate(); });
    check(tag + " detector", [&] { p.detector.validate(); });
    check(tag + " clock", [&] { p.clock.validate(); });
  }
  if (s.schedule.runs < 1) v.push_back("schedule: runs must be >= 1");
  if (!(s.schedule.run_length > 0)) v.push_back("schedule: run_length must be > 0");
  if (!(s.schedule.intermission >= 0)) v.push_back("schedule: intermission must be >= 0");
  if (s.mu && !(*s.mu > 0 && *s.mu <= 0.5)) v.push_back("mu must lie in (0, 0.5]");
  if (s.control.interval_runs < 1) v.push_back("control: interval_runs must be >= 1");
  if (!(s.control.deadband >= 0)) v.push_back("control: deadband must be >= 0");
  if (!(s.control.cap_mk >= 0.5)) v.push_back("control: cap_mk must be >= 0.5");
  if (!(s.sync.search_range > 0 && s.sync.bin_width > 0))
    v.push_back("sync: search_range and bin_width must be > 0");
  if (!(s.sync.correlation_window > 0)) v.push_back("sync: correlation_window must be > 0");
  if (!(s.sync.window_half_width > 0 && s.sync.window_half_width < s.source.grid_spacing() / 2))
    v.push_back("sync: window_half_width must lie in (0, grid spacing / 2)");
  if (!(s.sync.slip_threshold > 0 && s.sync.slip_threshold < 1))
    v.push_back("sync: slip_threshold must lie in (0, 1)");
  for (int r : s.sync.forced_slip_runs)
    if (r < 1 || r > s.schedule.runs) v.push_back("sync: forced slip run outside 1..runs");
  if (!(s.disclosed_fraction >= 0 && s.disclosed_fraction <= 1))
    v.push_back("disclosed_fraction must lie in [0, 1]");
  if (!(s.reconciliation_efficiency >= 1)) v.push_back("reconciliation_efficiency must be >= 1");
  if (s.drift.diffusion_rad_per_sqrt_h && !(*s.drift.diffusion_rad_per_sqrt_h >= 0))
    v.push_back("drift: diffusion must be >= 0");

  if (s.plan.device == DemuxDevice::kAwg && !s.plan.wss.empty())
    v.push_back("plan: AWG plan carries bandwidth demands");
  if (s.plan.device == DemuxDevice::kWss && !s.plan.awg.empty())
    v.push_back("plan: WSS plan carries channel requests");
  auto known = [&](const std::string& n) {
    if (!s.participant(n)) v.push_back("plan: unknown participant " + n);
  };
  for (const auto& r : s.plan.awg) known(r.a), known(r.b);
  for (const auto& d : s.plan.wss) known(d.a), known(d.b);
  check("plan", [&] {
    const auto plan = build_plan(s);
    if (plan.pairings.empty()) throw Error(ErrorCategory::kConfig, "no pairings");
    for (const auto& issue : validate_plan(plan, s.spectrum)) v.push_back("plan: " + issue);
  });
  return v;
}

ScenarioResult run_scenario(const Scenario& s, const RunOptions& options) {
  const auto issues = validate(s);
  if (!issues.empty()) {
    std::ostringstream os;
    os << "scenario '" << s.name << "' is invalid:";
    for (const auto& i : issues) os << "\n  " << i;
    throw Error(ErrorCategory::kConfig, os.str());
  }
  const ChannelPlan plan = build_plan(s);
  const std::size_t n = plan.pairings.size();

  std::vector<std::vector<RunReport>> per_pair(n);
  std::vector<PairTrace> traces(n);
  auto work = [&](std::size_t i) {
    PairSession session(s, plan, i, options);
    traces[i] = session.run(per_pair[i]);
  };
  if (options.parallel && n > 1) {
    std::vector<std::future<void>> jobs;
    for (std::size_t i = 0; i < n; ++i) jobs.push_back(std::async(std::launch::async, work, i));
    for (auto& j : jobs) j.wait();
    for (auto& j : jobs) j.get();
  } else {
    for (std::size_t i = 0; i < n; ++i) work(i);
  }

  ScenarioResult result;
  result.name = s.name;
  result.traces = std::move(traces);
  for (int run = 1; run <= s.schedule.runs; ++run)
    for (const auto& pr : per_pair)
      for (const auto& r : pr)
        if (r.run_index == run) result.reports.push_back(r);
  const int total_runs = s.schedule.runs + 1;
  result.qubit_exchange_time = total_runs * s.schedule.run_length;
  result.wall_schedule_time = total_runs * s.schedule.period();
  return result;
}

std::vector<SweepRow> run_channel_sweep(const Scenario& base, int first, int last,
                                        const RunOptions& options) {
  if (base.participants.size() < 2)
    throw Error(ErrorCategory::kConfig, "channel sweep needs two participants");
  if (first > last) throw Error(ErrorCategory::kConfig, "empty channel range");
  std::vector<Scenario> scenarios;
  for (int c = first; c <= last; ++c) {
    Scenario s = base;
    s.name = base.name + "-C" + std::to_string(c);
    s.participants.resize(2);
    s.plan = PlanConfig{};
    s.plan.device = DemuxDevice::kAwg;
    s.plan.awg = {AwgRequest{s.participants[0].name, s.participants[1].name, c}};
    s.export_timestamps = false;
    scenarios.push_back(std::move(s));
  }

  std::vector<SweepRow> rows(scenarios.size());
  auto work = [&](std::size_t i) {
    const Scenario& s = scenarios[i];
    const auto plan = build_plan(s);
    RunOptions o = options;
    o.parallel = false;
    const auto res = run_scenario(s, o);
    const auto sum = summarize(res.reports);
    SweepRow& row = rows[i];
    row.channel = first + static_cast<int>(i);
    row.partner = symmetric_channel_pair(row.channel);
    row.mu = plan.pairings.front().mu;
    if (!sum.empty()) {
      row.r_sift_mean = sum.front().r_sift_mean;
      row.r_sift_std = sum.front().r_sift_std;
      row.qber_mean = sum.front().qber_mean;
      row.r_sec_mean = sum.front().r_sec_mean;
    }
  };
  for (std::size_t i = 0; i < scenarios.size(); ++i) work(i);
  return rows;
}

}  // namespace tbqkd
