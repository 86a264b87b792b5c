#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tbqkd/error.hpp"
#include "tbqkd/phase_control.hpp"
#include "tbqkd/simkit.hpp"
#include "tbqkd/wdm_demux.hpp"

using namespace tbqkd;
using namespace oracles;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, title.c_str(),
              o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::string csv_of(const std::vector<RunReport>& r) {
  std::ostringstream os;
  write_csv(os, r);
  return os.str();
}

double mean_of(const std::vector<RunReport>& r, const std::string& pair,
               double RunReport::*field) {
  double s = 0;
  int n = 0;
  for (const auto& x : r)
    if (x.pair == pair && !x.slipped) s += x.*field, ++n;
  return n ? s / n : NAN;
}

ParticipantConfig member(const std::string& name) {
  ParticipantConfig p;
  p.name = name;
  p.link.extra_loss_db = 10.0;
  return p;
}

Scenario two_party(std::uint64_t seed) {
  Scenario s;
  s.name = "acceptance";
  s.seed = seed;
  s.mu = 0.01;
  s.source.visibility = 0.98;
  s.participants = {member("A"), member("B")};
  s.plan.awg = {{"A", "B", 33}};
  s.schedule.runs = 5;
  s.schedule.run_length = 5.0;
  s.schedule.intermission = 1.0;
  s.sync.correlation_window = 5.0;
  s.control.enabled = false;
  return s;
}

// Phase-basis QBER of a noiseless plant at mismatch `delta`.
double q_phase(double delta, double v) {
  const auto d = joint_outcome_distribution(delta, 0.0, 0.0, v);
  return d.conditional_central(0, 1) + d.conditional_central(1, 0);
}

struct Loop {
  ControllerState state;
  double delta;
  double v = 0.99;
  double step() {
    auto d = control_step(state, q_phase(delta, v));
    state = d.state;
    delta += d.adjustment_mk * kTempCoeffNominal;
    return d.adjustment_mk;
  }
};

}  // namespace

int main() {
  criterion(1, "secure key rate formula", [] {
    const double r1 = secure_rate(70, 0.0241, 1.5);
    const double r2 = secure_rate(49, 0.0236, 1.5);
    return Outcome{r1 >= 39 && r1 <= 45 && r2 >= 26 && r2 <= 32,
                   fmt("r(70, 2.41%%) = %.2f in [39, 45], r(49, 2.36%%) = %.2f in [26, 32]", r1,
                       r2)};
  });

  criterion(2, "sampled coincidence statistics", [] {
    const std::size_t n = 1000000;
    bool ok = true;
    std::string detail;
    for (double mismatch : {0.0, kPi}) {
      const auto dist = joint_outcome_distribution(mismatch, 0.0, 0.0, 1.0);
      Rng rng(mismatch == 0.0 ? 21 : 22);
      std::size_t central = 0, differ = 0;
      std::array<std::size_t, 3> ma{}, mb{};
      for (std::size_t i = 0; i < n; ++i) {
        const auto o = dist.sample(rng);
        ++ma[static_cast<int>(o.bin_a)];
        ++mb[static_cast<int>(o.bin_b)];
        if (o.bin_a == TimeBin::kCentral && o.bin_b == TimeBin::kCentral) {
          ++central;
          differ += o.port_a != o.port_b;
        }
      }
      const double frac = static_cast<double>(differ) / static_cast<double>(central);
      if (mismatch == 0.0) {
        ok = ok && frac < 0.002;
        detail += fmt("QBER at 0: %.4f%%", 100 * frac);
      } else {
        ok = ok && frac > 0.998;
        detail += fmt(", anticorrelation at pi: %.4f%%", 100 * frac);
      }
      const double p[3] = {0.25, 0.5, 0.25};
      double worst = 0;
      for (int k = 0; k < 3; ++k) {
        const double sd = std::sqrt(n * p[k] * (1 - p[k]));
        worst = std::max({worst, std::abs(ma[k] - n * p[k]) / sd, std::abs(mb[k] - n * p[k]) / sd});
      }
      ok = ok && worst < 3.0;
      detail += fmt(", marginals within %.2f sigma", worst);
    }
    return Outcome{ok, detail};
  });

  criterion(3, "oracle equivalence", [] {
    Rng rng(31);
    std::uniform_real_distribution<double> ang(-2 * kPi, 2 * kPi), vis(0.0, 1.0);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
      const double a = ang(rng), b = ang(rng), f = ang(rng), v = vis(rng);
      const auto got = joint_outcome_distribution(a, b, f, v).probabilities();
      const auto want = oracle(a, b, f, v);
      for (std::size_t k = 0; k < 36; ++k) worst = std::max(worst, std::abs(got[k] - want[k]));
    }

    int xc_match = 0;
    std::uniform_int_distribution<int> size(1, 2000);
    std::uniform_real_distribution<double> offset(-2e-3, 2e-3), frac(0.0, 1.0), rate(1e3, 5e5);
    for (int inst = 0; inst < 200; ++inst) {
      const std::size_t na = size(rng);
      std::vector<double> a;
      std::exponential_distribution<double> g(rate(rng));
      double t = 0;
      for (std::size_t i = 0; i < na; ++i) a.push_back(t += g(rng));
      std::vector<double> b;
      const double off = offset(rng);
      std::normal_distribution<double> jit(0, 200e-12);
      std::bernoulli_distribution keep(frac(rng));
      for (double x : a)
        if (keep(rng)) b.push_back(x + off + jit(rng));
      const auto nb = static_cast<std::size_t>(size(rng) / 4) + 1;
      std::uniform_real_distribution<double> bg(0.0, t + 2e-3);
      for (std::size_t i = 0; i < nb && b.size() < 2000; ++i) b.push_back(bg(rng));
      std::sort(b.begin(), b.end());
      CorrelationOptions o;
      xc_match += crosscorrelate_offset(a, b, o).offset ==
                  brute_force_offset(a, b, o.search_range, o.bin_width);
    }

    int sift_match = 0;
    std::uniform_real_distribution<double> dens(0.05, 0.6);
    for (int inst = 0; inst < 100; ++inst) {
      const auto a = random_side(rng, 10000, dens(rng));
      const auto b = random_side(rng, 10000, dens(rng));
      const auto fast = sift(a, b);
      const auto slow = brute_sift(a, b);
      sift_match += fast.key_bits_a == slow.key_bits_a && fast.key_bits_b == slow.key_bits_b &&
                    fast.matched_indices == slow.matched_indices && fast.bases == slow.bases &&
                    fast.time_errors == slow.time_errors && fast.phase_errors == slow.phase_errors;
    }
    return Outcome{worst < 1e-10 && xc_match == 200 && sift_match == 100,
                   fmt("max table deviation %.2e, correlation %g/200, sift %g/100", worst,
                       xc_match, sift_match)};
  });

  const Scenario fig4 = find_preset("fig4")->scenarios[0];
  const auto fig4_result = run_scenario(fig4);

  criterion(4, "low-mu back-to-back regime", [&] {
    double q = 0;
    for (const auto& r : fig4_result.reports) q += r.qber_total;
    q /= static_cast<double>(fig4_result.reports.size());
    return Outcome{q <= 0.01, fmt("mean total QBER %.3f%% over %g reports", 100 * q,
                                  static_cast<double>(fig4_result.reports.size()))};
  });

  const Scenario fig5 = find_preset("fig5")->scenarios[0];
  const auto fig5_result = run_scenario(fig5);

  criterion(5, "metro-distance regime", [&] {
    const auto& r = fig5_result.reports;
    const double qad = mean_of(r, "A-D", &RunReport::qber_total);
    const double qcb = mean_of(r, "C-B", &RunReport::qber_total);
    const double sad = mean_of(r, "A-D", &RunReport::r_sec_bps);
    const double scb = mean_of(r, "C-B", &RunReport::r_sec_bps);
    const bool q_ok = qad >= 0.015 && qad <= 0.04 && qcb >= 0.015 && qcb <= 0.04;
    const bool s_ok = sad >= 21 && sad <= 84 && scb >= 14.5 && scb <= 58;
    return Outcome{q_ok && s_ok, fmt("QBER %.2f%% / %.2f%%, secure %.1f / %.1f bit/s", 100 * qad,
                                     100 * qcb, sad, scb)};
  });

  criterion(6, "clock recovery", [] {
    std::string detail;

    // Frequency error and offset against the shared-clock baseline.
    const Scenario shared = two_party(61);
    Scenario drifting = shared;
    auto& b = drifting.participants[1];
    b.clock_recovery = true;
    b.clock.offset = 100e-9;
    b.clock.frequency_error = 2e-6;
    const auto base = run_scenario(shared);
    const auto test = run_scenario(drifting);
    const double q0 = mean_of(base.reports, "A-B", &RunReport::qber_total);
    const double q1 = mean_of(test.reports, "A-B", &RunReport::qber_total);
    std::size_t min_clicks = SIZE_MAX;
    for (const auto& d : test.traces[0].runs)
      min_clicks = std::min({min_clicks, d.clicks_a, d.clicks_b});
    bool slips = false;
    for (const auto& r : test.reports) slips = slips || r.slipped;
    const double ppm =
        (test.traces[0].runs.back().period_b / shared.source.repetition_period - 1.0) * 1e6;
    const bool a_ok =
        std::abs(ppm - 2.0) < 0.1 && std::abs(q1 - q0) < 0.005 && min_clicks >= 10000 && !slips;
    detail += fmt("2 ppm: recovered %.3f ppm, dQBER %.3f pp at >= %g events/run", ppm,
                  100 * (q1 - q0), static_cast<double>(min_clicks));

    // 100 runs of a 9.7 kcps receiver with the default clock random walk.
    ClockParams cp;
    cp.offset = -80e-9;
    cp.frequency_error = -2e-6;
    cp.random_walk_sigma = kDefaultClockRandomWalk;
    LocalClock clock(cp, 62);
    Rng rng(63);
    const double period = SourceParams{}.repetition_period;
    SyncState st;
    std::int64_t reference = 0;
    int recalibrations = 0;
    for (int run = 0; run <= 100; ++run) {
      const double t0 = run * 96.0;
      const auto s = synth(9.2e3, 500.0, t0, t0 + 90.0, clock, rng);
      st = recover_clock(s.ts, period, st);
      const auto [off, share] = label_offset(s, st.track);
      if (run == 0) {
        reference = off;
        continue;
      }
      if (!st.locked() || off != reference || share < 0.8) {
        ++recalibrations;
        reference = off;
      }
    }
    const bool b_ok = recalibrations < 5;
    detail += fmt(", 9.7 kcps: %g/100 runs recalibrated", recalibrations);

    // Forced one-step slip.
    Scenario forced = two_party(64);
    forced.schedule.runs = 4;
    forced.sync.forced_slip_runs = {2};
    const auto fr = run_scenario(forced);
    const auto& rep = fr.reports[1];
    const auto& diag = fr.traces[0].runs[1];
    const auto& after = fr.traces[0].runs[2];
    const double sn = forced.source.grid_spacing();
    const double err = diag.recalibration_offset
                           ? std::abs(*diag.recalibration_offset -
                                      static_cast<double>(diag.true_grid_offset) * sn)
                           : INFINITY;
    const bool c_ok = rep.slipped && rep.recalibrated && err <= forced.sync.bin_width &&
                      !fr.reports[2].slipped && after.grid_offset == after.true_grid_offset;
    detail += fmt(", forced slip: detected %g, offset error %.0f ps", rep.slipped, err * 1e12);
    return Outcome{a_ok && b_ok && c_ok, detail};
  });

  criterion(7, "channel-plan invariants", [] {
    std::vector<AwgRequest> req;
    for (int c = 17; c <= 33; ++c)
      req.push_back({"P" + std::to_string(c), "Q" + std::to_string(c), c});
    const auto plan = awg_plan(req);
    bool symmetric = true;
    for (const auto& p : plan.pairings) symmetric = symmetric && p.channel_a + p.channel_b == 67;
    const bool awg_ok = plan.pairings.size() == 17 && plan.allocations().size() == 34 &&
                        symmetric && validate_plan(plan).empty();
    const int cap = max_participants(
        GridSpec{50.0, itu_channel_center_frequency(8), itu_channel_center_frequency(59)}, 2.55);
    const std::vector<BandwidthDemand> field{{"A", "B", 50.0}, {"C", "D", 25.0}};
    const bool wss_ok = validate_plan(wss_plan(field)).empty();
    bool rejects = false;
    try {
      const std::vector<BandwidthDemand> huge{{"A", "B", 2600.0}};
      wss_plan(huge);
    } catch (const Error& e) {
      rejects = e.category() == ErrorCategory::kAllocation;
    }
    return Outcome{awg_ok && cap == 102 && wss_ok && rejects,
                   fmt("AWG %g pairs / %g participants, 50 GHz capacity %g, WSS field set ",
                       static_cast<double>(plan.pairings.size()),
                       static_cast<double>(plan.allocations().size()), cap) +
                       (wss_ok ? "accepted" : "refused") +
                       (rejects ? ", oversize demand rejected" : ", oversize demand accepted")};
  });

  criterion(8, "controller closed loop", [] {
    Loop loop{ControllerState{}, 0.3};
    int steps = -1;
    for (int k = 1; k <= 5 && steps < 0; ++k) {
      loop.step();
      if (q_phase(loop.delta, loop.v) < 0.01) steps = k;
    }
    bool held = steps > 0;
    for (int k = 0; k < 50 && held; ++k) {
      loop.step();
      held = q_phase(loop.delta, loop.v) < 0.01;
    }
    ControllerState wrong;
    wrong.last_direction = +1;
    Loop rev{wrong, 0.3};
    const double first = rev.step();
    const double second = rev.step();
    const bool reversed = first > 0 && second < 0;
    return Outcome{held && reversed, fmt("locked after %g steps, held 50: %g, reversal %g -> %g mK",
                                         steps, held, first, second)};
  });

  criterion(9, "determinism", [&] {
    RunOptions serial;
    serial.parallel = false;
    const std::string ref4 = csv_of(fig4_result.reports);
    const bool rerun = csv_of(run_scenario(fig4).reports) == ref4;
    const bool ser4 = csv_of(run_scenario(fig4, serial).reports) == ref4;
    const bool ser5 = csv_of(run_scenario(fig5, serial).reports) == csv_of(fig5_result.reports);
    return Outcome{rerun && ser4 && ser5,
                   fmt("fig4 rerun identical %g, fig4 serial identical %g, fig5 serial identical %g",
                       rerun, ser4, ser5)};
  });

  return failures == 0 ? 0 : 1;
}
