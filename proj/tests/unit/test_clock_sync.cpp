#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "tbqkd/clock_sync.hpp"
#include "tbqkd/receiver.hpp"

using namespace tbqkd;
using namespace oracles;

namespace {

const double kPeriod = SourceParams{}.repetition_period;

}  // namespace

TEST_CASE("cross-correlation of identical streams peaks at zero") {
  Rng rng(1);
  const auto a = poisson_times(1e4, 1.0, rng);
  CorrelationOptions o;
  o.search_range = 1e-3;
  const auto r = crosscorrelate_offset(a, a, o);
  CHECK(r.offset == 0.0);
  CHECK(r.significant);
}

TEST_CASE("cross-correlation finds a constructed shift") {
  Rng rng(2);
  const auto a = poisson_times(2e4, 1.0, rng);
  std::vector<double> b;
  std::normal_distribution<double> jit(0, 100e-12);
  std::bernoulli_distribution keep(0.3);
  for (double x : a)
    if (keep(rng)) b.push_back(x + 1.2345e-3 + jit(rng));
  const auto extra = poisson_times(5e3, 1.0, rng);
  b.insert(b.end(), extra.begin(), extra.end());
  std::sort(b.begin(), b.end());
  const auto r = crosscorrelate_offset(a, b);
  CHECK(r.significant);
  CHECK(std::abs(r.offset - 1.2345e-3) <= 250e-12 + 1e-15);

  const auto g = align_grids(a, b, kPeriod / 3);
  REQUIRE(g.has_value());
  CHECK(g->grid_offset == std::llround(r.offset / (kPeriod / 3)));
}

TEST_CASE("independent streams give no significant peak") {
  Rng rng(3);
  int false_alarms = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = poisson_times(1e4, 2.0, rng);
    const auto b = poisson_times(1e4, 2.0, rng);
    const auto r = crosscorrelate_offset(a, b);
    false_alarms += r.significant;
    if (trial == 0) CHECK_FALSE(align_grids(a, b, kPeriod / 3).has_value());
  }
  CHECK(false_alarms == 0);
}

TEST_CASE("cross-correlation input checks") {
  const std::vector<double> empty, one{1.0}, unsorted{2.0, 1.0};
  CHECK_THROWS_CATEGORY(crosscorrelate_offset(empty, one), ErrorCategory::kDomain);
  CHECK_THROWS_CATEGORY(crosscorrelate_offset(unsorted, one), ErrorCategory::kDomain);
  CHECK_THROWS_CATEGORY(brute_force_offset(empty, one, 1e-3), ErrorCategory::kDomain);
  const std::vector<double> big(kBruteForceLimit + 1, 0.0);
  CHECK_THROWS_CATEGORY(brute_force_offset(big, one, 1e-3), ErrorCategory::kDomain);
}

TEST_CASE("brute force on single events") {
  const std::vector<double> a{1.0}, b{1.0 + 3.2e-9};
  CHECK(brute_force_offset(a, b, 1e-6) == doctest::Approx(3.0e-9).epsilon(1e-12));
  const std::vector<double> c{1.0 - 7.8e-9};
  CHECK(brute_force_offset(a, c, 1e-6) == doctest::Approx(-8.0e-9).epsilon(1e-12));
}

TEST_CASE("binned sweep agrees with brute force") {
  Rng rng(4);
  std::uniform_int_distribution<int> size(1, 2000);
  std::uniform_real_distribution<double> offset(-2e-3, 2e-3), frac(0.0, 1.0), rate(1e3, 5e5);
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t na = size(rng);
    const double r = rate(rng);
    std::vector<double> a;
    std::exponential_distribution<double> g(r);
    double t = 0;
    for (std::size_t i = 0; i < na; ++i) a.push_back(t += g(rng));
    std::vector<double> b;
    const double off = offset(rng), keep = frac(rng);
    std::normal_distribution<double> jit(0, 200e-12);
    std::bernoulli_distribution k(keep);
    for (double x : a)
      if (k(rng)) b.push_back(x + off + jit(rng));
    const auto nb = static_cast<std::size_t>(size(rng) / 4) + 1;
    std::uniform_real_distribution<double> bg(0.0, t + 2e-3);
    for (std::size_t i = 0; i < nb && b.size() < 2000; ++i) b.push_back(bg(rng));
    std::sort(b.begin(), b.end());
    CorrelationOptions o;
    const auto fast = crosscorrelate_offset(a, b, o);
    const double slow = brute_force_offset(a, b, o.search_range, o.bin_width);
    REQUIRE(fast.offset == slow);
  }
}

TEST_CASE("ideal clock: period equals nominal") {
  LocalClock clk(ClockParams{}, 1);
  Rng rng(5);
  const auto s = synth(1e5 / 1.0, 0.0, 0.0, 1.0, clk, rng);
  REQUIRE(s.ts.size() > 90000);
  const auto st = recover_clock(s.ts, kPeriod, SyncState{});
  CHECK(st.locked());
  CHECK(std::abs(st.period_estimate / kPeriod - 1.0) < 1e-9);
  CHECK(st.phase_estimate >= 0.0);
  CHECK(st.phase_estimate < st.period_estimate);
  const auto [off, share] = label_offset(s, st.track);
  CHECK(share > 0.99);
  CHECK(((off % 3) + 3) % 3 == 0);
}

TEST_CASE("frequency error is recovered and the grid stays continuous") {
  for (double ppm : {2.0, -2.0}) {
    ClockParams cp;
    cp.offset = 100e-9;
    cp.frequency_error = ppm * 1e-6;
    LocalClock clk(cp, 2);
    Rng rng(6);
    SyncState st;
    std::int64_t first_offset = 0;
    for (int run = 0; run < 3; ++run) {
      const double t0 = run * 96.0;
      const auto s = synth(1e4 / 90.0, 10.0, t0, t0 + 90.0, clk, rng);
      st = recover_clock(s.ts, kPeriod, st);
      REQUIRE(st.locked());
      CHECK(std::abs(st.drift_estimate * 1e6 - ppm) < 0.05);
      CHECK(std::abs(st.period_estimate / kPeriod - 1) < 100e-6);
      const auto [off, share] = label_offset(s, st.track);
      CHECK(share > 0.95);
      CHECK(((off % 3) + 3) % 3 == 0);
      if (run == 0) first_offset = off;
      CHECK(off == first_offset);
    }
  }
}

TEST_CASE("period error shrinks with event count") {
  const auto mean_error = [](double rate, std::uint64_t seed0) {
    double sum = 0;
    for (std::uint64_t k = 0; k < 6; ++k) {
      ClockParams cp;
      cp.frequency_error = 1e-6;
      cp.resolution = 1e-12;
      LocalClock clk(cp, seed0 + k);
      Rng rng(seed0 + 100 + k);
      const auto s = synth(rate, 0.0, 0.0, 10.0, clk, rng, 300e-12);
      const auto st = recover_clock(s.ts, kPeriod, SyncState{});
      sum += std::abs(st.drift_estimate - 1e-6);
    }
    return sum / 6;
  };
  const double coarse = mean_error(2e3, 10), fine = mean_error(2e5, 20);
  CHECK(fine < coarse / 3);
}

TEST_CASE("too few events carry the prior forward unlocked") {
  LocalClock clk(ClockParams{}, 1);
  Rng rng(7);
  const auto s = synth(1e4, 0.0, 0.0, 1.0, clk, rng);
  const auto locked = recover_clock(s.ts, kPeriod, SyncState{});
  REQUIRE(locked.locked());
  const std::vector<Picoseconds> few(s.ts.begin(), s.ts.begin() + 100);
  const auto st = recover_clock(few, kPeriod, locked);
  CHECK(st.last_run_quality == SyncQuality::kUnlocked);
  CHECK(st.period_estimate == locked.period_estimate);
  CHECK(st.track.index_offset == locked.track.index_offset);
}

TEST_CASE("uniform noise does not lock") {
  ClockParams cp;
  LocalClock clk(cp, 1);
  Rng rng(8);
  const auto s = synth(1.0, 2e4, 0.0, 1.0, clk, rng);
  const auto st = recover_clock(s.ts, kPeriod, SyncState{});
  CHECK_FALSE(st.locked());
}

TEST_CASE("slip threshold is strict") {
  CHECK_FALSE(detect_slip(0.02));
  CHECK(detect_slip(0.45));
  CHECK_FALSE(detect_slip(kDefaultSlipThreshold));
  CHECK_FALSE(detect_slip(0.3, 0.3));
}

TEST_CASE("recalibration twice without drift moves the offset by less than a bin") {
  Rng rng(9);
  const auto a = poisson_times(3e4, 2.0, rng);
  std::vector<double> b;
  std::normal_distribution<double> jit(0, 150e-12);
  std::bernoulli_distribution keep(0.2);
  for (double x : a)
    if (keep(rng)) b.push_back(x - 0.8e-3 + jit(rng));
  std::sort(b.begin(), b.end());
  const auto half = [](const std::vector<double>& v, bool first) {
    const auto mid = std::lower_bound(v.begin(), v.end(), 1.0);
    return first ? std::vector<double>(v.begin(), mid) : std::vector<double>(mid, v.end());
  };
  const auto r1 = crosscorrelate_offset(half(a, true), half(b, true));
  const auto r2 = crosscorrelate_offset(half(a, false), half(b, false));
  REQUIRE(r1.significant);
  REQUIRE(r2.significant);
  CHECK(std::abs(r1.offset - r2.offset) < CorrelationOptions{}.bin_width);
}

TEST_CASE("grid track interpolation") {
  GridTrack t;
  t.origin = 1000;
  t.spacing = 1e-9;
  t.index_offset = 10;
  t.knots = {{0.0, 0.0}, {1.0, 1e-10}};
  t.start_slope = t.end_slope = 1e-10;
  CHECK(t.phase_at(0.5) == doctest::Approx(0.5e-10));
  CHECK(t.phase_at(2.0) == doctest::Approx(2e-10));
  CHECK(t.phase_at(-1.0) == doctest::Approx(-1e-10));
  const auto p = t.position(1000 + 5000);  // 5 ns after the origin
  CHECK(p.index == 15);
  CHECK(p.frac >= -0.5);
  CHECK(p.frac < 0.5);
  CHECK(t.corrected_time(1000 + 5000, 1e-9) == doctest::Approx((15 + p.frac) * 1e-9));
}
