#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "tbqkd/photon_source.hpp"

using namespace tbqkd;

namespace {

OutcomeDistribution aligned() { return joint_outcome_distribution(0, 0, 0, 1); }

double poisson_multi_fraction(double mu) {
  const double p0 = std::exp(-mu), p1 = mu * std::exp(-mu);
  return (1 - p0 - p1) / (1 - p0);
}

ChannelPlan two_pair_plan(double mu) {
  ChannelPlan plan;
  Pairing p;
  p.a = "A";
  p.b = "B";
  p.mu = mu;
  plan.pairings.push_back(p);
  p.a = "C";
  p.b = "D";
  plan.pairings.push_back(p);
  return plan;
}

}  // namespace

TEST_CASE("pair count per pulse") {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) CHECK(sample_pair_count(0.0, rng) == 0);
  CHECK_THROWS_CATEGORY(sample_pair_count(-0.1, rng), ErrorCategory::kConfig);
  CHECK_THROWS_CATEGORY(sample_pair_count(0.6, rng), ErrorCategory::kConfig);

  const double mu = 0.03;
  const int n = 1000000;
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += sample_pair_count(mu, rng);
  CHECK(std::abs(sum - mu * n) < 3 * std::sqrt(mu * n));
}

TEST_CASE("emission times sit on the pulse grid") {
  SourceParams src;
  PairEmissionStream s(src, 0.05, joint_outcome_distribution(0.2, 0.1, 0.4, 0.9), 1000, 200000, 9);
  const double d = src.interferometer_delay();
  std::size_t n = 0;
  while (auto e = s.next()) {
    const auto& ev = e->event;
    CHECK(ev.pulse_index >= 1000);
    CHECK(ev.pulse_index < 200000);
    const double t0 = static_cast<double>(ev.pulse_index) * src.repetition_period;
    CHECK(ev.emission_time_a == t0 + static_cast<int>(ev.outcome.bin_a) * d);
    CHECK(ev.emission_time_b == t0 + static_cast<int>(ev.outcome.bin_b) * d);
    CHECK(bin_offset(ev.outcome.bin_a, src) == static_cast<int>(ev.outcome.bin_a) * d);
    ++n;
  }
  CHECK(n > 5000);
}

TEST_CASE("90 s of mu = 0.03 gives mu x rate x duration pairs") {
  SourceParams src;
  const double duration = 90.0, mu = 0.03;
  const double expected = mu / src.repetition_period * duration;  // about 5.93e8
  CHECK(expected == doctest::Approx(5.93e8).epsilon(1e-3));

  // Count through a heavily pre-thinned stream and scale back.
  const double p = 1e-3;
  const double any = 1 - (1 - p) * (1 - p);
  const auto end = static_cast<std::int64_t>(std::ceil(duration / src.repetition_period));
  PairEmissionStream s(src, mu, aligned(), 0, end, 42, p, p);
  double yielded = 0;
  while (s.next()) yielded += 1;
  const double mean = expected * any;
  CHECK(std::abs(yielded - mean) < 3 * std::sqrt(mean));
}

TEST_CASE("pre-thinning reproduces independent losses") {
  SourceParams src;
  const double pa = 0.3, pb = 0.05, mu = 0.02;
  PairEmissionStream s(src, mu, aligned(), 0, 50000000, 7, pa, pb);
  double n = 0, a = 0, b = 0, both = 0;
  while (auto e = s.next()) {
    n += 1;
    a += e->a_survives;
    b += e->b_survives;
    both += e->a_survives && e->b_survives;
    REQUIRE((e->a_survives || e->b_survives));
  }
  const double pulses = 5e7;
  const auto within = [](double x, double mean) { return std::abs(x - mean) < 4 * std::sqrt(mean); };
  CHECK(within(a, mu * pulses * pa));
  CHECK(within(b, mu * pulses * pb));
  CHECK(within(both, mu * pulses * pa * pb));
  CHECK(s.yield_per_pulse() == doctest::Approx(mu * (1 - (1 - pa) * (1 - pb))));
}

TEST_CASE("empty stream cases") {
  SourceParams src;
  Rng rng(1);
  CHECK(generate_events(src, two_pair_plan(0.03), {aligned(), aligned()}, 0.0, rng).empty());
  CHECK(generate_events(src, ChannelPlan{}, {}, 1.0, rng).empty());
  PairEmissionStream none(src, 0.03, aligned(), 0, 1000, 1, 0.0, 0.0);
  CHECK_FALSE(none.next().has_value());
}

TEST_CASE("channel pairs draw independent streams") {
  SourceParams src;
  const auto plan = two_pair_plan(0.03);
  Rng rng(123);
  const int runs = 3000;
  std::vector<double> x, y;
  for (int r = 0; r < runs; ++r) {
    const auto ev = generate_events(src, plan, {aligned(), aligned()}, 2e-6, rng);
    double c0 = 0, c1 = 0;
    for (const auto& e : ev) (e.pairing == 0 ? c0 : c1) += 1;
    x.push_back(c0);
    y.push_back(c1);
  }
  double mx = 0, my = 0;
  for (int i = 0; i < runs; ++i) mx += x[i], my += y[i];
  mx /= runs;
  my /= runs;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < runs; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double rho = sxy / std::sqrt(sxx * syy);
  CHECK(std::abs(rho) < 4.0 / std::sqrt(static_cast<double>(runs)));
}

TEST_CASE("events are ordered by pulse") {
  SourceParams src;
  Rng rng(8);
  const auto ev = generate_events(src, two_pair_plan(0.1), {aligned(), aligned()}, 1e-4, rng);
  CHECK(ev.size() > 1000);
  for (std::size_t i = 1; i < ev.size(); ++i) CHECK(ev[i - 1].pulse_index <= ev[i].pulse_index);
}

TEST_CASE("multi-pair fraction grows with mu") {
  double prev = 0;
  for (double mu : {0.001, 0.01, 0.03, 0.1, 0.3}) {
    const double f = poisson_multi_fraction(mu);
    CHECK(f > prev);
    prev = f;
  }
  Rng rng(4);
  const auto sampled = [&](double mu) {
    double ge1 = 0, ge2 = 0;
    for (int i = 0; i < 2000000; ++i) {
      const int k = sample_pair_count(mu, rng);
      ge1 += k >= 1;
      ge2 += k >= 2;
    }
    return ge2 / ge1;
  };
  const double f1 = sampled(0.01), f2 = sampled(0.1);
  CHECK(f1 < f2);
  CHECK(f2 == doctest::Approx(poisson_multi_fraction(0.1)).epsilon(0.05));
}

TEST_CASE("mu from pump power and window") {
  const FrequencyWindow c33{itu_channel_center_frequency(33), 100.0};
  CHECK(mu_from_pump(30.0, c33) == doctest::Approx(0.03).epsilon(1e-12));
  const FrequencyWindow near{kSpdcCenterThz - 0.025, 50.0};
  CHECK(mu_from_pump(90.0, near) == doctest::Approx(0.045).epsilon(0.01));
  CHECK(mu_from_pump(30.0, FrequencyWindow{kSpdcCenterThz - 0.05, 0.0}) == 0.0);
  CHECK(mu_from_pump(60.0, c33) == doctest::Approx(2 * mu_from_pump(30.0, c33)));
  CHECK_THROWS_CATEGORY(mu_from_pump(30.0, FrequencyWindow{kSpdcCenterThz + 2.6, 100.0}),
                        ErrorCategory::kAllocation);

  for (int c = 17; c <= 33; ++c) {
    const FrequencyWindow lo{itu_channel_center_frequency(c), 100.0};
    const FrequencyWindow hi{itu_channel_center_frequency(67 - c), 100.0};
    CHECK(mu_from_pump(30.0, lo) == doctest::Approx(mu_from_pump(30.0, hi)).epsilon(1e-12));
  }
}

TEST_CASE("pulse envelope width") {
  SourceParams src;
  Rng rng(6);
  double ss = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = sample_pulse_envelope(src, rng);
    ss += x * x;
  }
  CHECK(std::sqrt(ss / n) == doctest::Approx(300e-12 / 2.3548200450309493).epsilon(0.01));
  src.pulse_width = 0;
  CHECK(sample_pulse_envelope(src, rng) == 0.0);
}
