#include "tbqkd/clock_sync.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "tbqkd/error.hpp"

namespace tbqkd {

namespace {

constexpr double kTwoPi = 2.0 * kPi;

std::int64_t floor_mod(std::int64_t x, std::int64_t m) {
  const std::int64_t r = x % m;
  return r < 0 ? r + m : r;
}

// log10 P(X >= c) for X ~ Poisson(lambda).
double log10_poisson_tail(std::uint64_t c, double lambda) {
  if (c == 0) return 0.0;
  if (lambda <= 0.0) return -INFINITY;
  const double lc = static_cast<double>(c);
  if (lc <= lambda) return 0.0;
  const double ll = std::log(lambda);
  double max_log = -INFINITY;
  std::vector<double> terms;
  const auto extra = static_cast<std::uint64_t>(60.0 + 10.0 * std::sqrt(lambda));
  for (std::uint64_t k = c; k <= c + extra; ++k) {
    const double kd = static_cast<double>(k);
    const double lt = -lambda + kd * ll - std::lgamma(kd + 1.0);
    terms.push_back(lt);
    max_log = std::max(max_log, lt);
  }
  double s = 0.0;
  for (double lt : terms) s += std::exp(lt - max_log);
  return (max_log + std::log(s)) / std::log(10.0);
}

// Nearest bin, halves away from zero (the llround convention), without the
// libm call.
inline std::int64_t bin_index(double d, double w) {
  const double x = d / w;
  return static_cast<std::int64_t>(x >= 0.0 ? x + 0.5 : x - 0.5);
}

void check_sorted(std::span<const double> s, const char* name) {
  if (!std::is_sorted(s.begin(), s.end()))
    throw Error(ErrorCategory::kDomain, std::string(name) + " must be sorted ascending");
}

struct FoldedBlock {
  double t = 0.0;      // mean time
  double phase = 0.0;  // folded grid phase in (-s/2, s/2]
  std::size_t count = 0;
};

std::vector<FoldedBlock> fold_blocks(std::span<const double> t, std::size_t block, double s) {
  std::vector<FoldedBlock> out;
  const std::size_t n = t.size();
  std::size_t begin = 0;
  while (begin < n) {
    std::size_t end = std::min(n, begin + block);
    if (n - end < block / 2) end = n;  // fold a short tail into the last block
    double c = 0.0, sn = 0.0, tsum = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double x = t[i] / s;
      const double a = kTwoPi * (x - std::floor(x));
      c += std::cos(a);
      sn += std::sin(a);
      tsum += t[i];
    }
    FoldedBlock b;
    b.count = end - begin;
    b.t = tsum / static_cast<double>(b.count);
    b.phase = std::atan2(sn, c) / kTwoPi * s;
    out.push_back(b);
    begin = end;
  }
  return out;
}

double fold_power(std::span<const double> t, std::size_t n, std::size_t stride, double s) {
  double c = 0.0, sn = 0.0;
  for (std::size_t i = 0; i < n; i += stride) {
    const double x = t[i] / s;
    const double a = kTwoPi * (x - std::floor(x));
    c += std::cos(a);
    sn += std::sin(a);
  }
  return c * c + sn * sn;
}

// Fold power of the first n events at frequencies f_lo + k * df, k < count.
// Phasors advance by a fixed rotation per event, so each candidate costs one
// complex multiply per event. Returns the best k.
std::size_t scan_frequencies(std::span<const double> t, std::size_t n, double f_lo, double df,
                             std::size_t count) {
  std::vector<double> zr(n), zi(n), wr(n), wi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = t[i] * f_lo;
    const double a = kTwoPi * (x - std::floor(x));
    zr[i] = std::cos(a);
    zi[i] = std::sin(a);
    const double y = t[i] * df;
    const double b = kTwoPi * (y - std::floor(y));
    wr[i] = std::cos(b);
    wi[i] = std::sin(b);
  }
  std::size_t best = 0;
  double best_power = -1.0;
  for (std::size_t k = 0; k < count; ++k) {
    double c = 0.0, sn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      c += zr[i];
      sn += zi[i];
      const double r = zr[i] * wr[i] - zi[i] * wi[i];
      zi[i] = zr[i] * wi[i] + zi[i] * wr[i];
      zr[i] = r;
    }
    const double p = c * c + sn * sn;
    if (p > best_power) {
      best_power = p;
      best = k;
    }
  }
  return best;
}

// Coarse-to-fine search for the local grid spacing within +-max_rel of s.
// The seed scan covers the whole range on a short stretch of events; each
// refinement level doubles the folded span and halves the frequency step.
double acquire_spacing(std::span<const double> t, double s, double max_rel) {
  constexpr std::size_t kSeedEvents = 400;
  constexpr double kSeedBudget = 2e8;  // phasor updates
  constexpr std::size_t kMaxFolded = 20000;
  const double f0 = 1.0 / s;
  std::size_t n0 = std::min(t.size(), kSeedEvents);
  const auto seed_cost = [&](std::size_t n) { return 8.0 * max_rel * f0 * t[n - 1] * n; };
  while (n0 > 64 && seed_cost(n0) > kSeedBudget) n0 /= 2;
  double span = t[n0 - 1];
  if (!(span > 0)) return s;

  double df = 0.25 / span;
  const auto count = static_cast<std::size_t>(std::ceil(2.0 * max_rel * f0 / df)) + 1;
  const double f_lo = f0 * (1.0 - max_rel);
  double f = f_lo + df * static_cast<double>(scan_frequencies(t, n0, f_lo, df, count));

  std::size_t n = n0;
  while (n < t.size() && span < 1.0) {
    span *= 2.0;
    n = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), span) - t.begin());
    df *= 0.5;
    const std::size_t stride = std::max<std::size_t>(1, n / kMaxFolded);
    double best = f, best_power = -1.0;
    for (int k = -4; k <= 4; ++k) {
      const double cand = f + k * df;
      const double p = fold_power(t, n, stride, 1.0 / cand);
      if (p > best_power) {
        best_power = p;
        best = cand;
      }
    }
    f = best;
  }
  return 1.0 / f;
}

// Least-squares slope of y on x over [first, last).
double ls_slope(const std::vector<PhaseKnot>& k, std::size_t first, std::size_t last) {
  const std::size_t n = last - first;
  if (n < 2) return 0.0;
  double mt = 0.0, mp = 0.0;
  for (std::size_t i = first; i < last; ++i) {
    mt += k[i].t;
    mp += k[i].phase;
  }
  mt /= static_cast<double>(n);
  mp /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = first; i < last; ++i) {
    sxy += (k[i].t - mt) * (k[i].phase - mp);
    sxx += (k[i].t - mt) * (k[i].t - mt);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

struct Unwrapped {
  std::vector<PhaseKnot> knots;
  double slope_all = 0.0;
};

// Sequential unwrapping against a linear prediction. `first_prediction` is
// the expected phase of block 0 (nullopt: accept the folded value).
Unwrapped unwrap(const std::vector<FoldedBlock>& blocks, double s,
                 std::optional<double> first_prediction, double initial_slope,
                 std::size_t window) {
  Unwrapped u;
  u.knots.reserve(blocks.size());
  double slope = initial_slope;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    double pred;
    if (k == 0) {
      pred = first_prediction.value_or(blocks[0].phase);
    } else {
      const auto& prev = u.knots.back();
      pred = prev.phase + slope * (blocks[k].t - prev.t);
    }
    const double p = blocks[k].phase + s * std::round((pred - blocks[k].phase) / s);
    u.knots.push_back({blocks[k].t, p});
    if (u.knots.size() >= 3) {
      const std::size_t last = u.knots.size();
      const std::size_t first = last > window ? last - window : 0;
      slope = ls_slope(u.knots, first, last);
    }
  }
  u.slope_all = ls_slope(u.knots, 0, u.knots.size());
  return u;
}

}  // namespace

// ---------------------------------------------------------------------------

CorrelationResult crosscorrelate_offset(std::span<const double> stream_a,
                                        std::span<const double> stream_b,
                                        const CorrelationOptions& options) {
  if (stream_a.empty() || stream_b.empty())
    throw Error(ErrorCategory::kDomain, "cross-correlation needs two non-empty streams");
  if (!(options.bin_width > 0) || !(options.search_range >= 0))
    throw Error(ErrorCategory::kDomain, "invalid cross-correlation range or bin width");
  check_sorted(stream_a, "stream_a");
  check_sorted(stream_b, "stream_b");

  const double w = options.bin_width;
  const auto half_bins = static_cast<std::int64_t>(std::llround(options.search_range / w));
  const std::size_t nbins = static_cast<std::size_t>(2 * half_bins + 1);
  std::vector<std::uint32_t> hist(nbins, 0);
  const double reach = (static_cast<double>(half_bins) + 1.0) * w;

  std::uint64_t total = 0;
  std::size_t lo = 0;
  for (double a : stream_a) {
    while (lo < stream_b.size() && stream_b[lo] - a < -reach) ++lo;
    for (std::size_t j = lo; j < stream_b.size(); ++j) {
      const double d = stream_b[j] - a;
      if (d > reach) break;
      const auto k = bin_index(d, w);
      if (k < -half_bins || k > half_bins) continue;
      ++hist[static_cast<std::size_t>(k + half_bins)];
      ++total;
    }
  }

  CorrelationResult r;
  std::size_t best = 0;
  for (std::size_t i = 1; i < nbins; ++i)
    if (hist[i] > hist[best]) best = i;
  r.peak_bin = static_cast<std::int64_t>(best) - half_bins;
  r.offset = static_cast<double>(r.peak_bin) * w;
  r.peak_count = hist[best];
  r.background = static_cast<double>(total - r.peak_count) / static_cast<double>(nbins);
  r.log10_false_alarm = std::log10(static_cast<double>(nbins)) +
                        log10_poisson_tail(r.peak_count, r.background);
  r.significant = r.peak_count > 0 && r.log10_false_alarm < std::log10(options.false_alarm);
  return r;
}

double brute_force_offset(std::span<const double> stream_a, std::span<const double> stream_b,
                          double search_range, double bin_width) {
  if (stream_a.empty() || stream_b.empty())
    throw Error(ErrorCategory::kDomain, "brute-force correlation needs two non-empty streams");
  if (stream_a.size() > kBruteForceLimit || stream_b.size() > kBruteForceLimit)
    throw Error(ErrorCategory::kDomain, "brute-force correlation refuses streams above 5000 events");
  const auto half_bins = static_cast<std::int64_t>(std::llround(search_range / bin_width));
  std::vector<std::int64_t> bins;
  for (double a : stream_a)
    for (double b : stream_b) {
      const auto k = bin_index(b - a, bin_width);
      if (k >= -half_bins && k <= half_bins) bins.push_back(k);
    }
  if (bins.empty()) return static_cast<double>(-half_bins) * bin_width;
  std::sort(bins.begin(), bins.end());
  std::int64_t best = bins.front();
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < bins.size();) {
    std::size_t j = i;
    while (j < bins.size() && bins[j] == bins[i]) ++j;
    if (j - i > best_count) {
      best_count = j - i;
      best = bins[i];
    }
    i = j;
  }
  return static_cast<double>(best) * bin_width;
}

// ---------------------------------------------------------------------------

double GridTrack::phase_at(double t) const {
  if (knots.empty()) return 0.0;
  if (t <= knots.front().t) return knots.front().phase + start_slope * (t - knots.front().t);
  if (t >= knots.back().t) return knots.back().phase + end_slope * (t - knots.back().t);
  const auto it = std::upper_bound(knots.begin(), knots.end(), t,
                                   [](double x, const PhaseKnot& k) { return x < k.t; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double f = (t - lo.t) / (hi.t - lo.t);
  return lo.phase + f * (hi.phase - lo.phase);
}

GridPosition GridTrack::position(Picoseconds ts) const {
  const double t = static_cast<double>(ts - origin) * 1e-12;
  const double y = (t - phase_at(t)) / spacing;
  const double g = std::round(y);
  GridPosition p;
  p.index = index_offset + static_cast<std::int64_t>(g);
  p.frac = y - g;
  if (p.frac >= 0.5) {
    p.frac -= 1.0;
    ++p.index;
  }
  return p;
}

double GridTrack::corrected_time(Picoseconds ts, double nominal_spacing) const {
  const GridPosition p = position(ts);
  return (static_cast<double>(p.index) + p.frac) * nominal_spacing;
}

SyncState recover_clock(std::span<const Picoseconds> timestamps, double nominal_period,
                        const SyncState& prior, const RecoveryOptions& options) {
  if (!(nominal_period > 0)) throw Error(ErrorCategory::kDomain, "nominal period must be positive");
  SyncState out = prior;
  out.residue_shift = 0;
  if (timestamps.size() < std::max<std::size_t>(options.min_events, 3)) {
    out.last_run_quality = SyncQuality::kUnlocked;
    return out;
  }

  const bool has_prior = !prior.track.empty();
  double period = nominal_period;
  if (options.estimate_period && has_prior && prior.period_estimate > 0 &&
      std::abs(prior.period_estimate / nominal_period - 1.0) < 100e-6)
    period = prior.period_estimate;
  double s = period / 3.0;

  const Picoseconds origin = timestamps.front();
  std::vector<double> t(timestamps.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<double>(timestamps[i] - origin) * 1e-12;

  std::size_t block = options.block_events;
  if (t.size() / block > options.max_blocks) block = (t.size() + options.max_blocks - 1) / options.max_blocks;
  block = std::max<std::size_t>(block, 8);

  if (options.estimate_period && !has_prior) s = acquire_spacing(t, s, 100e-6);

  GridTrack track;
  Unwrapped uw;
  for (int pass = 0; pass < 3; ++pass) {
    const auto blocks = fold_blocks(t, block, s);
    std::optional<double> first_pred;
    std::int64_t index_offset;
    double initial_slope = 0.0;
    const double tb = blocks.front().t;
    if (has_prior) {
      // u at block 0 must continue the prior track's extrapolation.
      const Picoseconds ts0 = origin + static_cast<Picoseconds>(std::llround(tb * 1e12));
      const GridPosition predicted = prior.track.position(ts0);
      const double n = std::round(tb / s);
      index_offset = predicted.index - static_cast<std::int64_t>(n);
      first_pred = tb - s * (n + predicted.frac);
      // Grid points per second must match the prior's rate.
      initial_slope = 1.0 - (1.0 - prior.track.end_slope) * s / prior.track.spacing;
    } else {
      index_offset = kGridIndexBase +
                     static_cast<std::int64_t>(std::floor(static_cast<double>(origin) * 1e-12 / s));
    }
    uw = unwrap(blocks, s, first_pred, initial_slope, options.slope_window);
    track.origin = origin;
    track.spacing = s;
    track.index_offset = index_offset;
    track.knots = uw.knots;
    if (!options.estimate_period || pass == 2 || std::abs(uw.slope_all) < 1e-12) break;
    const double s_new = s / (1.0 - uw.slope_all);
    if (std::abs(s_new / (nominal_period / 3.0) - 1.0) > 100e-6) break;
    s = s_new;
  }
  // Brownian wander has no usable local slope, so extrapolation uses the
  // run's mean rate.
  track.start_slope = uw.slope_all;
  track.end_slope = uw.slope_all;

  // Bin pattern: Central carries twice the weight of Early or Late.
  std::array<std::uint64_t, 3> counts{};
  for (auto ts : timestamps) {
    const GridPosition p = track.position(ts);
    if (std::abs(p.frac) < 0.3) ++counts[static_cast<std::size_t>(floor_mod(p.index, 3))];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return counts[x] > counts[y]; });
  const bool pattern_clear =
      counts[order[0]] > 0 &&
      static_cast<double>(counts[order[0]]) > 1.3 * static_cast<double>(counts[order[1]]);
  if (!pattern_clear) {
    out.last_run_quality = SyncQuality::kUnlocked;
    out.track = track;
    return out;
  }
  int shift = static_cast<int>(floor_mod(2 - static_cast<std::int64_t>(order[0]), 3));
  if (shift == 2) shift = -1;
  track.index_offset += shift;

  out.track = track;
  out.residue_shift = shift;
  out.period_estimate = options.estimate_period ? 3.0 * s / (1.0 - uw.slope_all) : nominal_period;
  out.drift_estimate = out.period_estimate / nominal_period - 1.0;

  // Early slot preceding the last event, as a phase in [0, period).
  const GridPosition last = track.position(timestamps.back());
  const double t_last = static_cast<double>(timestamps.back()) * 1e-12;
  const double t_early = t_last - (last.frac + static_cast<double>(floor_mod(last.index, 3))) * s;
  double ph = std::fmod(t_early, out.period_estimate);
  if (ph < 0) ph += out.period_estimate;
  out.phase_estimate = ph;
  out.last_run_quality = SyncQuality::kLocked;
  return out;
}

bool detect_slip(double time_basis_qber, double threshold) { return time_basis_qber > threshold; }

std::optional<GridAlignment> align_grids(std::span<const double> corrected_a,
                                         std::span<const double> corrected_b,
                                         double nominal_spacing,
                                         const CorrelationOptions& options) {
  const CorrelationResult c = crosscorrelate_offset(corrected_a, corrected_b, options);
  if (!c.significant) return std::nullopt;
  GridAlignment g;
  g.correlation = c;
  g.grid_offset = static_cast<std::int64_t>(std::llround(c.offset / nominal_spacing));
  return g;
}

}  // namespace tbqkd
