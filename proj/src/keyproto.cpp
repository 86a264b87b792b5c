#include "tbqkd/keyproto.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tbqkd/error.hpp"

namespace tbqkd {

Qubit make_qubit(std::int64_t pulse_index, TimeBin bin, int port) {
  Qubit q;
  q.pulse_index = pulse_index;
  q.bin = bin;
  q.port = port;
  switch (bin) {
    case TimeBin::kEarly: q.basis = Basis::kTime; q.bit = 0; break;
    case TimeBin::kLate: q.basis = Basis::kTime; q.bit = 1; break;
    case TimeBin::kCentral: q.basis = Basis::kPhase; q.bit = port; break;
  }
  return q;
}

std::optional<Classification> decode_grid_index(std::int64_t g) {
  if (g < 0) return std::nullopt;
  switch (g % 3) {
    case 0: return Classification{g / 3, TimeBin::kEarly};
    case 2: return Classification{(g - 2) / 3, TimeBin::kCentral};
    default:
      if (g < 4) return std::nullopt;
      return Classification{(g - 4) / 3, TimeBin::kLate};
  }
}

std::optional<Classification> classify(double t, const GridModel& grid,
                                       double window_half_width) {
  if (!(grid.spacing > 0)) throw Error(ErrorCategory::kDomain, "grid spacing must be positive");
  const double u = (t - grid.phase) / grid.spacing;
  const double g = std::round(u);
  if (std::abs(u - g) * grid.spacing > window_half_width) return std::nullopt;
  return decode_grid_index(static_cast<std::int64_t>(g));
}

SiftResult sift(std::span<const Qubit> a, std::span<const Qubit> b) {
  auto by_pulse = [](const Qubit& x, const Qubit& y) { return x.pulse_index < y.pulse_index; };
  std::vector<Qubit> sa(a.begin(), a.end());
  std::vector<Qubit> sb(b.begin(), b.end());
  std::stable_sort(sa.begin(), sa.end(), by_pulse);
  std::stable_sort(sb.begin(), sb.end(), by_pulse);

  SiftResult r;
  std::size_t i = 0, j = 0;
  while (i < sa.size() && j < sb.size()) {
    const auto pa = sa[i].pulse_index;
    const auto pb = sb[j].pulse_index;
    if (pa < pb) {
      while (i < sa.size() && sa[i].pulse_index == pa) ++i;
      continue;
    }
    if (pb < pa) {
      while (j < sb.size() && sb[j].pulse_index == pb) ++j;
      continue;
    }
    std::size_t ni = i, nj = j;
    while (ni < sa.size() && sa[ni].pulse_index == pa) ++ni;
    while (nj < sb.size() && sb[nj].pulse_index == pb) ++nj;
    if (ni - i == 1 && nj - j == 1 && sa[i].basis == sb[j].basis) {
      const bool err = sa[i].bit != sb[j].bit;
      r.key_bits_a.push_back(static_cast<std::uint8_t>(sa[i].bit));
      r.key_bits_b.push_back(static_cast<std::uint8_t>(sb[j].bit));
      r.matched_indices.push_back(pa);
      r.bases.push_back(sa[i].basis);
      if (sa[i].basis == Basis::kTime) {
        ++r.time_count;
        r.time_errors += err;
      } else {
        ++r.phase_count;
        r.phase_errors += err;
      }
    }
    i = ni;
    j = nj;
  }
  auto ratio = [](std::size_t e, std::size_t n) {
    return n ? static_cast<double>(e) / static_cast<double>(n) : 0.0;
  };
  r.qber_time = ratio(r.time_errors, r.time_count);
  r.qber_phase = ratio(r.phase_errors, r.phase_count);
  r.qber_total = ratio(r.time_errors + r.phase_errors, r.time_count + r.phase_count);
  return r;
}

std::optional<QberEstimate> estimate_qber(const SiftResult& s, double disclosed_fraction,
                                          Rng& rng) {
  if (!(disclosed_fraction >= 0.0 && disclosed_fraction <= 1.0))
    throw Error(ErrorCategory::kDomain, "disclosed fraction must lie in [0, 1]");
  const std::size_t n = s.sifted_count();
  const auto k = static_cast<std::size_t>(std::ceil(disclosed_fraction * static_cast<double>(n)));
  if (n == 0 || k == 0) return std::nullopt;

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());

  std::size_t errors = 0;
  for (auto p : idx) errors += s.key_bits_a[p] != s.key_bits_b[p];
  QberEstimate e;
  e.qber = static_cast<double>(errors) / static_cast<double>(k);
  e.disclosed = std::move(idx);
  return e;
}

double binary_entropy(double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCategory::kDomain, "q must lie in [0, 1]");
  if (q == 0.0 || q == 1.0) return 0.0;
  return -q * std::log2(q) - (1.0 - q) * std::log2(1.0 - q);
}

double secure_rate(double r_sift, double q, double f) {
  if (!(q >= 0.0 && q <= 0.5)) throw Error(ErrorCategory::kDomain, "q must lie in [0, 0.5]");
  if (!(f >= 1.0)) throw Error(ErrorCategory::kDomain, "reconciliation efficiency must be >= 1");
  return std::max(0.0, r_sift * (1.0 - (1.0 + f) * binary_entropy(q)));
}

RateReport rate_report(double r_sift, double q, double f) {
  return {r_sift, q, f, secure_rate(r_sift, std::min(q, 0.5), f)};
}

}  // namespace tbqkd
