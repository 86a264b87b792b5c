#include "tbqkd/spectrum.hpp"

#include <cmath>

#include "tbqkd/error.hpp"

namespace tbqkd {

namespace {
constexpr double kWindowTolThz = 1e-9;
}

double SpectrumModel::fraction_in(double lo_thz, double hi_thz) const {
  if (hi_thz <= lo_thz) return 0.0;
  const double sigma = fwhm_thz * kFwhmToSigma;
  const double k = 1.0 / (sigma * std::sqrt(2.0));
  return 0.5 * (std::erf((hi_thz - center_thz) * k) - std::erf((lo_thz - center_thz) * k));
}

bool SpectrumModel::within_passband(const FrequencyWindow& w) const {
  return w.lo_thz() >= center_thz - filter_half_width_thz - kWindowTolThz &&
         w.hi_thz() <= center_thz + filter_half_width_thz + kWindowTolThz;
}

double mu_from_pump(double shg_power_uw, const FrequencyWindow& window,
                    const SpectrumModel& spectrum) {
  if (shg_power_uw < 0) throw Error(ErrorCategory::kConfig, "SHG power must be non-negative");
  if (window.width_ghz < 0) throw Error(ErrorCategory::kConfig, "window width must be non-negative");
  if (!spectrum.within_passband(window))
    throw Error(ErrorCategory::kAllocation, "window lies outside the C-band filter passband");
  const FrequencyWindow reference{itu_channel_center_frequency(33), 100.0};
  const double ref = spectrum.fraction_in(reference.lo_thz(), reference.hi_thz());
  const double frac = spectrum.fraction_in(window.lo_thz(), window.hi_thz());
  return kReferenceMu * (shg_power_uw / kReferencePumpUw) * (frac / ref);
}

}  // namespace tbqkd
