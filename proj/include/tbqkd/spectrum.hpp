#pragma once

#include "tbqkd/core_model.hpp"

namespace tbqkd {

struct FrequencyWindow {
  double center_thz = kSpdcCenterThz;
  double width_ghz = 100.0;

  double lo_thz() const { return center_thz - width_ghz * 5e-4; }
  double hi_thz() const { return center_thz + width_ghz * 5e-4; }
};

// Gaussian SPDC spectrum behind the C-band filter.
struct SpectrumModel {
  double center_thz = kSpdcCenterThz;
  double fwhm_thz = 9.3;
  double filter_half_width_thz = 2.55;

  // Fraction of the (unfiltered, normalized) spectrum inside [lo, hi].
  double fraction_in(double lo_thz, double hi_thz) const;
  bool within_passband(const FrequencyWindow& w) const;
};

// Mean pairs per pulse delivered into a symmetric window pair whose
// lower-frequency member is `window`. Linear in pump power; calibrated so a
// 100 GHz window on C33 at 30 uW gives 0.03.
double mu_from_pump(double shg_power_uw, const FrequencyWindow& window,
                    const SpectrumModel& spectrum = {});

inline constexpr double kReferencePumpUw = 30.0;
inline constexpr double kReferenceMu = 0.03;

}  // namespace tbqkd
