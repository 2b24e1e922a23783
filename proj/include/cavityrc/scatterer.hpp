#pragma once

#include <cmath>
#include <string>

#include "cavityrc/cavity.hpp"
#include "cavityrc/common.hpp"

namespace cavityrc {

/// Shape of the active feedback law. SignedPower keeps the law odd
/// (sign(p)|p|^n, no DC drift, no even harmonics); AbsPower is the
/// even-symmetric |p|^n variant used when even-harmonic generation is the
/// point of the experiment.
enum class NonlinearityKind { SignedPower, AbsPower };

/// One tunable meta-scatterer: an active monopole source at a grid cell
/// driven by the pressure in front of it.
struct ScattererSpec {
  GridCell position;
  double exponent_n = 1.5;  // power n of the control law
  double gain_gnl = 0.0;    // G_NL, source units per Pa^n
  bool enabled = true;      // control on/off
  double linear_load = 0.0; // passive local load when disabled, 1/s^2
  NonlinearityKind kind = NonlinearityKind::SignedPower;
  std::string id;

  void validate(const CavitySpec &cavity) const {
    if (!cavity.inside_interior(position))
      throw ValidationError("scatterer '" + id + "' is not in the grid interior");
    if (!(exponent_n >= 1.0) || !(exponent_n <= 3.0))
      throw ValidationError("scatterer exponent_n must be in [1, 3]");
    if (!std::isfinite(gain_gnl) || gain_gnl < 0.0)
      throw ValidationError("scatterer gain_gnl must be finite and >= 0");
    if (linear_load < 0.0)
      throw ValidationError("scatterer linear_load must be >= 0");
  }
};

/// Control law: source contribution (Pa/s^2) fed back at the scatterer cell
/// for a given front pressure. Disabled scatterers act as a passive linear
/// load -linear_load * p.
inline double feedback(double p_front, const ScattererSpec &spec) {
  if (!spec.enabled) return -spec.linear_load * p_front;
  if (p_front == 0.0) return 0.0;
  const double mag = std::pow(std::abs(p_front), spec.exponent_n);
  switch (spec.kind) {
  case NonlinearityKind::SignedPower:
    return spec.gain_gnl * std::copysign(mag, p_front);
  case NonlinearityKind::AbsPower:
    return spec.gain_gnl * mag;
  }
  return 0.0;
}

} // namespace cavityrc
