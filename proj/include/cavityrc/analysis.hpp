#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "cavityrc/cavity.hpp"
#include "cavityrc/common.hpp"
#include "cavityrc/solver.hpp"

namespace cavityrc {

/// Complex harmonic amplitudes at m*fundamental, m = 1..K, divided by the
/// magnitude of the fundamental (so phasors[0] always has magnitude 1).
struct HarmonicPhasors {
  double fundamental_hz = 0.0;
  std::vector<std::complex<double>> phasors;
  std::string probe_label;

  void validate() const {
    if (phasors.size() < 5)
      throw ValidationError("harmonic phasor sets carry at least 5 harmonics");
    if (std::abs(std::abs(phasors[0]) - 1.0) > 1e-9)
      throw ValidationError("fundamental phasor is not normalized");
  }
};

/// Single-sided DFT of the steady-state tail over an integer number of
/// fundamental periods; amplitudes at m*fundamental are normalized by the
/// fundamental's magnitude.
inline HarmonicPhasors stroboscopic_analysis(const ProbeRecord &record,
                                             double fundamental_hz,
                                             int k_harmonics) {
  const double rate = record.sample_rate_hz;
  if (k_harmonics < 5)
    throw ValidationError("k_harmonics must be at least 5");
  if (!(fundamental_hz > 0.0) || fundamental_hz * k_harmonics >= rate / 2.0)
    throw ValidationError("fundamental*k_harmonics must stay below Nyquist");
  const double n_periods_total = record.samples.size() / rate * fundamental_hz;
  if (n_periods_total < 20.0)
    throw ValidationError("record shorter than 20 fundamental periods");

  // steady-state tail: second half of the record, whole periods only
  const double samples_per_period = rate / fundamental_hz;
  const long max_periods =
      static_cast<long>(std::floor(record.samples.size() / 2.0 /
                                   samples_per_period));
  const double w_exact = max_periods * samples_per_period;
  const long window = std::lround(w_exact);
  if (std::abs(w_exact - window) > 1e-6)
    throw ValidationError("window does not hold an integer number of periods");
  const std::size_t start = record.samples.size() - window;

  HarmonicPhasors out;
  out.fundamental_hz = fundamental_hz;
  out.probe_label = record.label;
  out.phasors.resize(k_harmonics);
  for (int m = 1; m <= k_harmonics; ++m) {
    std::complex<double> acc{0.0, 0.0};
    const double w = 2.0 * std::numbers::pi * m * fundamental_hz / rate;
    for (long k = 0; k < window; ++k)
      acc += record.samples[start + k] *
             std::complex<double>(std::cos(w * k), -std::sin(w * k));
    out.phasors[m - 1] = acc * (2.0 / window);
  }
  const double fund = std::abs(out.phasors[0]);
  if (fund == 0.0)
    throw ValidationError("record has no component at the fundamental");
  for (auto &p : out.phasors) p /= fund;
  return out;
}

struct StabilitySearchOptions {
  double run_duration_s = 2.0;
  double gain_cap = 1e12;    // n=1 scatterers may never destabilize
  GridCell source;           // defaults to (nx/5, ny/2) when {0,0}
  double cfl_number = 0.9;
};

namespace detail {
inline bool gain_is_stable(const ScattererSpec &scat, const CavitySpec &cavity,
                           const SourceSpec &drive, double drive_amplitude,
                           const StabilitySearchOptions &opt) {
  std::vector<ProbeSpec> probe{{scat.position, "front"}};
  try {
    auto rec = run(cavity, {drive}, probe, {scat}, opt.run_duration_s,
                   opt.cfl_number);
    double ssq = 0.0;
    for (double v : rec[0].samples) ssq += v * v;
    const double rms = std::sqrt(ssq / rec[0].samples.size());
    return rms < 100.0 * drive_amplitude;
  } catch (const InstabilityError &) {
    return false;
  }
}
} // namespace detail

/// Largest gain (2 significant figures) for which a sinusoidal-drive run of
/// the single given scatterer completes without InstabilityError and the
/// front-probe RMS stays under 100x the drive amplitude. Returns 0 when even
/// a vanishing gain is unstable, and the cap when no gain destabilizes.
inline double max_stable_gain(const ScattererSpec &spec_template,
                              const CavitySpec &cavity, double drive_amplitude,
                              double fundamental_hz,
                              StabilitySearchOptions opt = {}) {
  cavity.validate();
  if (!(drive_amplitude > 0.0))
    throw ValidationError("drive_amplitude must be positive");
  if (opt.source.i == 0 && opt.source.j == 0)
    opt.source = {cavity.nx() / 5, cavity.ny() / 2};

  std::vector<double> wave(
      static_cast<std::size_t>(opt.run_duration_s * cavity.sample_rate_hz));
  for (std::size_t k = 0; k < wave.size(); ++k)
    wave[k] = drive_amplitude *
              std::sin(2.0 * std::numbers::pi * fundamental_hz * k /
                       cavity.sample_rate_hz);
  const SourceSpec drive{opt.source, std::move(wave), cavity.sample_rate_hz, 0.0};

  ScattererSpec scat = spec_template;
  scat.enabled = true;

  auto stable = [&](double g) {
    scat.gain_gnl = g;
    return detail::gain_is_stable(scat, cavity, drive, drive_amplitude, opt);
  };

  if (!stable(0.0)) return 0.0;

  double lo = 0.0, hi = 1.0;
  while (stable(hi)) {
    lo = hi;
    hi *= 8.0;
    if (hi >= opt.gain_cap) return opt.gain_cap;
  }
  if (lo == 0.0) { // unstable already at 1.0: shrink to find a stable floor
    double probe = 1.0;
    while (probe > 1e-12 && !stable(probe / 8.0)) probe /= 8.0;
    if (probe <= 1e-12) return 0.0;
    lo = probe / 8.0;
    hi = probe;
  }
  while (hi / lo > 1.01) {
    const double mid = std::sqrt(lo * hi);
    (stable(mid) ? lo : hi) = mid;
  }
  // round down to 2 significant figures so the result stays on the stable side
  const double mag = std::pow(10.0, std::floor(std::log10(lo)) - 1.0);
  return std::floor(lo / mag) * mag;
}

} // namespace cavityrc
