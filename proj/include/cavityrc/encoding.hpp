#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "cavityrc/cavity.hpp"
#include "cavityrc/common.hpp"
#include "cavityrc/rng.hpp"

namespace cavityrc {

/// Random input mask S_in (N carriers x M sources) plus carrier frequencies.
/// Entries are i.i.d. uniform[-1,1] drawn from the seed, row-major in n, so
/// the same seed reproduces the mask bit-exactly.
struct EncodingMask {
  int n_carriers = 0; // N
  int m_sources = 0;  // M
  std::vector<double> s_in; // N*M, entry (n,m) at n*m_sources + m
  std::vector<double> omega_hz;
  std::uint64_t seed = 0;
  double amplitude_scale = 1.0;

  double at(int n, int m) const { return s_in[std::size_t(n) * m_sources + m]; }

  static EncodingMask make(int n_carriers, int m_sources,
                           std::vector<double> omega_hz, std::uint64_t seed,
                           double amplitude_scale) {
    EncodingMask mk;
    mk.n_carriers = n_carriers;
    mk.m_sources = m_sources;
    mk.omega_hz = std::move(omega_hz);
    mk.seed = seed;
    mk.amplitude_scale = amplitude_scale;
    std::mt19937_64 gen(seed);
    mk.s_in.resize(std::size_t(n_carriers) * m_sources);
    for (double &v : mk.s_in) v = uniform(gen, -1.0, 1.0);
    return mk;
  }

  void validate(double sample_rate_hz) const {
    if (n_carriers < 1 || m_sources < 1)
      throw ValidationError("mask dims must be positive");
    if (static_cast<int>(omega_hz.size()) != n_carriers)
      throw ValidationError("carrier count does not match mask rows");
    for (std::size_t k = 0; k < omega_hz.size(); ++k) {
      if (k > 0 && !(omega_hz[k] > omega_hz[k - 1]))
        throw ValidationError("carriers must be strictly increasing");
      if (!(omega_hz[k] > 0.0) || omega_hz[k] >= sample_rate_hz / 6.0)
        throw ValidationError(
            "carriers must stay below Nyquist/3 for harmonic headroom");
    }
  }
};

/// How synthesized waveforms are brought to amplitude_scale. FixedGlobal
/// preserves relative input magnitude (the regression default); PerSamplePeak
/// normalizes each plan's peak, discarding loudness.
enum class NormalizationMode { FixedGlobal, PerSamplePeak };

/// Per-source waveforms plus injection delays, ready to attach to source
/// positions.
struct InjectionPlan {
  std::vector<std::vector<double>> waveforms;
  std::vector<double> delays_s;
  double rate_hz = 16000.0;
  NormalizationMode normalization = NormalizationMode::FixedGlobal;
  bool extrapolation_flag = false; // input outside the training range

  std::vector<SourceSpec> attach(const std::vector<GridCell> &positions) const {
    if (positions.size() != waveforms.size())
      throw ValidationError("source position count does not match plan");
    std::vector<SourceSpec> out(waveforms.size());
    for (std::size_t m = 0; m < waveforms.size(); ++m)
      out[m] = {positions[m], waveforms[m], rate_hz, delays_s[m]};
    return out;
  }
};

/// Frequency-multiplexed encoding of one scalar: source m carries
/// sum_n (zeta * S_in[n,m]) sin(2 pi f_n t). FixedGlobal scales by
/// amplitude_scale / (pi * max_m sum_n |S_in[n,m]|), a mask-only constant,
/// so |zeta| survives encoding.
inline InjectionPlan encode_scalar(double zeta, const EncodingMask &mask,
                                   double duration_s, double rate_hz,
                                   NormalizationMode mode =
                                       NormalizationMode::FixedGlobal) {
  mask.validate(rate_hz);
  if (!(duration_s * mask.omega_hz.front() >= 50.0))
    throw ValidationError("duration must cover >= 50 periods of the lowest carrier");

  InjectionPlan plan;
  plan.rate_hz = rate_hz;
  plan.normalization = mode;
  plan.extrapolation_flag = std::abs(zeta) > std::numbers::pi + 1e-12;
  plan.delays_s.assign(mask.m_sources, 0.0);
  plan.waveforms.assign(mask.m_sources, {});

  const std::size_t n_samp = static_cast<std::size_t>(duration_s * rate_hz);
  double peak = 0.0;
  for (int m = 0; m < mask.m_sources; ++m) {
    auto &w = plan.waveforms[m];
    w.resize(n_samp);
    for (std::size_t k = 0; k < n_samp; ++k) {
      const double t = k / rate_hz;
      double v = 0.0;
      for (int n = 0; n < mask.n_carriers; ++n)
        v += zeta * mask.at(n, m) *
             std::sin(2.0 * std::numbers::pi * mask.omega_hz[n] * t);
      w[k] = v;
      peak = std::max(peak, std::abs(v));
    }
  }

  double scale = 0.0;
  if (mode == NormalizationMode::PerSamplePeak) {
    scale = peak > 0.0 ? mask.amplitude_scale / peak : 0.0;
  } else {
    double max_l1 = 0.0;
    for (int m = 0; m < mask.m_sources; ++m) {
      double l1 = 0.0;
      for (int n = 0; n < mask.n_carriers; ++n) l1 += std::abs(mask.at(n, m));
      max_l1 = std::max(max_l1, l1);
    }
    scale = mask.amplitude_scale / (std::numbers::pi * max_l1);
  }
  for (auto &w : plan.waveforms)
    for (double &v : w) v *= scale;
  return plan;
}

/// Fixed-quality windowed-sinc resampler (Hann window, 32 taps per side).
inline std::vector<double> resample_sinc(const std::vector<double> &in,
                                         double in_rate, double out_rate) {
  if (in_rate == out_rate) return in;
  constexpr int kTaps = 32;
  const double ratio = in_rate / out_rate;
  const double cutoff = std::min(1.0, 1.0 / ratio); // anti-alias on decimation
  const std::size_t n_out =
      static_cast<std::size_t>(std::floor(in.size() / ratio));
  std::vector<double> out(n_out);
  for (std::size_t k = 0; k < n_out; ++k) {
    const double center = k * ratio;
    const long lo = static_cast<long>(std::ceil(center - kTaps / cutoff));
    const long hi = static_cast<long>(std::floor(center + kTaps / cutoff));
    double acc = 0.0, norm = 0.0;
    for (long i = std::max(lo, 0L);
         i <= std::min<long>(hi, static_cast<long>(in.size()) - 1); ++i) {
      const double x = (i - center) * cutoff;
      const double sinc =
          x == 0.0 ? 1.0
                   : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      const double hann =
          0.5 * (1.0 + std::cos(std::numbers::pi * x / kTaps));
      const double w = sinc * hann;
      acc += in[i] * w;
      norm += w;
    }
    out[k] = norm != 0.0 ? acc / norm : 0.0;
  }
  return out;
}

/// Raw-audio injection: every source gets the same peak-normalized waveform,
/// source m delayed by m*delay_s (exact in samples by construction when
/// delay_s*rate is integral).
inline InjectionPlan encode_audio(const std::vector<double> &samples,
                                  double in_rate, int n_sources,
                                  double delay_s, double rate_hz,
                                  double amplitude_scale) {
  if (samples.empty()) throw ValidationError("audio input is empty");
  for (double v : samples)
    if (!std::isfinite(v)) throw ValidationError("audio input is not finite");
  if (n_sources < 1) throw ValidationError("need at least one source");
  if (delay_s < 0.0) throw ValidationError("delay_s must be non-negative");

  std::vector<double> wave =
      in_rate == rate_hz ? samples : resample_sinc(samples, in_rate, rate_hz);
  double peak = 0.0;
  for (double v : wave) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) throw ValidationError("audio input is identically zero");
  for (double &v : wave) v *= amplitude_scale / peak;

  InjectionPlan plan;
  plan.rate_hz = rate_hz;
  plan.normalization = NormalizationMode::PerSamplePeak;
  plan.waveforms.assign(n_sources, wave);
  plan.delays_s.resize(n_sources);
  for (int m = 0; m < n_sources; ++m) plan.delays_s[m] = m * delay_s;
  return plan;
}

} // namespace cavityrc
