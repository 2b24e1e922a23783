#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "cavityrc/cavity.hpp"
#include "cavityrc/common.hpp"
#include "cavityrc/field2d.hpp"
#include "cavityrc/scatterer.hpp"

namespace cavityrc {

/// Reservoir state h_t = (p_{t+1}, p_t): p_curr is the probe-visible field at
/// time step_index*dt, p_next the lead field one step ahead. Dims are fixed
/// for the life of a run.
struct ReservoirState {
  Field2D p_next;
  Field2D p_curr;
  long step_index = 0;

  static ReservoirState zero(const CavitySpec &spec) {
    return {Field2D(spec.nx(), spec.ny()), Field2D(spec.nx(), spec.ny()), 0};
  }

  bool finite() const { return p_next.all_finite() && p_curr.all_finite(); }
};

/// Extra source-term contribution at one cell for one step (Pa/s^2).
struct CellInjection {
  std::size_t flat_index = 0;
  double value = 0.0;
};

/// Explicit leapfrog update of the scalar wave equation on a fixed grid:
///
///   p_{t+1} = 2 p_t - p_{t-1} + dt^2 c^2 lap(p_t)
///             - dt*damping*(p_t - p_{t-1}) + dt^2 (source + feedback)
///
/// 5-point Laplacian; rigid walls are face-mirrored ghost cells (clamped
/// neighbor indices). The Absorbing boundary adds a quadratically graded
/// sigma to the damping inside a sponge layer. Per-cell coefficients are
/// precomputed so one step is a single fused stencil pass; non-finiteness is
/// detected from the running sum of squares, which any NaN/Inf poisons.
class StencilOperator {
public:
  StencilOperator(const CavitySpec &spec, double dt)
      : nx_(spec.nx()), ny_(spec.ny()), dt_(dt), dt2_(dt * dt),
        scratch_(spec.nx(), spec.ny()) {
    spec.validate();
    const std::size_t n = static_cast<std::size_t>(nx_) * ny_;
    coef_lap_.resize(n);
    coef_cur_.resize(n);
    coef_prev_.resize(n);
    const double inv_dx2 = 1.0 / (spec.dx * spec.dx);
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        const std::size_t k = flat(i, j);
        const double c = spec.c_map(i, j);
        const double gamma = spec.damping_map(i, j) + sponge_sigma(spec, i, j);
        coef_lap_[k] = dt2_ * c * c * inv_dx2;
        coef_cur_[k] = 2.0 - dt_ * gamma;
        coef_prev_[k] = 1.0 - dt_ * gamma;
      }
    }
  }

  double dt() const { return dt_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t flat(int i, int j) const {
    return static_cast<std::size_t>(j) * nx_ + i;
  }

  /// One step; throws InstabilityError when the new field is non-finite.
  void advance(ReservoirState &st, const std::vector<CellInjection> &injections) {
    const double *pn = st.p_next.data();
    const double *pc = st.p_curr.data();
    double *out = scratch_.data();
    double ssq = 0.0;

    // interior, branch-free
    for (int j = 1; j < ny_ - 1; ++j) {
      const std::size_t row = flat(0, j);
      for (int i = 1; i < nx_ - 1; ++i) {
        const std::size_t k = row + i;
        const double center = pn[k];
        const double lap = pn[k - 1] + pn[k + 1] + pn[k - nx_] + pn[k + nx_] -
                           4.0 * center;
        const double v =
            coef_cur_[k] * center - coef_prev_[k] * pc[k] + coef_lap_[k] * lap;
        out[k] = v;
        ssq += v * v;
      }
    }
    // boundary cells, mirrored neighbors
    for (int j = 0; j < ny_; ++j) {
      const bool edge_row = (j == 0 || j == ny_ - 1);
      const int istep = edge_row ? 1 : nx_ - 1;
      for (int i = 0; i < nx_; i += istep) {
        const std::size_t k = flat(i, j);
        const double center = pn[k];
        const double w = pn[flat(std::max(i - 1, 0), j)];
        const double e = pn[flat(std::min(i + 1, nx_ - 1), j)];
        const double s = pn[flat(i, std::max(j - 1, 0))];
        const double n = pn[flat(i, std::min(j + 1, ny_ - 1))];
        const double lap = w + e + s + n - 4.0 * center;
        const double v =
            coef_cur_[k] * center - coef_prev_[k] * pc[k] + coef_lap_[k] * lap;
        out[k] = v;
        ssq += v * v;
      }
    }

    for (const CellInjection &inj : injections) {
      const double old = out[inj.flat_index];
      const double v = old + dt2_ * inj.value;
      out[inj.flat_index] = v;
      ssq += v * v - old * old;
    }

    if (!std::isfinite(ssq)) throw InstabilityError(st.step_index + 1);

    // rotate buffers: (p_next, p_curr, scratch) -> (scratch, p_next, p_curr)
    std::swap(st.p_curr, st.p_next);
    std::swap(st.p_next, scratch_);
    st.step_index += 1;
  }

private:
  double sponge_sigma(const CavitySpec &spec, int i, int j) const {
    if (spec.boundary.kind != BoundaryKind::Absorbing) return 0.0;
    const int L = spec.boundary.layer_cells;
    const int d = std::min(std::min(i, nx_ - 1 - i), std::min(j, ny_ - 1 - j));
    if (d >= L) return 0.0;
    const double u = static_cast<double>(L - d) / L;
    return spec.boundary.max_sigma * u * u;
  }

  int nx_, ny_;
  double dt_, dt2_;
  std::vector<double> coef_lap_, coef_cur_, coef_prev_;
  Field2D scratch_;
};

/// Discrete energy of the leapfrog scheme (joules up to a constant factor):
/// kinetic term at the half step plus the conserved cross-step gradient
/// product. Exactly constant for lossless rigid runs, which is what the
/// conservation diagnostics rely on.
inline double total_energy(const ReservoirState &st, const CavitySpec &spec,
                           double dt) {
  const int nx = spec.nx(), ny = spec.ny();
  const double dx2 = spec.dx * spec.dx;
  double kinetic = 0.0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double v = (st.p_next(i, j) - st.p_curr(i, j)) / dt;
      const double c = spec.c_map(i, j);
      kinetic += v * v / (2.0 * c * c);
    }
  double gradient = 0.0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i)
      gradient += (st.p_next(i + 1, j) - st.p_next(i, j)) *
                  (st.p_curr(i + 1, j) - st.p_curr(i, j));
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i < nx; ++i)
      gradient += (st.p_next(i, j + 1) - st.p_next(i, j)) *
                  (st.p_curr(i, j + 1) - st.p_curr(i, j));
  return kinetic * dx2 + 0.5 * gradient;
}

/// Full simulation: steps the cavity for ceil(duration/dt) steps, feeds the
/// scatterer control law back each step, and records every probe at the
/// cavity's sample rate. Bitwise deterministic for identical inputs.
inline std::vector<ProbeRecord>
run(const CavitySpec &spec, const std::vector<SourceSpec> &sources,
    const std::vector<ProbeSpec> &probes,
    const std::vector<ScattererSpec> &scatterers, double duration_s,
    double cfl_number = 0.9) {
  spec.validate();
  if (!(duration_s > 0.0)) throw ValidationError("duration_s must be positive");
  for (const auto &s : sources) {
    if (!spec.inside_interior(s.position))
      throw ValidationError("source position is not in the grid interior");
    for (double v : s.waveform)
      if (!std::isfinite(v)) throw ValidationError("source waveform not finite");
  }
  for (const auto &p : probes)
    if (!spec.inside_interior(p.position))
      throw ValidationError("probe '" + p.label + "' is not in the grid interior");
  for (const auto &sc : scatterers) {
    sc.validate(spec);
    for (const auto &s : sources)
      if (s.position == sc.position)
        throw ValidationError("scatterer '" + sc.id +
                              "' overlaps a source cell");
  }

  const TimeStep ts = derive_timestep(spec, cfl_number);
  StencilOperator op(spec, ts.dt);

  const long n_samples =
      static_cast<long>(std::ceil(duration_s * spec.sample_rate_hz - 1e-9));
  const long n_steps = static_cast<long>(std::ceil(duration_s / ts.dt - 1e-9));

  std::vector<ProbeRecord> records(probes.size());
  for (std::size_t m = 0; m < probes.size(); ++m) {
    records[m].label = probes[m].label;
    records[m].sample_rate_hz = spec.sample_rate_hz;
    records[m].samples.reserve(n_samples);
  }

  ReservoirState st = ReservoirState::zero(spec);
  std::vector<CellInjection> inj;
  inj.reserve(sources.size() + scatterers.size());
  long recorded = 0;

  for (long s = 0;; ++s) {
    if (s % ts.steps_per_sample == 0 && recorded < n_samples) {
      for (std::size_t m = 0; m < probes.size(); ++m)
        records[m].samples.push_back(
            st.p_curr(probes[m].position.i, probes[m].position.j));
      ++recorded;
    }
    if (s >= n_steps) break;

    inj.clear();
    const double t_src = (st.step_index + 1) * ts.dt;
    for (const auto &src : sources) {
      const double v = src.value_at(t_src);
      if (v != 0.0) inj.push_back({op.flat(src.position.i, src.position.j), v});
    }
    for (const auto &sc : scatterers) {
      const double pf = st.p_next(sc.position.i, sc.position.j);
      const double fb = feedback(pf, sc);
      if (fb != 0.0) inj.push_back({op.flat(sc.position.i, sc.position.j), fb});
    }
    op.advance(st, inj);
  }

  return records;
}

} // namespace cavityrc
