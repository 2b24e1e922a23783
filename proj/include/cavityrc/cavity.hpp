#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cavityrc/common.hpp"
#include "cavityrc/field2d.hpp"

namespace cavityrc {

struct GridCell {
  int i = 0; // x index
  int j = 0; // y index
  bool operator==(const GridCell &o) const { return i == o.i && j == o.j; }
};

enum class BoundaryKind {
  RigidReflective, // Neumann via mirrored ghost cells
  Absorbing        // graded-sigma sponge layer inside a rigid frame
};

struct BoundarySpec {
  BoundaryKind kind = BoundaryKind::RigidReflective;
  int layer_cells = 0;    // Absorbing only
  double max_sigma = 0.0; // 1/s at the outermost sponge cell
};

/// Geometry, material maps, boundary model and output rate of one cavity.
struct CavitySpec {
  double width_m = 0.0;
  double height_m = 0.0;
  double dx = 0.0;          // grid spacing, meters (square cells)
  Field2D c_map;            // wave speed per cell, m/s
  Field2D damping_map;      // loss coefficient per cell, 1/s
  BoundarySpec boundary;
  double sample_rate_hz = 16000.0;

  int nx() const { return static_cast<int>(std::lround(width_m / dx)); }
  int ny() const { return static_cast<int>(std::lround(height_m / dx)); }

  double c_max() const {
    double m = 0.0;
    for (int j = 0; j < c_map.ny(); ++j)
      for (int i = 0; i < c_map.nx(); ++i) m = std::max(m, c_map(i, j));
    return m;
  }

  bool inside_interior(GridCell c) const {
    return c.i > 0 && c.j > 0 && c.i < nx() - 1 && c.j < ny() - 1;
  }

  /// Uniform-medium helper; most specs are built through this.
  static CavitySpec uniform(double width_m, double height_m, double dx,
                            double c, double damping,
                            double sample_rate_hz = 16000.0,
                            BoundarySpec boundary = {}) {
    CavitySpec s;
    s.width_m = width_m;
    s.height_m = height_m;
    s.dx = dx;
    s.sample_rate_hz = sample_rate_hz;
    s.boundary = boundary;
    const int nx = s.nx(), ny = s.ny();
    s.c_map = Field2D(nx, ny, c);
    s.damping_map = Field2D(nx, ny, damping);
    return s;
  }

  void validate() const {
    if (!(width_m > 0.0) || !(height_m > 0.0) || !(dx > 0.0))
      throw ValidationError("cavity extents and dx must be positive");
    if (nx() < 8 || ny() < 8)
      throw ValidationError("grid must be at least 8 cells per side, got " +
                            std::to_string(nx()) + "x" + std::to_string(ny()));
    if (c_map.nx() != nx() || c_map.ny() != ny())
      throw ValidationError("c_map dims do not match grid");
    if (damping_map.nx() != nx() || damping_map.ny() != ny())
      throw ValidationError("damping_map dims do not match grid");
    for (int j = 0; j < ny(); ++j)
      for (int i = 0; i < nx(); ++i) {
        if (!(c_map(i, j) > 0.0))
          throw ValidationError("c_map must be positive everywhere");
        if (damping_map(i, j) < 0.0)
          throw ValidationError("damping_map must be non-negative");
      }
    if (!(sample_rate_hz > 0.0))
      throw ValidationError("sample_rate_hz must be positive");
    if (boundary.kind == BoundaryKind::Absorbing) {
      if (boundary.layer_cells < 1 ||
          2 * boundary.layer_cells >= std::min(nx(), ny()))
        throw ValidationError("absorbing layer does not fit the grid");
      if (boundary.max_sigma < 0.0)
        throw ValidationError("absorbing max_sigma must be non-negative");
    }
  }
};

/// Source term injected at one cell. `waveform` holds psi_in samples
/// (Pa/s^2) at `waveform_rate_hz`; the solver interpolates linearly onto
/// its own timestep. Injection starts `delay_s` after t=0.
struct SourceSpec {
  GridCell position;
  std::vector<double> waveform;
  double waveform_rate_hz = 16000.0;
  double delay_s = 0.0;

  double value_at(double t) const {
    const double u = (t - delay_s) * waveform_rate_hz;
    if (u <= 0.0) return waveform.empty() ? 0.0 : (u == 0.0 ? waveform[0] : 0.0);
    const auto n = waveform.size();
    const double fk = std::floor(u);
    const std::size_t k = static_cast<std::size_t>(fk);
    if (k >= n) return 0.0;
    const double a = waveform[k];
    const double b = (k + 1 < n) ? waveform[k + 1] : 0.0;
    return a + (b - a) * (u - fk);
  }
};

struct ProbeSpec {
  GridCell position;
  std::string label;
};

/// Pressure time series recorded at one probe, at the cavity's output rate.
struct ProbeRecord {
  std::string label;
  std::vector<double> samples;
  double sample_rate_hz = 16000.0;
};

struct TimeStep {
  double dt = 0.0;          // seconds
  int steps_per_sample = 1; // dt * steps_per_sample == 1/sample_rate_hz
};

/// 2D CFL bound before divisor snapping: cfl * dx / (c_max * sqrt(2)).
inline double cfl_timestep(const CavitySpec &spec, double cfl_number) {
  if (!(cfl_number > 0.0) || cfl_number > 1.0)
    throw ValidationError("cfl_number must be in (0, 1]");
  return cfl_number * spec.dx / (spec.c_max() * std::sqrt(2.0));
}

/// CFL-limited timestep, shrunk to the nearest exact divisor of the probe
/// sampling interval so every output sample lands on a solver step.
inline TimeStep derive_timestep(const CavitySpec &spec, double cfl_number) {
  const double dt0 = cfl_timestep(spec, cfl_number);
  const double sample_dt = 1.0 / spec.sample_rate_hz;
  int k = static_cast<int>(std::ceil(sample_dt / dt0 - 1e-12));
  k = std::max(k, 1);
  return {sample_dt / k, k};
}

} // namespace cavityrc
