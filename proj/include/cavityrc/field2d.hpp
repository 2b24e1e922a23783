#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace cavityrc {

/// Dense row-major 2D scalar field. Index (i, j) = (column along x, row
/// along y); storage is y-major so x-adjacent cells are contiguous.
class Field2D {
public:
  Field2D() = default;
  Field2D(int nx, int ny, double fill = 0.0)
      : nx_(nx), ny_(ny), v_(static_cast<std::size_t>(nx) * ny, fill) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return v_.size(); }

  double &operator()(int i, int j) { return v_[idx(i, j)]; }
  double operator()(int i, int j) const { return v_[idx(i, j)]; }

  double *data() { return v_.data(); }
  const double *data() const { return v_.data(); }

  void fill(double value) { v_.assign(v_.size(), value); }

  bool same_shape(const Field2D &o) const {
    return nx_ == o.nx_ && ny_ == o.ny_;
  }

  bool all_finite() const {
    for (double x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  double sum_squares() const {
    double s = 0.0;
    for (double x : v_) s += x * x;
    return s;
  }

  double max_abs() const {
    double s = 0.0;
    for (double x : v_) s = std::max(s, std::abs(x));
    return s;
  }

private:
  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(j) * nx_ + i;
  }

  int nx_ = 0, ny_ = 0;
  std::vector<double> v_;
};

} // namespace cavityrc
