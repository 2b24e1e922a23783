#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SVD>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "cavityrc/cavity.hpp"
#include "cavityrc/common.hpp"
#include "cavityrc/rng.hpp"

namespace cavityrc {

/// Selected-row DFT: which window of the record is transformed and which
/// bin indices j of the length-n Fourier matrix are kept (F_s).
struct FourierSelector {
  double window_start_s = 0.0;
  int window_len = 0; // n
  std::vector<int> selected_bins;

  void validate(std::size_t record_len, double rate) const {
    if (window_len < 1) throw ValidationError("window_len must be positive");
    if (selected_bins.empty())
      throw ValidationError("selector needs at least one bin");
    for (std::size_t k = 0; k < selected_bins.size(); ++k) {
      if (selected_bins[k] < 0 || selected_bins[k] >= window_len)
        throw ValidationError("selected bin outside [0, n-1]");
      if (k > 0 && selected_bins[k] <= selected_bins[k - 1])
        throw ValidationError("selected bins must be strictly increasing");
    }
    const long start = std::lround(window_start_s * rate);
    if (start < 0 || static_cast<std::size_t>(start + window_len) > record_len)
      throw ValidationError("analysis window exceeds the record");
  }
};

/// DFT bin index for a frequency at a given window length and rate.
inline int bin_for_hz(double hz, int window_len, double rate) {
  return static_cast<int>(std::lround(hz * window_len / rate));
}

/// y_f^m = F_s * psi_out_m for every probe; columns are probes. The twiddle
/// table w^t = exp(-2*pi*i*t/n) is built once and indexed by (j*k) mod n with
/// incremental index arithmetic, so values are exact table entries.
inline Eigen::MatrixXcd fourier_features(const std::vector<ProbeRecord> &records,
                                         const FourierSelector &sel) {
  if (records.empty()) throw ValidationError("no probe records");
  const std::size_t len = records.front().samples.size();
  const double rate = records.front().sample_rate_hz;
  for (const auto &r : records)
    if (r.samples.size() != len || r.sample_rate_hz != rate)
      throw ValidationError("probe records have mismatched length or rate");
  sel.validate(len, rate);

  const int n = sel.window_len;
  std::vector<std::complex<double>> twiddle(n);
  for (int t = 0; t < n; ++t)
    twiddle[t] = std::polar(1.0, -2.0 * std::numbers::pi * t / n);

  const long start = std::lround(sel.window_start_s * rate);
  Eigen::MatrixXcd out(sel.selected_bins.size(), records.size());
  for (std::size_t m = 0; m < records.size(); ++m) {
    const double *x = records[m].samples.data() + start;
    for (std::size_t b = 0; b < sel.selected_bins.size(); ++b) {
      const int j = sel.selected_bins[b];
      std::complex<double> acc{0.0, 0.0};
      int idx = 0;
      for (int k = 0; k < n; ++k) {
        acc += x[k] * twiddle[idx];
        idx += j;
        if (idx >= n) idx -= n;
      }
      out(b, m) = acc;
    }
  }
  return out;
}

/// Flatten a bins-by-probes coefficient matrix, probe-major.
inline Eigen::VectorXd magnitude_features(const Eigen::MatrixXcd &coeffs) {
  Eigen::VectorXd v(coeffs.size());
  Eigen::Index idx = 0;
  for (Eigen::Index m = 0; m < coeffs.cols(); ++m)
    for (Eigen::Index b = 0; b < coeffs.rows(); ++b)
      v[idx++] = std::abs(coeffs(b, m));
  return v;
}

/// Probe-major [re, im] interleaving; the layout compose_weights assumes.
inline Eigen::VectorXd reim_features(const Eigen::MatrixXcd &coeffs) {
  Eigen::VectorXd v(2 * coeffs.size());
  Eigen::Index idx = 0;
  for (Eigen::Index m = 0; m < coeffs.cols(); ++m)
    for (Eigen::Index b = 0; b < coeffs.rows(); ++b) {
      v[idx++] = coeffs(b, m).real();
      v[idx++] = coeffs(b, m).imag();
    }
  return v;
}

struct BandSpec {
  double lo_hz = 0.0;
  double hi_hz = 0.0;
};

struct BandNormStats {
  double lo_hz = 0.0;
  double hi_hz = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Inclusive bin range [round(lo*n/rate), round(hi*n/rate)] of a band.
inline std::pair<int, int> band_bin_range(const BandSpec &band, int window_len,
                                          double rate) {
  return {bin_for_hz(band.lo_hz, window_len, rate),
          bin_for_hz(band.hi_hz, window_len, rate)};
}

/// Selector covering the union of the bands' bins (deduplicated, ascending).
inline FourierSelector selector_from_bands(const std::vector<BandSpec> &bands,
                                           int window_len, double rate,
                                           double window_start_s = 0.0) {
  FourierSelector sel;
  sel.window_start_s = window_start_s;
  sel.window_len = window_len;
  int prev = -1;
  for (const auto &band : bands) {
    auto [lo, hi] = band_bin_range(band, window_len, rate);
    for (int b = std::max(lo, prev + 1); b <= hi; ++b) {
      sel.selected_bins.push_back(b);
      prev = b;
    }
  }
  return sel;
}

/// Band index per feature (probe-major magnitude layout); first matching
/// band wins at shared boundary bins.
inline std::vector<int> band_of_features(const FourierSelector &sel,
                                         double rate,
                                         const std::vector<BandSpec> &bands,
                                         int n_probes) {
  std::vector<int> bin_band(sel.selected_bins.size(), -1);
  for (std::size_t b = 0; b < sel.selected_bins.size(); ++b) {
    const double hz = sel.selected_bins[b] * rate / sel.window_len;
    for (std::size_t band = 0; band < bands.size(); ++band) {
      auto [lo, hi] = band_bin_range(bands[band], sel.window_len, rate);
      if (sel.selected_bins[b] >= lo && sel.selected_bins[b] <= hi) {
        bin_band[b] = static_cast<int>(band);
        break;
      }
    }
    if (bin_band[b] < 0)
      throw ValidationError("selected bin at " + std::to_string(hz) +
                            " Hz belongs to no normalization band");
  }
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n_probes) * bin_band.size());
  for (int m = 0; m < n_probes; ++m)
    for (int band : bin_band) out.push_back(band);
  return out;
}

/// Training-set min/max per band over all samples and features of the band.
inline std::vector<BandNormStats>
fit_band_minmax(const Eigen::MatrixXd &train_features,
                const std::vector<int> &band_of_feature,
                const std::vector<BandSpec> &bands) {
  if (train_features.cols() != static_cast<Eigen::Index>(band_of_feature.size()))
    throw ValidationError("band map does not match feature count");
  std::vector<BandNormStats> stats(bands.size());
  for (std::size_t b = 0; b < bands.size(); ++b)
    stats[b] = {bands[b].lo_hz, bands[b].hi_hz, 1e300, -1e300};
  for (Eigen::Index c = 0; c < train_features.cols(); ++c) {
    auto &st = stats[band_of_feature[c]];
    st.min = std::min(st.min, train_features.col(c).minCoeff());
    st.max = std::max(st.max, train_features.col(c).maxCoeff());
  }
  return stats;
}

/// Affine map to [0,1] with the stored training statistics; test data may
/// land outside [0,1]. A degenerate band (max == min) maps to 0.5 and
/// reports a warning.
inline Eigen::MatrixXd
apply_band_minmax(const Eigen::MatrixXd &features,
                  const std::vector<int> &band_of_feature,
                  const std::vector<BandNormStats> &stats,
                  std::vector<std::string> *warnings = nullptr) {
  Eigen::MatrixXd out(features.rows(), features.cols());
  std::vector<bool> warned(stats.size(), false);
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    const auto &st = stats[band_of_feature[c]];
    const double span = st.max - st.min;
    if (span <= 0.0) {
      out.col(c).setConstant(0.5);
      if (warnings && !warned[band_of_feature[c]]) {
        warnings->push_back("degenerate min-max band " +
                            std::to_string(st.lo_hz) + "-" +
                            std::to_string(st.hi_hz) + " Hz mapped to 0.5");
        warned[band_of_feature[c]] = true;
      }
    } else {
      out.col(c) = (features.col(c).array() - st.min) / span;
    }
  }
  return out;
}

struct PcaProjection {
  Eigen::VectorXd mean;       // d
  Eigen::MatrixXd components; // d x k, orthonormal columns
  Eigen::VectorXd singular_values; // all min(n,d) values, descending

  bool empty() const { return components.size() == 0; }
  int k() const { return static_cast<int>(components.cols()); }

  Eigen::MatrixXd project(const Eigen::MatrixXd &rows) const {
    return (rows.rowwise() - mean.transpose()) * components;
  }
};

/// Mean-centered truncated SVD of the sample matrix (rows = samples).
inline PcaProjection fit_pca(const Eigen::MatrixXd &rows, int k) {
  if (rows.rows() < 2) throw ValidationError("PCA needs at least 2 samples");
  if (k < 1 || k > std::min(rows.rows(), rows.cols()))
    throw ValidationError("PCA component count out of range");
  PcaProjection p;
  p.mean = rows.colwise().mean();
  const Eigen::MatrixXd centered = rows.rowwise() - p.mean.transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  p.components = svd.matrixV().leftCols(k);
  p.singular_values = svd.singularValues();
  return p;
}

/// Ridge regression by normal equations, (X^T X + lambda I) W = X^T Y.
/// Verifies the residual gradient; a singular system with lambda = 0 fails
/// that check and is reported as such.
inline Eigen::MatrixXd fit_ridge(const Eigen::MatrixXd &X,
                                 const Eigen::MatrixXd &Y, double lambda) {
  if (X.rows() != Y.rows()) throw ValidationError("X and Y row mismatch");
  if (lambda < 0.0) throw ValidationError("lambda must be non-negative");
  if (X.rows() < X.cols() && lambda == 0.0)
    throw ValidationError("underdetermined system: use lambda > 0");
  Eigen::MatrixXd gram = X.transpose() * X;
  gram.diagonal().array() += lambda;
  const Eigen::MatrixXd rhs = X.transpose() * Y;
  const auto ldlt = gram.ldlt();
  if (lambda == 0.0) {
    const auto d = ldlt.vectorD();
    const double dmax = d.maxCoeff();
    if (!(dmax > 0.0) || d.minCoeff() <= dmax * 1e-10)
      throw ValidationError(
          "singular normal equations (rank-deficient X): use lambda > 0");
  }
  const Eigen::MatrixXd W = ldlt.solve(rhs);
  const double resid = (X.transpose() * (X * W - Y) + lambda * W).norm();
  if (!(resid <= 1e-8 * std::max(rhs.norm(), 1e-30)))
    throw ValidationError(
        "ridge normal equations are numerically singular: use lambda > 0");
  return W;
}

/// Ridge with an unpenalized intercept via centering.
struct RidgeModel {
  Eigen::MatrixXd weights; // d x outputs
  Eigen::RowVectorXd bias; // outputs

  Eigen::MatrixXd predict(const Eigen::MatrixXd &X) const {
    return (X * weights).rowwise() + bias;
  }
};

inline RidgeModel fit_ridge_with_intercept(const Eigen::MatrixXd &X,
                                           const Eigen::MatrixXd &Y,
                                           double lambda) {
  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const Eigen::RowVectorXd y_mean = Y.colwise().mean();
  RidgeModel m;
  m.weights = fit_ridge(X.rowwise() - x_mean, Y.rowwise() - y_mean, lambda);
  m.bias = y_mean - x_mean * m.weights;
  return m;
}

/// One-vs-rest linear SVM trained by deterministic full-batch subgradient
/// descent with backtracking (the recorded epoch objective is monotonically
/// non-increasing) and tail-averaged iterates.
struct SvmModel {
  Eigen::MatrixXd weights; // classes x d
  Eigen::VectorXd bias;    // classes
  std::vector<double> epoch_objectives;

  int predict(const Eigen::VectorXd &x) const {
    Eigen::Index best;
    (weights * x + bias).maxCoeff(&best);
    return static_cast<int>(best);
  }

  std::vector<int> predict_rows(const Eigen::MatrixXd &X) const {
    std::vector<int> out(X.rows());
    for (Eigen::Index r = 0; r < X.rows(); ++r)
      out[r] = predict(X.row(r).transpose());
    return out;
  }
};

inline SvmModel fit_linear_svm(const Eigen::MatrixXd &X,
                               const std::vector<int> &labels, double c_reg,
                               int epochs, std::uint64_t seed) {
  const Eigen::Index n = X.rows(), d = X.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw ValidationError("label count does not match sample count");
  int n_classes = 0;
  for (int y : labels) {
    if (y < 0) throw ValidationError("labels must be in 0..C-1");
    n_classes = std::max(n_classes, y + 1);
  }
  std::vector<int> counts(n_classes, 0);
  for (int y : labels) counts[y]++;
  int present = 0;
  for (int c : counts) present += c > 0;
  if (present < 2) throw ValidationError("need at least 2 classes to train");
  if (!(c_reg > 0.0)) throw ValidationError("c_reg must be positive");

  const double lambda = 1.0 / (c_reg * static_cast<double>(n));
  // signed targets, classes x samples
  Eigen::MatrixXd Ysign(n_classes, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int c = 0; c < n_classes; ++c)
      Ysign(c, i) = labels[i] == c ? 1.0 : -1.0;

  // zero init keeps the optimizer exactly symmetric under class relabeling;
  // the seed is recorded with the model but full-batch descent needs no draw
  (void)seed;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n_classes, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n_classes);

  auto objective = [&](const Eigen::MatrixXd &w, const Eigen::VectorXd &bb) {
    const Eigen::MatrixXd scores =
        (w * X.transpose()).colwise() + bb; // classes x samples
    const Eigen::ArrayXXd hinge =
        (1.0 - Ysign.array() * scores.array()).max(0.0);
    return 0.5 * lambda * w.squaredNorm() + hinge.sum() / double(n);
  };

  SvmModel model;
  model.epoch_objectives.reserve(epochs);
  double J = objective(W, b);
  double lr = 1.0;

  Eigen::MatrixXd W_avg = Eigen::MatrixXd::Zero(n_classes, d);
  Eigen::VectorXd b_avg = Eigen::VectorXd::Zero(n_classes);
  int avg_count = 0;
  const int tail_start = epochs / 2;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    const Eigen::MatrixXd scores = (W * X.transpose()).colwise() + b;
    const Eigen::ArrayXXd active =
        ((1.0 - Ysign.array() * scores.array()) > 0.0).cast<double>();
    const Eigen::MatrixXd coeff = -(active * Ysign.array()).matrix() / double(n);
    const Eigen::MatrixXd gW = lambda * W + coeff * X;
    const Eigen::VectorXd gb = coeff.rowwise().sum();

    // backtracking keeps the recorded objective monotone
    for (;;) {
      const Eigen::MatrixXd Wc = W - lr * gW;
      const Eigen::VectorXd bc = b - lr * gb;
      const double Jc = objective(Wc, bc);
      if (Jc <= J || lr < 1e-14) {
        if (Jc <= J) {
          W = Wc;
          b = bc;
          J = Jc;
        }
        break;
      }
      lr *= 0.5;
    }
    lr *= 1.05;
    model.epoch_objectives.push_back(J);
    if (epoch >= tail_start) {
      W_avg += W;
      b_avg += b;
      ++avg_count;
    }
  }

  model.weights = W_avg / double(avg_count);
  model.bias = b_avg / double(avg_count);
  return model;
}

enum class ModelKind { Ridge, LinearSvm };

/// Trained decision layer plus everything needed to reproduce its feature
/// pipeline on new records.
struct ReadoutModel {
  FourierSelector selector;
  double sample_rate_hz = 16000.0;
  std::vector<BandSpec> bands;
  std::vector<BandNormStats> band_norms;
  PcaProjection pca;
  Eigen::MatrixXd weights; // outputs x features
  Eigen::VectorXd bias;    // outputs
  ModelKind kind = ModelKind::Ridge;
  std::uint64_t seed = 0;
  bool magnitude_features = true;
  int n_probes = 0;

  int trainable_parameters() const {
    return static_cast<int>(weights.size() + bias.size());
  }

  void validate() const {
    if (!pca.empty()) {
      const Eigen::MatrixXd gram =
          pca.components.transpose() * pca.components;
      const double err =
          (gram - Eigen::MatrixXd::Identity(pca.k(), pca.k())).norm();
      if (err > 1e-8)
        throw ValidationError("PCA components are not orthonormal");
    }
    for (std::size_t b = 1; b < band_norms.size(); ++b)
      if (band_norms[b].lo_hz < band_norms[b - 1].hi_hz)
        throw ValidationError("normalization bands overlap");
    const int feat = pca.empty()
                         ? n_probes * static_cast<int>(selector.selected_bins.size()) *
                               (magnitude_features ? 1 : 2)
                         : pca.k();
    if (weights.size() > 0 && weights.cols() != feat)
      throw ValidationError("weight matrix does not match feature dims");
  }
};

/// The Eq.-4 composition: one real operator on raw windowed samples equal to
/// W applied to vec(F_s X) with re/im feature splitting. Exact only for the
/// linear-feature pipeline; magnitude or PCA or normalization stages are
/// rejected.
struct ComposedReadout {
  Eigen::MatrixXd flat; // outputs x (probes*window_len)
  Eigen::VectorXd bias;
  int window_len = 0;
  int n_probes = 0;

  /// Apply to raw windowed samples, column-stacked probe-major.
  Eigen::VectorXd apply(const Eigen::VectorXd &stacked) const {
    return flat * stacked + bias;
  }
};

inline ComposedReadout compose_weights(const ReadoutModel &model) {
  if (model.magnitude_features)
    throw ValidationError(
        "composition is undefined for magnitude (|.|) feature pipelines");
  if (!model.pca.empty())
    throw ValidationError("composition is undefined with a PCA stage");
  if (!model.band_norms.empty())
    throw ValidationError("composition is undefined with normalization stages");
  const int n = model.selector.window_len;
  const int n_bins = static_cast<int>(model.selector.selected_bins.size());
  const int outputs = static_cast<int>(model.weights.rows());
  if (model.weights.cols() != 2L * n_bins * model.n_probes)
    throw ValidationError("weight matrix does not match re/im feature dims");

  ComposedReadout out;
  out.window_len = n;
  out.n_probes = model.n_probes;
  out.bias = model.bias;
  out.flat = Eigen::MatrixXd::Zero(outputs, static_cast<Eigen::Index>(n) *
                                                model.n_probes);
  for (int m = 0; m < model.n_probes; ++m)
    for (int bidx = 0; bidx < n_bins; ++bidx) {
      const int j = model.selector.selected_bins[bidx];
      const Eigen::Index col_re = Eigen::Index(m) * 2 * n_bins + 2 * bidx;
      for (int k = 0; k < n; ++k) {
        const double theta = -2.0 * std::numbers::pi * double(j) * k / n;
        const double re = std::cos(theta), im = std::sin(theta);
        for (int o = 0; o < outputs; ++o)
          out.flat(o, Eigen::Index(m) * n + k) +=
              model.weights(o, col_re) * re + model.weights(o, col_re + 1) * im;
      }
    }
  return out;
}

} // namespace cavityrc
