#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "cavityrc/model_io.hpp"
#include "cavityrc/readout.hpp"
#include "cavityrc/rng.hpp"
#include "support/oracles.hpp"

using namespace cavityrc;

namespace {

std::vector<ProbeRecord> random_records(int n_probes, int len, double rate,
                                        std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<ProbeRecord> recs(n_probes);
  for (int m = 0; m < n_probes; ++m) {
    recs[m].label = "p" + std::to_string(m);
    recs[m].sample_rate_hz = rate;
    recs[m].samples.resize(len);
    for (double &v : recs[m].samples) v = uniform(gen, -1.0, 1.0);
  }
  return recs;
}

std::filesystem::path tmp_path(const std::string &name) {
  auto dir = std::filesystem::temp_directory_path() / "cavityrc_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

} // namespace

TEST_CASE("fourier features of a unit impulse are flat", "[readout][dft]") {
  ProbeRecord r;
  r.label = "imp";
  r.sample_rate_hz = 16000.0;
  r.samples.assign(128, 0.0);
  r.samples[0] = 1.0;
  FourierSelector sel{0.0, 128, {0, 1, 5, 33, 127}};
  auto F = fourier_features({r}, sel);
  for (Eigen::Index b = 0; b < F.rows(); ++b) {
    CHECK(F(b, 0).real() == Catch::Approx(1.0).margin(1e-12));
    CHECK(F(b, 0).imag() == Catch::Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("fourier features of an exact-bin sinusoid", "[readout][dft]") {
  const int n = 256;
  ProbeRecord r;
  r.sample_rate_hz = 16000.0;
  r.samples.resize(n);
  const int j0 = 12; // integer periods in the window
  for (int k = 0; k < n; ++k)
    r.samples[k] = std::sin(2.0 * std::numbers::pi * j0 * k / double(n));
  std::vector<int> bins(n);
  for (int k = 0; k < n; ++k) bins[k] = k;
  auto F = fourier_features({r}, {0.0, n, bins});
  for (int b = 0; b < n; ++b) {
    const double mag = std::abs(F(b, 0));
    if (b == j0 || b == n - j0)
      CHECK(mag == Catch::Approx(n / 2.0).epsilon(1e-9));
    else
      CHECK(mag < 1e-9 * n);
  }
}

TEST_CASE("fourier features match the brute-force DFT oracle",
          "[readout][dft][oracle]") {
  for (int n : {64, 256, 4096}) {
    auto recs = random_records(3, n + 32, 16000.0, 1000 + n);
    FourierSelector sel;
    sel.window_start_s = 16.0 / 16000.0;
    sel.window_len = n;
    sel.selected_bins = {3, 7, 11, n / 2 - 1};
    auto F = fourier_features(recs, sel);
    for (std::size_t m = 0; m < recs.size(); ++m)
      for (std::size_t b = 0; b < sel.selected_bins.size(); ++b) {
        const auto want = testsupport::naive_dft_bin(
            recs[m].samples.data() + 16, n, sel.selected_bins[b]);
        CHECK(std::abs(F(b, m) - want) <= 1e-10 * std::max(1.0, std::abs(want)));
      }
  }
}

TEST_CASE("fourier features validation", "[readout][dft]") {
  auto recs = random_records(2, 100, 16000.0, 5);
  recs[1].samples.resize(99);
  CHECK_THROWS_AS(fourier_features(recs, {0.0, 64, {1, 2}}), ValidationError);
  auto ok = random_records(2, 100, 16000.0, 5);
  CHECK_THROWS_AS(fourier_features(ok, {0.0, 128, {1, 2}}), ValidationError);
  CHECK_THROWS_AS(fourier_features(ok, {0.0, 64, {2, 1}}), ValidationError);
  CHECK_THROWS_AS(fourier_features(ok, {0.0, 64, {1, 64}}), ValidationError);
}

TEST_CASE("composed operator equals the staged pipeline", "[readout][compose]") {
  std::mt19937_64 gen(77);
  const int n = 256, probes = 10, bins = 6, outputs = 4;

  ReadoutModel model;
  model.selector = {0.0, n, {1, 9, 17, 40, 77, 120}};
  model.magnitude_features = false;
  model.n_probes = probes;
  model.sample_rate_hz = 16000.0;
  model.weights = Eigen::MatrixXd(outputs, 2 * bins * probes);
  for (Eigen::Index r = 0; r < model.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < model.weights.cols(); ++c)
      model.weights(r, c) = uniform(gen, -1.0, 1.0);
  model.bias = Eigen::VectorXd::Zero(outputs);
  for (Eigen::Index r = 0; r < outputs; ++r) model.bias(r) = uniform(gen, -1, 1);

  const auto flat = compose_weights(model);

  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto recs = random_records(probes, n, 16000.0, 9000 + trial);
    const Eigen::VectorXd staged =
        model.weights * reim_features(fourier_features(recs, model.selector)) +
        model.bias;
    Eigen::VectorXd stacked(probes * n);
    for (int m = 0; m < probes; ++m)
      for (int k = 0; k < n; ++k)
        stacked[m * n + k] = recs[m].samples[k];
    const Eigen::VectorXd direct = flat.apply(stacked);
    worst = std::max(worst,
                     (direct - staged).norm() / std::max(staged.norm(), 1e-30));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("composed operator edge cases", "[readout][compose]") {
  const int n = 64;
  ReadoutModel model;
  model.selector = {0.0, n, {3, 5}};
  model.magnitude_features = false;
  model.n_probes = 1;
  // identity weights: outputs are the raw re/im features themselves
  model.weights = Eigen::MatrixXd::Identity(4, 4);
  model.bias = Eigen::VectorXd::Zero(4);
  auto flat = compose_weights(model);
  for (int k = 0; k < n; ++k) {
    CHECK(flat.flat(0, k) ==
          Catch::Approx(std::cos(-2.0 * std::numbers::pi * 3 * k / n)).margin(1e-12));
    CHECK(flat.flat(1, k) ==
          Catch::Approx(std::sin(-2.0 * std::numbers::pi * 3 * k / n)).margin(1e-12));
    CHECK(flat.flat(2, k) ==
          Catch::Approx(std::cos(-2.0 * std::numbers::pi * 5 * k / n)).margin(1e-12));
  }

  model.weights.setZero();
  auto zero = compose_weights(model);
  CHECK(zero.flat.norm() == 0.0);

  ReadoutModel bad = model;
  bad.magnitude_features = true;
  CHECK_THROWS_AS(compose_weights(bad), ValidationError);
  bad = model;
  bad.pca.components = Eigen::MatrixXd::Identity(4, 2);
  bad.pca.mean = Eigen::VectorXd::Zero(4);
  CHECK_THROWS_AS(compose_weights(bad), ValidationError);
  bad = model;
  bad.band_norms.push_back({10.0, 1000.0, 0.0, 1.0});
  CHECK_THROWS_AS(compose_weights(bad), ValidationError);
}

TEST_CASE("ridge: closed forms and planted solutions", "[readout][ridge]") {
  std::mt19937_64 gen(31);
  // orthonormal X via QR
  Eigen::MatrixXd A(12, 4);
  for (Eigen::Index r = 0; r < A.rows(); ++r)
    for (Eigen::Index c = 0; c < A.cols(); ++c) A(r, c) = uniform(gen, -1, 1);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  Eigen::MatrixXd X =
      qr.householderQ() * Eigen::MatrixXd::Identity(12, 4);
  Eigen::MatrixXd y(12, 1);
  for (Eigen::Index r = 0; r < 12; ++r) y(r, 0) = uniform(gen, -1, 1);
  const Eigen::MatrixXd w0 = fit_ridge(X, y, 0.0);
  CHECK((w0 - X.transpose() * y).norm() < 1e-10);

  // planted exact solution, full column rank
  Eigen::MatrixXd X2(20, 5), wstar(5, 1);
  for (Eigen::Index r = 0; r < 20; ++r)
    for (Eigen::Index c = 0; c < 5; ++c) X2(r, c) = uniform(gen, -1, 1);
  for (Eigen::Index c = 0; c < 5; ++c) wstar(c, 0) = uniform(gen, -2, 2);
  const Eigen::MatrixXd w = fit_ridge(X2, X2 * wstar, 0.0);
  CHECK((w - wstar).norm() < 1e-8);

  // lambda -> infinity drives weights to zero
  const Eigen::MatrixXd wbig = fit_ridge(X2, X2 * wstar, 1e12);
  CHECK(wbig.norm() < 1e-6);

  // singular system with lambda = 0 is rejected with advice
  Eigen::MatrixXd Xs(10, 3);
  for (Eigen::Index r = 0; r < 10; ++r) {
    Xs(r, 0) = uniform(gen, -1, 1);
    Xs(r, 1) = 2.0 * Xs(r, 0); // exact collinearity
    Xs(r, 2) = uniform(gen, -1, 1);
  }
  Eigen::MatrixXd ys = Xs.col(2);
  CHECK_THROWS_WITH(fit_ridge(Xs, ys, 0.0),
                    Catch::Matchers::ContainsSubstring("lambda"));
  CHECK_NOTHROW(fit_ridge(Xs, ys, 1e-6));
}

TEST_CASE("ridge matches a gradient-descent oracle", "[readout][ridge][oracle]") {
  std::mt19937_64 gen(55);
  for (int trial = 0; trial < 5; ++trial) {
    const int nr = 30, nc = 4;
    Eigen::MatrixXd X(nr, nc), y(nr, 1);
    for (Eigen::Index r = 0; r < nr; ++r) {
      for (Eigen::Index c = 0; c < nc; ++c) X(r, c) = uniform(gen, -1, 1);
      y(r, 0) = uniform(gen, -1, 1);
    }
    const double lambda = 0.1;
    const Eigen::MatrixXd w_ne = fit_ridge(X, y, lambda);

    // plain gradient descent on ||Xw-y||^2 + lambda ||w||^2
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(nc, 1);
    const double lr = 0.5 / (X.squaredNorm() + lambda);
    for (int it = 0; it < 200000; ++it) {
      const Eigen::MatrixXd g =
          2.0 * (X.transpose() * (X * w - y) + lambda * w);
      w -= lr * g;
      if (g.norm() < 1e-12) break;
    }
    CHECK((w - w_ne).norm() < 1e-6);
  }
}

TEST_CASE("ridge with intercept nails a constant target", "[readout][ridge]") {
  std::mt19937_64 gen(3);
  Eigen::MatrixXd X(40, 6);
  for (Eigen::Index r = 0; r < 40; ++r)
    for (Eigen::Index c = 0; c < 6; ++c) X(r, c) = uniform(gen, -1, 1);
  Eigen::MatrixXd y = Eigen::MatrixXd::Constant(40, 1, 0.7321);
  auto m = fit_ridge_with_intercept(X, y, 1e-3);
  const Eigen::MatrixXd pred = m.predict(X);
  CHECK((pred - y).norm() / y.norm() < 1e-9);
}

TEST_CASE("pca: exact subspaces and planted spectra", "[readout][pca][oracle]") {
  std::mt19937_64 gen(21);
  // points on an exact 1D line in 3D
  Eigen::MatrixXd line(15, 3);
  const Eigen::RowVector3d dir(0.36, -0.48, 0.8);
  for (Eigen::Index r = 0; r < 15; ++r)
    line.row(r) = uniform(gen, -2, 2) * dir + Eigen::RowVector3d(1.0, 2.0, 3.0);
  auto p1 = fit_pca(line, 1);
  const Eigen::MatrixXd recon =
      (p1.project(line) * p1.components.transpose()).rowwise() +
      p1.mean.transpose();
  CHECK((recon - line).norm() < 1e-10);

  // full rank retained: perfect reconstruction
  Eigen::MatrixXd X(20, 8);
  for (Eigen::Index r = 0; r < 20; ++r)
    for (Eigen::Index c = 0; c < 8; ++c) X(r, c) = uniform(gen, -1, 1);
  auto p8 = fit_pca(X, 8);
  const Eigen::MatrixXd recon8 =
      (p8.project(X) * p8.components.transpose()).rowwise() +
      p8.mean.transpose();
  CHECK((recon8 - X).norm() < 1e-9 * X.norm());

  // planted singular values (5,3,1) on zero-mean factors
  const int n = 24, r = 3;
  Eigen::MatrixXd U0(n, r), V0(6, r);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < r; ++j) U0(i, j) = uniform(gen, -1, 1);
  U0.rowwise() -= U0.colwise().mean(); // columns orthogonal to ones
  for (Eigen::Index i = 0; i < 6; ++i)
    for (Eigen::Index j = 0; j < r; ++j) V0(i, j) = uniform(gen, -1, 1);
  const Eigen::MatrixXd U =
      Eigen::HouseholderQR<Eigen::MatrixXd>(U0).householderQ() *
      Eigen::MatrixXd::Identity(n, r);
  const Eigen::MatrixXd V =
      Eigen::HouseholderQR<Eigen::MatrixXd>(V0).householderQ() *
      Eigen::MatrixXd::Identity(6, r);
  Eigen::Vector3d sv(5.0, 3.0, 1.0);
  const Eigen::MatrixXd planted = U * sv.asDiagonal() * V.transpose();

  auto p2 = fit_pca(planted, 2);
  const double total = planted.squaredNorm();
  const double captured = p2.singular_values.head(2).squaredNorm();
  CHECK(captured / total == Catch::Approx((25.0 + 9.0) / 35.0).epsilon(1e-8));

  // reconstruction error equals the discarded spectrum
  const Eigen::MatrixXd recon2 =
      (p2.project(planted) * p2.components.transpose()).rowwise() +
      p2.mean.transpose();
  CHECK((recon2 - planted).squaredNorm() == Catch::Approx(1.0).epsilon(1e-8));

  // independent Jacobi oracle on the centered Gram matrix
  const Eigen::MatrixXd C = planted; // already zero-mean by construction
  const Eigen::MatrixXd G = C.transpose() * C;
  std::vector<std::vector<double>> a(6, std::vector<double>(6));
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) a[i][j] = G(i, j);
  auto ev = testsupport::jacobi_eigenvalues(a);
  CHECK(std::sqrt(ev[0]) == Catch::Approx(5.0).epsilon(1e-8));
  CHECK(std::sqrt(ev[1]) == Catch::Approx(3.0).epsilon(1e-8));
  CHECK(std::sqrt(ev[2]) == Catch::Approx(1.0).epsilon(1e-8));
  for (int k = 0; k < 3; ++k)
    CHECK(p2.singular_values(k) == Catch::Approx(std::sqrt(ev[k])).epsilon(1e-8));

  // invariants: orthonormal components, descending variance
  auto pinv = fit_pca(X, 5);
  const Eigen::MatrixXd gram = pinv.components.transpose() * pinv.components;
  CHECK((gram - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-10);
  for (Eigen::Index k = 1; k < pinv.singular_values.size(); ++k)
    CHECK(pinv.singular_values(k) <= pinv.singular_values(k - 1) + 1e-12);

  CHECK_THROWS_AS(fit_pca(X, 0), ValidationError);
  CHECK_THROWS_AS(fit_pca(X, 9), ValidationError);
}

TEST_CASE("svm: separable blobs, XOR ceiling, symmetry", "[readout][svm]") {
  std::mt19937_64 gen(13);
  // two separable blobs
  Eigen::MatrixXd X(40, 2);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) {
    const int cls = i % 2;
    X(i, 0) = (cls ? 3.0 : -3.0) + uniform(gen, -0.5, 0.5);
    X(i, 1) = uniform(gen, -0.5, 0.5);
    y[i] = cls;
  }
  auto m = fit_linear_svm(X, y, 10.0, 300, 1);
  auto pred = m.predict_rows(X);
  int correct = 0;
  for (int i = 0; i < 40; ++i) correct += pred[i] == y[i];
  CHECK(correct == 40);

  // monotone epoch objective
  for (std::size_t e = 1; e < m.epoch_objectives.size(); ++e)
    CHECK(m.epoch_objectives[e] <= m.epoch_objectives[e - 1] + 1e-12);

  // XOR: best linear classifier gets 3 of 4
  Eigen::MatrixXd Xx(4, 2);
  Xx << 0, 0, 0, 1, 1, 0, 1, 1;
  std::vector<int> yx{0, 1, 1, 0};
  auto mx = fit_linear_svm(Xx, yx, 100.0, 500, 1);
  auto px = mx.predict_rows(Xx);
  int cx = 0;
  for (int i = 0; i < 4; ++i) cx += px[i] == yx[i];
  CHECK(cx <= 3);

  // permuted class names permute predictions
  Eigen::MatrixXd X3(60, 3);
  std::vector<int> y3(60);
  for (int i = 0; i < 60; ++i) {
    const int cls = i % 3;
    for (int c = 0; c < 3; ++c)
      X3(i, c) = (c == cls ? 2.0 : 0.0) + uniform(gen, -0.8, 0.8);
    y3[i] = cls;
  }
  auto base = fit_linear_svm(X3, y3, 10.0, 200, 9);
  const int perm[3] = {2, 0, 1};
  std::vector<int> yp(60);
  for (int i = 0; i < 60; ++i) yp[i] = perm[y3[i]];
  auto permuted = fit_linear_svm(X3, yp, 10.0, 200, 9);
  auto pb = base.predict_rows(X3);
  auto pp = permuted.predict_rows(X3);
  for (int i = 0; i < 60; ++i) CHECK(pp[i] == perm[pb[i]]);

  // argmax invariance under positive rescaling of all scores
  SvmModel scaled = base;
  scaled.weights *= 7.3;
  scaled.bias *= 7.3;
  auto ps = scaled.predict_rows(X3);
  for (int i = 0; i < 60; ++i) CHECK(ps[i] == pb[i]);

  // single-class labels are rejected
  std::vector<int> ones(40, 1);
  CHECK_THROWS_AS(fit_linear_svm(X, ones, 1.0, 10, 0), ValidationError);
}

TEST_CASE("band min-max normalization", "[readout][bands]") {
  // single band, values {2,4,6} -> {0, 0.5, 1}
  Eigen::MatrixXd X(3, 1);
  X << 2, 4, 6;
  std::vector<int> bof{0};
  std::vector<BandSpec> bands{{10.0, 1000.0}};
  auto stats = fit_band_minmax(X, bof, bands);
  auto norm = apply_band_minmax(X, bof, stats);
  CHECK(norm(0, 0) == Catch::Approx(0.0));
  CHECK(norm(1, 0) == Catch::Approx(0.5));
  CHECK(norm(2, 0) == Catch::Approx(1.0));

  // two bands are independent: scaling one leaves the other unchanged
  Eigen::MatrixXd X2(3, 2);
  X2 << 2, 10, 4, 20, 6, 30;
  std::vector<int> bof2{0, 1};
  std::vector<BandSpec> bands2{{10.0, 1000.0}, {1000.0, 3500.0}};
  auto s2 = fit_band_minmax(X2, bof2, bands2);
  auto n2 = apply_band_minmax(X2, bof2, s2);
  Eigen::MatrixXd X2s = X2;
  X2s.col(1) *= 10.0;
  auto s2s = fit_band_minmax(X2s, bof2, bands2);
  auto n2s = apply_band_minmax(X2s, bof2, s2s);
  CHECK((n2.col(0) - n2s.col(0)).norm() == 0.0);

  // degenerate band maps to 0.5 with a warning
  Eigen::MatrixXd Xc = Eigen::MatrixXd::Constant(4, 1, 3.3);
  auto sc = fit_band_minmax(Xc, bof, bands);
  std::vector<std::string> warnings;
  auto nc = apply_band_minmax(Xc, bof, sc, &warnings);
  CHECK(nc.minCoeff() == 0.5);
  CHECK(nc.maxCoeff() == 0.5);
  REQUIRE(warnings.size() == 1);

  // test data mapped with training statistics may exit [0,1]
  Eigen::MatrixXd Xt(1, 1);
  Xt << 8.0;
  auto nt = apply_band_minmax(Xt, bof, stats);
  CHECK(nt(0, 0) == Catch::Approx(1.5));
}

TEST_CASE("band bin ranges at the vowel analysis window", "[readout][bands]") {
  // 4096-sample window at 16 kHz: bin = round(f*n/rate)
  auto [lo1, hi1] = band_bin_range({10.0, 1000.0}, 4096, 16000.0);
  auto [lo2, hi2] = band_bin_range({1000.0, 3500.0}, 4096, 16000.0);
  CHECK(lo1 == 3);
  CHECK(hi1 == 256);
  CHECK(lo2 == 256);
  CHECK(hi2 == 896);

  auto sel = selector_from_bands({{10.0, 1000.0}, {1000.0, 3500.0}}, 4096,
                                 16000.0);
  CHECK(sel.selected_bins.front() == 3);
  CHECK(sel.selected_bins.back() == 896);
  // boundary bin appears once
  CHECK(std::count(sel.selected_bins.begin(), sel.selected_bins.end(), 256) == 1);
  CHECK(sel.selected_bins.size() == 894);

  auto bof = band_of_features(sel, 16000.0, {{10.0, 1000.0}, {1000.0, 3500.0}}, 2);
  CHECK(bof.size() == 2 * 894);
  CHECK(bof[0] == 0);
  CHECK(bof[893] == 1);
}

TEST_CASE("model persistence round trip", "[readout][io]") {
  std::mt19937_64 gen(5);
  ReadoutModel m;
  m.kind = ModelKind::LinearSvm;
  m.seed = 424242;
  m.magnitude_features = true;
  m.sample_rate_hz = 16000.0;
  m.n_probes = 4;
  m.selector = {0.05, 512, {3, 9, 27, 81}};
  m.bands = {{10.0, 1000.0}, {1000.0, 3500.0}};
  m.band_norms = {{10.0, 1000.0, 0.2, 4.5}, {1000.0, 3500.0, 0.01, 2.25}};
  m.pca.mean = Eigen::VectorXd::Random(16);
  Eigen::MatrixXd A = Eigen::MatrixXd::Random(16, 3);
  m.pca.components = Eigen::HouseholderQR<Eigen::MatrixXd>(A).householderQ() *
                     Eigen::MatrixXd::Identity(16, 3);
  m.pca.singular_values = Eigen::VectorXd::Random(16).cwiseAbs();
  std::sort(m.pca.singular_values.data(),
            m.pca.singular_values.data() + 16, std::greater<double>());
  m.weights = Eigen::MatrixXd::Random(3, 3);
  m.bias = Eigen::VectorXd::Random(3);

  const auto p = tmp_path("model.bin");
  save_model(p, m);
  auto back = load_model(p);

  CHECK(back.kind == ModelKind::LinearSvm);
  CHECK(back.seed == 424242);
  CHECK(back.magnitude_features == true);
  CHECK(back.n_probes == 4);
  CHECK(back.selector.window_len == 512);
  CHECK(back.selector.selected_bins == m.selector.selected_bins);
  REQUIRE(back.band_norms.size() == 2);
  CHECK(back.band_norms[1].max == m.band_norms[1].max);
  CHECK((back.pca.mean - m.pca.mean).norm() == 0.0);       // bit-exact arrays
  CHECK((back.pca.components - m.pca.components).norm() == 0.0);
  CHECK((back.weights - m.weights).norm() == 0.0);
  CHECK((back.bias - m.bias).norm() == 0.0);
  CHECK_NOTHROW(back.validate());

  CHECK_THROWS_AS(load_model(tmp_path("missing.bin")), ValidationError);
}

TEST_CASE("vowel-scale readout stays within the parameter budget",
          "[readout][invariant]") {
  // 3 classes, PCA to 65 components: 3*(65+1) trainable parameters
  ReadoutModel m;
  m.weights = Eigen::MatrixXd::Zero(3, 65);
  m.bias = Eigen::VectorXd::Zero(3);
  CHECK(m.trainable_parameters() == 198);
  CHECK(m.trainable_parameters() <= 200);
}
