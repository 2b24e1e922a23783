#pragma once

#include <cstring>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "cavityrc/io.hpp"
#include "cavityrc/readout.hpp"

namespace cavityrc {

// Single-file model container: a text magic line, a JSON header describing
// the pipeline and the array shapes, a NUL separator, then the arrays as raw
// little-endian float64 in header order.

namespace detail {

constexpr const char *kModelMagic = "CAVITYRC-MODEL 1\n";

inline void append_array(std::string &out, const Eigen::MatrixXd &m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      for (int b = 0; b < 8; ++b) out.push_back(char((bits >> (8 * b)) & 0xff));
    }
}

inline Eigen::MatrixXd take_array(const std::string &in, std::size_t &pos,
                                  Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  if (pos + std::size_t(rows) * cols * 8 > in.size())
    throw ValidationError("model file truncated");
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b)
        bits |= std::uint64_t(std::uint8_t(in[pos + b])) << (8 * b);
      pos += 8;
      double v;
      std::memcpy(&v, &bits, 8);
      m(r, c) = v;
    }
  return m;
}

} // namespace detail

inline void save_model(const std::filesystem::path &path,
                       const ReadoutModel &model) {
  nlohmann::json hdr;
  hdr["schema_version"] = 1;
  hdr["kind"] = model.kind == ModelKind::Ridge ? "ridge" : "linear_svm";
  hdr["seed"] = model.seed;
  hdr["magnitude_features"] = model.magnitude_features;
  hdr["sample_rate_hz"] = model.sample_rate_hz;
  hdr["n_probes"] = model.n_probes;
  hdr["selector"] = {{"window_start_s", model.selector.window_start_s},
                     {"window_len", model.selector.window_len},
                     {"selected_bins", model.selector.selected_bins}};
  nlohmann::json bands = nlohmann::json::array();
  for (const auto &b : model.bands)
    bands.push_back({{"lo_hz", b.lo_hz}, {"hi_hz", b.hi_hz}});
  hdr["bands"] = bands;
  nlohmann::json norms = nlohmann::json::array();
  for (const auto &b : model.band_norms)
    norms.push_back({{"lo_hz", b.lo_hz},
                     {"hi_hz", b.hi_hz},
                     {"min", b.min},
                     {"max", b.max}});
  hdr["band_norms"] = norms;
  auto shape = [](const Eigen::MatrixXd &m) {
    return nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()}};
  };
  hdr["arrays"] = {{"pca_mean", shape(model.pca.mean)},
                   {"pca_components", shape(model.pca.components)},
                   {"pca_singular_values", shape(model.pca.singular_values)},
                   {"weights", shape(model.weights)},
                   {"bias", shape(model.bias)}};

  std::string out = detail::kModelMagic;
  out += hdr.dump();
  out.push_back('\0');
  detail::append_array(out, model.pca.mean);
  detail::append_array(out, model.pca.components);
  detail::append_array(out, model.pca.singular_values);
  detail::append_array(out, model.weights);
  detail::append_array(out, model.bias);
  write_file(path, out);
}

inline ReadoutModel load_model(const std::filesystem::path &path) {
  const std::string in = read_file(path);
  const std::string magic = detail::kModelMagic;
  if (in.compare(0, magic.size(), magic) != 0)
    throw ValidationError("not a cavityrc model file: " + path.string());
  const auto nul = in.find('\0', magic.size());
  if (nul == std::string::npos)
    throw ValidationError("model header is unterminated");
  const nlohmann::json hdr =
      nlohmann::json::parse(in.substr(magic.size(), nul - magic.size()));

  ReadoutModel m;
  m.kind = hdr.at("kind") == "ridge" ? ModelKind::Ridge : ModelKind::LinearSvm;
  m.seed = hdr.at("seed").get<std::uint64_t>();
  m.magnitude_features = hdr.at("magnitude_features").get<bool>();
  m.sample_rate_hz = hdr.at("sample_rate_hz").get<double>();
  m.n_probes = hdr.at("n_probes").get<int>();
  m.selector.window_start_s = hdr.at("selector").at("window_start_s").get<double>();
  m.selector.window_len = hdr.at("selector").at("window_len").get<int>();
  m.selector.selected_bins =
      hdr.at("selector").at("selected_bins").get<std::vector<int>>();
  for (const auto &b : hdr.at("bands"))
    m.bands.push_back({b.at("lo_hz").get<double>(), b.at("hi_hz").get<double>()});
  for (const auto &b : hdr.at("band_norms"))
    m.band_norms.push_back({b.at("lo_hz").get<double>(),
                            b.at("hi_hz").get<double>(),
                            b.at("min").get<double>(),
                            b.at("max").get<double>()});

  std::size_t pos = nul + 1;
  auto rows = [&](const char *name) {
    return hdr.at("arrays").at(name).at("rows").get<Eigen::Index>();
  };
  auto cols = [&](const char *name) {
    return hdr.at("arrays").at(name).at("cols").get<Eigen::Index>();
  };
  m.pca.mean = detail::take_array(in, pos, rows("pca_mean"), cols("pca_mean"));
  m.pca.components =
      detail::take_array(in, pos, rows("pca_components"), cols("pca_components"));
  m.pca.singular_values = detail::take_array(
      in, pos, rows("pca_singular_values"), cols("pca_singular_values"));
  m.weights = detail::take_array(in, pos, rows("weights"), cols("weights"));
  m.bias = detail::take_array(in, pos, rows("bias"), cols("bias"));
  return m;
}

} // namespace cavityrc
