#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cavityrc/analysis.hpp"
#include "cavityrc/cavity.hpp"
#include "cavityrc/common.hpp"
#include "cavityrc/encoding.hpp"

namespace cavityrc {

namespace detail {
inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}
} // namespace detail

/// Probe records as CSV: time_s column then one column per probe label,
/// scientific notation with 13 significant digits.
inline void write_probe_csv(const std::filesystem::path &path,
                            const std::vector<ProbeRecord> &records) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open for writing: " + path.string());
  os << "time_s";
  for (const auto &r : records) os << ',' << r.label;
  os << '\n';
  if (records.empty()) return;
  const std::size_t n = records.front().samples.size();
  for (const auto &r : records)
    if (r.samples.size() != n)
      throw ValidationError("probe records have mismatched lengths");
  for (std::size_t k = 0; k < n; ++k) {
    os << detail::sci(k / records.front().sample_rate_hz);
    for (const auto &r : records) os << ',' << detail::sci(r.samples[k]);
    os << '\n';
  }
}

inline void write_phasors_csv(const std::filesystem::path &path,
                              const std::vector<HarmonicPhasors> &sets,
                              const std::vector<std::string> &set_labels) {
  if (sets.size() != set_labels.size())
    throw ValidationError("phasor set count does not match labels");
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open for writing: " + path.string());
  os << "set,harmonic_index,re,im,magnitude,phase_rad\n";
  for (std::size_t s = 0; s < sets.size(); ++s)
    for (std::size_t m = 0; m < sets[s].phasors.size(); ++m) {
      const auto &p = sets[s].phasors[m];
      os << set_labels[s] << ',' << (m + 1) << ',' << detail::sci(p.real())
         << ',' << detail::sci(p.imag()) << ',' << detail::sci(std::abs(p))
         << ',' << detail::sci(std::arg(p)) << '\n';
    }
}

/// Mask as CSV with a `# key=value` metadata block recording the seed and
/// synthesis parameters.
inline void write_mask_csv(const std::filesystem::path &path,
                           const EncodingMask &mask) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open for writing: " + path.string());
  os << "# schema=cavityrc-mask-1\n";
  os << "# seed=" << mask.seed << '\n';
  os << "# n_carriers=" << mask.n_carriers << '\n';
  os << "# m_sources=" << mask.m_sources << '\n';
  os << "# amplitude_scale=" << detail::sci(mask.amplitude_scale) << '\n';
  os << "# omega_hz=";
  for (std::size_t k = 0; k < mask.omega_hz.size(); ++k)
    os << (k ? ";" : "") << detail::sci(mask.omega_hz[k]);
  os << '\n';
  for (int n = 0; n < mask.n_carriers; ++n) {
    for (int m = 0; m < mask.m_sources; ++m)
      os << (m ? "," : "") << detail::sci(mask.at(n, m));
    os << '\n';
  }
}

inline EncodingMask read_mask_csv(const std::filesystem::path &path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open mask CSV: " + path.string());
  EncodingMask mask;
  std::string line;
  std::vector<double> entries;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string val = line.substr(eq + 1);
      if (key == "seed") mask.seed = std::stoull(val);
      else if (key == "n_carriers") mask.n_carriers = std::stoi(val);
      else if (key == "m_sources") mask.m_sources = std::stoi(val);
      else if (key == "amplitude_scale") mask.amplitude_scale = std::stod(val);
      else if (key == "omega_hz") {
        std::stringstream ss(val);
        std::string tok;
        while (std::getline(ss, tok, ';'))
          mask.omega_hz.push_back(std::stod(tok));
      }
      continue;
    }
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ','))
      entries.push_back(std::stod(tok));
  }
  if (static_cast<int>(entries.size()) != mask.n_carriers * mask.m_sources)
    throw ValidationError("mask CSV entry count does not match header dims");
  mask.s_in = std::move(entries);
  return mask;
}

inline std::string read_file(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path &path,
                       const std::string &content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path.string());
  os << content;
}

} // namespace cavityrc
