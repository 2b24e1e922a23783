#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cavityrc/common.hpp"

namespace cavityrc {

struct AudioClip {
  std::vector<double> samples;
  double rate_hz = 0.0;
};

namespace detail {

inline void put_u32(std::string &s, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) s.push_back(char((v >> (8 * b)) & 0xff));
}
inline void put_u16(std::string &s, std::uint16_t v) {
  s.push_back(char(v & 0xff));
  s.push_back(char((v >> 8) & 0xff));
}
inline std::uint32_t get_u32(const char *p) {
  return std::uint32_t(std::uint8_t(p[0])) |
         std::uint32_t(std::uint8_t(p[1])) << 8 |
         std::uint32_t(std::uint8_t(p[2])) << 16 |
         std::uint32_t(std::uint8_t(p[3])) << 24;
}
inline std::uint16_t get_u16(const char *p) {
  return std::uint16_t(std::uint8_t(p[0])) |
         std::uint16_t(std::uint8_t(p[1])) << 8;
}

} // namespace detail

/// Mono 32-bit float WAV.
inline void write_wav(const std::filesystem::path &path,
                      const std::vector<double> &samples, double rate_hz) {
  const std::uint32_t n = static_cast<std::uint32_t>(samples.size());
  const std::uint32_t data_bytes = n * 4;
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  detail::put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  detail::put_u32(out, 16);
  detail::put_u16(out, 3); // IEEE float
  detail::put_u16(out, 1); // mono
  detail::put_u32(out, static_cast<std::uint32_t>(rate_hz));
  detail::put_u32(out, static_cast<std::uint32_t>(rate_hz) * 4);
  detail::put_u16(out, 4);
  detail::put_u16(out, 32);
  out += "data";
  detail::put_u32(out, data_bytes);
  for (double v : samples) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    detail::put_u32(out, bits);
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path.string());
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
}

/// Mono WAV, PCM 16-bit or IEEE float 32-bit. Unknown chunks are skipped.
inline AudioClip read_wav(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open WAV file: " + path.string());
  std::string buf((std::istreambuf_iterator<char>(is)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 44 || buf.compare(0, 4, "RIFF") != 0 ||
      buf.compare(8, 4, "WAVE") != 0)
    throw ValidationError("not a RIFF/WAVE file: " + path.string());

  std::uint16_t fmt = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_off = 0, data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::string id = buf.substr(pos, 4);
    const std::uint32_t len = detail::get_u32(buf.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt " && body + 16 <= buf.size()) {
      fmt = detail::get_u16(buf.data() + body);
      channels = detail::get_u16(buf.data() + body + 2);
      rate = detail::get_u32(buf.data() + body + 4);
      bits = detail::get_u16(buf.data() + body + 14);
    } else if (id == "data") {
      data_off = body;
      data_len = std::min<std::size_t>(len, buf.size() - body);
    }
    pos = body + len + (len & 1);
  }
  if (data_off == 0 || rate == 0)
    throw ValidationError("WAV missing fmt/data chunk: " + path.string());
  if (channels != 1)
    throw ValidationError("only mono WAV is supported: " + path.string());

  AudioClip clip;
  clip.rate_hz = rate;
  if (fmt == 1 && bits == 16) {
    const std::size_t n = data_len / 2;
    clip.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::int16_t v = static_cast<std::int16_t>(
          detail::get_u16(buf.data() + data_off + 2 * k));
      clip.samples[k] = v / 32768.0;
    }
  } else if (fmt == 3 && bits == 32) {
    const std::size_t n = data_len / 4;
    clip.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::uint32_t u = detail::get_u32(buf.data() + data_off + 4 * k);
      float f;
      std::memcpy(&f, &u, 4);
      clip.samples[k] = f;
    }
  } else {
    throw ValidationError("unsupported WAV encoding (want PCM16 or float32): " +
                          path.string());
  }
  return clip;
}

} // namespace cavityrc
