#pragma once

// Minimal RIFF/WAVE I/O: mono or multichannel PCM16 and IEEE float32.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aecnr/stft.hpp"

namespace aecnr {

class WavError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class WavFormat { Pcm16, Float32 };

struct WavData {
  double sample_rate = 16000.0;
  MultiSignal channels;  // [channel][sample], nominal range [-1, 1]
};

namespace detail {

inline void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xFF));
  b.push_back(static_cast<char>(v >> 8));
}
inline std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}
inline std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

}  // namespace detail

inline std::string encode_wav(const WavData& w, WavFormat fmt) {
  const std::size_t nc = w.channels.size();
  if (nc == 0) throw WavError("wav: no channels");
  const std::size_t ns = w.channels.front().size();
  for (const auto& c : w.channels)
    if (c.size() != ns) throw WavError("wav: channel lengths differ");
  const std::uint16_t bits = fmt == WavFormat::Pcm16 ? 16 : 32;
  const std::uint16_t tag = fmt == WavFormat::Pcm16 ? 1 : 3;
  const std::uint32_t block = static_cast<std::uint32_t>(nc * bits / 8);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(ns * block);
  const auto rate = static_cast<std::uint32_t>(std::lround(w.sample_rate));

  std::string b;
  b.reserve(44 + data_bytes);
  b += "RIFF";
  detail::put_u32(b, 36 + data_bytes);
  b += "WAVEfmt ";
  detail::put_u32(b, 16);
  detail::put_u16(b, tag);
  detail::put_u16(b, static_cast<std::uint16_t>(nc));
  detail::put_u32(b, rate);
  detail::put_u32(b, rate * block);
  detail::put_u16(b, static_cast<std::uint16_t>(block));
  detail::put_u16(b, bits);
  b += "data";
  detail::put_u32(b, data_bytes);
  for (std::size_t t = 0; t < ns; ++t) {
    for (std::size_t c = 0; c < nc; ++c) {
      const double x = w.channels[c][t];
      if (fmt == WavFormat::Pcm16) {
        const double q = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
        detail::put_u16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      } else {
        const float f = static_cast<float>(x);
        std::uint32_t u = 0;
        std::memcpy(&u, &f, 4);
        detail::put_u32(b, u);
      }
    }
  }
  return b;
}

inline WavData decode_wav(const std::string& bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
    throw WavError("wav: not a RIFF/WAVE file");
  }
  std::uint16_t tag = 0, nc = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t size = detail::get_u32(p + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > n) throw WavError("wav: truncated chunk '" + id + "'");
    if (id == "fmt ") {
      if (size < 16) throw WavError("wav: short fmt chunk");
      tag = detail::get_u16(p + body);
      nc = detail::get_u16(p + body + 2);
      rate = detail::get_u32(p + body + 4);
      bits = detail::get_u16(p + body + 14);
      if (tag == 0xFFFE && size >= 26) tag = detail::get_u16(p + body + 24);  // extensible
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw WavError("wav: data before fmt");
      const bool pcm16 = tag == 1 && bits == 16;
      const bool f32 = tag == 3 && bits == 32;
      if (!pcm16 && !f32) throw WavError("wav: only PCM16 and float32 are supported");
      if (nc == 0) throw WavError("wav: zero channels");
      const std::size_t bps = bits / 8;
      const std::size_t frames = size / (bps * nc);
      WavData out;
      out.sample_rate = rate;
      out.channels.assign(nc, Signal(frames));
      for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t c = 0; c < nc; ++c) {
          const unsigned char* s = p + body + (t * nc + c) * bps;
          if (pcm16) {
            out.channels[c][t] = static_cast<std::int16_t>(detail::get_u16(s)) / 32768.0;
          } else {
            const std::uint32_t u = detail::get_u32(s);
            float f = 0.0f;
            std::memcpy(&f, &u, 4);
            out.channels[c][t] = f;
          }
        }
      }
      return out;
    }
    pos = body + size + (size & 1u);
  }
  throw WavError("wav: no data chunk");
}

inline void write_wav(const std::string& path, const WavData& w, WavFormat fmt = WavFormat::Float32) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WavError("wav: cannot write " + path);
  const std::string b = encode_wav(w, fmt);
  out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

inline WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError("wav: cannot open " + path);
  std::string b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(b);
}

// Mono signal at the expected rate; other rates or multichannel files are
// rejected.
inline Signal read_mono_wav(const std::string& path, double expected_rate) {
  WavData w = read_wav(path);
  if (w.channels.size() != 1) throw WavError("wav: expected a mono file: " + path);
  if (std::abs(w.sample_rate - expected_rate) > 0.5) {
    throw WavError("wav: sample-rate mismatch in " + path + " (" +
                   std::to_string(static_cast<long>(w.sample_rate)) + " Hz)");
  }
  return std::move(w.channels.front());
}

}  // namespace aecnr
