#pragma once

// Multichannel STFT with a square-root Hann analysis/synthesis pair.
//
// Edge convention: the signal is zero-padded by one full window on both
// sides (plus whatever tail is needed to complete the last hop), so every
// original sample is covered by a steady-state set of overlapping frames and
// analyze -> synthesize is exact up to rounding over the whole signal.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "aecnr/filter_bank.hpp"
#include "aecnr/linalg.hpp"

namespace aecnr {

using Signal = std::vector<double>;
using MultiSignal = std::vector<Signal>;  // [channel][sample]

class StftError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct WindowSpec {
  std::size_t length = 512;
  std::size_t hop = 256;

  std::size_t n_bins() const { return length / 2 + 1; }

  void validate() const {
    if (length < 2 || !std::has_single_bit(length)) {
      throw StftError("window length must be a power of two >= 2");
    }
    if (hop == 0 || hop > length || length % hop != 0) {
      throw StftError("hop must divide the window length");
    }
  }

  // Periodic square-root Hann.
  std::vector<double> analysis_window() const {
    std::vector<double> w(length);
    for (std::size_t n = 0; n < length; ++n) {
      w[n] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi *
                                            static_cast<double>(n) /
                                            static_cast<double>(length)));
    }
    return w;
  }

  // Analysis window divided by the overlap-add sum of w_a·w_s, so that the
  // pair reconstructs with unit gain at any hop dividing the length.
  std::vector<double> synthesis_window() const {
    const auto wa = analysis_window();
    std::vector<double> cola(hop, 0.0);
    for (std::size_t n = 0; n < length; ++n) cola[n % hop] += wa[n] * wa[n];
    std::vector<double> ws(length);
    for (std::size_t n = 0; n < length; ++n) ws[n] = wa[n] / cola[n % hop];
    return ws;
  }
};

// In-place iterative radix-2 FFT of fixed power-of-two size.
class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n), twiddles_(n / 2), bitrev_(n) {
    if (n == 0 || !std::has_single_bit(n)) throw StftError("FFT size must be a power of two");
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddles_[k] = {std::cos(a), std::sin(a)};
    }
    const int bits = std::countr_zero(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (int b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
      bitrev_[i] = r;
    }
  }

  std::size_t size() const noexcept { return n_; }

  void forward(std::span<cplx> x) const { transform(x, false); }

  // Unnormalised inverse; callers divide by size().
  void inverse(std::span<cplx> x) const { transform(x, true); }

 private:
  void transform(std::span<cplx> x, bool inverse) const {
    if (x.size() != n_) throw StftError("FFT length mismatch");
    for (std::size_t i = 0; i < n_; ++i)
      if (i < bitrev_[i]) std::swap(x[i], x[bitrev_[i]]);
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t stride = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          cplx tw = twiddles_[k * stride];
          if (inverse) tw = std::conj(tw);
          const cplx u = x[start + k];
          const cplx v = x[start + k + half] * tw;
          x[start + k] = u + v;
          x[start + k + half] = u - v;
        }
      }
    }
  }

  std::size_t n_;
  std::vector<cplx> twiddles_;
  std::vector<std::size_t> bitrev_;
};

// STFT-domain data indexed [frame][bin][channel].
class SpectralTensor {
 public:
  SpectralTensor() = default;
  SpectralTensor(std::size_t n_frames, std::size_t n_bins, std::size_t n_channels,
                 std::size_t signal_length = 0)
      : n_frames_(n_frames),
        n_bins_(n_bins),
        n_channels_(n_channels),
        signal_length_(signal_length),
        values_(n_frames * n_bins * n_channels) {}

  std::size_t n_frames() const noexcept { return n_frames_; }
  std::size_t n_bins() const noexcept { return n_bins_; }
  std::size_t n_channels() const noexcept { return n_channels_; }
  // Length of the time-domain signal this tensor was analysed from.
  std::size_t signal_length() const noexcept { return signal_length_; }

  cplx& operator()(std::size_t k, std::size_t f, std::size_t c) {
    return values_[index(k, f, c)];
  }
  const cplx& operator()(std::size_t k, std::size_t f, std::size_t c) const {
    return values_[index(k, f, c)];
  }

  // Stacked snapshot across channels at (frame, bin).
  std::span<cplx> snapshot(std::size_t k, std::size_t f) {
    return {values_.data() + index(k, f, 0), n_channels_};
  }
  std::span<const cplx> snapshot(std::size_t k, std::size_t f) const {
    return {values_.data() + index(k, f, 0), n_channels_};
  }

  std::span<const cplx> values() const noexcept { return values_; }

  bool same_shape(const SpectralTensor& o) const {
    return n_frames_ == o.n_frames_ && n_bins_ == o.n_bins_ && n_channels_ == o.n_channels_;
  }

  SpectralTensor& operator+=(const SpectralTensor& o) {
    if (!same_shape(o)) throw StftError("tensor shape mismatch");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  SpectralTensor& operator*=(cplx s) {
    for (auto& v : values_) v *= s;
    return *this;
  }
  friend SpectralTensor operator+(SpectralTensor a, const SpectralTensor& b) { return a += b; }
  friend SpectralTensor operator*(cplx s, SpectralTensor a) { return a *= s; }

  // Channel-wise concatenation (e.g. microphones then loudspeakers).
  static SpectralTensor stack(const SpectralTensor& top, const SpectralTensor& bottom) {
    if (top.n_frames_ != bottom.n_frames_ || top.n_bins_ != bottom.n_bins_) {
      throw StftError("stack: frame/bin mismatch");
    }
    SpectralTensor out(top.n_frames_, top.n_bins_, top.n_channels_ + bottom.n_channels_,
                       top.signal_length_);
    for (std::size_t k = 0; k < top.n_frames_; ++k)
      for (std::size_t f = 0; f < top.n_bins_; ++f) {
        auto dst = out.snapshot(k, f);
        auto a = top.snapshot(k, f);
        auto b = bottom.snapshot(k, f);
        std::copy(a.begin(), a.end(), dst.begin());
        std::copy(b.begin(), b.end(), dst.begin() + static_cast<std::ptrdiff_t>(a.size()));
      }
    return out;
  }

 private:
  std::size_t index(std::size_t k, std::size_t f, std::size_t c) const {
    return (k * n_bins_ + f) * n_channels_ + c;
  }

  std::size_t n_frames_ = 0;
  std::size_t n_bins_ = 0;
  std::size_t n_channels_ = 0;
  std::size_t signal_length_ = 0;
  std::vector<cplx> values_;
};

inline std::size_t frame_count(std::size_t signal_length, const WindowSpec& w) {
  return (signal_length + w.length + w.hop - 1) / w.hop + 1;
}

// First sample (in original signal coordinates, may be negative) of frame k.
inline std::ptrdiff_t frame_start(std::size_t k, const WindowSpec& w) {
  return static_cast<std::ptrdiff_t>(k * w.hop) - static_cast<std::ptrdiff_t>(w.length);
}

inline SpectralTensor analyze(const MultiSignal& signal, const WindowSpec& w) {
  w.validate();
  if (signal.empty() || signal.front().empty()) throw StftError("analyze: empty signal");
  const std::size_t len = signal.front().size();
  for (const auto& ch : signal)
    if (ch.size() != len) throw StftError("analyze: channels differ in length");

  const std::size_t n_frames = frame_count(len, w);
  const auto win = w.analysis_window();
  const Fft fft(w.length);
  SpectralTensor out(n_frames, w.n_bins(), signal.size(), len);
  std::vector<cplx> buf(w.length);
  for (std::size_t c = 0; c < signal.size(); ++c) {
    for (std::size_t k = 0; k < n_frames; ++k) {
      const std::ptrdiff_t start = frame_start(k, w);
      for (std::size_t n = 0; n < w.length; ++n) {
        const std::ptrdiff_t t = start + static_cast<std::ptrdiff_t>(n);
        const double x =
            (t >= 0 && t < static_cast<std::ptrdiff_t>(len)) ? signal[c][static_cast<std::size_t>(t)] : 0.0;
        buf[n] = x * win[n];
      }
      fft.forward(buf);
      for (std::size_t f = 0; f < w.n_bins(); ++f) out(k, f, c) = buf[f];
    }
  }
  return out;
}

inline SpectralTensor analyze(const Signal& mono, const WindowSpec& w) {
  return analyze(MultiSignal{mono}, w);
}

inline MultiSignal synthesize(const SpectralTensor& t, const WindowSpec& w) {
  w.validate();
  if (t.n_bins() != w.n_bins()) throw StftError("synthesize: bin count does not match window");
  const std::size_t len = t.signal_length();
  if (t.n_frames() != frame_count(len, w)) {
    throw StftError("synthesize: frame count does not match signal length");
  }
  const auto ws = w.synthesis_window();
  const Fft fft(w.length);
  const double inv_n = 1.0 / static_cast<double>(w.length);
  MultiSignal out(t.n_channels(), Signal(len, 0.0));
  std::vector<cplx> buf(w.length);
  for (std::size_t c = 0; c < t.n_channels(); ++c) {
    for (std::size_t k = 0; k < t.n_frames(); ++k) {
      for (std::size_t f = 0; f < w.n_bins(); ++f) buf[f] = t(k, f, c);
      // Hermitian extension; DC and Nyquist must be real for a real signal.
      buf[0] = buf[0].real();
      buf[w.length / 2] = buf[w.length / 2].real();
      for (std::size_t f = 1; f < w.length / 2; ++f) buf[w.length - f] = std::conj(buf[f]);
      fft.inverse(buf);
      const std::ptrdiff_t start = frame_start(k, w);
      for (std::size_t n = 0; n < w.length; ++n) {
        const std::ptrdiff_t tt = start + static_cast<std::ptrdiff_t>(n);
        if (tt < 0 || tt >= static_cast<std::ptrdiff_t>(len)) continue;
        out[c][static_cast<std::size_t>(tt)] += buf[n].real() * inv_n * ws[n];
      }
    }
  }
  return out;
}

// out[k,f] = w̃[(k,)f]^H · m̃[k,f]
inline SpectralTensor apply_filterbank(const SpectralTensor& t, const FilterBank& fb) {
  if (fb.n_channels() != t.n_channels()) {
    throw StftError("apply_filterbank: channel count mismatch");
  }
  if (fb.n_bins() != t.n_bins()) throw StftError("apply_filterbank: bin count mismatch");
  if (!fb.is_static() && fb.n_frames() != t.n_frames()) {
    throw StftError("apply_filterbank: frame count mismatch");
  }
  SpectralTensor out(t.n_frames(), t.n_bins(), 1, t.signal_length());
  for (std::size_t k = 0; k < t.n_frames(); ++k)
    for (std::size_t f = 0; f < t.n_bins(); ++f)
      out(k, f, 0) = inner(fb.weight(k, f), t.snapshot(k, f));
  return out;
}

// Frame-level activity from a per-sample mask: a frame is active when at
// least `min_fraction` of its window covers active samples (any active sample
// when min_fraction is 0).
inline std::vector<bool> frame_activity(const std::vector<bool>& mask, const WindowSpec& w,
                                        double min_fraction = 0.5) {
  const std::size_t n_frames = frame_count(mask.size(), w);
  std::vector<bool> out(n_frames, false);
  for (std::size_t k = 0; k < n_frames; ++k) {
    const std::ptrdiff_t start = frame_start(k, w);
    std::size_t active = 0;
    for (std::size_t n = 0; n < w.length; ++n) {
      const std::ptrdiff_t t = start + static_cast<std::ptrdiff_t>(n);
      if (t >= 0 && t < static_cast<std::ptrdiff_t>(mask.size()) && mask[static_cast<std::size_t>(t)]) {
        ++active;
      }
    }
    out[k] = active > 0 &&
             static_cast<double>(active) >= min_fraction * static_cast<double>(w.length);
  }
  return out;
}

}  // namespace aecnr
