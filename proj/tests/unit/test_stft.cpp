#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "aecnr/rng.hpp"
#include "aecnr/stft.hpp"

using namespace aecnr;

namespace {

MultiSignal noise(std::size_t channels, std::size_t n, std::uint64_t seed) {
  Rng g(seed, 11);
  MultiSignal x(channels, Signal(n));
  for (auto& ch : x)
    for (auto& v : ch) v = g.normal();
  return x;
}

double interior_rel_error(const Signal& a, const Signal& b, std::size_t lead) {
  double e = 0.0, r = 0.0;
  for (std::size_t t = lead; t + lead < a.size(); ++t) {
    e += (a[t] - b[t]) * (a[t] - b[t]);
    r += b[t] * b[t];
  }
  return std::sqrt(e / r);
}

}  // namespace

TEST(WindowSpec, ValidatesLengthAndHop) {
  EXPECT_THROW((WindowSpec{500, 250}.validate()), StftError);
  EXPECT_THROW((WindowSpec{512, 300}.validate()), StftError);
  EXPECT_NO_THROW((WindowSpec{512, 256}.validate()));
  EXPECT_EQ((WindowSpec{512, 256}.n_bins()), 257u);
}

TEST(WindowSpec, ConstantOverlapAdd) {
  const WindowSpec w{};
  const auto wa = w.analysis_window(), ws = w.synthesis_window();
  for (std::size_t n = 0; n < w.hop; ++n) {
    double s = 0.0;
    for (std::size_t k = n; k < w.length; k += w.hop) s += wa[k] * ws[k];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Analyze, ZeroSignalGivesZeroTensor) {
  const SpectralTensor t = analyze(Signal(2000, 0.0), WindowSpec{});
  for (cplx v : t.values()) EXPECT_EQ(v, cplx{});
}

TEST(Analyze, SinusoidAtBinCentreConcentrates) {
  const WindowSpec w{};
  const std::size_t bin = 32;
  Signal x(8000);
  for (std::size_t t = 0; t < x.size(); ++t) {
    x[t] = std::cos(2.0 * std::numbers::pi * double(bin) * double(t) / double(w.length));
  }
  const SpectralTensor s = analyze(x, w);
  const std::size_t k = 10;  // interior frame
  double total = 0.0, near = 0.0;
  for (std::size_t f = 0; f < s.n_bins(); ++f) {
    const double p = std::norm(s(k, f, 0));
    total += p;
    if (f + 1 >= bin && f <= bin + 1) near += p;  // main lobe of the sqrt-Hann
  }
  EXPECT_GE(near / total, 0.99);
  EXPECT_GT(std::norm(s(k, bin, 0)), std::norm(s(k, bin + 2, 0)) * 100.0);
}

TEST(Analyze, ImpulseGivesWindowSignature) {
  // Frame k starts at k·hop − length, so sample 0 sits at window index
  // length − hop of frame 1, the first frame that weights it nonzero.
  const WindowSpec w{};
  Signal x(4000, 0.0);
  x[0] = 1.0;
  const SpectralTensor s = analyze(x, w);
  const auto win = w.analysis_window();
  const std::size_t n0 = w.length - w.hop;
  for (std::size_t f = 0; f < s.n_bins(); ++f) {
    const cplx expected =
        win[n0] * std::polar(1.0, -2.0 * std::numbers::pi * double(f * n0) / double(w.length));
    EXPECT_NEAR(std::abs(s(1, f, 0) - expected), 0.0, 1e-12);
    EXPECT_EQ(s(0, f, 0), cplx{});
  }
}

TEST(Analyze, ParsevalPerFrame) {
  const WindowSpec w{};
  const MultiSignal x = noise(1, 6000, 1);
  const SpectralTensor s = analyze(x, w);
  const auto win = w.analysis_window();
  for (std::size_t k = 3; k < 8; ++k) {
    double seg = 0.0;
    const std::ptrdiff_t start = frame_start(k, w);
    for (std::size_t n = 0; n < w.length; ++n) {
      const double v = x[0][std::size_t(start + std::ptrdiff_t(n))] * win[n];
      seg += v * v;
    }
    // One-sided spectrum: DC and Nyquist once, other bins twice.
    double spec = std::norm(s(k, 0, 0)) + std::norm(s(k, w.length / 2, 0));
    for (std::size_t f = 1; f < w.length / 2; ++f) spec += 2.0 * std::norm(s(k, f, 0));
    EXPECT_NEAR(spec / double(w.length), seg, 1e-10 * seg);
  }
}

TEST(Synthesize, RoundTripWhiteNoise) {
  const WindowSpec w{};
  const MultiSignal x = noise(2, 16000, 2);
  const MultiSignal y = synthesize(analyze(x, w), w);
  for (std::size_t c = 0; c < 2; ++c) EXPECT_LE(interior_rel_error(y[c], x[c], w.length), 1e-10);
}

TEST(Synthesize, RoundTripOtherHop) {
  const WindowSpec w{256, 64};
  const MultiSignal x = noise(1, 5000, 3);
  EXPECT_LE(interior_rel_error(synthesize(analyze(x, w), w)[0], x[0], w.length), 1e-10);
}

TEST(Synthesize, ZeroTensorAndLinearity) {
  const WindowSpec w{};
  const MultiSignal a = noise(1, 4000, 4), b = noise(1, 4000, 5);
  const SpectralTensor ta = analyze(a, w), tb = analyze(b, w);
  const MultiSignal z = synthesize(cplx{0.0} * ta, w);
  for (double v : z[0]) EXPECT_EQ(v, 0.0);

  const MultiSignal lhs = synthesize(cplx{2.0} * ta + cplx{-0.5} * tb, w);
  const MultiSignal ya = synthesize(ta, w), yb = synthesize(tb, w);
  Signal rhs(lhs[0].size());
  for (std::size_t t = 0; t < rhs.size(); ++t) rhs[t] = 2.0 * ya[0][t] - 0.5 * yb[0][t];
  EXPECT_LE(interior_rel_error(lhs[0], rhs, 0), 1e-12);
}

TEST(Synthesize, RejectsMismatchedWindow) {
  const SpectralTensor t = analyze(Signal(1000, 1.0), WindowSpec{});
  EXPECT_THROW(synthesize(t, WindowSpec{256, 128}), StftError);
}

TEST(ApplyFilterbank, SelectorZeroAndBruteForce) {
  const WindowSpec w{};
  const SpectralTensor t = analyze(noise(3, 3000, 6), w);
  FilterBank sel(Algorithm::Custom, t.n_bins(), 3), zero(Algorithm::Custom, t.n_bins(), 3),
      rnd(Algorithm::Custom, t.n_bins(), 3);
  Rng g(7, 1);
  for (std::size_t f = 0; f < t.n_bins(); ++f) {
    sel.set(f, unit_vector(3, 1));
    CVector v(3);
    for (auto& x : v) x = cplx(g.normal(), g.normal());
    rnd.set(f, v);
  }
  const SpectralTensor ys = apply_filterbank(t, sel), yz = apply_filterbank(t, zero),
                       yr = apply_filterbank(t, rnd);
  for (std::size_t k = 0; k < t.n_frames(); ++k)
    for (std::size_t f = 0; f < t.n_bins(); ++f) {
      EXPECT_EQ(ys(k, f, 0), t(k, f, 1));
      EXPECT_EQ(yz(k, f, 0), cplx{});
      cplx brute = 0.0;
      for (std::size_t c = 0; c < 3; ++c) brute += std::conj(rnd.weight(f)[c]) * t(k, f, c);
      EXPECT_NEAR(std::abs(yr(k, f, 0) - brute), 0.0, 1e-12 * (1.0 + std::abs(brute)));
    }
}

TEST(ApplyFilterbank, PerFrameFilters) {
  const WindowSpec w{};
  const SpectralTensor t = analyze(noise(2, 2000, 8), w);
  FilterBank fb(Algorithm::Custom, t.n_bins(), 2, t.n_frames());
  for (std::size_t k = 0; k < t.n_frames(); ++k)
    for (std::size_t f = 0; f < t.n_bins(); ++f) fb.set(k, f, unit_vector(2, k % 2));
  const SpectralTensor y = apply_filterbank(t, fb);
  EXPECT_EQ(y(3, 5, 0), t(3, 5, 1));
  EXPECT_EQ(y(4, 5, 0), t(4, 5, 0));
  EXPECT_THROW(apply_filterbank(t, FilterBank(Algorithm::Custom, t.n_bins(), 3)), StftError);
}

TEST(FrameActivity, FractionRule) {
  const WindowSpec w{8, 4};
  std::vector<bool> mask(32, false);
  for (std::size_t t = 10; t < 13; ++t) mask[t] = true;  // 3 active samples
  const auto any = frame_activity(mask, w, 0.0);
  const auto half = frame_activity(mask, w, 0.5);
  std::size_t n_any = 0, n_half = 0;
  for (bool b : any) n_any += b;
  for (bool b : half) n_half += b;
  EXPECT_EQ(n_any, 3u);   // frames [4,12), [8,16), [12,20)
  EXPECT_EQ(n_half, 0u);  // none covers 4 of its 8 samples
}
