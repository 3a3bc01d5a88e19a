#include <gtest/gtest.h>

#include <cmath>

#include "aecnr/stats.hpp"

using namespace aecnr;

namespace {

struct Fixture {
  Scenario sc;
  ComponentSignals comp;
  ComponentSpectra spec;
  ActivityLabels labels;
  OracleCovariances oc;
};

const Fixture& fixture() {
  static const Fixture fx = [] {
    Fixture f;
    f.sc.seed = 21;
    f.sc.duration_s = 6.0;
    Rng rng(21, 0x504C4345);
    place_randomly(f.sc, 2, rng);
    f.comp = render_scenario(f.sc, synthesize_sources(f.sc), generate_rirs(f.sc));
    f.spec = analyze_components(f.comp, WindowSpec{});
    f.labels = frame_labels(f.comp, WindowSpec{});
    f.oc = batch_covariances(f.spec, f.labels);
    return f;
  }();
  return fx;
}

// Unit-variance complex white noise directly in the STFT domain.
SpectralTensor white(std::size_t frames, std::size_t bins, std::size_t ch, Rng& g) {
  SpectralTensor t(frames, bins, ch);
  for (std::size_t k = 0; k < frames; ++k)
    for (std::size_t f = 0; f < bins; ++f)
      for (std::size_t c = 0; c < ch; ++c)
        t(k, f, c) = cplx(g.normal(), g.normal()) * std::sqrt(0.5);
  return t;
}

}  // namespace

TEST(FrameLabels, AlignedWithSpectra) {
  const Fixture& fx = fixture();
  EXPECT_EQ(fx.labels.n_frames(), fx.spec.n_frames());
  EXPECT_FALSE(fx.labels.corrupted);
}

TEST(BatchCovariances, StackedBlocksExactlyZero) {
  const Fixture& fx = fixture();
  const std::size_t m = fx.oc.n_mics;
  for (const auto& b : fx.oc.bins) {
    const HermitianMatrix s = b.stacked_s(), n = b.stacked_n(), e = b.stacked_e();
    for (std::size_t i = 0; i < m + fx.oc.n_speakers; ++i)
      for (std::size_t j = m; j < m + fx.oc.n_speakers; ++j) {
        EXPECT_EQ(s(i, j), cplx{});
        EXPECT_EQ(n(j, i), cplx{});
      }
    EXPECT_EQ(e(0, m), b.el(0, 0));
    EXPECT_EQ(e(m + 1, m + 1), b.ll(1, 1));
  }
}

TEST(BatchCovariances, PointSourceSpeechIsRankOne) {
  const Fixture& fx = fixture();
  std::vector<double> ratio;
  for (std::size_t f = 1; f + 1 < fx.oc.n_bins(); ++f) {
    const HermitianEigen e = herm_eig(fx.oc.bins[f].ss);
    ratio.push_back(e.values[1] / e.values[0]);
  }
  std::sort(ratio.begin(), ratio.end());
  EXPECT_LE(ratio[ratio.size() / 2], 1e-3);
}

TEST(BatchCovariances, WhiteNoiseConcentration) {
  Rng g(1, 1);
  const std::size_t frames = 2000;
  ComponentSpectra c;
  c.n = white(frames, 9, 1, g);
  c.s = SpectralTensor(frames, 9, 1);
  c.e = SpectralTensor(frames, 9, 1);
  c.l = SpectralTensor(frames, 9, 0);
  ActivityLabels labels{std::vector<bool>(frames, true), std::vector<bool>(frames, false), false};
  const OracleCovariances oc = batch_covariances(c, labels);
  for (const auto& b : oc.bins) EXPECT_NEAR(b.nn(0, 0).real(), 1.0, 3.0 / std::sqrt(double(frames)));
}

TEST(BatchCovariances, KnownEchoGain) {
  Rng g(2, 1);
  const std::size_t frames = 300, bins = 5;
  ComponentSpectra c;
  c.l = white(frames, bins, 1, g);
  c.s = white(frames, bins, 1, g);
  c.n = white(frames, bins, 1, g);
  c.e = SpectralTensor(frames, bins, 1);
  std::vector<cplx> gain;
  for (std::size_t f = 0; f < bins; ++f) gain.push_back(std::polar(0.5 + 0.1 * double(f), 0.3 * double(f)));
  for (std::size_t k = 0; k < frames; ++k)
    for (std::size_t f = 0; f < bins; ++f) c.e(k, f, 0) = gain[f] * c.l(k, f, 0);
  ActivityLabels labels{std::vector<bool>(frames, true), std::vector<bool>(frames, true), false};
  const OracleCovariances oc = batch_covariances(c, labels);
  for (std::size_t f = 0; f < bins; ++f) {
    const cplx expected = gain[f] * oc.bins[f].ll(0, 0);
    EXPECT_NEAR(std::abs(oc.bins[f].el(0, 0) - expected), 0.0, 1e-12 * std::abs(expected));
  }
}

TEST(BatchCovariances, SilentSpeechIsAnError) {
  const Fixture& fx = fixture();
  ActivityLabels labels = fx.labels;
  labels.vad_s.assign(labels.n_frames(), false);
  EXPECT_THROW(batch_covariances(fx.spec, labels), StatsError);
}

TEST(Compose, PresetsAndLinearity) {
  const Fixture& fx = fixture();
  const auto& b = fx.oc.bins[40];
  const CorrelationSet ef = compose(fx.oc, VadScalings::error_free());
  EXPECT_EQ((ef.alpha[40].matrix() - (b.stacked_n() + b.stacked_e()).matrix()).max_abs(), 0.0);

  const VadScalings pd = VadScalings::permanent_doubletalk();
  EXPECT_EQ(pd.alpha_s, 1.0);
  EXPECT_EQ(pd.alpha_e, 1.0);
  EXPECT_EQ(pd.gamma_s, 0.0);
  const VadScalings mo = VadScalings::microphone_only();
  EXPECT_EQ(mo.gamma_s, 0.0);
  EXPECT_EQ(mo.gamma_e, 0.0);

  const CorrelationSet zero = compose(fx.oc, {0, 0, 0, 0, 0, 0});
  EXPECT_EQ((zero.beta[40].matrix() - b.stacked_n().matrix()).max_abs(), 0.0);

  VadScalings half{0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
  const CorrelationSet h = compose(fx.oc, half);
  const HermitianMatrix expect = 0.5 * b.stacked_s() + b.stacked_n() + 0.5 * b.stacked_e();
  EXPECT_LE((h.gamma[40].matrix() - expect.matrix()).max_abs(), 1e-15 * expect.frobenius_norm());

  EXPECT_THROW(compose(fx.oc, {1.5, 0, 0, 0, 0, 0}), StatsError);
}

TEST(Streaming, ConvergesOnStationaryNoise) {
  Rng g(3, 1);
  const std::size_t frames = 2000, bins = 16, dim = 3;
  // Colour the noise with a fixed mixing matrix so the target is not I.
  const ComplexMatrix mix{{1.0, 0.0, 0.0}, {cplx(0.4, 0.2), 0.8, 0.0}, {0.1, cplx(0.0, -0.3), 0.5}};
  SpectralTensor raw = white(frames, bins, dim, g), x(frames, bins, dim);
  for (std::size_t k = 0; k < frames; ++k)
    for (std::size_t f = 0; f < bins; ++f) {
      const CVector y = mix * raw.snapshot(k, f);
      std::copy(y.begin(), y.end(), x.snapshot(k, f).begin());
    }
  const ComplexMatrix truth = mix * mix.adjoint();
  ActivityLabels labels{std::vector<bool>(frames, false), std::vector<bool>(frames, true), false};
  const CorrelationSet c = streaming_estimate(x, labels);  // alpha and gamma regime
  EXPECT_EQ(c.alpha_updates, frames);
  EXPECT_EQ(c.beta_updates, 0u);
  // About 400 effective frames per bin; the bin average tightens that.
  ComplexMatrix mean(dim, dim);
  for (std::size_t f = 0; f < bins; ++f) mean += c.alpha[f].matrix() * (1.0 / double(bins));
  EXPECT_LE((mean - truth).frobenius_norm(), 0.05 * truth.frobenius_norm());
  // Unvisited regime keeps its initialisation.
  EXPECT_EQ(c.beta[0](0, 0).real(), kStreamingInit);
  EXPECT_EQ(c.beta[0](0, 1), cplx{});
}

TEST(Streaming, MatchesBatchOnStationaryInput) {
  Rng g(4, 1);
  const std::size_t frames = 3000, bins = 8;
  const SpectralTensor x = white(frames, bins, 2, g);
  ActivityLabels labels{std::vector<bool>(frames, true), std::vector<bool>(frames, true), false};
  const CorrelationSet c = streaming_estimate(x, labels, 0.995, RegimeMap::permanent_doubletalk());
  EXPECT_EQ(c.gamma_updates, 0u);
  EXPECT_EQ(c.beta_updates, frames);
  ComplexMatrix mean(2, 2);
  for (std::size_t f = 0; f < bins; ++f) mean += c.beta[f].matrix() * (1.0 / double(bins));
  EXPECT_LE((mean - ComplexMatrix::identity(2)).frobenius_norm(), 0.05 * std::sqrt(2.0));
}

TEST(Streaming, RejectsBadForgettingAndShapes) {
  EXPECT_THROW(StreamingEstimator(4, 2, 1.0), StatsError);
  const SpectralTensor x(10, 4, 2);
  ActivityLabels labels{std::vector<bool>(9, true), std::vector<bool>(9, true), false};
  EXPECT_THROW(streaming_estimate(x, labels), StatsError);
}

TEST(CorruptLabels, ExtremesAndDeterminism) {
  const Fixture& fx = fixture();
  const ActivityLabels same = corrupt_labels(fx.labels, {}, 5);
  EXPECT_EQ(same.vad_s, fx.labels.vad_s);
  EXPECT_EQ(same.vad_e, fx.labels.vad_e);
  EXPECT_TRUE(same.corrupted);

  VadErrorRates all_miss;
  all_miss.miss_e = 1.0;
  const ActivityLabels none = corrupt_labels(fx.labels, all_miss, 5);
  for (bool v : none.vad_e) EXPECT_FALSE(v);

  VadErrorRates r{0.2, 0.1, 0.0, 0.3};
  EXPECT_EQ(corrupt_labels(fx.labels, r, 9).vad_s, corrupt_labels(fx.labels, r, 9).vad_s);
  EXPECT_THROW(corrupt_labels(fx.labels, {1.5, 0, 0, 0}, 1), StatsError);
}

TEST(CorruptLabels, EffectiveScalingMatchesCounting) {
  // Stationary components so that per-frame power is flat and the
  // power-weighted fraction reduces to a frame count. Speech is active in
  // frames [0, 1000), echo in [500, 1500).
  Rng g(6, 1);
  const std::size_t frames = 2000, bins = 32;
  ComponentSpectra c;
  c.s = white(frames, bins, 2, g);
  c.e = white(frames, bins, 2, g);
  c.n = white(frames, bins, 2, g);
  c.l = SpectralTensor(frames, bins, 0);
  ActivityLabels truth{std::vector<bool>(frames, false), std::vector<bool>(frames, false), false};
  for (std::size_t k = 0; k < frames; ++k) {
    truth.vad_s[k] = k < 1000;
    truth.vad_e[k] = k >= 500 && k < 1500;
    if (!truth.vad_s[k])
      for (std::size_t f = 0; f < bins; ++f) c.s(k, f, 0) = c.s(k, f, 1) = 0.0;
    if (!truth.vad_e[k])
      for (std::size_t f = 0; f < bins; ++f) c.e(k, f, 0) = c.e(k, f, 1) = 0.0;
  }
  VadErrorRates r;
  r.miss_s = 0.3;
  const ActivityLabels noisy = corrupt_labels(truth, r, 77);
  const Regime alpha{false, true};
  const EffectiveScaling eff = effective_scaling(c, truth, noisy, alpha);
  std::size_t missed = 0, selected = 0;
  for (std::size_t k = 0; k < frames; ++k) {
    if (!alpha.matches(noisy.vad_s[k], noisy.vad_e[k])) continue;
    ++selected;
    missed += truth.vad_s[k];
  }
  ASSERT_EQ(eff.frames, selected);
  // About 150 missed speech frames among about 650 selected.
  const double predicted = double(missed) / double(selected);
  EXPECT_NEAR(predicted, 0.3 * 500 / (0.3 * 500 + 500), 0.05);
  EXPECT_NEAR(eff.s_scale, predicted, 0.1 * predicted);
  EXPECT_NEAR(eff.e_scale, 1.0, 0.1);
}
