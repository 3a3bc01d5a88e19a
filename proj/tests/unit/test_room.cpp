#include <gtest/gtest.h>

#include <cmath>

#include "aecnr/room.hpp"

using namespace aecnr;

namespace {

Scenario placed(std::uint64_t seed, std::size_t speakers = 2, double duration = 3.0) {
  Scenario sc;
  sc.seed = seed;
  sc.duration_s = duration;
  Rng rng(seed, 0x504C4345);
  place_randomly(sc, speakers, rng);
  return sc;
}

double power_db(const Signal& x, const std::vector<bool>& mask) {
  return 10.0 * std::log10(mean_power(x, &mask));
}

double ncc(const Signal& a, const Signal& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    ab += a[t] * b[t];
    aa += a[t] * a[t];
    bb += b[t] * b[t];
  }
  return std::abs(ab) / std::sqrt(aa * bb);
}

}  // namespace

TEST(Rir, DirectTapFromGeometry) {
  RoomSpec room;
  room.reflection_coefficient = 0.0;
  const Point src{1.0, 2.0, 1.5}, mic{2.7, 2.0, 1.5};  // 1.7 m apart
  const Rir h = generate_rir(room, src, mic, 1);
  std::size_t nonzero = 0, tap = 0;
  for (std::size_t k = 0; k < h.size(); ++k)
    if (h[k] != 0.0) {
      ++nonzero;
      tap = k;
    }
  EXPECT_EQ(nonzero, 1u);  // free field
  EXPECT_EQ(tap, 79u);     // round(1.7 / 343 · 16000)
}

TEST(Rir, DirectPathIsStrongestEarlyTap) {
  const Scenario sc = placed(3);
  const RirSet rirs = generate_rirs(sc);
  for (std::size_t i = 0; i < sc.n_mics(); ++i) {
    const std::size_t d = sc.room.direct_delay(sc.source, sc.mics[i]);
    std::size_t first = 0;
    while (first < rirs.speech[i].size() && rirs.speech[i][first] == 0.0) ++first;
    EXPECT_LE(d > first ? d - first : first - d, 1u);
    for (double v : rirs.speech[i]) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(Rir, DeterministicPerSeed) {
  const Scenario sc = placed(4);
  const RirSet a = generate_rirs(sc), b = generate_rirs(sc);
  EXPECT_EQ(a.speech, b.speech);
  EXPECT_EQ(a.echo, b.echo);
  Scenario other = sc;
  other.seed = 5;
  EXPECT_NE(generate_rirs(other).speech, a.speech);
}

TEST(Rir, RejectsOutsidePoints) {
  RoomSpec room;
  EXPECT_THROW(generate_rir(room, {6.0, 1.0, 1.0}, {1.0, 1.0, 1.0}, 1), ScenarioError);
}

TEST(Placement, RespectsRules) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Scenario sc = placed(seed);
    std::vector<Point> all = sc.mics;
    all.push_back(sc.source);
    all.push_back(sc.noise);
    for (const auto& s : sc.speakers) all.push_back(s);
    for (std::size_t i = sc.n_mics(); i < all.size(); ++i) {
      EXPECT_GE(all[i].x, 0.5);
      EXPECT_LE(all[i].z, sc.room.dimensions[2] - 0.5);
      for (std::size_t j = 0; j < i; ++j) EXPECT_GE(distance(all[i], all[j]), 0.3);
    }
    EXPECT_NO_THROW(sc.validate());
  }
}

TEST(Sources, ActivityPatternAndDeterminism) {
  const Scenario sc = placed(6);
  const SourceSignals a = synthesize_sources(sc), b = synthesize_sources(sc);
  EXPECT_EQ(a.near, b.near);
  EXPECT_EQ(a.feeds, b.feeds);
  std::size_t active = 0;
  for (bool v : a.near_active) active += v;
  const double frac = double(active) / double(a.near_active.size());
  EXPECT_GE(frac, 0.4);
  EXPECT_LE(frac, 0.6);
}

TEST(Sources, ShortInputIsRejected) {
  const Scenario sc = placed(7);
  EXPECT_THROW(synthesize_sources(sc, Signal(100, 0.1)), ScenarioError);
  EXPECT_THROW(synthesize_sources(sc, std::nullopt, Signal(100, 0.1)), ScenarioError);
}

TEST(Render, MixtureIsExactSum) {
  const Scenario sc = placed(8);
  const ComponentSignals c = render_scenario(sc, synthesize_sources(sc), generate_rirs(sc));
  const MultiSignal m = c.mixture();
  for (std::size_t i = 0; i < c.n_mics(); ++i)
    for (std::size_t t = 0; t < c.n_samples(); t += 97)
      EXPECT_NEAR(m[i][t], c.s[i][t] + c.n[i][t] + c.e[i][t],
                  1e-15 * (std::abs(c.s[i][t]) + std::abs(c.n[i][t]) + std::abs(c.e[i][t])));
}

TEST(Render, LevelsAtReferenceMic) {
  Scenario sc = placed(9);
  const SourceSignals src = synthesize_sources(sc);
  const RirSet rirs = generate_rirs(sc);
  ComponentSignals c = render_scenario(sc, src, rirs);
  const std::size_t r = sc.reference_mic;
  const double snr = power_db(c.s[r], c.activity_s) - power_db(c.n[r], c.activity_s);
  const double ser = power_db(c.s[r], c.activity_s) - power_db(c.e[r], c.activity_e);
  EXPECT_NEAR(snr, 5.0, 0.1);
  EXPECT_NEAR(ser, 5.0, 0.1);

  sc.snr_db = 0.0;
  c = render_scenario(sc, src, rirs);
  EXPECT_NEAR(power_db(c.s[r], c.activity_s), power_db(c.n[r], c.activity_s), 0.1);
}

TEST(Render, ComponentsAreNearlyUncorrelated) {
  const Scenario sc = placed(10, 2, 10.0);
  const ComponentSignals c = render_scenario(sc, synthesize_sources(sc), generate_rirs(sc));
  EXPECT_LE(ncc(c.s[0], c.e[0]), 0.05);
  EXPECT_LE(ncc(c.s[0], c.n[0]), 0.05);
  EXPECT_LE(ncc(c.n[0], c.e[0]), 0.05);
}

TEST(Render, LinearUnitImpulseEchoIsScaledFeed) {
  Scenario sc = placed(11, 1);
  sc.mics = {sc.mics[0]};
  RirSet rirs = generate_rirs(sc);
  rirs.echo[0][0].assign(sc.room.rir_length, 0.0);
  rirs.echo[0][0][0] = 1.0;
  const ComponentSignals c = render_scenario(sc, synthesize_sources(sc), rirs);
  double g = 0.0;
  for (std::size_t t = 0; t < c.n_samples(); ++t)
    if (c.l[0][t] != 0.0) {
      g = c.e[0][t] / c.l[0][t];
      break;
    }
  ASSERT_NE(g, 0.0);
  for (std::size_t t = 0; t < c.n_samples(); t += 31) EXPECT_NEAR(c.e[0][t], g * c.l[0][t], 1e-12);
}

TEST(Render, HammersteinIsCubicBeforePath) {
  const Signal l(10, 0.7);
  for (double v : echo_path_input(l, EchoPath::HammersteinCubic)) EXPECT_DOUBLE_EQ(v, 0.7 * 0.7 * 0.7);
  EXPECT_EQ(echo_path_input(l, EchoPath::Linear), l);
}

TEST(TrueRtf, Construction) {
  const Scenario sc = placed(12);
  const RirSet rirs = generate_rirs(sc);
  const RtfSet rtf = true_rtf(sc, rirs, 512);
  ASSERT_EQ(rtf.h.size(), 257u);
  for (const auto& ht : rtf.h_tilde) {
    EXPECT_EQ(ht[sc.reference_mic], cplx{1.0});
    for (std::size_t j = sc.n_mics(); j < ht.size(); ++j) EXPECT_EQ(ht[j], cplx{});
  }
}

TEST(TrueRtf, SymmetricAndSingleMic) {
  const Rir h{0.0, 1.0, 0.5, 0.25};
  const RtfSet same = true_rtf({h, h}, 0, 1, 64);
  for (const auto& v : same.h) {
    EXPECT_NEAR(std::abs(v[0] - 1.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(v[1] - 1.0), 0.0, 1e-14);
  }
  const RtfSet one = true_rtf({h}, 0, 0, 64);
  for (const auto& v : one.h) EXPECT_EQ(v, CVector{1.0});
}

TEST(TrueRtf, ZeroReferenceBinIsFlagged) {
  const Rir h{1.0, 1.0};  // zero at Nyquist
  const RtfSet r = true_rtf({h, h}, 0, 0, 8);
  ASSERT_EQ(r.flagged_bins.size(), 1u);
  EXPECT_EQ(r.flagged_bins[0], 4u);
}
