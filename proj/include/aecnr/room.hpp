#pragma once

// Acoustic scenario generation: randomized-image-method impulse responses,
// surrogate source signals, and per-component microphone signals kept apart
// so that every evaluation can use the ground truth.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "aecnr/linalg.hpp"
#include "aecnr/rng.hpp"
#include "aecnr/stft.hpp"

namespace aecnr {

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Point {
  double x = 0.0, y = 0.0, z = 0.0;

  friend Point operator-(const Point& a, const Point& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double dot(const Point& o) const { return x * o.x + y * o.y + z * o.z; }
};

inline double distance(const Point& a, const Point& b) { return (a - b).norm(); }

struct RoomSpec {
  std::array<double, 3> dimensions{5.0, 5.0, 3.0};
  double reflection_coefficient = 0.15;
  double displacement_radius = 0.13;
  std::size_t rir_length = 128;
  double sample_rate = 16000.0;
  double speed_of_sound = 343.0;

  bool contains(const Point& p) const {
    return p.x > 0.0 && p.x < dimensions[0] && p.y > 0.0 && p.y < dimensions[1] &&
           p.z > 0.0 && p.z < dimensions[2];
  }

  void validate() const {
    for (double d : dimensions)
      if (!(d > 0.0)) throw ScenarioError("room dimensions must be positive");
    if (reflection_coefficient < 0.0 || reflection_coefficient > 1.0) {
      throw ScenarioError("reflection coefficient must lie in [0, 1]");
    }
    if (displacement_radius < 0.0) throw ScenarioError("displacement radius must be >= 0");
    if (rir_length == 0) throw ScenarioError("rir_length must be positive");
    if (!(sample_rate > 0.0)) throw ScenarioError("sample rate must be positive");
  }

  // Direct-path delay in (rounded) samples.
  std::size_t direct_delay(const Point& src, const Point& mic) const {
    return static_cast<std::size_t>(std::lround(distance(src, mic) / speed_of_sound * sample_rate));
  }
};

enum class EchoPath { Linear, HammersteinCubic };

inline std::string_view to_string(EchoPath p) {
  return p == EchoPath::Linear ? "linear" : "hammerstein";
}

// How far-end (loudspeaker) activity relates to near-end activity.
//   Coincident: both active over the same span (permanent doubletalk).
//   Offset:     far-end span shifted by a quarter of the duration, which
//               produces all four activity regimes.
enum class FarActivity { Coincident, Offset };

struct Scenario {
  RoomSpec room;
  std::vector<Point> mics{{2.0, 1.9, 1.0}, {2.0, 1.8, 1.0}};
  std::vector<Point> speakers;
  Point noise;
  Point source;
  std::size_t reference_mic = 0;
  double snr_db = 5.0;
  double ser_db = 5.0;
  EchoPath echo_path = EchoPath::Linear;
  FarActivity far_activity = FarActivity::Coincident;
  double duration_s = 10.0;
  std::uint64_t seed = 1;

  std::size_t n_mics() const { return mics.size(); }
  std::size_t n_speakers() const { return speakers.size(); }
  std::size_t n_samples() const {
    return static_cast<std::size_t>(std::lround(duration_s * room.sample_rate));
  }

  void validate() const {
    room.validate();
    if (mics.size() < 1) throw ScenarioError("at least one microphone is required");
    if (reference_mic >= mics.size()) throw ScenarioError("reference_mic out of range");
    auto inside = [&](const Point& p, std::string_view what) {
      if (!room.contains(p)) throw ScenarioError(std::string(what) + " lies outside the room");
    };
    for (const auto& m : mics) inside(m, "microphone");
    for (const auto& s : speakers) inside(s, "loudspeaker");
    inside(noise, "noise source");
    inside(source, "desired source");
    if (!(duration_s > 0.0)) throw ScenarioError("duration must be positive");
  }
};

using Rir = std::vector<double>;

// Impulse responses per (source, microphone) pair.
struct RirSet {
  std::vector<Rir> speech;             // [mic]
  std::vector<Rir> noise;              // [mic]
  std::vector<std::vector<Rir>> echo;  // [speaker][mic]
};

// Randomized image method: image sources of a shoebox room, each displaced
// uniformly inside a ball of displacement_radius (the direct path is not
// displaced), attenuated by reflection_coefficient per wall bounce and by
// 1/(4·pi·distance), placed at the nearest sample and truncated to
// rir_length taps.
inline Rir generate_rir(const RoomSpec& room, const Point& src, const Point& mic,
                        std::uint64_t seed) {
  room.validate();
  if (!room.contains(src)) throw ScenarioError("source lies outside the room");
  if (!room.contains(mic)) throw ScenarioError("microphone lies outside the room");

  Rir h(room.rir_length, 0.0);
  Rng rng(seed, 0x52495200);  // "RIR"
  const double fs = room.sample_rate;
  const double c = room.speed_of_sound;
  const double reach = static_cast<double>(room.rir_length) / fs * c + room.displacement_radius;
  const std::array<double, 3> s{src.x, src.y, src.z};
  const std::array<double, 3> m{mic.x, mic.y, mic.z};
  std::array<int, 3> nmax{};
  for (int a = 0; a < 3; ++a) {
    nmax[a] = static_cast<int>(std::ceil(reach / (2.0 * room.dimensions[a]))) + 1;
  }

  for (int nx = -nmax[0]; nx <= nmax[0]; ++nx)
    for (int ny = -nmax[1]; ny <= nmax[1]; ++ny)
      for (int nz = -nmax[2]; nz <= nmax[2]; ++nz)
        for (int q = 0; q < 8; ++q) {
          const std::array<int, 3> n{nx, ny, nz};
          const std::array<int, 3> qq{q & 1, (q >> 1) & 1, (q >> 2) & 1};
          int bounces = 0;
          std::array<double, 3> rel{};
          for (int a = 0; a < 3; ++a) {
            const double img = (1 - 2 * qq[a]) * s[a] + 2.0 * n[a] * room.dimensions[a];
            rel[a] = img - m[a];
            bounces += std::abs(n[a] - qq[a]) + std::abs(n[a]);
          }
          // Draw the displacement for every reflected image, in enumeration
          // order, even if the image turns out to be out of reach.
          if (bounces > 0 && room.displacement_radius > 0.0) {
            std::array<double, 3> d{};
            do {
              for (auto& v : d) v = rng.uniform(-1.0, 1.0);
            } while (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] > 1.0);
            for (int a = 0; a < 3; ++a) rel[a] += room.displacement_radius * d[a];
          }
          const double dist =
              std::sqrt(rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]);
          const auto tap = static_cast<long>(std::lround(dist / c * fs));
          if (tap < 0 || tap >= static_cast<long>(room.rir_length)) continue;
          const double gain = std::pow(room.reflection_coefficient, bounces);
          if (gain == 0.0) continue;
          h[static_cast<std::size_t>(tap)] += gain / (4.0 * std::numbers::pi * std::max(dist, 1e-3));
        }
  return h;
}

inline RirSet generate_rirs(const Scenario& sc) {
  sc.validate();
  RirSet set;
  std::uint64_t stream = 0;
  auto next_seed = [&] { return derive_seed(sc.seed, 0x1000 + stream++); };
  for (const auto& mic : sc.mics) set.speech.push_back(generate_rir(sc.room, sc.source, mic, next_seed()));
  for (const auto& mic : sc.mics) set.noise.push_back(generate_rir(sc.room, sc.noise, mic, next_seed()));
  for (const auto& spk : sc.speakers) {
    std::vector<Rir> row;
    for (const auto& mic : sc.mics) row.push_back(generate_rir(sc.room, spk, mic, next_seed()));
    set.echo.push_back(std::move(row));
  }
  return set;
}

// ---------------------------------------------------------------------------
// Source signals.

// Speech-like surrogate: white noise through a 2nd-order resonant low-pass
// (RBJ biquad, f0 = 1 kHz, Q = 2) with a 4 Hz syllabic amplitude envelope.
inline Signal speech_surrogate(std::size_t n, double fs, Rng& rng) {
  const double f0 = 1000.0, q = 2.0;
  const double w0 = 2.0 * std::numbers::pi * f0 / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double cw = std::cos(w0);
  const double a0 = 1.0 + alpha;
  const double b0 = (1.0 - cw) / 2.0 / a0, b1 = (1.0 - cw) / a0, b2 = b0;
  const double a1 = -2.0 * cw / a0, a2 = (1.0 - alpha) / a0;
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  Signal out(n);
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double x = rng.normal();
    const double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    const double env =
        0.55 + 0.45 * std::sin(2.0 * std::numbers::pi * 4.0 * static_cast<double>(t) / fs + phase);
    out[t] = y * env;
  }
  return out;
}

inline double mean_power(const Signal& x, const std::vector<bool>* mask = nullptr) {
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (mask && !(*mask)[t]) continue;
    s += x[t] * x[t];
    ++count;
  }
  return count ? s / static_cast<double>(count) : 0.0;
}

struct SourceSignals {
  Signal near;                   // desired speech at the source
  std::vector<bool> near_active;
  std::vector<Signal> feeds;     // loudspeaker signals l_j
  std::vector<bool> far_active;
  Signal noise;                  // noise at its source
  // Far-end speech-like part and white-noise part, kept for inspection.
  std::vector<Signal> feed_speech;
  std::vector<Signal> feed_noise;
};

// Near-end: speech over the first half of the duration, then silence.
// Far-end: speech-like signal plus white noise at 0 dB, active according to
// scenario.far_activity. Noise: babble surrogate (sum of eight independent
// speech surrogates), always on.
inline SourceSignals synthesize_sources(const Scenario& sc,
                                        const std::optional<Signal>& speech_in = std::nullopt,
                                        const std::optional<Signal>& far_speech_in = std::nullopt) {
  const std::size_t n = sc.n_samples();
  const double fs = sc.room.sample_rate;
  Rng rng(sc.seed, 0x534F5243);  // "SORC"
  SourceSignals out;

  const std::size_t half = n / 2;
  out.near_active.assign(n, false);
  for (std::size_t t = 0; t < half; ++t) out.near_active[t] = true;

  auto take = [&](const std::optional<Signal>& in, std::string_view what) {
    if (in->size() < n) {
      throw ScenarioError(std::string(what) + " is shorter than the scenario duration");
    }
    return Signal(in->begin(), in->begin() + static_cast<std::ptrdiff_t>(n));
  };

  Signal near_full = speech_in ? take(speech_in, "near-end speech input")
                               : speech_surrogate(n, fs, rng);
  out.near.assign(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) out.near[t] = out.near_active[t] ? near_full[t] : 0.0;
  {
    const double p = mean_power(out.near, &out.near_active);
    if (!(p > 0.0)) throw ScenarioError("near-end speech is silent over its active span");
    const double g = 1.0 / std::sqrt(p);
    for (auto& v : out.near) v *= g;
  }

  out.far_active.assign(n, false);
  const std::size_t shift = sc.far_activity == FarActivity::Offset ? n / 4 : 0;
  for (std::size_t t = shift; t < std::min(n, shift + half); ++t) out.far_active[t] = true;

  std::optional<Signal> far_shared;
  if (far_speech_in) far_shared = take(far_speech_in, "far-end speech input");
  for (std::size_t j = 0; j < sc.n_speakers(); ++j) {
    Signal speech = far_shared ? *far_shared : speech_surrogate(n, fs, rng);
    Signal white(n);
    for (auto& v : white) v = rng.normal();
    const double ps = mean_power(speech, &out.far_active);
    const double pw = mean_power(white, &out.far_active);
    if (!(ps > 0.0)) throw ScenarioError("far-end speech is silent over its active span");
    const double gs = 1.0 / std::sqrt(ps);
    const double gw = 1.0 / std::sqrt(pw);
    Signal feed(n, 0.0), sp(n, 0.0), wn(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      if (!out.far_active[t]) continue;
      sp[t] = speech[t] * gs * std::sqrt(0.5);
      wn[t] = white[t] * gw * std::sqrt(0.5);
      feed[t] = sp[t] + wn[t];
    }
    out.feeds.push_back(std::move(feed));
    out.feed_speech.push_back(std::move(sp));
    out.feed_noise.push_back(std::move(wn));
  }

  out.noise.assign(n, 0.0);
  for (int talker = 0; talker < 8; ++talker) {
    const Signal s = speech_surrogate(n, fs, rng);
    for (std::size_t t = 0; t < n; ++t) out.noise[t] += s[t];
  }
  {
    const double p = mean_power(out.noise);
    const double g = 1.0 / std::sqrt(p);
    for (auto& v : out.noise) v *= g;
  }
  return out;
}

// Full linear convolution truncated to the input length.
inline Signal convolve(const Signal& x, const Rir& h) {
  Signal y(x.size(), 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double xt = x[t];
    if (xt == 0.0) continue;
    const std::size_t kmax = std::min(h.size(), x.size() - t);
    for (std::size_t k = 0; k < kmax; ++k) y[t + k] += xt * h[k];
  }
  return y;
}

// Memoryless nonlinearity applied to each loudspeaker signal before its
// linear path.
inline Signal echo_path_input(const Signal& l, EchoPath path) {
  if (path == EchoPath::Linear) return l;
  Signal out(l.size());
  for (std::size_t t = 0; t < l.size(); ++t) out[t] = l[t] * l[t] * l[t];
  return out;
}

struct ComponentSignals {
  MultiSignal s;  // M channels
  MultiSignal n;  // M channels
  MultiSignal e;  // M channels
  MultiSignal l;  // L channels
  std::vector<bool> activity_s;
  std::vector<bool> activity_e;

  std::size_t n_mics() const { return s.size(); }
  std::size_t n_speakers() const { return l.size(); }
  std::size_t n_samples() const { return s.empty() ? 0 : s.front().size(); }

  MultiSignal mixture() const {
    MultiSignal m = s;
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::size_t t = 0; t < m[i].size(); ++t) m[i][t] += n[i][t] + e[i][t];
    return m;
  }
};

// Applies the RIRs and echo path, then scales noise and echo so that, at the
// reference microphone, speech power over speech-active samples relative to
// noise power over the same samples equals snr_db, and relative to echo
// power over echo-active samples equals ser_db.
inline ComponentSignals render_scenario(const Scenario& sc, const SourceSignals& src,
                                        const RirSet& rirs) {
  sc.validate();
  const std::size_t m_count = sc.n_mics();
  const std::size_t l_count = sc.n_speakers();
  const std::size_t r = sc.reference_mic;
  if (rirs.speech.size() != m_count || rirs.noise.size() != m_count ||
      rirs.echo.size() != l_count) {
    throw ScenarioError("RIR set does not match the scenario");
  }
  if (src.feeds.size() != l_count) throw ScenarioError("loudspeaker feed count mismatch");

  // Microphone-side activity outlasts the source by the impulse-response
  // support.
  auto dilate = [&](const std::vector<bool>& mask) {
    std::vector<bool> out(mask.size(), false);
    std::size_t last = 0;
    bool seen = false;
    for (std::size_t t = 0; t < mask.size(); ++t) {
      if (mask[t]) {
        last = t;
        seen = true;
      }
      out[t] = seen && t - last < sc.room.rir_length;
    }
    return out;
  };
  ComponentSignals out;
  out.activity_s = dilate(src.near_active);
  out.activity_e = dilate(src.far_active);
  for (std::size_t i = 0; i < m_count; ++i) {
    out.s.push_back(convolve(src.near, rirs.speech[i]));
    out.n.push_back(convolve(src.noise, rirs.noise[i]));
  }
  out.l = src.feeds;
  out.e.assign(m_count, Signal(src.near.size(), 0.0));
  for (std::size_t j = 0; j < l_count; ++j) {
    const Signal drive = echo_path_input(src.feeds[j], sc.echo_path);
    for (std::size_t i = 0; i < m_count; ++i) {
      const Signal y = convolve(drive, rirs.echo[j][i]);
      for (std::size_t t = 0; t < y.size(); ++t) out.e[i][t] += y[t];
    }
  }

  const double ps = mean_power(out.s[r], &out.activity_s);
  if (!(ps > 0.0)) throw ScenarioError("desired speech is all-zero at the reference microphone");
  const double pn = mean_power(out.n[r], &out.activity_s);
  if (!(pn > 0.0)) throw ScenarioError("noise is all-zero at the reference microphone");
  const double gn = std::sqrt(ps / pn * std::pow(10.0, -sc.snr_db / 10.0));
  for (auto& ch : out.n)
    for (auto& v : ch) v *= gn;

  if (l_count > 0) {
    const double pe = mean_power(out.e[r], &out.activity_e);
    if (!(pe > 0.0)) throw ScenarioError("echo is all-zero at the reference microphone");
    const double ge = std::sqrt(ps / pe * std::pow(10.0, -sc.ser_db / 10.0));
    for (auto& ch : out.e)
      for (auto& v : ch) v *= ge;
  }
  return out;
}

// Per-bin relative transfer functions h[f] = H_i(f)/H_r(f) from DFTs of the
// speech RIRs at the STFT length, and the stacked h̃ = [h; 0_L].
struct RtfSet {
  std::vector<CVector> h;        // [bin] -> M
  std::vector<CVector> h_tilde;  // [bin] -> M + L
  std::vector<std::size_t> flagged_bins;
};

inline RtfSet true_rtf(const std::vector<Rir>& speech_rirs, std::size_t reference_mic,
                       std::size_t n_speakers, std::size_t window_length) {
  const std::size_t m_count = speech_rirs.size();
  if (reference_mic >= m_count) throw ScenarioError("reference_mic out of range");
  const Fft fft(window_length);
  const std::size_t n_bins = window_length / 2 + 1;
  std::vector<CVector> spectra(m_count, CVector(window_length));
  for (std::size_t i = 0; i < m_count; ++i) {
    if (speech_rirs[i].size() > window_length) {
      throw ScenarioError("RIR longer than the DFT length");
    }
    std::copy(speech_rirs[i].begin(), speech_rirs[i].end(), spectra[i].begin());
    fft.forward(spectra[i]);
  }
  RtfSet out;
  for (std::size_t f = 0; f < n_bins; ++f) {
    CVector h(m_count);
    const cplx href = spectra[reference_mic][f];
    if (std::abs(href) < 1e-12) {
      h = unit_vector(m_count, reference_mic);
      out.flagged_bins.push_back(f);
    } else {
      for (std::size_t i = 0; i < m_count; ++i) h[i] = spectra[i][f] / href;
      h[reference_mic] = 1.0;
    }
    CVector ht(m_count + n_speakers, cplx{});
    std::copy(h.begin(), h.end(), ht.begin());
    out.h.push_back(std::move(h));
    out.h_tilde.push_back(std::move(ht));
  }
  return out;
}

inline RtfSet true_rtf(const Scenario& sc, const RirSet& rirs, std::size_t window_length) {
  return true_rtf(rirs.speech, sc.reference_mic, sc.n_speakers(), window_length);
}

// Far-field arrival-time differences t_i - t_r (seconds) of a plane wave
// travelling from the desired source's direction, as seen from the array
// centroid.
inline std::vector<double> arrival_time_differences(const Scenario& sc) {
  Point centroid;
  for (const auto& m : sc.mics) {
    centroid.x += m.x;
    centroid.y += m.y;
    centroid.z += m.z;
  }
  const double inv = 1.0 / static_cast<double>(sc.mics.size());
  centroid = {centroid.x * inv, centroid.y * inv, centroid.z * inv};
  Point u = sc.source - centroid;
  const double un = u.norm();
  if (!(un > 0.0)) throw ScenarioError("source coincides with the array centroid");
  u = {u.x / un, u.y / un, u.z / un};
  const Point pr = sc.mics[sc.reference_mic];
  std::vector<double> tau;
  for (const auto& m : sc.mics) tau.push_back((pr - m).dot(u) / sc.room.speed_of_sound);
  return tau;
}

// Uniform placement of the desired source, noise source and loudspeakers
// with wall clearance, minimum spacing between all elements (including the
// fixed microphones), and a direct path that lands within the first half of
// the impulse response at every microphone.
struct PlacementRules {
  double wall_clearance = 0.5;
  double min_spacing = 0.3;
  double max_direct_fraction = 0.5;
  int max_attempts = 100000;
};

inline void place_randomly(Scenario& sc, std::size_t n_speakers, Rng& rng,
                           const PlacementRules& rules = {}) {
  const auto& dims = sc.room.dimensions;
  const double max_dist = rules.max_direct_fraction * static_cast<double>(sc.room.rir_length) /
                          sc.room.sample_rate * sc.room.speed_of_sound;
  std::vector<Point> taken = sc.mics;
  auto draw = [&]() {
    for (int attempt = 0; attempt < rules.max_attempts; ++attempt) {
      Point p{rng.uniform(rules.wall_clearance, dims[0] - rules.wall_clearance),
              rng.uniform(rules.wall_clearance, dims[1] - rules.wall_clearance),
              rng.uniform(rules.wall_clearance, dims[2] - rules.wall_clearance)};
      bool ok = true;
      for (const auto& t : taken) ok = ok && distance(p, t) >= rules.min_spacing;
      for (const auto& m : sc.mics) ok = ok && distance(p, m) <= max_dist;
      if (ok) {
        taken.push_back(p);
        return p;
      }
    }
    throw ScenarioError("could not place a source satisfying the placement rules");
  };
  sc.source = draw();
  sc.noise = draw();
  sc.speakers.clear();
  for (std::size_t j = 0; j < n_speakers; ++j) sc.speakers.push_back(draw());
}

}  // namespace aecnr
