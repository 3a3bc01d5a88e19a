#pragma once

// Correlation matrices in the STFT domain: batch ("oracle") per-component
// covariances, their VAD-error-scaled composites, and exponentially weighted
// streaming estimates on the stacked microphone/loudspeaker vector.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "aecnr/linalg.hpp"
#include "aecnr/rng.hpp"
#include "aecnr/room.hpp"
#include "aecnr/stft.hpp"

namespace aecnr {

class StatsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ActivityLabels {
  std::vector<bool> vad_s;
  std::vector<bool> vad_e;
  bool corrupted = false;

  std::size_t n_frames() const { return vad_s.size(); }
};

// Ground-truth regime labels: a frame counts as active as soon as any sample
// under its window is active, so inactive regimes never see leaked energy.
inline ActivityLabels frame_labels(const ComponentSignals& c, const WindowSpec& w) {
  return {frame_activity(c.activity_s, w, 0.0), frame_activity(c.activity_e, w, 0.0), false};
}

// STFT of each component. The echo tensor holds microphone echo only; the
// loudspeaker tensor holds l.
struct ComponentSpectra {
  SpectralTensor s, n, e, l;

  std::size_t n_mics() const { return s.n_channels(); }
  std::size_t n_speakers() const { return l.n_channels(); }
  std::size_t n_frames() const { return s.n_frames(); }
  std::size_t n_bins() const { return s.n_bins(); }

  SpectralTensor stacked_mixture() const {
    return SpectralTensor::stack(s + n + e, l);
  }
};

inline ComponentSpectra analyze_components(const ComponentSignals& c, const WindowSpec& w) {
  ComponentSpectra out{analyze(c.s, w), analyze(c.n, w), analyze(c.e, w), {}};
  if (c.n_speakers() > 0) {
    out.l = analyze(c.l, w);
  } else {
    out.l = SpectralTensor(out.s.n_frames(), out.s.n_bins(), 0, c.n_samples());
  }
  return out;
}

// Per-bin component covariances.
struct BinCovariances {
  HermitianMatrix ss;  // M x M
  HermitianMatrix nn;  // M x M
  HermitianMatrix ee;  // M x M
  HermitianMatrix ll;  // L x L
  ComplexMatrix el;    // M x L

  std::size_t n_mics() const { return ss.dim(); }
  std::size_t n_speakers() const { return ll.dim(); }

  // [R_ss 0; 0 0]
  HermitianMatrix stacked_s() const { return embed_mic_block(ss); }
  // [R_nn 0; 0 0]
  HermitianMatrix stacked_n() const { return embed_mic_block(nn); }
  // [R_ee R_el; R_le R_ll]
  HermitianMatrix stacked_e() const {
    const std::size_t m = n_mics(), l = n_speakers();
    ComplexMatrix out(m + l, m + l);
    out.set_block(0, 0, ee.matrix());
    out.set_block(0, m, el);
    out.set_block(m, 0, el.adjoint());
    out.set_block(m, m, ll.matrix());
    return HermitianMatrix(out);
  }

  HermitianMatrix embed_mic_block(const HermitianMatrix& mic) const {
    const std::size_t m = n_mics(), l = n_speakers();
    ComplexMatrix out(m + l, m + l);
    out.set_block(0, 0, mic.matrix());
    return HermitianMatrix(out);
  }
};

struct OracleCovariances {
  std::size_t n_mics = 0;
  std::size_t n_speakers = 0;
  std::vector<BinCovariances> bins;

  std::size_t n_bins() const { return bins.size(); }
};

namespace detail {

inline void accumulate_outer(ComplexMatrix& acc, std::span<const cplx> x,
                             std::span<const cplx> y, double weight = 1.0) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const cplx xi = x[i] * weight;
    for (std::size_t j = 0; j < y.size(); ++j) acc(i, j) += xi * std::conj(y[j]);
  }
}

}  // namespace detail

// Averages of outer products over the frames where each component is active:
// speech over vad_s frames, noise over all frames, echo and loudspeaker
// statistics over vad_e frames.
inline OracleCovariances batch_covariances(const ComponentSpectra& c, const ActivityLabels& labels) {
  const std::size_t m = c.n_mics(), l = c.n_speakers();
  const std::size_t frames = c.n_frames();
  if (!c.s.same_shape(c.n) || !c.s.same_shape(c.e) || c.l.n_frames() != frames ||
      c.l.n_bins() != c.n_bins()) {
    throw StatsError("component tensors do not share a shape");
  }
  if (labels.n_frames() != frames || labels.vad_e.size() != frames) {
    throw StatsError("labels are not aligned with the spectra");
  }
  std::size_t n_s = 0, n_e = 0;
  for (std::size_t k = 0; k < frames; ++k) {
    n_s += labels.vad_s[k];
    n_e += labels.vad_e[k];
  }
  if (n_s == 0) throw StatsError("desired speech (s) has no active frames");
  if (l > 0 && n_e == 0) throw StatsError("echo (e) has no active frames");

  OracleCovariances out{m, l, {}};
  out.bins.reserve(c.n_bins());
  for (std::size_t f = 0; f < c.n_bins(); ++f) {
    ComplexMatrix ss(m, m), nn(m, m), ee(m, m), ll(l, l), el(m, l);
    for (std::size_t k = 0; k < frames; ++k) {
      detail::accumulate_outer(nn, c.n.snapshot(k, f), c.n.snapshot(k, f));
      if (labels.vad_s[k]) detail::accumulate_outer(ss, c.s.snapshot(k, f), c.s.snapshot(k, f));
      if (labels.vad_e[k]) {
        detail::accumulate_outer(ee, c.e.snapshot(k, f), c.e.snapshot(k, f));
        detail::accumulate_outer(ll, c.l.snapshot(k, f), c.l.snapshot(k, f));
        detail::accumulate_outer(el, c.e.snapshot(k, f), c.l.snapshot(k, f));
      }
    }
    const double is = 1.0 / static_cast<double>(n_s);
    const double in = 1.0 / static_cast<double>(frames);
    const double ie = n_e ? 1.0 / static_cast<double>(n_e) : 0.0;
    out.bins.push_back({HermitianMatrix(ss * is), HermitianMatrix(nn * in),
                        HermitianMatrix(ee * ie), HermitianMatrix(ll * ie), el * ie});
  }
  return out;
}

// Replaces R_ss by the rank-1 point-source model R_ss(r,r)·h·h^H using the
// given per-bin relative transfer functions.
inline OracleCovariances rank1_speech_model(const OracleCovariances& oc,
                                            const std::vector<CVector>& rtf,
                                            std::size_t reference_mic) {
  if (rtf.size() != oc.n_bins()) throw StatsError("RTF count does not match bins");
  OracleCovariances out = oc;
  for (std::size_t f = 0; f < oc.n_bins(); ++f) {
    const double phi = oc.bins[f].ss(reference_mic, reference_mic).real();
    out.bins[f].ss = HermitianMatrix(outer(rtf[f], rtf[f]) * phi);
  }
  return out;
}

struct VadScalings {
  double alpha_s = 0.0, alpha_e = 1.0;
  double beta_s = 1.0, beta_e = 1.0;
  double gamma_s = 0.0, gamma_e = 1.0;

  static VadScalings error_free() { return {}; }
  static VadScalings permanent_doubletalk() { return {1.0, 1.0, 1.0, 1.0, 0.0, 0.0}; }
  // VAD on the microphones only: noise-only versus any activity.
  static VadScalings microphone_only() { return {0.0, 1.0, 1.0, 1.0, 0.0, 0.0}; }

  void validate() const {
    for (double v : {alpha_s, alpha_e, beta_s, beta_e, gamma_s, gamma_e})
      if (!(v >= 0.0 && v <= 1.0)) throw StatsError("VAD scaling outside [0, 1]");
  }
};

enum class Provenance { Oracle, Streaming };

struct CorrelationSet {
  std::vector<HermitianMatrix> alpha;  // per bin, (M+L) x (M+L)
  std::vector<HermitianMatrix> beta;
  std::vector<HermitianMatrix> gamma;
  std::vector<HermitianMatrix> noise_only;  // diagnostics; streaming only
  Provenance provenance = Provenance::Oracle;
  // Streaming only: frames that updated each matrix; 0 means the matrix still
  // holds its initialisation.
  std::size_t alpha_updates = 0, beta_updates = 0, gamma_updates = 0, noise_only_updates = 0;

  std::size_t n_bins() const { return beta.size(); }
};

inline HermitianMatrix compose_bin(const BinCovariances& b, double s_scale, double e_scale) {
  return s_scale * b.stacked_s() + b.stacked_n() + e_scale * b.stacked_e();
}

// R^{x} = x_s·R_s̃s̃ + R_ññ + x_e·R_ẽẽ for x in {alpha, beta, gamma}.
inline CorrelationSet compose(const OracleCovariances& oc, const VadScalings& v) {
  v.validate();
  CorrelationSet out;
  out.provenance = Provenance::Oracle;
  for (const auto& b : oc.bins) {
    out.alpha.push_back(compose_bin(b, v.alpha_s, v.alpha_e));
    out.beta.push_back(compose_bin(b, v.beta_s, v.beta_e));
    out.gamma.push_back(compose_bin(b, v.gamma_s, v.gamma_e));
  }
  return out;
}

// Which (vad_s, vad_e) label combination updates each streaming estimate.
struct Regime {
  bool vad_s = false;
  bool vad_e = false;
  bool matches(bool s, bool e) const { return s == vad_s && e == vad_e; }
};

struct RegimeMap {
  Regime alpha{false, true};
  Regime beta{true, true};
  Regime gamma{false, true};

  // Separate speech and echo detectors.
  static RegimeMap separate_vads() { return {}; }
  // Speech and echo always co-occur: one "active" regime feeds alpha and
  // beta, the noise-only regime feeds gamma.
  static RegimeMap permanent_doubletalk() {
    return {{true, true}, {true, true}, {false, false}};
  }
};

inline constexpr double kDefaultForgetting = 0.995;
inline constexpr double kStreamingInit = 1e-10;

// Recursive averaging R <- lambda·R + (1 - lambda)·m̃·m̃^H per bin, applied to
// the matrices whose regime matches the frame's labels.
class StreamingEstimator {
 public:
  StreamingEstimator(std::size_t n_bins, std::size_t dim, double forgetting = kDefaultForgetting,
                     RegimeMap regimes = {}, double init = kStreamingInit)
      : forgetting_(forgetting), regimes_(regimes), dim_(dim) {
    if (!(forgetting > 0.0 && forgetting < 1.0)) {
      throw StatsError("forgetting factor must lie in (0, 1)");
    }
    const ComplexMatrix start = ComplexMatrix::identity(dim) * init;
    alpha_.assign(n_bins, start);
    beta_.assign(n_bins, start);
    gamma_.assign(n_bins, start);
    idle_.assign(n_bins, start);
  }

  void update(const SpectralTensor& stacked, std::size_t frame, bool vad_s, bool vad_e) {
    if (stacked.n_channels() != dim_ || stacked.n_bins() != alpha_.size()) {
      throw StatsError("streaming update: tensor shape mismatch");
    }
    const bool a = regimes_.alpha.matches(vad_s, vad_e);
    const bool b = regimes_.beta.matches(vad_s, vad_e);
    const bool g = regimes_.gamma.matches(vad_s, vad_e);
    const bool idle = !vad_s && !vad_e;
    alpha_updates_ += a;
    beta_updates_ += b;
    gamma_updates_ += g;
    idle_updates_ += idle;
    for (std::size_t f = 0; f < alpha_.size(); ++f) {
      const auto x = stacked.snapshot(frame, f);
      if (a) blend(alpha_[f], x);
      if (b) blend(beta_[f], x);
      if (g) blend(gamma_[f], x);
      if (idle) blend(idle_[f], x);
    }
  }

  CorrelationSet current() const {
    CorrelationSet out;
    out.provenance = Provenance::Streaming;
    for (std::size_t f = 0; f < alpha_.size(); ++f) {
      out.alpha.emplace_back(alpha_[f]);
      out.beta.emplace_back(beta_[f]);
      out.gamma.emplace_back(gamma_[f]);
      out.noise_only.emplace_back(idle_[f]);
    }
    out.alpha_updates = alpha_updates_;
    out.beta_updates = beta_updates_;
    out.gamma_updates = gamma_updates_;
    out.noise_only_updates = idle_updates_;
    return out;
  }

 private:
  void blend(ComplexMatrix& r, std::span<const cplx> x) const {
    const double w = 1.0 - forgetting_;
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j)
        r(i, j) = forgetting_ * r(i, j) + w * x[i] * std::conj(x[j]);
  }

  double forgetting_;
  RegimeMap regimes_;
  std::size_t dim_;
  std::vector<ComplexMatrix> alpha_, beta_, gamma_, idle_;
  std::size_t alpha_updates_ = 0, beta_updates_ = 0, gamma_updates_ = 0, idle_updates_ = 0;
};

// Final estimate after running over every frame of the stacked tensor.
inline CorrelationSet streaming_estimate(const SpectralTensor& stacked, const ActivityLabels& labels,
                                         double forgetting = kDefaultForgetting,
                                         RegimeMap regimes = {}) {
  if (labels.n_frames() != stacked.n_frames()) {
    throw StatsError("labels are not aligned with the spectra");
  }
  StreamingEstimator est(stacked.n_bins(), stacked.n_channels(), forgetting, regimes);
  for (std::size_t k = 0; k < stacked.n_frames(); ++k) {
    est.update(stacked, k, labels.vad_s[k], labels.vad_e[k]);
  }
  return est.current();
}

struct VadErrorRates {
  double miss_s = 0.0;   // P(vad_s = 0 | speech active)
  double false_s = 0.0;  // P(vad_s = 1 | speech inactive)
  double miss_e = 0.0;
  double false_e = 0.0;

  void validate() const {
    for (double p : {miss_s, false_s, miss_e, false_e})
      if (!(p >= 0.0 && p <= 1.0)) throw StatsError("VAD error probability outside [0, 1]");
  }
  bool any() const { return miss_s > 0 || false_s > 0 || miss_e > 0 || false_e > 0; }
};

// Flips each frame's labels independently. Two uniforms are drawn per frame
// (speech then echo) regardless of the outcome, so the stream stays aligned.
inline ActivityLabels corrupt_labels(const ActivityLabels& truth, const VadErrorRates& rates,
                                     std::uint64_t seed) {
  rates.validate();
  Rng rng(seed, 0x564144);  // "VAD"
  ActivityLabels out = truth;
  out.corrupted = true;
  for (std::size_t k = 0; k < truth.n_frames(); ++k) {
    const double us = rng.uniform();
    const double ue = rng.uniform();
    const bool s = truth.vad_s[k], e = truth.vad_e[k];
    out.vad_s[k] = s ? !(us < rates.miss_s) : (us < rates.false_s);
    out.vad_e[k] = e ? !(ue < rates.miss_e) : (ue < rates.false_e);
  }
  return out;
}

struct EffectiveScaling {
  double s_scale = 0.0;
  double e_scale = 0.0;
  std::size_t frames = 0;
};

// Power-weighted inclusion fractions: the share of each component's
// active-frame average power that ends up in the average over the frames
// selected by `regime` under `labels`.
inline EffectiveScaling effective_scaling(const ComponentSpectra& c, const ActivityLabels& truth,
                                          const ActivityLabels& labels, const Regime& regime) {
  auto frame_power = [&](const SpectralTensor& t, std::size_t k) {
    double p = 0.0;
    for (std::size_t f = 0; f < t.n_bins(); ++f)
      for (std::size_t ch = 0; ch < t.n_channels(); ++ch) p += std::norm(t(k, f, ch));
    return p;
  };
  double ps_true = 0.0, pe_true = 0.0, ps_sel = 0.0, pe_sel = 0.0;
  std::size_t ns = 0, ne = 0, nsel = 0;
  for (std::size_t k = 0; k < c.n_frames(); ++k) {
    const double ps = frame_power(c.s, k);
    const double pe = frame_power(c.e, k);
    if (truth.vad_s[k]) {
      ps_true += ps;
      ++ns;
    }
    if (truth.vad_e[k]) {
      pe_true += pe;
      ++ne;
    }
    if (regime.matches(labels.vad_s[k], labels.vad_e[k])) {
      ps_sel += ps;
      pe_sel += pe;
      ++nsel;
    }
  }
  EffectiveScaling out;
  out.frames = nsel;
  if (nsel == 0) return out;
  const double sel = static_cast<double>(nsel);
  if (ns > 0 && ps_true > 0) out.s_scale = (ps_sel / sel) / (ps_true / static_cast<double>(ns));
  if (ne > 0 && pe_true > 0) out.e_scale = (pe_sel / sel) / (pe_true / static_cast<double>(ne));
  return out;
}

}  // namespace aecnr
