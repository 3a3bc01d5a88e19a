#pragma once

// Intelligibility-weighted evaluation: band powers on third-octave bands,
// SNR improvement, ERLE and speech distortion, all measured on component
// signals passed separately through the same filters (shadow filtering).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aecnr/bussgang.hpp"
#include "aecnr/filter_bank.hpp"
#include "aecnr/room.hpp"
#include "aecnr/stats.hpp"
#include "aecnr/stft.hpp"

namespace aecnr {

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMetricCapDb = 120.0;

struct BandWeights {
  std::vector<double> centers;  // Hz
  std::vector<double> weights;  // sum to 1

  std::size_t size() const { return centers.size(); }
  double lower_edge(std::size_t b) const { return centers[b] * std::pow(2.0, -1.0 / 6.0); }
  double upper_edge(std::size_t b) const { return centers[b] * std::pow(2.0, 1.0 / 6.0); }

  void validate() const {
    if (centers.empty() || centers.size() != weights.size()) {
      throw MetricsError("band weights: empty or mismatched table");
    }
    double sum = 0.0;
    for (std::size_t b = 0; b < size(); ++b) {
      if (!(weights[b] >= 0.0) || !std::isfinite(weights[b])) {
        throw MetricsError("band weights: negative or non-finite weight");
      }
      if (!(centers[b] > 0.0) || (b > 0 && centers[b] <= centers[b - 1])) {
        throw MetricsError("band weights: centers must be positive and increasing");
      }
      sum += weights[b];
    }
    if (std::abs(sum - 1.0) > 1e-12) throw MetricsError("band weights: do not sum to 1");
  }

  // Rescales raw importances to sum 1.
  static BandWeights normalized(std::vector<double> centers, std::vector<double> raw) {
    double sum = 0.0;
    for (double x : raw) sum += x;
    if (!(sum > 0.0)) throw MetricsError("band weights: zero total importance");
    for (double& x : raw) x /= sum;
    BandWeights w{std::move(centers), std::move(raw)};
    w.validate();
    return w;
  }

  static std::vector<double> third_octave_centers() {
    return {160, 200, 250, 315, 400, 500, 630, 800, 1000,
            1250, 1600, 2000, 2500, 3150, 4000, 5000, 6300, 8000};
  }

  static BandWeights uniform() {
    auto c = third_octave_centers();
    std::vector<double> raw(c.size(), 1.0);
    return normalized(std::move(c), std::move(raw));
  }

  // ANSI S3.5 third-octave band-importance function (average speech).
  static BandWeights ansi_third_octave() {
    return normalized(third_octave_centers(),
                      {0.0083, 0.0095, 0.0150, 0.0289, 0.0440, 0.0578, 0.0653, 0.0711, 0.0818,
                       0.0844, 0.0882, 0.0898, 0.0868, 0.0844, 0.0771, 0.0527, 0.0364, 0.0185});
  }

  // "center_hz weight" per line; '#' starts a comment.
  static BandWeights parse(std::istream& in) {
    std::vector<double> c, raw;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      double hz = 0.0, wt = 0.0;
      if (!(ls >> hz)) continue;
      std::string rest;
      if (!(ls >> wt) || (ls >> rest)) {
        throw MetricsError("band weights: malformed line " + std::to_string(lineno));
      }
      c.push_back(hz);
      raw.push_back(wt);
    }
    return normalized(std::move(c), std::move(raw));
  }

  static BandWeights load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MetricsError("band weights: cannot open " + path);
    return parse(in);
  }
};

struct MetricOptions {
  WindowSpec window{};
  double sample_rate = 16000.0;
  BandWeights weights = BandWeights::uniform();
};

// Mean power per band over the frames flagged active (at least half the
// window inside the active region).
inline std::vector<double> band_powers(const Signal& x, const std::vector<bool>& active_samples,
                                       const MetricOptions& opt) {
  if (active_samples.size() != x.size()) throw MetricsError("band_powers: mask length mismatch");
  const SpectralTensor t = analyze(x, opt.window);
  const std::vector<bool> frames = frame_activity(active_samples, opt.window);
  const double nyquist = opt.sample_rate / 2.0;
  const double df = opt.sample_rate / static_cast<double>(opt.window.length);
  const BandWeights& bw = opt.weights;
  std::vector<double> p(bw.size(), 0.0);
  std::size_t n_active = 0;
  for (std::size_t k = 0; k < t.n_frames(); ++k) {
    if (!frames[k]) continue;
    ++n_active;
    for (std::size_t b = 0; b < bw.size(); ++b) {
      const double lo = bw.lower_edge(b), hi = std::min(bw.upper_edge(b), nyquist);
      for (std::size_t f = 0; f < t.n_bins(); ++f) {
        const double hz = static_cast<double>(f) * df;
        if (hz >= lo && hz < hi) p[b] += std::norm(t(k, f, 0));
      }
    }
  }
  if (n_active == 0) throw MetricsError("band_powers: no active frames");
  for (double& v : p) v /= static_cast<double>(n_active);
  return p;
}

struct MetricValue {
  double db = 0.0;
  std::size_t excluded_bands = 0;   // zero-power bands, weights renormalised
  std::size_t saturated_bands = 0;  // per-band value clipped at the cap
};

namespace detail {

// Weighted sum over bands where `term` yields a value; the rest are excluded
// and the remaining weights renormalised.
template <class Term>
MetricValue weighted_bands(const BandWeights& w, Term term) {
  MetricValue out;
  double acc = 0.0, wsum = 0.0;
  for (std::size_t b = 0; b < w.size(); ++b) {
    const std::optional<double> v = term(b, out.saturated_bands);
    if (!v) {
      ++out.excluded_bands;
      continue;
    }
    acc += w.weights[b] * *v;
    wsum += w.weights[b];
  }
  if (!(wsum > 0.0)) throw MetricsError("no band carries power");
  out.db = acc / wsum;
  return out;
}

inline double capped_db(double ratio, std::size_t& saturated) {
  double v = ratio > 0.0 ? 10.0 * std::log10(ratio) : -std::numeric_limits<double>::infinity();
  if (!std::isfinite(v) || std::abs(v) > kMetricCapDb) {
    ++saturated;
    v = std::isnan(v) ? 0.0 : std::clamp(v, -kMetricCapDb, kMetricCapDb);
  }
  return v;
}

}  // namespace detail

// Σ_b w_b·(SNR_out,b - SNR_in,b) over the desired-speech-active region.
inline MetricValue delta_snr_i(const Signal& s_in, const Signal& n_in, const Signal& s_out,
                               const Signal& n_out, const std::vector<bool>& active_s,
                               const MetricOptions& opt) {
  const auto psi = band_powers(s_in, active_s, opt), pni = band_powers(n_in, active_s, opt);
  const auto pso = band_powers(s_out, active_s, opt), pno = band_powers(n_out, active_s, opt);
  return detail::weighted_bands(opt.weights, [&](std::size_t b, std::size_t& sat)
                                                 -> std::optional<double> {
    if (!(psi[b] > 0.0) || !(pni[b] > 0.0)) return std::nullopt;
    const double in = 10.0 * std::log10(psi[b] / pni[b]);
    if (!(pso[b] > 0.0) && !(pno[b] > 0.0)) return std::nullopt;
    return detail::capped_db(pno[b] > 0.0 ? pso[b] / pno[b] : HUGE_VAL, sat) - in;
  });
}

// Σ_b w_b·10·log10(P_in,b / P_out,b), capped at 120 dB per band.
inline MetricValue erle_i(const Signal& e_in, const Signal& e_out,
                          const std::vector<bool>& active_e, const MetricOptions& opt) {
  const auto pi = band_powers(e_in, active_e, opt), po = band_powers(e_out, active_e, opt);
  double total = 0.0;
  for (double v : pi) total += v;
  if (!(total > 0.0)) throw MetricsError("erle_i: input echo has zero power");
  return detail::weighted_bands(opt.weights, [&](std::size_t b, std::size_t& sat)
                                                 -> std::optional<double> {
    if (!(pi[b] > 0.0)) return std::nullopt;
    return detail::capped_db(po[b] > 0.0 ? pi[b] / po[b] : HUGE_VAL, sat);
  });
}

// Σ_b w_b·10·log10(P_(s_out - s_ref),b / P_s_ref,b); attenuation counts as
// distortion. Capped at -120 dB per band.
inline MetricValue sd_i(const Signal& s_ref, const Signal& s_out,
                        const std::vector<bool>& active_s, const MetricOptions& opt) {
  if (s_ref.size() != s_out.size()) throw MetricsError("sd_i: length mismatch");
  Signal diff(s_ref.size());
  for (std::size_t t = 0; t < diff.size(); ++t) diff[t] = s_out[t] - s_ref[t];
  const auto pr = band_powers(s_ref, active_s, opt), pd = band_powers(diff, active_s, opt);
  double total = 0.0;
  for (double v : pr) total += v;
  if (!(total > 0.0)) throw MetricsError("sd_i: reference speech has zero power");
  return detail::weighted_bands(opt.weights, [&](std::size_t b, std::size_t& sat)
                                                 -> std::optional<double> {
    if (!(pr[b] > 0.0)) return std::nullopt;
    return detail::capped_db(pd[b] / pr[b], sat);
  });
}

// Single-channel filter outputs of each component. e_lin and e_res are
// empty unless a Bussgang model was supplied.
struct ShadowOutputs {
  Signal s, n, e, e_lin, e_res, mixture;
};

inline Signal shadow_channel(const SpectralTensor& stacked, const FilterBank& fb,
                             const WindowSpec& w) {
  return synthesize(apply_filterbank(stacked, fb), w).front();
}

inline ShadowOutputs shadow_filter(const ComponentSpectra& c, const FilterBank& fb,
                                   const WindowSpec& w, const BussgangModel* bg = nullptr) {
  const std::size_t m = c.n_mics(), l = c.n_speakers();
  if (fb.n_channels() != m + l || fb.n_bins() != c.n_bins()) {
    throw MetricsError("shadow_filter: filter bank shape does not match the components");
  }
  const SpectralTensor zeros(c.n_frames(), c.n_bins(), l, c.s.signal_length());
  ShadowOutputs out;
  out.s = shadow_channel(SpectralTensor::stack(c.s, zeros), fb, w);
  out.n = shadow_channel(SpectralTensor::stack(c.n, zeros), fb, w);
  out.e = shadow_channel(SpectralTensor::stack(c.e, c.l), fb, w);
  out.mixture = shadow_channel(c.stacked_mixture(), fb, w);
  if (bg) {
    if (bg->bins.size() != c.n_bins()) throw MetricsError("shadow_filter: Bussgang bin mismatch");
    const EchoSplitSpectra split = split_echo(c, *bg);
    out.e_lin = shadow_channel(SpectralTensor::stack(split.lin, c.l), fb, w);
    out.e_res = shadow_channel(SpectralTensor::stack(split.res, zeros), fb, w);
  }
  return out;
}

inline ShadowOutputs shadow_filter(const ComponentSignals& c, const FilterBank& fb,
                                   const WindowSpec& w, const BussgangModel* bg = nullptr) {
  return shadow_filter(analyze_components(c, w), fb, w, bg);
}

struct MetricsReport {
  std::string scenario_id;
  std::string algorithm;
  std::string echo_path;
  double delta_snr_i = 0.0;
  double erle_i = 0.0;
  double sd_i = 0.0;
  std::size_t excluded_bands = 0;
  std::size_t saturated_bands = 0;
};

// The three metrics at the reference microphone, with activity masks from
// the ground-truth component activity.
inline MetricsReport evaluate(const ComponentSignals& c, const ShadowOutputs& y,
                              std::size_t reference_mic, const MetricOptions& opt) {
  if (reference_mic >= c.n_mics()) throw MetricsError("evaluate: reference microphone out of range");
  const MetricValue snr =
      delta_snr_i(c.s[reference_mic], c.n[reference_mic], y.s, y.n, c.activity_s, opt);
  const MetricValue erle = erle_i(c.e[reference_mic], y.e, c.activity_e, opt);
  const MetricValue sd = sd_i(c.s[reference_mic], y.s, c.activity_s, opt);
  MetricsReport r;
  r.delta_snr_i = snr.db;
  r.erle_i = erle.db;
  r.sd_i = sd.db;
  r.excluded_bands = snr.excluded_bands + erle.excluded_bands + sd.excluded_bands;
  r.saturated_bands = snr.saturated_bands + erle.saturated_bands + sd.saturated_bands;
  return r;
}

}  // namespace aecnr
