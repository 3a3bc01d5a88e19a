#pragma once

// Steering vectors, quiescent beamformers and blocking matrices for the GEIC.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "aecnr/linalg.hpp"
#include "aecnr/room.hpp"

namespace aecnr {

class SteeringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SteeringKind { TrueRtf, GriffithsJim, GevdRtf };

struct SteeringVariant {
  SteeringKind kind = SteeringKind::TrueRtf;
  std::size_t n_mics = 0;
  std::size_t n_speakers = 0;
  std::size_t reference_mic = 0;
  std::vector<CVector> h_tilde;         // [bin] -> M + L, trailing L zero
  std::vector<CVector> w_c;             // [bin] -> M, quiescent beamformer
  std::vector<ComplexMatrix> blocking;  // [bin] -> M x (M-1)
  // GevdRtf: magnitude of the trailing L entries before they were zeroed.
  std::vector<double> discarded_mass;
  // GriffithsJim: microphones whose steering delay was rounded by more than
  // a quarter sample.
  std::vector<std::size_t> coarse_delay_mics;

  std::size_t n_bins() const { return h_tilde.size(); }
};

// Orthonormal basis of the orthogonal complement of h (M x (M-1)), built
// from the Householder reflector that maps h/|h| onto a phase-rotated e_1.
inline ComplexMatrix householder_blocking(std::span<const cplx> h) {
  const std::size_t m = h.size();
  const double hn = norm2(h);
  if (!(hn > 0.0)) throw SteeringError("blocking matrix of a zero steering vector");
  CVector v(h.begin(), h.end());
  for (auto& x : v) x /= hn;
  const cplx u0 = v[0];
  const cplx phase = std::abs(u0) > 0.0 ? u0 / std::abs(u0) : cplx{1.0};
  v[0] += phase;  // v = u + phase·e_1, never cancels
  const double vv = std::real(inner(v, v));
  ComplexMatrix b(m, m - 1);
  for (std::size_t j = 1; j < m; ++j) {
    // Column j of H = I - 2·v·v^H / (v^H v).
    for (std::size_t i = 0; i < m; ++i) {
      const cplx hij = (i == j ? 1.0 : 0.0) - 2.0 * v[i] * std::conj(v[j]) / vv;
      b(i, j - 1) = hij;
    }
  }
  return b;
}

inline CVector delay_and_sum(std::span<const cplx> h) {
  const double hh = std::real(inner(h, h));
  if (!(hh > 0.0)) throw SteeringError("quiescent beamformer of a zero steering vector");
  return scaled(h, 1.0 / hh);
}

// w_c = h/(h^H h) and the Householder blocking matrix for each bin.
inline SteeringVariant steering_from_rtf(const std::vector<CVector>& h_tilde, std::size_t n_mics,
                                         std::size_t reference_mic, SteeringKind kind) {
  SteeringVariant sv;
  sv.kind = kind;
  sv.n_mics = n_mics;
  sv.reference_mic = reference_mic;
  if (h_tilde.empty()) throw SteeringError("no bins");
  sv.n_speakers = h_tilde.front().size() - n_mics;
  for (const auto& ht : h_tilde) {
    if (ht.size() != n_mics + sv.n_speakers) throw SteeringError("inconsistent h_tilde length");
    const std::span<const cplx> h(ht.data(), n_mics);
    sv.h_tilde.push_back(ht);
    sv.w_c.push_back(delay_and_sum(h));
    sv.blocking.push_back(householder_blocking(h));
  }
  return sv;
}

inline SteeringVariant true_rtf_steering(const RtfSet& rtf, std::size_t reference_mic) {
  const std::size_t m = rtf.h.empty() ? 0 : rtf.h.front().size();
  return steering_from_rtf(rtf.h_tilde, m, reference_mic, SteeringKind::TrueRtf);
}

// Delay-and-sum beamformer and Griffiths-Jim blocking matrix (differences of
// adjacent steered channels) from far-field arrival-time differences,
// quantised to whole samples.
inline SteeringVariant griffiths_jim_steering(const std::vector<double>& arrival_differences,
                                              std::size_t reference_mic, std::size_t n_speakers,
                                              double sample_rate, std::size_t window_length) {
  const std::size_t m = arrival_differences.size();
  SteeringVariant sv;
  sv.kind = SteeringKind::GriffithsJim;
  sv.n_mics = m;
  sv.n_speakers = n_speakers;
  sv.reference_mic = reference_mic;
  std::vector<long> delay(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double d = arrival_differences[i] * sample_rate;
    delay[i] = std::lround(d);
    if (std::abs(d - static_cast<double>(delay[i])) > 0.25) sv.coarse_delay_mics.push_back(i);
  }
  const std::size_t n_bins = window_length / 2 + 1;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (std::size_t f = 0; f < n_bins; ++f) {
    CVector h(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(f) *
                         static_cast<double>(delay[i]) / static_cast<double>(window_length);
      h[i] = std::polar(1.0, ang);
    }
    ComplexMatrix b(m, m > 0 ? m - 1 : 0);
    for (std::size_t j = 0; j + 1 < m; ++j) {
      b(j, j) = h[j] * inv_sqrt2;
      b(j + 1, j) = -h[j + 1] * inv_sqrt2;
    }
    CVector ht(m + n_speakers, cplx{});
    std::copy(h.begin(), h.end(), ht.begin());
    sv.w_c.push_back(delay_and_sum(h));
    sv.blocking.push_back(std::move(b));
    sv.h_tilde.push_back(std::move(ht));
  }
  return sv;
}

inline SteeringVariant griffiths_jim_steering(const Scenario& sc, std::size_t window_length) {
  return griffiths_jim_steering(arrival_time_differences(sc), sc.reference_mic, sc.n_speakers(),
                                sc.room.sample_rate, window_length);
}

// ĥ = q/q(r) from one generalized eigenvector column, trailing L zeroed.
// Returns the pre-zeroing magnitude of the trailing entries via `discarded`.
inline CVector normalized_steering(std::span<const cplx> q, std::size_t n_mics,
                                   std::size_t reference_mic, double* discarded = nullptr) {
  const cplx qr = q[reference_mic];
  if (std::abs(qr) <= 1e-12 * std::max(norm2(q), 1e-300)) {
    throw SteeringError("reference entry of the eigenvector vanishes; cannot normalise");
  }
  CVector h(q.size());
  double tail = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const cplx v = q[i] / qr;
    if (i < n_mics) {
      h[i] = v;
    } else {
      tail += std::norm(v);
    }
  }
  h[reference_mic] = 1.0;
  if (discarded) *discarded = std::sqrt(tail);
  return h;
}

}  // namespace aecnr
