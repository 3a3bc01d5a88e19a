#pragma once

// GEVD-based extended multichannel Wiener filter.
//
// The pencil {R^{beta}, R^{gamma}} is jointly diagonalised as
// R = Q·diag(lambda)·Q^H. Because s̃, ñ and ẽ_res carry no loudspeaker
// component while ẽ_lin does, M columns of Q have (numerically) zero
// trailing L entries; those columns carry the desired-speech estimate, the
// rest carry the linear echo and get a zero eigenvalue difference.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "aecnr/filter_bank.hpp"
#include "aecnr/linalg.hpp"
#include "aecnr/stats.hpp"
#include "aecnr/steering.hpp"

namespace aecnr {

inline constexpr double kStructureTolerance = 1e-8;

struct QPartition {
  std::vector<std::size_t> structured;    // [Q1; 0] columns, ratio order
  std::vector<std::size_t> unstructured;  // Q2 columns
  std::vector<double> trailing_fraction;  // per column |Q[M:, j]| / |Q[:, j]|
  bool warning = false;                   // structured count != expected
  std::size_t observed = 0;
};

inline QPartition q2_partition(const GevdResult& g, std::size_t n_mics, std::size_t n_speakers,
                               std::size_t expected_structured) {
  if (g.q.rows() != n_mics + n_speakers) throw LinalgError("q2_partition: dimension mismatch");
  QPartition p;
  for (std::size_t j = 0; j < g.size(); ++j) {
    double tail = 0.0, total = 0.0;
    for (std::size_t i = 0; i < g.q.rows(); ++i) {
      const double v = std::norm(g.q(i, j));
      total += v;
      if (i >= n_mics) tail += v;
    }
    const double frac = total > 0.0 ? std::sqrt(tail / total) : 0.0;
    p.trailing_fraction.push_back(frac);
    (frac <= kStructureTolerance ? p.structured : p.unstructured).push_back(j);
  }
  p.observed = p.structured.size();
  p.warning = p.observed != expected_structured;
  return p;
}

// The M columns treated as Q1: the M most structured columns, kept in ratio
// order. Equals q2_partition().structured whenever the structure is exact.
// With a degenerate pencil (equal ratios) the eigenvectors inside the
// degenerate subspace are arbitrary; those carry a zero difference anyway.
inline std::vector<std::size_t> speech_columns(const QPartition& p, std::size_t n_mics) {
  std::vector<std::size_t> idx(p.trailing_fraction.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return p.trailing_fraction[a] < p.trailing_fraction[b];
  });
  idx.resize(std::min(n_mics, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

enum class MwfRank { Full, One };

struct MwfBin {
  CVector w;
  HermitianMatrix r_s_hat;
  // Pencil {R_beta, R_gamma}: R_beta = Q·diag(lambda_a)·Q^H and
  // R_gamma = Q·diag(lambda_b)·Q^H, columns in non-increasing ratio order.
  GevdResult gevd;
  QPartition partition;
  std::vector<std::size_t> speech;  // Q1 columns, non-increasing ratio
  std::vector<std::size_t> kept;    // columns contributing to r_s_hat
  double loading = 0.0;             // diagonal load added to both matrices
};

// The matrix the MWF inverts. R_beta is used as is when positive definite;
// otherwise both sides of the pencil get the same diagonal load so that
// their difference is unchanged.
struct MwfPencil {
  HermitianMatrix beta;
  HermitianMatrix gamma;
  double loading = 0.0;
};

inline HermitianMatrix loaded(const HermitianMatrix& h, double eps) {
  if (eps == 0.0) return h;
  ComplexMatrix m = h.matrix();
  for (std::size_t i = 0; i < h.dim(); ++i) m(i, i) += eps;
  return HermitianMatrix(m);
}

inline MwfPencil mwf_pencil(const HermitianMatrix& r_beta, const HermitianMatrix& r_gamma) {
  try {
    (void)cholesky(r_beta);
    return {r_beta, r_gamma, 0.0};
  } catch (const NotPositiveDefinite&) {
    const double n = static_cast<double>(std::max<std::size_t>(r_beta.dim(), 1));
    const double level = std::abs(r_beta.trace()) / n;
    const double eps = kRegularization * (level > 0.0 ? level : 1.0);
    return {loaded(r_beta, eps), loaded(r_gamma, eps), eps};
  }
}

// Solved as the pencil {R_gamma, R_beta} so that R_beta, which is positive
// definite whenever beta_e > 0, is the whitened side; the echo-only
// directions then have eigenvalue ~0 on the gamma side instead of a huge
// ratio.
inline MwfBin mwf_ext_bin(const HermitianMatrix& r_beta, const HermitianMatrix& r_gamma,
                          std::size_t n_mics, std::size_t reference_mic, MwfRank rank) {
  const std::size_t dim = r_beta.dim();
  if (r_gamma.dim() != dim || n_mics > dim || reference_mic >= n_mics) {
    throw LinalgError("mwf_ext: dimension mismatch");
  }
  const std::size_t n_speakers = dim - n_mics;
  const MwfPencil p = mwf_pencil(r_beta, r_gamma);

  const GevdResult inv = gevd(p.gamma, p.beta);
  std::vector<std::size_t> order(dim);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return inv.lambda_a[i] * inv.lambda_b[j] < inv.lambda_a[j] * inv.lambda_b[i];
  });
  MwfBin out;
  out.loading = p.loading;
  out.gevd = {ComplexMatrix(dim, dim), RVector(dim), RVector(dim)};
  for (std::size_t k = 0; k < dim; ++k) {
    out.gevd.lambda_a[k] = inv.lambda_b[order[k]];
    out.gevd.lambda_b[k] = inv.lambda_a[order[k]];
    for (std::size_t i = 0; i < dim; ++i) out.gevd.q(i, k) = inv.q(i, order[k]);
  }

  out.partition = q2_partition(out.gevd, n_mics, n_speakers, n_mics);
  out.speech = speech_columns(out.partition, n_mics);
  out.kept = out.speech;
  if (rank == MwfRank::One && !out.kept.empty()) out.kept.resize(1);

  RVector d(dim, 0.0);
  for (std::size_t j : out.kept) d[j] = out.gevd.lambda_a[j] - out.gevd.lambda_b[j];
  out.r_s_hat = reconstruct(out.gevd.q, d);
  out.w = solve_hermitian(p.beta, out.r_s_hat.matrix().col(reference_mic));
  return out;
}

struct MwfDesign {
  FilterBank filters;
  std::vector<MwfBin> bins;
  std::size_t structure_warnings = 0;
};

inline MwfDesign mwf_ext_design(const CorrelationSet& c, std::size_t n_mics,
                                std::size_t reference_mic, MwfRank rank) {
  const std::size_t n_bins = c.n_bins();
  if (c.gamma.size() != n_bins || n_bins == 0) throw LinalgError("mwf_ext: empty correlation set");
  const std::size_t dim = c.beta.front().dim();
  MwfDesign out{FilterBank(rank == MwfRank::One ? Algorithm::MwfExtRank1 : Algorithm::MwfExtFull,
                           n_bins, dim),
                {}, 0};
  out.bins.reserve(n_bins);
  for (std::size_t f = 0; f < n_bins; ++f) {
    out.bins.push_back(mwf_ext_bin(c.beta[f], c.gamma[f], n_mics, reference_mic, rank));
    out.filters.set(f, out.bins.back().w);
    if (out.bins.back().partition.warning) ++out.structure_warnings;
  }
  out.filters.flagged_bins = out.structure_warnings;
  if (out.structure_warnings > 0) {
    out.filters.notes.push_back("GEVD zero structure not exact in " +
                                std::to_string(out.structure_warnings) + " bins");
  }
  return out;
}

inline FilterBank mwf_ext(const CorrelationSet& c, std::size_t n_mics, std::size_t reference_mic,
                          MwfRank rank) {
  return mwf_ext_design(c, n_mics, reference_mic, rank).filters;
}

// ĥ_GEVD per bin from the top-ratio speech column of the MWF pencil.
inline SteeringVariant gevd_steering(const std::vector<MwfBin>& bins, std::size_t n_mics,
                                     std::size_t reference_mic) {
  std::vector<CVector> h_tilde;
  std::vector<double> discarded;
  for (const auto& b : bins) {
    if (b.speech.empty()) throw SteeringError("no speech column in GEVD");
    double lost = 0.0;
    const CVector q = b.gevd.q.col(b.speech.front());
    CVector h = normalized_steering(q, n_mics, reference_mic, &lost);
    h_tilde.push_back(std::move(h));
    discarded.push_back(lost);
  }
  SteeringVariant sv = steering_from_rtf(h_tilde, n_mics, reference_mic, SteeringKind::GevdRtf);
  sv.discarded_mass = std::move(discarded);
  return sv;
}

}  // namespace aecnr
