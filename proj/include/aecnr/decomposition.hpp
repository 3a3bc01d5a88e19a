#pragma once

// MWF_ext written as a GEIC followed by a single-channel Wiener postfilter.
//
// Full pencil, rank-1 speech:
//   w_MWF = g·w_GEIC^{beta} + R_beta^{-1}·(beta_e - gamma_e)·R_eres·t_r
//   g     = (beta_s - gamma_s)·P_s / (beta_s·P_s + P_n + beta_e·P_eres)
// where w_GEIC^{beta} is the GEIC solved on R^{beta} with alpha_e = beta_e and
// P_k = w_GEIC^H·R_k·w_GEIC.
//
// Rank-1 GEVD:
//   w_MWF,1 = P_s / (P_s + P_i) · w_GEIC(ĥ_GEVD)
// with R̂_s = d_1·q_1·q_1^H, P_s = w^H·R̂_s·w and P_i = w^H·(R_beta - R̂_s)·w.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "aecnr/bussgang.hpp"
#include "aecnr/filter_bank.hpp"
#include "aecnr/geic.hpp"
#include "aecnr/linalg.hpp"
#include "aecnr/mwf.hpp"
#include "aecnr/stats.hpp"
#include "aecnr/steering.hpp"

namespace aecnr {

struct PostfilterBreakdown {
  CVector geic_part;
  cplx postfilter_gain{};
  CVector residual_branch;
  double p_s = 0.0;
  double p_n = 0.0;
  double p_eres = 0.0;
  double p_elin = 0.0;

  CVector reconstructed() const {
    const CVector w = scaled(geic_part, postfilter_gain);
    return residual_branch.empty() ? w : axpy(cplx{1.0}, residual_branch, w);
  }
};

struct DecompositionReport {
  std::vector<PostfilterBreakdown> bins;
  std::vector<double> relative_error;  // |reconstructed - w_MWF| / |w_MWF|
  std::size_t worst_bin = 0;
  double worst_error = 0.0;
};

inline double relative_difference(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) throw LinalgError("relative_difference: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

namespace detail {

inline PostfilterBreakdown decompose_mwf_bin(const BinCovariances& oracle, const BussgangBin& bg,
                                             const HermitianMatrix& r_beta,
                                             const HermitianMatrix& r_gamma,
                                             std::span<const cplx> w_c,
                                             const ComplexMatrix& blocking, const VadScalings& v,
                                             std::size_t reference_mic, double echo_sign) {
  const HermitianMatrix a = mwf_pencil(r_beta, r_gamma).beta;
  PostfilterBreakdown out;
  out.geic_part = geic_weights(a, echo_blocks(oracle), v.beta_e, w_c, blocking, nullptr, echo_sign);
  const CVector& w = out.geic_part;
  out.p_s = quad_form(oracle.stacked_s(), w);
  out.p_n = quad_form(oracle.stacked_n(), w);
  out.p_eres = quad_form(bg.r_res, w);
  out.p_elin = quad_form(bg.r_lin, w);
  const double den = v.beta_s * out.p_s + out.p_n + v.beta_e * out.p_eres;
  out.postfilter_gain = den > 0.0 ? (v.beta_s - v.gamma_s) * out.p_s / den : 0.0;

  const double de = v.beta_e - v.gamma_e;
  if (de != 0.0) {
    const CVector rhs = scaled(bg.r_res.matrix().col(reference_mic), cplx{de});
    out.residual_branch = solve_hermitian(a, rhs);
  } else {
    out.residual_branch.assign(w.size(), cplx{});
  }
  return out;
}

inline DecompositionReport decompose_mwf(const FilterBank& mwf, const SteeringVariant& sv,
                                         const CorrelationSet& c, const OracleCovariances& oracle,
                                         const BussgangModel& bg, const VadScalings& v,
                                         double echo_sign) {
  const std::size_t n = sv.n_bins();
  if (mwf.n_bins() != n || c.n_bins() != n || oracle.n_bins() != n || bg.bins.size() != n) {
    throw LinalgError("decompose_mwf: bin count mismatch");
  }
  DecompositionReport rep;
  for (std::size_t f = 0; f < n; ++f) {
    rep.bins.push_back(decompose_mwf_bin(oracle.bins[f], bg.bins[f], c.beta[f], c.gamma[f],
                                         sv.w_c[f], sv.blocking[f], v, sv.reference_mic,
                                         echo_sign));
    const double e = relative_difference(rep.bins.back().reconstructed(), mwf.weight(f));
    rep.relative_error.push_back(e);
    if (e > rep.worst_error || f == 0) {
      rep.worst_error = e;
      rep.worst_bin = f;
    }
  }
  return rep;
}

}  // namespace detail

// GEIC cascade view of a full-rank MWF_ext designed on oracle statistics
// whose speech covariance is rank 1 and matches the steering in `sv`.
inline DecompositionReport decompose_mwf(const FilterBank& mwf, const SteeringVariant& sv,
                                         const CorrelationSet& c, const OracleCovariances& oracle,
                                         const BussgangModel& bg, const VadScalings& v) {
  return detail::decompose_mwf(mwf, sv, c, oracle, bg, v, 1.0);
}

// GEIC(ĥ_GEVD) followed by P_s/(P_s + P_i), compared against the rank-1
// MWF_ext filter of the same design.
inline DecompositionReport decompose_mwf_rank1(const MwfDesign& design, const CorrelationSet& c,
                                               std::size_t n_mics, std::size_t reference_mic) {
  const std::size_t n = design.bins.size();
  if (c.n_bins() != n) throw LinalgError("decompose_mwf_rank1: bin count mismatch");
  const SteeringVariant sv = gevd_steering(design.bins, n_mics, reference_mic);
  DecompositionReport rep;
  for (std::size_t f = 0; f < n; ++f) {
    const MwfBin& mb = design.bins[f];
    const HermitianMatrix a = mwf_pencil(c.beta[f], c.gamma[f]).beta;
    PostfilterBreakdown pb;
    pb.geic_part = geic_weights(a, echo_blocks(a, n_mics), 1.0, sv.w_c[f], sv.blocking[f]);
    const CVector& w = pb.geic_part;
    pb.p_s = quad_form(mb.r_s_hat, w);
    const double p_i = quad_form(a, w) - pb.p_s;
    pb.p_n = p_i;
    pb.postfilter_gain = (pb.p_s + p_i) > 0.0 ? pb.p_s / (pb.p_s + p_i) : 0.0;
    rep.bins.push_back(std::move(pb));
    const double e = relative_difference(rep.bins.back().reconstructed(), mb.w);
    rep.relative_error.push_back(e);
    if (e > rep.worst_error || f == 0) {
      rep.worst_error = e;
      rep.worst_bin = f;
    }
  }
  return rep;
}

}  // namespace aecnr
