#pragma once

// Generalized echo and interference canceller in closed form:
//
//   w̃ = [w_c - B·w_a; -a]
//   K   = R_el·R_ll^{-1}·R_le
//   S   = B^H·R_mm·B - alpha_e·B^H·K·B
//   w_a = S^{-1}·(B^H·R_mm·w_c - alpha_e·B^H·K·w_c)
//   a   = R_ll^{-1}·R_le·(w_c - B·w_a)
//
// R_mm is the microphone block of R^{alpha}; R_el and R_ll are the echo
// blocks of the unscaled echo covariance. Streaming estimates carry the echo
// blocks inside R^{alpha} already scaled by alpha_e, in which case the same
// formula is used with alpha_e = 1 and the blocks of R^{alpha} itself.

#include <cstddef>
#include <vector>

#include "aecnr/filter_bank.hpp"
#include "aecnr/linalg.hpp"
#include "aecnr/stats.hpp"
#include "aecnr/steering.hpp"

namespace aecnr {

struct EchoBlocks {
  ComplexMatrix el;    // M x L
  HermitianMatrix ll;  // L x L
};

inline EchoBlocks echo_blocks(const BinCovariances& b) { return {b.el, b.ll}; }

// Echo blocks read off a stacked (M+L) matrix.
inline EchoBlocks echo_blocks(const HermitianMatrix& stacked, std::size_t n_mics) {
  const std::size_t l = stacked.dim() - n_mics;
  return {stacked.matrix().block(0, n_mics, n_mics, l),
          HermitianMatrix(stacked.matrix().block(n_mics, n_mics, l, l))};
}

struct GeicParts {
  CVector w_a;
  CVector a;
  bool regularized = false;  // R_ll or S needed diagonal loading
};

namespace detail {

// echo_sign is +1 for the correct closed form. Other values exist only so
// the verification suite can check that a corrupted solver is detected.
inline CVector geic_weights(const HermitianMatrix& r_alpha, const EchoBlocks& echo,
                            double alpha_e, std::span<const cplx> w_c, const ComplexMatrix& blocking,
                            GeicParts* parts, double echo_sign) {
  const std::size_t m = w_c.size();
  const std::size_t l = echo.ll.dim();
  if (r_alpha.dim() != m + l || blocking.rows() != m) {
    throw LinalgError("geic: dimension mismatch");
  }
  const HermitianMatrix r_mm(r_alpha.matrix().block(0, 0, m, m));

  // F = R_ll^{-1}·R_le (L x M), K = R_el·F.
  bool reg_ll = false, reg_s = false;
  ComplexMatrix f_lin(l, m);
  HermitianMatrix k_mat = HermitianMatrix::zeros(m);
  if (l > 0) {
    f_lin = solve_guarded(echo.ll, echo.el.adjoint(), &reg_ll);
    k_mat = congruence(f_lin, echo.ll.matrix());
  }
  const ComplexMatrix bh = blocking.adjoint();
  const HermitianMatrix inner_m = r_mm - alpha_e * k_mat;

  CVector w_a(blocking.cols());
  if (blocking.cols() > 0) {
    const HermitianMatrix s = congruence(blocking, inner_m.matrix());
    const CVector rhs_main = bh * (r_mm.matrix() * w_c);
    const CVector rhs_echo = bh * (k_mat.matrix() * w_c);
    CVector rhs(rhs_main.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) {
      rhs[i] = rhs_main[i] - echo_sign * alpha_e * rhs_echo[i];
    }
    w_a = solve_guarded(s, rhs, &reg_s);
  }

  CVector mic(w_c.begin(), w_c.end());
  const CVector bwa = blocking * w_a;
  for (std::size_t i = 0; i < m; ++i) mic[i] -= bwa[i];
  const CVector a = f_lin * mic;

  CVector w(m + l);
  for (std::size_t i = 0; i < m; ++i) w[i] = mic[i];
  for (std::size_t j = 0; j < l; ++j) w[m + j] = -a[j];
  if (parts) *parts = {w_a, a, reg_ll || reg_s};
  return w;
}

}  // namespace detail

inline CVector geic_weights(const HermitianMatrix& r_alpha, const EchoBlocks& echo, double alpha_e,
                            std::span<const cplx> w_c, const ComplexMatrix& blocking,
                            GeicParts* parts = nullptr) {
  return detail::geic_weights(r_alpha, echo, alpha_e, w_c, blocking, parts, 1.0);
}

// Oracle echo blocks with explicit alpha_e.
inline FilterBank geic_solve(const std::vector<HermitianMatrix>& r_alpha,
                             const OracleCovariances& oracle, const SteeringVariant& sv,
                             double alpha_e, Algorithm tag = Algorithm::Geic) {
  if (r_alpha.size() != sv.n_bins() || oracle.n_bins() != sv.n_bins()) {
    throw LinalgError("geic_solve: bin count mismatch");
  }
  FilterBank fb(tag, sv.n_bins(), sv.n_mics + sv.n_speakers);
  for (std::size_t f = 0; f < sv.n_bins(); ++f) {
    GeicParts parts;
    fb.set(f, geic_weights(r_alpha[f], echo_blocks(oracle.bins[f]), alpha_e, sv.w_c[f],
                           sv.blocking[f], &parts));
    if (parts.regularized) ++fb.flagged_bins;
  }
  return fb;
}

// Echo blocks taken from R^{alpha} itself (streaming estimates).
inline FilterBank geic_solve(const std::vector<HermitianMatrix>& r_alpha, const SteeringVariant& sv,
                             Algorithm tag = Algorithm::Geic) {
  if (r_alpha.size() != sv.n_bins()) throw LinalgError("geic_solve: bin count mismatch");
  FilterBank fb(tag, sv.n_bins(), sv.n_mics + sv.n_speakers);
  for (std::size_t f = 0; f < sv.n_bins(); ++f) {
    GeicParts parts;
    fb.set(f, geic_weights(r_alpha[f], echo_blocks(r_alpha[f], sv.n_mics), 1.0, sv.w_c[f],
                           sv.blocking[f], &parts));
    if (parts.regularized) ++fb.flagged_bins;
  }
  return fb;
}

// w_a = (B^H·(R_nn + alpha_e·R_eres)·B)^{-1}·B^H·(R_nn + alpha_e·R_eres)·w_c,
// valid when B blocks the desired speech exactly.
inline CVector geic_wa_simplified(const HermitianMatrix& r_nn, const HermitianMatrix& r_eres,
                                  const ComplexMatrix& blocking, std::span<const cplx> w_c,
                                  double alpha_e) {
  const HermitianMatrix inner_m = r_nn + alpha_e * r_eres;
  if (blocking.cols() == 0) return {};
  const HermitianMatrix s = congruence(blocking, inner_m.matrix());
  const CVector rhs = blocking.adjoint() * (inner_m.matrix() * w_c);
  return solve_guarded(s, rhs);
}

}  // namespace aecnr
