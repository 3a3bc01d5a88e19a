#pragma once

// Generalized Bussgang split of the echo: e = F_lin^H·l + e_res, where
// F_lin = R_ll^{-1}·R_le is the MMSE linear echo-path estimate and the
// residual is uncorrelated with both l and the linear part.

#include <cstddef>
#include <vector>

#include "aecnr/linalg.hpp"
#include "aecnr/stats.hpp"

namespace aecnr {

struct BussgangBin {
  ComplexMatrix f_lin;      // L x M
  HermitianMatrix r_eres;   // M x M
  HermitianMatrix r_lin;    // stacked (M+L): [F^H R_ll F, F^H R_ll; R_ll F, R_ll]
  HermitianMatrix r_res;    // stacked (M+L): [R_eres 0; 0 0]
  bool regularized = false; // R_ll was singular and got diagonal loading
};

struct BussgangModel {
  std::size_t n_mics = 0;
  std::size_t n_speakers = 0;
  std::vector<BussgangBin> bins;
  // Bins whose residual covariance dipped below -1e-10·trace (estimation
  // noise); the matrices are kept unchanged.
  std::vector<std::size_t> indefinite_bins;
  std::vector<std::size_t> regularized_bins;
};

inline BussgangBin bussgang_bin(const BinCovariances& b) {
  const std::size_t m = b.n_mics(), l = b.n_speakers();
  BussgangBin out;
  if (l > 0) {
    out.f_lin = solve_guarded(b.ll, b.el.adjoint(), &out.regularized);
  } else {
    out.f_lin = ComplexMatrix(0, m);
  }
  const HermitianMatrix lin_mic = congruence(out.f_lin, b.ll.matrix());
  out.r_eres = b.ee - lin_mic;

  ComplexMatrix lin(m + l, m + l);
  lin.set_block(0, 0, lin_mic.matrix());
  const ComplexMatrix cross = out.f_lin.adjoint() * b.ll.matrix();  // M x L
  lin.set_block(0, m, cross);
  lin.set_block(m, 0, cross.adjoint());
  lin.set_block(m, m, b.ll.matrix());
  out.r_lin = HermitianMatrix(lin);
  out.r_res = b.embed_mic_block(out.r_eres);
  return out;
}

inline BussgangModel bussgang(const OracleCovariances& oc) {
  BussgangModel out{oc.n_mics, oc.n_speakers, {}, {}, {}};
  out.bins.reserve(oc.n_bins());
  for (std::size_t f = 0; f < oc.n_bins(); ++f) {
    out.bins.push_back(bussgang_bin(oc.bins[f]));
    if (out.bins.back().regularized) out.regularized_bins.push_back(f);
    const auto& r = out.bins.back().r_eres;
    if (r.dim() > 0) {
      const auto eig = herm_eig(r);
      if (eig.values.back() < -1e-10 * std::abs(r.trace())) out.indefinite_bins.push_back(f);
    }
  }
  return out;
}

// Linear and residual echo spectra, e_lin = F_lin^H·l and e_res = e - e_lin,
// per frame and bin.
struct EchoSplitSpectra {
  SpectralTensor lin;
  SpectralTensor res;
};

inline EchoSplitSpectra split_echo(const ComponentSpectra& c, const BussgangModel& b) {
  EchoSplitSpectra out{SpectralTensor(c.n_frames(), c.n_bins(), c.n_mics(), c.s.signal_length()),
                       SpectralTensor(c.n_frames(), c.n_bins(), c.n_mics(), c.s.signal_length())};
  for (std::size_t f = 0; f < c.n_bins(); ++f) {
    const ComplexMatrix fh = b.bins[f].f_lin.adjoint();  // M x L
    for (std::size_t k = 0; k < c.n_frames(); ++k) {
      const CVector lin = fh * c.l.snapshot(k, f);
      const auto e = c.e.snapshot(k, f);
      for (std::size_t i = 0; i < c.n_mics(); ++i) {
        out.lin(k, f, i) = lin[i];
        out.res(k, f, i) = e[i] - lin[i];
      }
    }
  }
  return out;
}

}  // namespace aecnr
