#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "aecnr/linalg.hpp"

namespace aecnr {

enum class Algorithm { Geic, GeicGj, GeicGevd, MwfExtRank1, MwfExtFull, Custom };

inline constexpr std::array<Algorithm, 5> kAllAlgorithms = {
    Algorithm::Geic, Algorithm::GeicGj, Algorithm::GeicGevd, Algorithm::MwfExtRank1,
    Algorithm::MwfExtFull};

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Geic: return "GEIC";
    case Algorithm::GeicGj: return "GEIC_GJ";
    case Algorithm::GeicGevd: return "GEIC_GEVD";
    case Algorithm::MwfExtRank1: return "MWFext_rank1";
    case Algorithm::MwfExtFull: return "MWFext_full";
    case Algorithm::Custom: return "custom";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  for (Algorithm a : kAllAlgorithms)
    if (to_string(a) == s) return a;
  return std::nullopt;
}

// One stacked weight vector w̃ ∈ C^{channels} per bin, either shared by all
// frames (static) or recorded per frame (n_frames > 0).
class FilterBank {
 public:
  FilterBank() = default;
  FilterBank(Algorithm algorithm, std::size_t n_bins, std::size_t n_channels,
             std::size_t n_frames = 0)
      : algorithm_(algorithm),
        n_bins_(n_bins),
        n_channels_(n_channels),
        n_frames_(n_frames),
        weights_(std::max<std::size_t>(n_frames, 1) * n_bins * n_channels) {}

  Algorithm algorithm() const noexcept { return algorithm_; }
  std::size_t n_bins() const noexcept { return n_bins_; }
  std::size_t n_channels() const noexcept { return n_channels_; }
  std::size_t n_frames() const noexcept { return n_frames_; }
  bool is_static() const noexcept { return n_frames_ == 0; }

  std::span<cplx> weight(std::size_t frame, std::size_t bin) {
    return {weights_.data() + offset(frame, bin), n_channels_};
  }
  std::span<const cplx> weight(std::size_t frame, std::size_t bin) const {
    return {weights_.data() + offset(frame, bin), n_channels_};
  }
  std::span<cplx> weight(std::size_t bin) { return weight(0, bin); }
  std::span<const cplx> weight(std::size_t bin) const { return weight(0, bin); }

  void set(std::size_t bin, std::span<const cplx> w) { set(0, bin, w); }
  void set(std::size_t frame, std::size_t bin, std::span<const cplx> w) {
    if (w.size() != n_channels_) throw std::invalid_argument("FilterBank::set: length");
    for (const auto& x : w)
      if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
        throw std::invalid_argument("FilterBank::set: non-finite weight");
    std::copy(w.begin(), w.end(), weight(frame, bin).begin());
  }

  // Diagnostics attached by the designer (regularised bins, structure warnings).
  std::size_t flagged_bins = 0;
  std::vector<std::string> notes;

 private:
  std::size_t offset(std::size_t frame, std::size_t bin) const {
    const std::size_t k = is_static() ? 0 : frame;
    if (bin >= n_bins_ || (!is_static() && k >= n_frames_)) {
      throw std::out_of_range("FilterBank index");
    }
    return (k * n_bins_ + bin) * n_channels_;
  }

  Algorithm algorithm_ = Algorithm::Custom;
  std::size_t n_bins_ = 0;
  std::size_t n_channels_ = 0;
  std::size_t n_frames_ = 0;
  std::vector<cplx> weights_;
};

}  // namespace aecnr
