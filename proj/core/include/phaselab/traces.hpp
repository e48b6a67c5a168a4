#pragma once

#include <complex>
#include <string>
#include <vector>

#include "phaselab/geometry.hpp"

namespace phaselab {

using cplx = std::complex<double>;

/// Band-limited time-domain response v(x, y, .) sampled at t = i*dt.
/// The source wavelet is a unit-area Gaussian (sigma, t0); sigma = 0 means
/// an ideal impulse (wavelet spectrum identically 1) for synthetic traces.
struct TimeTrace {
  int src_id = -1, rcv_id = -1;
  Vec3 source{}, receiver{};
  double dt = 0;
  std::vector<double> values;
  double wavelet_sigma = 0;
  double wavelet_t0 = 0;

  cplx wavelet_spectrum(cplx k) const {
    if (wavelet_sigma == 0) return {1.0, 0.0};
    return std::exp(cplx(0, 1) * k * wavelet_t0 -
                    0.5 * wavelet_sigma * wavelet_sigma * k * k);
  }
  double duration() const { return dt * (values.empty() ? 0 : values.size() - 1); }
};

/// Complex spectrum u(x, y, k) on a wavenumber grid.
struct SpectralTrace {
  int src_id = -1, rcv_id = -1;
  Vec3 source{}, receiver{};
  std::vector<double> k_grid;
  std::vector<cplx> values;
  bool tail_warning = false;  // set when the time trace had not decayed
};

/// Modulus-only data f(x, y, k) = |u(x, y, k)|.
struct PhaselessTrace {
  int src_id = -1, rcv_id = -1;
  Vec3 source{}, receiver{};
  std::vector<double> k_grid;
  std::vector<double> values;
};

void write_spectra_csv(const std::string& path, const std::vector<SpectralTrace>& traces);
std::vector<SpectralTrace> read_spectra_csv(const std::string& path);

void write_phaseless_csv(const std::string& path, const std::vector<PhaselessTrace>& traces);
std::vector<PhaselessTrace> read_phaseless_csv(const std::string& path);

void write_time_traces_csv(const std::string& path, const std::vector<TimeTrace>& traces);

}  // namespace phaselab
