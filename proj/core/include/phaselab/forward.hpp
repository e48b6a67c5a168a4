#pragma once

#include <random>

#include "phaselab/eikonal.hpp"
#include "phaselab/traces.hpp"

namespace phaselab {

/// Free-space outgoing point-source field exp(ik|x-y|)/(4 pi |x-y|).
cplx incident_field(const Vec3& x, const Vec3& y, double k);

struct FdtdOptions {
  double T = 4.0;             // recording window
  double cfl = 0.35;          // dt = cfl * h (4th-order space CFL limit is 0.5h)
  int sponge_cells = 40;
  double sponge_strength = 0.02;  // per-step damping scale in the sponge
  double wavelet_sigma = 0.1;      // Gaussian impulse replacement width
};

/// Leapfrog solve of c v_tt = Lap v + delta(x-y) g(t) on the field grid
/// padded by absorbing sponge cells; 4th-order space, 2nd-order time.
/// Source and receivers use Kaiser-windowed-sinc off-grid stencils.
std::vector<TimeTrace> fdtd_solve(const ScalarField& c, const Vec3& y,
                                  const std::vector<Vec3>& receivers,
                                  const FdtdOptions& opts = {});

/// Pick the source wavelet width for a band: passband keeps >= 1e-3 of the
/// spectral peak out to 1.5 * k_max.
double wavelet_sigma_for_band(const Band& band);

/// Quadrature of int_0^T v exp(ikt) dt on the band grid, deconvolved by the
/// source wavelet spectrum. Throws if the wavelet has no energy in the band;
/// sets tail_warning when the trace has not decayed.
SpectralTrace spectral_transform(const TimeTrace& trace, const Band& band);

/// Leading-order geometric optics A exp(ik tau) on the band grid.
SpectralTrace geometric_optics_field(const ScalarField& c, const TravelTimeField& tau,
                                     const Vec3& x, const Band& band);
SpectralTrace geometric_optics_field(const ScalarField& c, const Vec3& x, const Vec3& y,
                                     const Band& band);

/// Elementwise modulus, with optional multiplicative noise (1 + level*xi),
/// xi uniform on [-1, 1].
PhaselessTrace phaseless(const SpectralTrace& trace, double noise_level = 0.0,
                         std::mt19937_64* rng = nullptr);

/// Analytic continuation of the spectral transform to Im kappa >= 0
/// (the integral gains exp(-Im kappa * t) decay). Throws when Im kappa is
/// below the negative of the empirically estimated decay rate.
cplx evaluate_upper_half(const TimeTrace& trace, cplx kappa);

/// Tail log-slope decay estimate of |v|; 0 when the tail is flat or empty.
double estimate_decay_rate(const TimeTrace& trace);

}  // namespace phaselab
