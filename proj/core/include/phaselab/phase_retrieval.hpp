#pragma once

#include <complex>
#include <string>
#include <vector>

#include "phaselab/traces.hpp"

namespace phaselab {

/// Real zeros (strictly increasing locations) and upper-half-plane zeros of
/// a spectrum, with multiplicities.
struct ZeroSet {
  std::vector<std::pair<double, int>> real_zeros;
  std::vector<std::pair<cplx, int>> upper_zeros;

  void validate() const;
};

void write_zeroset_csv(const std::string& path, const ZeroSet& zs);
ZeroSet read_zeroset_csv(const std::string& path);

/// Product of (k - conj(a_j)) / (k - a_j), all a_j in the upper half-plane;
/// unimodular on the real axis.
struct BlaschkeProduct {
  std::vector<cplx> zeros;  // repeated for multiplicity

  BlaschkeProduct() = default;
  explicit BlaschkeProduct(std::vector<cplx> zs);
  cplx evaluate(cplx k) const;
};

/// Closed-form transform of H(t) t^n exp(-i conj(a) t):
///   n! i^{n+1} / (k - conj(a))^{n+1}.
/// `paper_constant` switches to the printed constant (-1)^n n! / i^{n+1},
/// which disagrees with direct quadrature by a sign; kept as a debug mode.
cplx fourier_pair(int n, cplx a, cplx k, bool paper_constant = false);

cplx blaschke_eval(const BlaschkeProduct& b, cplx k);

/// Rational model P(z)/Q(z), z = (k - k_shift)/k_scale, fitted by SVD-truncated least
/// squares; the analytic-continuation engine behind extend_modulus.
struct RationalModel {
  std::vector<double> num;  // ascending coefficients in z
  std::vector<double> den;
  double k_scale = 1;
  double k_shift = 0;
  double rel_residual = 0;

  double evaluate(double k) const;
  cplx evaluate(cplx k) const;
  /// Roots of the numerator, mapped back to k units.
  std::vector<cplx> numerator_roots() const;
};

RationalModel fit_rational(const std::vector<double>& k, const std::vector<double>& g,
                           int max_degree = 8, double svd_truncation = 1e-14);

struct ExtendResult {
  PhaselessTrace extended;
  double fit_residual = 0;
  double conditioning_score = 1;
  bool ill_posed_warning = false;
  RationalModel model;
};

/// Rational-model continuation of modulus data to a target band. Throws when
/// no model reaches 1e-3 relative residual.
ExtendResult extend_modulus(const PhaselessTrace& f, const Band& target_band);

/// Near-zero dips of f with multiplicities from local log-log slopes.
std::vector<std::pair<double, int>> real_zero_profile(const PhaselessTrace& f);

struct RetrievalOptions {
  int n_fft = 32768;
  double span_factor = 16.0;  // Hilbert grid covers [-span*b, span*b]
  bool flip_hilbert_sign = false;
};

/// Minimum-phase reconstruction: u(k) = f(k) exp(i (H[ln G] + k d)) with
/// G = 4 pi d f, H the Hilbert transform (1/pi) p.v. int g(s)/(k-s) ds
/// evaluated by FFT on a symmetric grid, ln G continued off the band by the
/// rational modulus model.
SpectralTrace retrieve_phase_min(const PhaselessTrace& f, double distance,
                                 const RetrievalOptions& opts = {});

/// Energy fraction of the band-limited time response in the pre-arrival
/// window (0, 0.9 * distance); 0 for a zero signal.
double causality_residual(const SpectralTrace& u, double distance);

struct DisambiguationResult {
  SpectralTrace u;
  ZeroSet zeros;
  double residual = 0;
  std::vector<double> candidate_residuals;
};

class AmbiguityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Minimum-phase retrieval followed by enumeration of conjugate-flip zero
/// assignments (Blaschke multiplications); returns the candidate with the
/// smallest causality residual. max_zeros = 0 skips the search and the
/// residual gate entirely.
DisambiguationResult blaschke_disambiguate(const PhaselessTrace& f, double distance,
                                           int max_zeros,
                                           const RetrievalOptions& opts = {});

/// Argument-principle zero count of the continued spectrum over the
/// rectangle [a, b] x [0, contour_height].
int count_upper_zeros(const TimeTrace& trace, double contour_height, const Band& band);

/// Sum of alpha_j t^{p_j} exp(-i conj(d_j) t) terms, Im d_j > 0.
struct ExpPolySum {
  struct Term {
    cplx coefficient;
    int power = 0;
    cplx frequency;  // d with Im d >= 0
  };
  std::vector<Term> terms;

  cplx evaluate(double t) const;
  std::vector<cplx> sample(double dt, int n) const;
  void canonicalize();
};

void write_exppolysum_csv(const std::string& path, const ExpPolySum& s);
ExpPolySum read_exppolysum_csv(const std::string& path);

class UnderfitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix-pencil identification of confluent complex exponentials from
/// uniform samples, then linear least squares for the coefficients.
ExpPolySum prony_match(const std::vector<cplx>& samples, double dt, int max_terms);

/// FFT Hilbert transform on a uniform grid (convention
/// H[g](k) = (1/pi) p.v. int g(s)/(k-s) ds); flip inverts the multiplier
/// sign, used by the convention self-test failure path.
std::vector<double> hilbert_fft(const std::vector<double>& g, bool flip = false);

}  // namespace phaselab
