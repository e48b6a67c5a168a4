#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "phaselab/phase_retrieval.hpp"

namespace phaselab {

namespace {

template <class Scalar>
Scalar eval_poly(const std::vector<double>& c, Scalar z) {
  Scalar acc = Scalar(0);
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * z + Scalar(c[i]);
  return acc;
}

// Linearized least squares for one degree pair: P(z_i) - g_i (Q(z_i)-1) = g_i
// with Q's constant term pinned to 1. Returns the nonlinear relative residual
// or infinity when the fit is unusable (denominator sign change on the band).
double try_fit(const std::vector<double>& z, const std::vector<double>& g, int dn, int dd,
               double svd_truncation, std::vector<double>& num, std::vector<double>& den) {
  const int n = static_cast<int>(z.size());
  const int cols = (dn + 1) + dd;
  if (cols >= n) return std::numeric_limits<double>::infinity();

  Eigen::MatrixXd A(n, cols);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    double zp = 1;
    for (int j = 0; j <= dn; ++j) {
      A(i, j) = zp;
      zp *= z[i];
    }
    zp = z[i];
    for (int j = 0; j < dd; ++j) {
      A(i, dn + 1 + j) = -g[i] * zp;
      zp *= z[i];
    }
    b(i) = g[i];
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(svd_truncation);
  Eigen::VectorXd x = svd.solve(b);

  num.assign(x.data(), x.data() + dn + 1);
  den.assign(1 + dd, 0.0);
  den[0] = 1.0;
  for (int j = 0; j < dd; ++j) den[1 + j] = x(dn + 1 + j);

  double gnorm = 0, rnorm = 0, qmin = 1e300, qmax = 0;
  for (int i = 0; i < n; ++i) {
    const double q = eval_poly(den, z[i]);
    qmin = std::min(qmin, q);
    qmax = std::max(qmax, std::abs(q));
    if (q <= 0) return std::numeric_limits<double>::infinity();
    const double r = eval_poly(num, z[i]) / q - g[i];
    rnorm += r * r;
    gnorm += g[i] * g[i];
  }
  if (qmin < 1e-8 * qmax) return std::numeric_limits<double>::infinity();
  return gnorm > 0 ? std::sqrt(rnorm / gnorm) : std::sqrt(rnorm);
}

}  // namespace

double RationalModel::evaluate(double k) const {
  const double z = (k - k_shift) / k_scale;
  return eval_poly(num, z) / eval_poly(den, z);
}

cplx RationalModel::evaluate(cplx k) const {
  const cplx z = (k - k_shift) / k_scale;
  return eval_poly(num, z) / eval_poly(den, z);
}

std::vector<cplx> RationalModel::numerator_roots() const {
  std::vector<double> c = num;
  while (c.size() > 1 && std::abs(c.back()) < 1e-13 * std::abs(c.front()) + 1e-300)
    c.pop_back();
  const int deg = static_cast<int>(c.size()) - 1;
  if (deg < 1) return {};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -c[i] / c[deg];
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  std::vector<cplx> roots(deg);
  for (int i = 0; i < deg; ++i) roots[i] = es.eigenvalues()(i) * k_scale + k_shift;
  return roots;
}

RationalModel fit_rational(const std::vector<double>& k, const std::vector<double>& g,
                           int max_degree, double svd_truncation) {
  if (k.size() != g.size() || k.size() < 4)
    throw std::invalid_argument("fit_rational: need matching samples (>= 4)");

  // Map the sample interval to z in [-1, 1] to keep the Vandermonde blocks
  // well conditioned; the affine map preserves rationality and degrees.
  const auto [kmin_it, kmax_it] = std::minmax_element(k.begin(), k.end());
  const double k_shift = 0.5 * (*kmin_it + *kmax_it);
  double k_scale = 0.5 * (*kmax_it - *kmin_it);
  if (k_scale == 0) k_scale = 1;
  double g_scale = 0;
  for (double v : g) g_scale = std::max(g_scale, std::abs(v));
  if (g_scale == 0) g_scale = 1;

  std::vector<double> z(k.size()), gs(g.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    z[i] = (k[i] - k_shift) / k_scale;
    gs[i] = g[i] / g_scale;
  }

  RationalModel best;
  best.k_scale = k_scale;
  best.k_shift = k_shift;
  best.rel_residual = std::numeric_limits<double>::infinity();

  // Equal-degree models first: degree d nests every model of lower degree and
  // keeps a bounded ratio at infinity, which is what extrapolation needs. A
  // higher degree must earn its keep with a decisive residual improvement, so
  // noise plateaus keep the most parsimonious adequate model.
  constexpr double kDecisive = 0.1;
  for (int d = 0; d <= max_degree; ++d) {
    std::vector<double> num, den;
    const double res = try_fit(z, gs, d, d, svd_truncation, num, den);
    if (res < kDecisive * best.rel_residual) {
      best.num = std::move(num);
      best.den = std::move(den);
      best.rel_residual = res;
    }
  }
  // Mixed degrees only as a fallback when no balanced model is adequate.
  if (!(best.rel_residual < 1e-10)) {
    for (int total = 0; total <= 2 * max_degree; ++total) {
      for (int dd = std::max(0, total - max_degree); dd <= std::min(total, max_degree); ++dd) {
        const int dn = total - dd;
        if (dn == dd) continue;  // already tried
        std::vector<double> num, den;
        const double res = try_fit(z, gs, dn, dd, svd_truncation, num, den);
        if (res < kDecisive * best.rel_residual) {
          best.num = std::move(num);
          best.den = std::move(den);
          best.rel_residual = res;
        }
      }
    }
  }
  if (!std::isfinite(best.rel_residual))
    throw std::runtime_error("fit_rational: no usable model");
  for (double& c : best.num) c *= g_scale;
  return best;
}

ExtendResult extend_modulus(const PhaselessTrace& f, const Band& target_band) {
  if (f.k_grid.size() < 32)
    throw std::invalid_argument("extend_modulus: need >= 32 samples");

  std::vector<double> g2(f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) g2[i] = f.values[i] * f.values[i];

  ExtendResult out;
  out.model = fit_rational(f.k_grid, g2);
  out.fit_residual = out.model.rel_residual;
  if (out.fit_residual > 1e-3)
    throw std::runtime_error("extend_modulus: rational model inadequate, relative residual " +
                             std::to_string(out.fit_residual));

  double band_max = 0;
  for (double v : f.k_grid) band_max = std::max(band_max, std::abs(v));
  const auto kt = target_band.grid();
  double target_max = 0;
  for (double v : kt) target_max = std::max(target_max, std::abs(v));

  const int deg = static_cast<int>(std::max(out.model.num.size(), out.model.den.size())) - 1;
  const double growth = std::max(1.0, target_max / band_max);
  out.conditioning_score = std::pow(growth, std::max(1, deg));
  out.ill_posed_warning = out.conditioning_score > 1e6;

  out.extended.src_id = f.src_id;
  out.extended.rcv_id = f.rcv_id;
  out.extended.source = f.source;
  out.extended.receiver = f.receiver;
  out.extended.k_grid = kt;
  out.extended.values.resize(kt.size());
  for (std::size_t i = 0; i < kt.size(); ++i)
    out.extended.values[i] = std::sqrt(std::max(0.0, out.model.evaluate(kt[i])));
  return out;
}

}  // namespace phaselab
