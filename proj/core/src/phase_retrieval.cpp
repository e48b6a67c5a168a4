#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "phaselab/forward.hpp"
#include "phaselab/phase_retrieval.hpp"

namespace phaselab {

namespace {
constexpr double kPi = std::numbers::pi;
}

void ZeroSet::validate() const {
  for (std::size_t i = 0; i + 1 < real_zeros.size(); ++i)
    if (real_zeros[i].first >= real_zeros[i + 1].first)
      throw std::invalid_argument("ZeroSet: real zeros must be strictly increasing");
  for (const auto& [a, m] : real_zeros)
    if (m < 1) throw std::invalid_argument("ZeroSet: multiplicity < 1");
  for (std::size_t i = 0; i < upper_zeros.size(); ++i) {
    if (upper_zeros[i].first.imag() <= 0)
      throw std::invalid_argument("ZeroSet: upper zero not in the upper half-plane");
    if (upper_zeros[i].second < 1) throw std::invalid_argument("ZeroSet: multiplicity < 1");
    for (std::size_t j = i + 1; j < upper_zeros.size(); ++j)
      if (upper_zeros[i].first == upper_zeros[j].first)
        throw std::invalid_argument("ZeroSet: duplicate upper zero");
  }
}

void write_zeroset_csv(const std::string& path, const ZeroSet& zs) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "type,re,im,multiplicity\n" << std::setprecision(17);
  for (const auto& [a, m] : zs.real_zeros) os << "real," << a << ",0," << m << '\n';
  for (const auto& [a, m] : zs.upper_zeros)
    os << "upper," << a.real() << ',' << a.imag() << ',' << m << '\n';
}

ZeroSet read_zeroset_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != "type,re,im,multiplicity")
    throw std::runtime_error("unexpected zeroset header in " + path);
  ZeroSet zs;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string type, re, im, mult;
    std::getline(ss, type, ',');
    std::getline(ss, re, ',');
    std::getline(ss, im, ',');
    std::getline(ss, mult, ',');
    if (type == "real")
      zs.real_zeros.emplace_back(std::stod(re), std::stoi(mult));
    else
      zs.upper_zeros.emplace_back(cplx(std::stod(re), std::stod(im)), std::stoi(mult));
  }
  zs.validate();
  return zs;
}

BlaschkeProduct::BlaschkeProduct(std::vector<cplx> zs) : zeros(std::move(zs)) {
  for (const cplx& a : zeros)
    if (a.imag() <= 0)
      throw std::invalid_argument("BlaschkeProduct: zero not in the upper half-plane");
}

cplx BlaschkeProduct::evaluate(cplx k) const {
  cplx acc(1, 0);
  for (const cplx& a : zeros) {
    const cplx den = k - a;
    if (std::abs(den) == 0) throw std::domain_error("BlaschkeProduct: evaluation at a pole");
    acc *= (k - std::conj(a)) / den;
  }
  return acc;
}

cplx blaschke_eval(const BlaschkeProduct& b, cplx k) { return b.evaluate(k); }

cplx fourier_pair(int n, cplx a, cplx k, bool paper_constant) {
  if (n < 0) throw std::domain_error("fourier_pair: n < 0");
  if (a.imag() <= 0) throw std::domain_error("fourier_pair: Im a <= 0");
  double fact = 1;
  for (int j = 2; j <= n; ++j) fact *= j;
  const cplx i(0, 1);
  const cplx denom = std::pow(k - std::conj(a), n + 1);
  if (paper_constant) {
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    return sign * fact / (std::pow(i, n + 1) * denom);
  }
  return fact * std::pow(i, n + 1) / denom;
}

std::vector<std::pair<double, int>> real_zero_profile(const PhaselessTrace& f) {
  const auto& k = f.k_grid;
  const auto& v = f.values;
  const std::size_t n = v.size();
  std::vector<std::pair<double, int>> zeros;
  if (n < 7) return zeros;

  std::vector<double> sorted = v;
  std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
  const double background = sorted[n / 2];
  if (background <= 0) return zeros;

  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (v[i] > 0.1 * background) continue;
    if (v[i] > v[i - 1] || v[i] > v[i + 1]) continue;
    // local argmin of the dip
    std::size_t lo = i, hi = i;
    while (lo > 0 && v[lo - 1] <= 0.1 * background) --lo;
    while (hi + 1 < n && v[hi + 1] <= 0.1 * background) ++hi;

    // multiplicity from the log-log slope f ~ C|k-alpha|^m on the flanks
    double alpha = k[i];
    int mult = 1;
    for (int pass = 0; pass < 3; ++pass) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      int cnt = 0;
      for (std::size_t j = (lo > 8 ? lo - 8 : 0); j <= std::min(n - 1, hi + 8); ++j) {
        const double d = std::abs(k[j] - alpha);
        if (d < 1.5 * (k[1] - k[0]) || v[j] <= 0) continue;
        if (v[j] > 0.8 * background) continue;
        const double x = std::log(d), y = std::log(v[j]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
      }
      if (cnt >= 3) {
        const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
        mult = std::max(1, static_cast<int>(std::lround(slope)));
      }
      // vertex of a parabola through f^{2/mult} near the minimum
      if (i > 0 && i + 1 < n) {
        const double p = 2.0 / mult;
        const double y0 = std::pow(v[i - 1], p), y1 = std::pow(v[i], p),
                     y2 = std::pow(v[i + 1], p);
        const double denom = y0 - 2 * y1 + y2;
        if (denom > 0) {
          double off = 0.5 * (y0 - y2) / denom;
          off = std::clamp(off, -1.0, 1.0);
          alpha = k[i] + off * (k[i + 1] - k[i]);
        }
      }
    }
    zeros.emplace_back(alpha, mult);
    i = hi + 1;
  }
  return zeros;
}

namespace {

// ln G continued to the full line: rational model of G^2 when the fit
// succeeds, otherwise held constant over the spectral gap with a C1/|s| tail.
struct LogModulusExtension {
  bool have_model = false;
  RationalModel model;
  std::vector<double> k;       // band grid
  std::vector<double> ln_g;    // ln G on the band
  double a = 0, b = 0, c1 = 0;

  double operator()(double s) const {
    const double x = std::abs(s);
    if (have_model) {
      // G^2 is a rational function on the whole line but not an even one, so
      // evaluate at the signed argument. The band only constrains s > 0:
      // distrust wildly asymmetric values (spurious pole/zero pairs pushed
      // onto the negative axis) and mirror instead.
      const double mirrored = model.evaluate(x);
      double g2 = model.evaluate(s);
      if (!(g2 > 0) || !std::isfinite(g2) ||
          (mirrored > 0 && (g2 > 1e4 * mirrored || g2 * 1e4 < mirrored)))
        g2 = mirrored;
      return 0.5 * std::log(std::max(g2, 1e-30));
    }
    if (x <= a) return ln_g.front();
    if (x >= b) return c1 / x;
    const auto it = std::upper_bound(k.begin(), k.end(), x);
    const std::size_t j = std::min(k.size() - 1, static_cast<std::size_t>(it - k.begin()));
    const double t = (x - k[j - 1]) / (k[j] - k[j - 1]);
    return (1 - t) * ln_g[j - 1] + t * ln_g[j];
  }
};

LogModulusExtension build_extension(const std::vector<double>& k,
                                    const std::vector<double>& big_g) {
  LogModulusExtension ext;
  ext.k = k;
  ext.a = k.front();
  ext.b = k.back();
  ext.ln_g.resize(big_g.size());
  for (std::size_t i = 0; i < big_g.size(); ++i) ext.ln_g[i] = std::log(big_g[i]);

  if (k.size() >= 32) {
    std::vector<double> g2(big_g.size());
    for (std::size_t i = 0; i < big_g.size(); ++i) g2[i] = big_g[i] * big_g[i];
    try {
      RationalModel m = fit_rational(k, g2);
      if (m.rel_residual < 1e-3) {
        ext.model = std::move(m);
        ext.have_model = true;
      }
    } catch (const std::exception&) {
      // fall through to the bridged extension
    }
  }
  if (!ext.have_model) {
    // average ln G * k over the top decade of the band
    double acc = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < k.size(); ++i)
      if (k[i] >= 0.9 * ext.b) {
        acc += ext.ln_g[i] * k[i];
        ++cnt;
      }
    ext.c1 = cnt ? acc / cnt : 0;
  }
  return ext;
}

}  // namespace

SpectralTrace retrieve_phase_min(const PhaselessTrace& f, double distance,
                                 const RetrievalOptions& opts) {
  const auto& k = f.k_grid;
  if (k.size() < 4) throw std::invalid_argument("retrieve_phase_min: too few samples");
  if (distance <= 0) throw std::invalid_argument("retrieve_phase_min: distance <= 0");
  for (double v : f.values)
    if (v <= 0)
      throw std::invalid_argument("retrieve_phase_min: modulus must be positive on the band");

  const double b = k.back();
  const double span = opts.span_factor * b;
  const int n = opts.n_fft;
  const double ds = 2 * span / n;
  const double band_spacing = (k.back() - k.front()) / (k.size() - 1);
  if (ds > band_spacing)
    throw std::invalid_argument("retrieve_phase_min: Hilbert grid coarser than the data grid");
  if (kPi / ds < 8 * distance)
    throw std::invalid_argument("retrieve_phase_min: Hilbert grid cannot resolve the arrival");

  std::vector<double> big_g(f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i)
    big_g[i] = 4 * kPi * distance * f.values[i];
  const auto ext = build_extension(k, big_g);

  std::vector<double> g(n);
  for (int j = 0; j < n; ++j) {
    const double s = -span + j * ds;
    double w = 1.0;
    const double frac = std::abs(s) / span;
    if (frac > 0.9) w = 0.5 * (1 + std::cos(kPi * (frac - 0.9) / 0.1));
    g[j] = w * ext(s);
  }
  const std::vector<double> phi_grid = hilbert_fft(g, opts.flip_hilbert_sign);

  SpectralTrace out;
  out.src_id = f.src_id;
  out.rcv_id = f.rcv_id;
  out.source = f.source;
  out.receiver = f.receiver;
  out.k_grid = k;
  out.values.resize(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double pos = (k[i] + span) / ds;
    const int j = std::clamp(static_cast<int>(pos), 0, n - 2);
    const double t = pos - j;
    const double phi = (1 - t) * phi_grid[j] + t * phi_grid[j + 1];
    out.values[i] = f.values[i] * std::exp(cplx(0, phi + k[i] * distance));
  }
  return out;
}

double causality_residual(const SpectralTrace& u, double distance) {
  const auto& k = u.k_grid;
  if (k.size() < 2) return 0;
  double energy_total = 0;
  for (const cplx& v : u.values) energy_total += std::norm(v);
  if (energy_total == 0) return 0;

  const double a = k.front(), b = k.back();
  const double dk = (b - a) / (k.size() - 1);
  const double t_alias = 2 * kPi / dk;
  const double t_max = std::min(0.45 * t_alias, 4 * distance + 40 / (b - a));
  const double dt = 0.25 * kPi / b;
  const int nt = std::max(8, static_cast<int>(t_max / dt));

  double pre = 0, total = 0;
  for (int j = 0; j < nt; ++j) {
    const double t = j * dt;
    // Hann-windowed band-limited inverse transform (trapezoid in k)
    cplx acc(0, 0);
    for (std::size_t i = 0; i < k.size(); ++i) {
      const double w = 0.5 * (1 - std::cos(2 * kPi * i / (k.size() - 1)));
      const double trap = (i == 0 || i + 1 == k.size()) ? 0.5 : 1.0;
      acc += trap * w * u.values[i] * std::exp(cplx(0, -k[i] * t));
    }
    const double v = (dk / kPi) * acc.real();
    total += v * v;
    if (t < 0.9 * distance) pre += v * v;
  }
  return total > 0 ? pre / total : 0.0;
}

DisambiguationResult blaschke_disambiguate(const PhaselessTrace& f, double distance,
                                           int max_zeros, const RetrievalOptions& opts) {
  if (max_zeros < 0 || max_zeros > 4)
    throw std::invalid_argument("blaschke_disambiguate: max_zeros must be in [0, 4]");

  DisambiguationResult res;
  res.zeros.real_zeros = real_zero_profile(f);

  // factor real zeros out of the modulus, retrieve, multiply the real
  // polynomial back in (its phase on the axis is 0 or pi, carried by sign)
  PhaselessTrace fr = f;
  const double width = f.k_grid.back() - f.k_grid.front();
  if (!res.zeros.real_zeros.empty()) {
    const double eps = 1e-3 * width;
    for (std::size_t i = 0; i < fr.values.size(); ++i) {
      double p = 1;
      for (const auto& [alpha, m] : res.zeros.real_zeros)
        p *= std::pow(std::max(std::abs(fr.k_grid[i] - alpha), eps), m);
      fr.values[i] = std::max(fr.values[i] / p, 1e-14);
    }
  }

  SpectralTrace u_min = retrieve_phase_min(fr, distance, opts);
  if (!res.zeros.real_zeros.empty())
    for (std::size_t i = 0; i < u_min.values.size(); ++i) {
      double p = 1;
      for (const auto& [alpha, m] : res.zeros.real_zeros)
        p *= std::pow(u_min.k_grid[i] - alpha, m);
      u_min.values[i] *= p;
    }

  if (max_zeros == 0) {
    res.u = std::move(u_min);
    res.residual = causality_residual(res.u, distance);
    res.candidate_residuals = {res.residual};
    return res;
  }

  // candidate zeros: conjugate root pairs of the rational modulus-squared model
  std::vector<cplx> candidates;
  try {
    std::vector<double> g2(f.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i) g2[i] = f.values[i] * f.values[i];
    const RationalModel m = fit_rational(f.k_grid, g2);
    for (const cplx& z : m.numerator_roots()) {
      if (z.imag() <= 1e-4 * width || z.imag() > 0.35 * width) continue;
      if (z.real() < f.k_grid.front() - 0.1 * width ||
          z.real() > f.k_grid.back() + 0.1 * width)
        continue;
      bool dup = false;
      for (const cplx& c : candidates)
        if (std::abs(c - z) < 1e-6 * width) dup = true;
      if (!dup) candidates.push_back(z);
    }
  } catch (const std::exception&) {
    // no model, no candidates: the minimum-phase branch stands alone
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const cplx& x, const cplx& y) { return x.imag() < y.imag(); });
  if (static_cast<int>(candidates.size()) > max_zeros) candidates.resize(max_zeros);

  const std::size_t n_sub = std::size_t(1) << candidates.size();
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_mask = 0;
  SpectralTrace best_u;
  for (std::size_t mask = 0; mask < n_sub; ++mask) {
    SpectralTrace cand = u_min;
    for (std::size_t i = 0; i < cand.k_grid.size(); ++i) {
      cplx factor(1, 0);
      for (std::size_t j = 0; j < candidates.size(); ++j)
        if (mask & (std::size_t(1) << j)) {
          // move the zero from conj(a) (minimum-phase side) up to a; the
          // pole at conj(a) keeps the candidate analytic in the upper
          // half-plane, i.e. causal
          const cplx a = candidates[j];
          factor *= (cand.k_grid[i] - a) / (cand.k_grid[i] - std::conj(a));
        }
      cand.values[i] *= factor;
    }
    const double r = causality_residual(cand, distance);
    res.candidate_residuals.push_back(r);
    if (r < best) {
      best = r;
      best_mask = mask;
      best_u = std::move(cand);
    }
  }

  if (best >= 0.1) {
    std::ostringstream msg;
    msg << "blaschke_disambiguate: no candidate below the causality gate; residuals:";
    for (double r : res.candidate_residuals) msg << ' ' << r;
    throw AmbiguityError(msg.str());
  }

  for (std::size_t j = 0; j < candidates.size(); ++j)
    if (best_mask & (std::size_t(1) << j)) res.zeros.upper_zeros.emplace_back(candidates[j], 1);
  std::sort(res.zeros.upper_zeros.begin(), res.zeros.upper_zeros.end(),
            [](const auto& x, const auto& y) {
              return std::make_pair(x.first.real(), x.first.imag()) <
                     std::make_pair(y.first.real(), y.first.imag());
            });
  res.u = std::move(best_u);
  res.residual = best;
  return res;
}

int count_upper_zeros(const TimeTrace& trace, double contour_height, const Band& band) {
  if (contour_height <= 0) throw std::invalid_argument("count_upper_zeros: height <= 0");

  // trapezoid-quadrature error estimate, dominated by the |kappa|^2 term of
  // the integrand's second derivative; the worst contour point is the real
  // axis (Im kappa > 0 only adds decay), so the plain L1 norm of v bounds it
  const double kmax = std::hypot(band.k_max, contour_height);
  double l1 = 0;
  for (double v : trace.values) l1 += std::abs(v);
  const double quad_err = trace.dt * trace.dt / 12.0 * kmax * kmax * l1 * trace.dt + 1e-14;

  double h = contour_height;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::vector<cplx> corners = {cplx(band.k_min, 0), cplx(band.k_max, 0),
                                       cplx(band.k_max, h), cplx(band.k_min, h),
                                       cplx(band.k_min, 0)};
    double winding = 0;
    double min_mod = std::numeric_limits<double>::infinity();
    bool ok = true;

    for (std::size_t e = 0; e + 1 < corners.size() && ok; ++e) {
      cplx prev_kappa = corners[e];
      cplx prev_val = evaluate_upper_half(trace, prev_kappa);
      min_mod = std::min(min_mod, std::abs(prev_val));
      const int n0 = 64;
      for (int i = 1; i <= n0 && ok; ++i) {
        const cplx kappa = corners[e] + (corners[e + 1] - corners[e]) * (double(i) / n0);
        // bisect until the phase step is safely below pi/2
        struct Seg {
          cplx k0, k1;
          cplx v0;
          int depth;
        };
        std::vector<Seg> stack{{prev_kappa, kappa, prev_val, 0}};
        while (!stack.empty()) {
          Seg s = stack.back();
          stack.pop_back();
          const cplx v1 = evaluate_upper_half(trace, s.k1);
          min_mod = std::min(min_mod, std::abs(v1));
          const double dphi = std::arg(v1 / s.v0);
          if (std::abs(dphi) < kPi / 2 || s.depth >= 14) {
            if (s.depth >= 14) ok = false;
            winding += dphi;
            prev_val = v1;
          } else {
            const cplx mid = 0.5 * (s.k0 + s.k1);
            stack.push_back({mid, s.k1, evaluate_upper_half(trace, mid), s.depth + 1});
            stack.push_back({s.k0, mid, s.v0, s.depth + 1});
          }
        }
        prev_kappa = kappa;
      }
    }

    if (ok && min_mod > 10 * quad_err) {
      const double turns = winding / (2 * kPi);
      const int count = static_cast<int>(std::lround(turns));
      if (std::abs(turns - count) > 0.1)
        throw std::runtime_error("count_upper_zeros: winding number did not converge");
      return count;
    }
    h *= 1.1;  // nudge the top edge off a suspected zero and retry
  }
  throw std::runtime_error("count_upper_zeros: contour passes too close to a zero");
}

}  // namespace phaselab
