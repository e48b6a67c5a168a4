// Acceptance gate: one criterion per invocation (--criterion N), printing a
// single "criterion N: PASS" / "criterion N: FAIL <reason>" line. Tolerances
// are pinned here and nowhere else.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "phaselab/arrivals.hpp"
#include "phaselab/forward.hpp"
#include "phaselab/medium.hpp"
#include "phaselab/phase_retrieval.hpp"
#include "phaselab/pipeline.hpp"

using namespace phaselab;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("phaselab_acceptance_" + name);
  fs::remove_all(p);
  return p.string();
}

SpectralTrace free_space_trace(double d, const Band& band) {
  SpectralTrace u;
  u.k_grid = band.grid();
  u.values.resize(u.k_grid.size());
  for (std::size_t i = 0; i < u.k_grid.size(); ++i)
    u.values[i] = std::exp(cplx(0, u.k_grid[i] * d)) / (4 * M_PI * d);
  return u;
}

double rel_rms(const std::vector<cplx>& got, const std::vector<cplx>& want) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += std::norm(got[i] - want[i]);
    den += std::norm(want[i]);
  }
  return den > 0 ? std::sqrt(num / den) : 0.0;
}

// relative L2 error of c_rec against c_true over the nodes inside Omega
double model_error_in_omega(const ScalarField& c_rec, const ScalarField& c_true,
                            const Geometry& geo) {
  double num = 0, den = 0;
  const GridSpec& g = c_true.grid;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        if (!geo.inside_omega(g.node(i, j, k))) continue;
        const double dr = c_rec.at(i, j, k) - c_true.at(i, j, k);
        num += dr * dr;
        den += c_true.at(i, j, k) * c_true.at(i, j, k);
      }
  return std::sqrt(num / den);
}

// ---------------------------------------------------------------------------

bool crit1(std::string& why) {
  const auto t0 = clock_type::now();
  RunConfig cfg;
  cfg.out_dir = temp_dir("verify");
  const auto report = cmd_verify(cfg);
  for (const auto& c : report.checks)
    if (!c.pass) {
      why = c.name + " max_error " + std::to_string(c.max_error);
      return false;
    }
  // the three lemma-level tolerances must be pinned at the specified levels
  auto tol_of = [&](const std::string& name) {
    for (const auto& c : report.checks)
      if (c.name == name) return c.tolerance;
    return -1.0;
  };
  if (tol_of("fourier_pair_vs_quadrature") > 1e-8 ||
      tol_of("blaschke_unimodular") > 1e-12 || tol_of("hilbert_convention_pair") > 1e-3) {
    why = "self-check tolerances looser than specified";
    return false;
  }
  const double dt = seconds_since(t0);
  if (dt >= 10) {
    why = "runtime " + std::to_string(dt) + " s >= 10 s";
    return false;
  }
  return true;
}

bool crit2(std::string& why) {
  const auto t0 = clock_type::now();
  const Band band(5, 12, 96);
  const double d = 0.35;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> re(-4, 4), im(0.5, 3), amp(0.02, 0.12);
  std::uniform_int_distribution<int> n_poles(1, 3);
  double acc = 0;
  long cnt = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto truth = free_space_trace(d, band);
    const int np = n_poles(rng);
    for (int p = 0; p < np; ++p) {
      const cplx pole(re(rng), -im(rng));  // pole in the lower half-plane;
      const double a = amp(rng);           // the added term keeps Re(1+...) > 0,
      for (std::size_t i = 0; i < truth.values.size(); ++i)  // so no upper zeros
        truth.values[i] *= 1.0 + a * cplx(0, 1) / (cplx(truth.k_grid[i], 0) - pole);
    }
    const auto u = retrieve_phase_min(phaseless(truth), d);
    const std::size_t n = u.values.size();
    double trial_acc = 0;
    int trial_cnt = 0;
    for (std::size_t i = n / 4; i < 3 * n / 4; ++i, ++trial_cnt) {
      const double dphi = std::arg(u.values[i] / truth.values[i]);
      trial_acc += dphi * dphi;
    }
    acc += trial_acc;
    cnt += trial_cnt;
    // individual trials with sharp structure deep in the spectral gap are
    // conditioned to a few 1e-3 rad at best; cap them at twice the family
    // bound and hold the family RMS to the bound itself
    const double rms = std::sqrt(trial_acc / trial_cnt);
    if (rms > 2e-2) {
      why = "trial " + std::to_string(trial) + " RMS phase error " + std::to_string(rms);
      return false;
    }
  }
  const double family_rms = std::sqrt(acc / cnt);
  if (family_rms > 1e-2) {
    why = "family RMS phase error " + std::to_string(family_rms);
    return false;
  }
  const double dt = seconds_since(t0);
  if (dt >= 30) {
    why = "runtime " + std::to_string(dt) + " s >= 30 s";
    return false;
  }
  return true;
}

bool crit3(std::string& why) {
  const auto t0 = clock_type::now();
  const Band band(5, 12, 512);
  const double d = 20.0;  // far above the band's time resolution 2 pi / (b - a)
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> re(6.0, 11.0), im(0.15, 0.35);
  std::uniform_real_distribution<double> pole_im(0.6, 1.2);
  std::uniform_int_distribution<int> n_zeros(1, 2);

  int ok = 0;
  std::vector<double> rms_all;
  for (int trial = 0; trial < 40; ++trial) {
    const int nz = n_zeros(rng);
    std::vector<cplx> zeros;
    auto truth = free_space_trace(d, band);
    for (int z = 0; z < nz; ++z) {
      cplx a(re(rng), im(rng));
      // keep the dips separated so both zeros stay identifiable
      if (!zeros.empty() && std::abs(a.real() - zeros[0].real()) < 1.5)
        a = cplx(a.real() < zeros[0].real() ? zeros[0].real() - 1.5 : zeros[0].real() + 1.5,
                 a.imag());
      zeros.push_back(a);
      const cplx pole(a.real(), -pole_im(rng));
      for (std::size_t i = 0; i < truth.values.size(); ++i)
        truth.values[i] *= (truth.k_grid[i] - a) / (truth.k_grid[i] - pole);
    }
    std::sort(zeros.begin(), zeros.end(),
              [](cplx l, cplx r) { return l.real() < r.real(); });
    try {
      const auto res = blaschke_disambiguate(phaseless(truth), d, 2);
      bool branch_ok = res.zeros.upper_zeros.size() == zeros.size();
      if (branch_ok)
        for (std::size_t z = 0; z < zeros.size(); ++z)
          if (std::abs(res.zeros.upper_zeros[z].first - zeros[z]) > 0.15) branch_ok = false;
      const double rms = rel_rms(res.u.values, truth.values);
      rms_all.push_back(rms);
      if (branch_ok && rms <= 5e-2) ++ok;
    } catch (const AmbiguityError&) {
      rms_all.push_back(1.0);
    }
  }
  if (ok < 38) {
    why = "true branch selected in only " + std::to_string(ok) + "/40 trials";
    return false;
  }
  const double dt = seconds_since(t0);
  if (dt >= 120) {
    why = "runtime " + std::to_string(dt) + " s >= 120 s";
    return false;
  }
  return true;
}

// Brute-force term counter: orthogonal matching pursuit over a coarse
// (Re d, Im d) grid with joint least-squares amplitudes and a direct-search
// polish of each frequency. Never sees the matrix-pencil machinery; the
// returned value is the smallest atom count reaching 1e-3 relative residual.
int grid_term_count(const std::vector<cplx>& samples, double dt) {
  const std::size_t n = samples.size();
  double norm0 = 0;
  for (cplx v : samples) norm0 += std::norm(v);
  norm0 = std::sqrt(norm0);
  if (norm0 == 0) return 0;

  const auto atom = [&](const cplx& dd, std::size_t i) {
    return std::exp(cplx(0, -1) * std::conj(dd) * (double(i) * dt));
  };
  // joint LS amplitudes by normal equations (at most 6 atoms), then the
  // residual norm of samples - sum alpha_j atom_j
  const auto residual_of = [&](const std::vector<cplx>& ds, std::vector<cplx>& r) {
    const std::size_t m = ds.size();
    std::vector<std::vector<cplx>> a(m, std::vector<cplx>(m + 1, cplx(0, 0)));
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t q = 0; q < m; ++q)
        for (std::size_t i = 0; i < n; ++i)
          a[p][q] += std::conj(atom(ds[p], i)) * atom(ds[q], i);
      for (std::size_t i = 0; i < n; ++i) a[p][m] += std::conj(atom(ds[p], i)) * samples[i];
    }
    for (std::size_t col = 0; col < m; ++col) {  // Gaussian elimination, partial pivot
      std::size_t piv = col;
      for (std::size_t row = col + 1; row < m; ++row)
        if (std::abs(a[row][col]) > std::abs(a[piv][col])) piv = row;
      std::swap(a[col], a[piv]);
      for (std::size_t row = col + 1; row < m; ++row) {
        const cplx f = a[row][col] / a[col][col];
        for (std::size_t q = col; q <= m; ++q) a[row][q] -= f * a[col][q];
      }
    }
    std::vector<cplx> alpha(m);
    for (std::size_t col = m; col-- > 0;) {
      cplx acc = a[col][m];
      for (std::size_t q = col + 1; q < m; ++q) acc -= a[col][q] * alpha[q];
      alpha[col] = acc / a[col][col];
    }
    r = samples;
    double rn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t p = 0; p < m; ++p) r[i] -= alpha[p] * atom(ds[p], i);
      rn += std::norm(r[i]);
    }
    return std::sqrt(rn);
  };

  std::vector<cplx> ds;
  std::vector<cplx> r = samples;
  for (int count = 0; count < 6; ++count) {
    double rn = 0;
    for (cplx v : r) rn += std::norm(v);
    if (std::sqrt(rn) < 1e-3 * norm0) return count;

    // grid argmax of the single-atom projection gain onto the current residual
    double best_gain = -1;
    cplx best_d;
    for (double dr = -2.5; dr <= 2.5; dr += 0.02)
      for (double di = 0.05; di <= 1.8; di += 0.02) {
        const cplx dd(dr, di);
        cplx num = 0;
        double den = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const cplx b = atom(dd, i);
          num += std::conj(b) * r[i];
          den += std::norm(b);
        }
        const double gain = std::norm(num) / den;
        if (gain > best_gain) {
          best_gain = gain;
          best_d = dd;
        }
      }
    ds.push_back(best_d);

    // cyclic polish: direct search on each frequency against the joint
    // residual (8 directions, adaptive step), so non-orthogonal atoms and
    // curved valleys cannot stall the pursuit
    double res = residual_of(ds, r);
    for (int sweep = 0; sweep < 60; ++sweep) {
      const double res_before = res;
      for (std::size_t j = 0; j < ds.size(); ++j) {
        double step = 0.02;
        while (step > 1e-10) {
          bool moved = false;
          for (const cplx dir : {cplx(1, 0), cplx(-1, 0), cplx(0, 1), cplx(0, -1),
                                 cplx(0.7071, 0.7071), cplx(0.7071, -0.7071),
                                 cplx(-0.7071, 0.7071), cplx(-0.7071, -0.7071)}) {
            const cplx cand = ds[j] + step * dir;
            if (cand.imag() <= 0) continue;
            std::vector<cplx> trial = ds;
            trial[j] = cand;
            std::vector<cplx> rt;
            const double rc = residual_of(trial, rt);
            if (rc < res) {
              res = rc;
              ds = std::move(trial);
              r = std::move(rt);
              moved = true;
              step = std::min(0.02, step * 2.0);
              break;
            }
          }
          if (!moved) step *= 0.5;
        }
      }
      if (res > 0.999999 * res_before) break;
    }
  }
  double rn = 0;
  for (cplx v : r) rn += std::norm(v);
  return std::sqrt(rn) < 1e-3 * norm0 ? int(ds.size()) : 6;
}

bool crit4(std::string& why) {
  const auto t0 = clock_type::now();
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> re(-2, 2), im(0.3, 1.5), cf(-2, 2);
  const double dt_s = 0.05;
  const int n_samples = 400;
  for (int trial = 0; trial < 10; ++trial) {
    ExpPolySum truth;
    const int n = 1 + trial % 4;
    std::vector<cplx> ds;
    while (int(ds.size()) < n) {
      const cplx d(re(rng), im(rng));
      bool far = true;
      for (cplx e : ds)
        if (std::abs(d - e) < 0.1) far = false;  // pinned separation floor
      if (far) ds.push_back(d);
    }
    for (cplx d : ds) truth.terms.push_back({cplx(cf(rng), cf(rng)), 0, d});
    truth.canonicalize();
    const auto samples = truth.sample(dt_s, n_samples);
    auto got = prony_match(samples, dt_s, 4);
    got.canonicalize();
    if (got.terms.size() != truth.terms.size()) {
      why = "trial " + std::to_string(trial) + " wrong term count";
      return false;
    }
    for (std::size_t i = 0; i < got.terms.size(); ++i) {
      if (std::abs(got.terms[i].coefficient - truth.terms[i].coefficient) > 1e-4 ||
          std::abs(got.terms[i].frequency - truth.terms[i].frequency) > 1e-4) {
        why = "trial " + std::to_string(trial) + " parameter error > 1e-4";
        return false;
      }
    }
  }
  // brute-force grid oracle on a fresh 3-term instance agrees on term count
  ExpPolySum probe;
  probe.terms = {{cplx(1.2, -0.3), 0, cplx(-0.8, 0.5)},
                 {cplx(0.7, 0.9), 0, cplx(0.4, 0.9)},
                 {cplx(-1.0, 0.2), 0, cplx(1.6, 0.45)}};
  probe.canonicalize();
  const auto samples = probe.sample(dt_s, 200);
  const int oracle = grid_term_count(samples, dt_s);
  auto fitted = prony_match(samples, dt_s, 4);
  if (oracle != int(fitted.terms.size())) {
    why = "grid oracle counts " + std::to_string(oracle) + " terms, fit has " +
          std::to_string(fitted.terms.size());
    return false;
  }
  const double dt = seconds_since(t0);
  if (dt >= 30) {
    why = "runtime " + std::to_string(dt) + " s >= 30 s";
    return false;
  }
  return true;
}

bool crit5(std::string& why) {
  const auto t0 = clock_type::now();
  const Vec3 y{0, 0, 0};
  const std::vector<Vec3> probes = {
      {0.7, 0.2, -0.3}, {-0.5, 0.6, 0.4}, {0.1, -0.8, 0.5}, {-0.6, -0.5, -0.6}};

  // analytic cases at 48^3: tau = sqrt(c) |x - y|
  for (double c0 : {1.0, 4.0}) {
    const auto grid = GridSpec::centered_cube(48, 1.2);
    const ScalarField c(grid, c0);
    EikonalOptions eo;
    eo.init_radius = 0.2;
    const auto field = eikonal_solve(c, y, eo);
    const double h = grid.spacing;
    for (const auto& x : probes) {
      const double err = std::abs(field.tau.interp(x) - std::sqrt(c0) * dist(x, y));
      if (err > 4 * std::sqrt(c0) * h) {
        why = "c = " + std::to_string(c0) + " error " + std::to_string(err) +
              " exceeds O(h)";
        return false;
      }
    }
  }

  // observed convergence order over three refinements with a fixed seed radius
  std::vector<double> errs, hs;
  for (int n : {17, 33, 65}) {
    const auto grid = GridSpec::centered_cube(n, 1.2);
    const ScalarField c(grid, 1.0);
    EikonalOptions eo;
    eo.init_radius = 0.25;
    const auto field = eikonal_solve(c, y, eo);
    double emax = 0;
    for (const auto& x : probes)
      emax = std::max(emax, std::abs(field.tau.interp(x) - dist(x, y)));
    errs.push_back(emax);
    hs.push_back(grid.spacing);
  }
  for (int i = 0; i + 1 < int(errs.size()); ++i) {
    const double order = std::log(errs[i] / errs[i + 1]) / std::log(hs[i] / hs[i + 1]);
    if (order < 0.9) {
      why = "convergence order " + std::to_string(order) + " < 0.9";
      return false;
    }
  }

  // ray / travel-time consistency on the weak bump at 48^3
  {
    const auto grid = GridSpec::centered_cube(48, 1.2);
    const auto geo = Geometry::make_default({0, 0, 0}, 0.5, 1.0, 0.45, 6, 2, 12);
    const auto c = make_phantom(PhantomKind::gaussian_bump, 0.05, 0.3, geo, grid);
    double cmax = 0;
    for (double v : c.values) cmax = std::max(cmax, v);
    const double bound = 5 * grid.spacing * std::sqrt(cmax);
    EikonalOptions eo;
    eo.init_radius = 0.25;
    const auto field = eikonal_solve(c, geo.sources[0], eo);
    for (const auto& x : geo.surface_receivers) {
      if (dist(x, geo.sources[0]) < 4 * grid.spacing) continue;
      const Ray ray = trace_ray(field, x);
      const double err = std::abs(geodesic_travel_time(c, ray) - field.tau.interp(x));
      if (err > bound) {
        why = "ray/travel-time mismatch " + std::to_string(err) + " > " +
              std::to_string(bound);
        return false;
      }
    }
  }
  const double dt = seconds_since(t0);
  if (dt >= 60) {
    why = "runtime " + std::to_string(dt) + " s >= 60 s";
    return false;
  }
  return true;
}

bool crit6(std::string& why) {
  const auto t0 = clock_type::now();
  const auto grid = GridSpec::centered_cube(48, 1.2);
  const Band band(5, 12, 48);
  const Vec3 y{0, 0, -1};
  const std::vector<Vec3> receivers = {{0, 0, -0.3}, {0.2, 0.1, 0.1}, {0, 0, 1}};

  // free space: deconvolved spectrum against exp(ikd)/(4 pi d)
  {
    const ScalarField c(grid, 1.0);
    FdtdOptions fo;
    fo.T = 4.0;
    fo.wavelet_sigma = wavelet_sigma_for_band(band);
    const auto traces = fdtd_solve(c, y, receivers, fo);
    for (std::size_t r = 0; r < receivers.size(); ++r) {
      const double d = dist(receivers[r], y);
      // pre-arrival energy below 1e-6 of the peak
      double pre = 0, peak = 0;
      for (std::size_t i = 0; i < traces[r].values.size(); ++i) {
        const double t = i * traces[r].dt;
        const double v2 = traces[r].values[i] * traces[r].values[i];
        peak = std::max(peak, v2);
        if (t < d - 4 * fo.wavelet_sigma) pre += v2;
      }
      pre *= traces[r].dt;
      if (pre >= 1e-6 * peak) {
        why = "pre-arrival energy " + std::to_string(pre / peak) + " of peak";
        return false;
      }
      const auto u = spectral_transform(traces[r], band);
      for (std::size_t i = 0; i < u.values.size(); ++i) {
        const double want = 1.0 / (4 * M_PI * d);
        const double got = std::abs(u.values[i]);
        if (std::abs(got - want) > 0.05 * want) {
          why = "free-space amplitude off by " +
                std::to_string(100 * std::abs(got - want) / want) + "% at k = " +
                std::to_string(u.k_grid[i]);
          return false;
        }
      }
    }
  }

  // weak bump: FDTD vs geometric optics at the top of the band
  {
    const auto geo = Geometry::make_default({0, 0, 0}, 0.5, 1.0, 0.45, 4, 2, 8);
    const auto c = make_phantom(PhantomKind::gaussian_bump, 0.05, 0.3, geo, grid);
    const Vec3 src = geo.sources[0];
    std::vector<Vec3> rcv;
    for (const auto& x : geo.surface_receivers)
      if (dist(x, src) > 1.2) rcv.push_back(x);  // transmission-side receivers
    rcv.resize(std::min<std::size_t>(rcv.size(), 3));

    FdtdOptions fo;
    fo.T = 4.0;
    fo.wavelet_sigma = wavelet_sigma_for_band(band);
    const auto traces = fdtd_solve(c, src, rcv, fo);

    // the geometric-optics reference is evaluated on a refined grid with an
    // exactly seeded eikonal: its O(h) travel-time error enters the comparison
    // as k * delta_tau, so at the band top the reference must be converged
    // well beyond the wave grid
    const auto grid_ref = GridSpec::centered_cube(192, 1.2);
    const auto c_ref = make_phantom(PhantomKind::gaussian_bump, 0.05, 0.3, geo, grid_ref);
    EikonalOptions eo;
    eo.init_radius =
        (src - geo.omega_center).norm() - geo.omega_radius - 2 * grid_ref.spacing;
    const auto tau_ref = eikonal_solve(c_ref, src, eo);
    for (std::size_t r = 0; r < rcv.size(); ++r) {
      const auto uf = spectral_transform(traces[r], band);
      const auto ug = geometric_optics_field(c_ref, tau_ref, rcv[r], band);
      const std::size_t i = uf.values.size() - 1;  // band top
      const double rel = std::abs(uf.values[i] - ug.values[i]) / std::abs(ug.values[i]);
      if (rel > 0.20) {
        why = "FDTD vs geometric optics differ by " + std::to_string(100 * rel) +
              "% at band top";
        return false;
      }
    }
  }
  const double dt = seconds_since(t0);
  if (dt >= 300) {
    why = "runtime " + std::to_string(dt) + " s >= 300 s";
    return false;
  }
  return true;
}

bool crit7(std::string& why) {
  const auto t0 = clock_type::now();
  const auto grid = GridSpec::centered_cube(48, 1.2);
  const Band band(5, 12, 96);
  const auto geo = Geometry::make_default({0, 0, 0}, 0.5, 1.0, 0.45, 10, 2, 20);
  const auto c = make_phantom(PhantomKind::gaussian_bump, 0.05, 0.3, geo, grid);
  const double h = grid.spacing;

  std::vector<SpectralTrace> spectra;
  std::vector<double> tau_ref;
  for (std::size_t s = 0; s < geo.sources.size(); ++s) {
    EikonalOptions eo;
    eo.init_radius = (geo.sources[s] - geo.omega_center).norm() - geo.omega_radius - 2 * h;
    const auto field = eikonal_solve(c, geo.sources[s], eo);
    for (std::size_t r = 0; r < geo.surface_receivers.size(); ++r) {
      const Vec3 x = geo.surface_receivers[r];
      if (dist(x, geo.sources[s]) < 4 * h) continue;
      auto u = geometric_optics_field(c, field, x, band);
      u.src_id = int(s);
      u.rcv_id = int(r);
      u.source = geo.sources[s];
      u.receiver = x;
      spectra.push_back(std::move(u));
      tau_ref.push_back(field.tau.interp(x));
    }
  }

  double trace_dt = 0;
  std::vector<double> abs_err;
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    const auto tr = to_time(spectra[i]);
    trace_dt = tr.dt;
    const auto pick = pick_arrival(tr, 0.5 * dist(spectra[i].source, spectra[i].receiver));
    abs_err.push_back(std::abs(pick.tau_hat - tau_ref[i]));
  }
  std::sort(abs_err.begin(), abs_err.end());
  const double median = abs_err[abs_err.size() / 2];
  const double bound = 0.5 * trace_dt + 3 * h;
  if (median > bound) {
    why = "median pick error " + std::to_string(median) + " > " + std::to_string(bound);
    return false;
  }

  const auto table = build_table(spectra);
  if (!table.asymmetric_pairs.empty()) {
    why = std::to_string(table.asymmetric_pairs.size()) +
          " reciprocal pairs differ by more than 2 dt";
    return false;
  }
  const double dt = seconds_since(t0);
  if (dt >= 120) {
    why = "runtime " + std::to_string(dt) + " s >= 120 s";
    return false;
  }
  return true;
}

bool crit8(std::string& why) {
  const auto t0 = clock_type::now();
  const auto grid = GridSpec::centered_cube(48, 1.2);
  const auto geo = Geometry::make_default({0, 0, 0}, 0.5, 1.0, 0.45, 12, 2, 24);
  const auto c_true = make_phantom(PhantomKind::gaussian_bump, 0.05, 0.3, geo, grid);

  const auto table = forward_times(c_true, geo);
  TomoConfig cfg;
  const auto res = invert_travel_times(table, geo, grid, cfg);

  for (std::size_t i = 1; i < res.misfit_history.size(); ++i)
    if (res.misfit_history[i] > res.misfit_history[i - 1] + 1e-15) {
      why = "misfit history not non-increasing at step " + std::to_string(i);
      return false;
    }
  const double err = model_error_in_omega(res.c_rec, c_true, geo);
  if (err > 0.10) {
    why = "relative L2 model error " + std::to_string(err) + " > 0.10";
    return false;
  }
  const double dt = seconds_since(t0);
  if (dt >= 300) {
    why = "runtime " + std::to_string(dt) + " s >= 300 s";
    return false;
  }
  return true;
}

double run_pipeline(const std::string& out, double noise) {
  RunConfig cfg;
  cfg.out_dir = out;
  cfg.retrieval_noise_level = noise;
  cmd_simulate(cfg);
  cmd_retrieve(cfg);
  cmd_invert(cfg);
  const auto c_true = load_pslb(out + "/c_true.pslb");
  const auto c_rec = load_pslb(out + "/c_rec.pslb");
  return model_error_in_omega(c_rec, c_true, cfg.make_geometry());
}

bool crit9(std::string& why) {
  const auto t0 = clock_type::now();
  const double err0 = run_pipeline(temp_dir("e2e_noiseless"), 0.0);
  if (err0 > 0.15) {
    why = "noiseless end-to-end model error " + std::to_string(err0) + " > 0.15";
    return false;
  }
  const double err1 = run_pipeline(temp_dir("e2e_noisy"), 0.01);
  if (err1 > 2 * err0) {
    why = "1% noise error " + std::to_string(err1) + " > 2x noiseless " +
          std::to_string(err0);
    return false;
  }
  const double dt = seconds_since(t0);
  if (dt >= 900) {
    why = "runtime " + std::to_string(dt) + " s >= 900 s";
    return false;
  }
  return true;
}

bool crit10(std::string& why) {
  // two phantoms must be distinguishable from their retrieved traces by a
  // margin far above the retrieval's own numerical noise floor, which we
  // measure by re-running the retrieval at a different internal resolution
  const auto t0 = clock_type::now();
  const auto grid = GridSpec::centered_cube(48, 1.2);
  const Band band(5, 12, 96);
  const auto geo = Geometry::make_default({0, 0, 0}, 0.5, 1.0, 0.45, 6, 2, 12);
  const double h = grid.spacing;

  auto simulate = [&](double amplitude) {
    const auto c = make_phantom(PhantomKind::gaussian_bump, amplitude, 0.3, geo, grid);
    std::vector<SpectralTrace> out;
    for (std::size_t s = 0; s < geo.sources.size(); ++s) {
      EikonalOptions eo;
      eo.init_radius =
          (geo.sources[s] - geo.omega_center).norm() - geo.omega_radius - 2 * h;
      const auto field = eikonal_solve(c, geo.sources[s], eo);
      for (const auto& x : geo.surface_receivers) {
        if (dist(x, geo.sources[s]) < 4 * h) continue;
        out.push_back(geometric_optics_field(c, field, x, band));
        out.back().source = geo.sources[s];
        out.back().receiver = x;
      }
    }
    return out;
  };

  auto retrieve_all = [&](const std::vector<SpectralTrace>& truth, int n_fft) {
    std::vector<SpectralTrace> out;
    RetrievalOptions opts;
    opts.n_fft = n_fft;
    for (const auto& u : truth)
      out.push_back(retrieve_phase_min(phaseless(u), dist(u.source, u.receiver), opts));
    return out;
  };

  auto pooled_diff = [&](const std::vector<SpectralTrace>& a,
                         const std::vector<SpectralTrace>& b) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < a[i].values.size(); ++j) {
        num += std::norm(a[i].values[j] - b[i].values[j]);
        den += std::norm(b[i].values[j]);
      }
    return std::sqrt(num / den);
  };

  const auto truth_lo = simulate(0.03);
  const auto truth_hi = simulate(0.06);
  const auto ret_lo = retrieve_all(truth_lo, 32768);
  const auto ret_hi = retrieve_all(truth_hi, 32768);
  const double signal = pooled_diff(ret_lo, ret_hi);

  const auto ret_lo_alt = retrieve_all(truth_lo, 16384);
  const auto ret_hi_alt = retrieve_all(truth_hi, 16384);
  const double floor_level = std::max(
      {pooled_diff(ret_lo_alt, ret_lo), pooled_diff(ret_hi_alt, ret_hi), 1e-12});

  if (signal < 10 * floor_level) {
    why = "retrieved traces differ by " + std::to_string(signal) +
          ", below 10x the retrieval noise floor " + std::to_string(floor_level);
    return false;
  }
  const double dt = seconds_since(t0);
  if (dt >= 300) {
    why = "runtime " + std::to_string(dt) + " s >= 300 s";
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int criterion = 0;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::strcmp(argv[i], "--criterion") == 0) criterion = std::atoi(argv[i + 1]);
  if (criterion < 1 || criterion > 10) {
    std::cerr << "usage: acceptance --criterion N  (N in 1..10)\n";
    return 2;
  }

  using CritFn = bool (*)(std::string&);
  const CritFn fns[10] = {crit1, crit2, crit3, crit4, crit5,
                          crit6, crit7, crit8, crit9, crit10};
  std::string why;
  bool pass = false;
  try {
    pass = fns[criterion - 1](why);
  } catch (const std::exception& e) {
    why = std::string("exception: ") + e.what();
  }
  if (pass) {
    std::cout << "criterion " << criterion << ": PASS\n";
    return 0;
  }
  std::cout << "criterion " << criterion << ": FAIL " << why << "\n";
  return 1;
}
