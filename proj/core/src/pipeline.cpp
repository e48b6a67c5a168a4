#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <mutex>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "phaselab/arrivals.hpp"
#include "phaselab/forward.hpp"
#include "phaselab/medium.hpp"
#include "phaselab/phase_retrieval.hpp"
#include "phaselab/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace phaselab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kNearIdBase = 10000;  // rcv_id namespace for near-ball receivers

void parallel_for(int n, int workers, const std::function<void(int)>& body) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::scoped_lock lk(err_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string hex64(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string manifest_path(const RunConfig& cfg, const std::string& stage) {
  return (fs::path(cfg.out_dir) / ("manifest_" + stage + ".json")).string();
}

// a stage is up to date when its manifest exists, was written for the same
// config, and every listed output still hashes to the recorded value
bool stage_up_to_date(const RunConfig& cfg, const std::string& stage) {
  const std::string path = manifest_path(cfg, stage);
  std::ifstream is(path);
  if (!is) return false;
  json m;
  try {
    is >> m;
  } catch (const json::exception&) {
    return false;
  }
  const std::string cfg_hash = hex64(fnv1a64(cfg.canonical().data(), cfg.canonical().size()));
  if (m.value("config_hash", "") != cfg_hash) return false;
  if (!m.contains("files")) return false;
  for (const auto& [name, hash] : m["files"].items()) {
    const fs::path p = fs::path(cfg.out_dir) / name;
    if (!fs::exists(p)) return false;
    if (hex64(hash_file(p.string())) != hash.get<std::string>()) return false;
  }
  return true;
}

void write_manifest(const RunConfig& cfg, const std::string& stage,
                    const std::vector<std::string>& files) {
  json m;
  m["stage"] = stage;
  m["config_hash"] = hex64(fnv1a64(cfg.canonical().data(), cfg.canonical().size()));
  m["files"] = json::object();
  for (const auto& name : files)
    m["files"][name] = hex64(hash_file((fs::path(cfg.out_dir) / name).string()));
  std::ofstream os(manifest_path(cfg, stage));
  os << m.dump(2) << '\n';
}

ScalarField make_truth(const RunConfig& cfg, const Geometry& geo, const GridSpec& grid) {
  if (cfg.phantom_kind == "none") return ScalarField(grid, 1.0);
  return make_phantom(phantom_kind_from_string(cfg.phantom_kind), cfg.phantom_amplitude,
                      cfg.phantom_width, geo, grid);
}

struct PairLists {
  std::vector<SpectralTrace> near, surface;
};

PairLists simulate_spectra(const RunConfig& cfg, const ScalarField& c, const Geometry& geo,
                           const Band& band) {
  const int n_src = static_cast<int>(geo.sources.size());
  std::vector<PairLists> per_source(n_src);

  parallel_for(n_src, cfg.workers, [&](int s) {
    const Vec3 y = geo.sources[s];
    const double min_sep = 4 * c.grid.spacing;  // skip self / coincident pairs
    std::vector<std::pair<int, Vec3>> points;
    for (std::size_t j = 0; j < geo.near_receivers[s].size(); ++j)
      points.emplace_back(kNearIdBase + static_cast<int>(j), geo.near_receivers[s][j]);
    for (std::size_t j = 0; j < geo.surface_receivers.size(); ++j)
      if (dist(geo.surface_receivers[j], y) >= min_sep)
        points.emplace_back(static_cast<int>(j), geo.surface_receivers[j]);

    std::vector<SpectralTrace> traces;
    if (cfg.forward_mode == "fdtd") {
      FdtdOptions fo;
      fo.T = cfg.fdtd_t_window;
      fo.wavelet_sigma = wavelet_sigma_for_band(band);
      std::vector<Vec3> receivers;
      for (const auto& [id, x] : points) receivers.push_back(x);
      const auto time_traces = fdtd_solve(c, y, receivers, fo);
      for (const auto& tt : time_traces) traces.push_back(spectral_transform(tt, band));
    } else {
      // c = 1 outside Omega: seed the solver exactly out to the clearance
      EikonalOptions eo;
      eo.init_radius =
          (y - geo.omega_center).norm() - geo.omega_radius - 2 * c.grid.spacing;
      const TravelTimeField field = eikonal_solve(c, y, eo);
      for (const auto& [id, x] : points) {
        SpectralTrace t = geometric_optics_field(c, field, x, band);
        traces.push_back(std::move(t));
      }
    }
    for (std::size_t r = 0; r < traces.size(); ++r) {
      traces[r].src_id = s;
      traces[r].rcv_id = points[r].first;
      traces[r].source = y;
      traces[r].receiver = points[r].second;
      if (points[r].first >= kNearIdBase)
        per_source[s].near.push_back(traces[r]);
      else
        per_source[s].surface.push_back(traces[r]);
    }
  });

  PairLists all;
  for (auto& p : per_source) {
    all.near.insert(all.near.end(), p.near.begin(), p.near.end());
    all.surface.insert(all.surface.end(), p.surface.begin(), p.surface.end());
  }
  return all;
}

std::vector<PhaselessTrace> take_modulus(const std::vector<SpectralTrace>& spectra,
                                         const RunConfig& cfg) {
  std::vector<PhaselessTrace> out;
  out.reserve(spectra.size());
  for (const auto& u : spectra) {
    // per-pair RNG stream: bit-reproducible independent of worker count
    const std::uint64_t key[3] = {cfg.seed, static_cast<std::uint64_t>(u.src_id),
                                  static_cast<std::uint64_t>(u.rcv_id)};
    std::mt19937_64 rng(fnv1a64(key, sizeof key));
    out.push_back(phaseless(u, cfg.retrieval_noise_level,
                            cfg.retrieval_noise_level > 0 ? &rng : nullptr));
  }
  return out;
}

void attach_positions(std::vector<PhaselessTrace>& traces, const Geometry& geo) {
  for (auto& t : traces) {
    t.source = geo.sources[t.src_id];
    t.receiver = t.rcv_id >= kNearIdBase ? geo.near_receivers[t.src_id][t.rcv_id - kNearIdBase]
                                         : geo.surface_receivers[t.rcv_id];
  }
}

void attach_positions(std::vector<SpectralTrace>& traces, const Geometry& geo) {
  for (auto& t : traces) {
    t.source = geo.sources[t.src_id];
    t.receiver = t.rcv_id >= kNearIdBase ? geo.near_receivers[t.src_id][t.rcv_id - kNearIdBase]
                                         : geo.surface_receivers[t.rcv_id];
  }
}

}  // namespace

StageResult cmd_simulate(const RunConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  if (stage_up_to_date(cfg, "simulate")) return {true, {}};

  const GridSpec grid = cfg.make_grid();
  const Geometry geo = cfg.make_geometry();
  const Band band = cfg.make_band();
  const ScalarField c = make_truth(cfg, geo, grid);

  const auto adm = check_admissible(c, geo);
  if (!adm.pass)
    throw std::runtime_error("cmd_simulate: phantom fails admissibility (min c " +
                             std::to_string(adm.min_c) + ")");

  const fs::path out(cfg.out_dir);
  {
    std::ofstream os(out / "config_used.txt");
    os << cfg.canonical();
  }
  save_pslb(c, (out / "c_true.pslb").string());

  const PairLists spectra = simulate_spectra(cfg, c, geo, band);
  write_spectra_csv((out / "spectra_near.csv").string(), spectra.near);
  write_spectra_csv((out / "spectra_surface.csv").string(), spectra.surface);
  write_phaseless_csv((out / "phaseless_near.csv").string(), take_modulus(spectra.near, cfg));
  write_phaseless_csv((out / "phaseless_surface.csv").string(),
                      take_modulus(spectra.surface, cfg));

  StageResult res;
  res.outputs = {"config_used.txt", "c_true.pslb",       "spectra_near.csv",
                 "spectra_surface.csv", "phaseless_near.csv", "phaseless_surface.csv"};
  write_manifest(cfg, "simulate", res.outputs);
  return res;
}

StageResult cmd_retrieve(const RunConfig& cfg) {
  cfg.validate();
  if (stage_up_to_date(cfg, "retrieve")) return {true, {}};
  const fs::path out(cfg.out_dir);
  if (!fs::exists(out / "phaseless_near.csv"))
    throw std::runtime_error("cmd_retrieve: run simulate first (phaseless_near.csv missing)");

  const Geometry geo = cfg.make_geometry();
  auto near = read_phaseless_csv((out / "phaseless_near.csv").string());
  attach_positions(near, geo);

  RetrievalOptions ropts;
  ropts.flip_hilbert_sign = cfg.debug_flip_hilbert;

  std::vector<SpectralTrace> retrieved(near.size());
  std::vector<ZeroSet> zero_sets(near.size());
  std::vector<double> residuals(near.size());
  parallel_for(static_cast<int>(near.size()), cfg.workers, [&](int i) {
    const double d = (near[i].receiver - near[i].source).norm();
    DisambiguationResult r =
        blaschke_disambiguate(near[i], d, cfg.retrieval_max_zeros, ropts);
    r.u.src_id = near[i].src_id;
    r.u.rcv_id = near[i].rcv_id;
    r.u.source = near[i].source;
    r.u.receiver = near[i].receiver;
    retrieved[i] = std::move(r.u);
    zero_sets[i] = std::move(r.zeros);
    residuals[i] = r.residual;
  });

  write_spectra_csv((out / "spectra_retrieved_near.csv").string(), retrieved);
  {
    std::ofstream os(out / "zeros_near.csv");
    os << "src_id,rcv_id,type,re,im,multiplicity\n" << std::setprecision(17);
    for (std::size_t i = 0; i < zero_sets.size(); ++i) {
      for (const auto& [a, m] : zero_sets[i].real_zeros)
        os << retrieved[i].src_id << ',' << retrieved[i].rcv_id << ",real," << a << ",0,"
           << m << '\n';
      for (const auto& [a, m] : zero_sets[i].upper_zeros)
        os << retrieved[i].src_id << ',' << retrieved[i].rcv_id << ",upper," << a.real()
           << ',' << a.imag() << ',' << m << '\n';
    }
  }

  StageResult res;
  res.outputs = {"spectra_retrieved_near.csv", "zeros_near.csv"};

  // per-pair accuracy report against the simulator truth, when present
  if (fs::exists(out / "spectra_near.csv")) {
    auto truth = read_spectra_csv((out / "spectra_near.csv").string());
    std::map<std::pair<int, int>, const SpectralTrace*> by_pair;
    for (const auto& t : truth) by_pair[{t.src_id, t.rcv_id}] = &t;
    std::ofstream os(out / "retrieval_report.csv");
    os << "src_id,rcv_id,rel_rms_error,causality_residual\n" << std::setprecision(17);
    bool wrote_curve = false;
    for (std::size_t i = 0; i < retrieved.size(); ++i) {
      auto it = by_pair.find({retrieved[i].src_id, retrieved[i].rcv_id});
      if (it == by_pair.end()) continue;
      const auto& t = *it->second;
      double num = 0, den = 0;
      for (std::size_t j = 0; j < t.values.size(); ++j) {
        num += std::norm(retrieved[i].values[j] - t.values[j]);
        den += std::norm(t.values[j]);
      }
      os << retrieved[i].src_id << ',' << retrieved[i].rcv_id << ','
         << (den > 0 ? std::sqrt(num / den) : 0.0) << ',' << residuals[i] << '\n';
      if (!wrote_curve) {
        std::ofstream pc(out / "phase_error_vs_k.csv");
        pc << "k,phase_error\n" << std::setprecision(17);
        for (std::size_t j = 0; j < t.values.size(); ++j)
          pc << t.k_grid[j] << ','
             << std::arg(retrieved[i].values[j] * std::conj(t.values[j])) << '\n';
        wrote_curve = true;
      }
    }
    res.outputs.push_back("retrieval_report.csv");
    res.outputs.push_back("phase_error_vs_k.csv");
  }

  // hand the arrival stage its working spectra: the oracle-continued surface
  // pairs, or (near_ball_only) just the retrieved near traces
  if (cfg.continuation_mode == "oracle_surface") {
    if (!fs::exists(out / "spectra_surface.csv"))
      throw std::runtime_error("cmd_retrieve: oracle_surface mode needs spectra_surface.csv");
    fs::copy_file(out / "spectra_surface.csv", out / "spectra_for_arrivals.csv",
                  fs::copy_options::overwrite_existing);
  } else {
    write_spectra_csv((out / "spectra_for_arrivals.csv").string(), retrieved);
  }
  res.outputs.push_back("spectra_for_arrivals.csv");

  write_manifest(cfg, "retrieve", res.outputs);
  return res;
}

StageResult cmd_invert(const RunConfig& cfg) {
  cfg.validate();
  if (stage_up_to_date(cfg, "invert")) return {true, {}};
  const fs::path out(cfg.out_dir);
  if (!fs::exists(out / "spectra_for_arrivals.csv"))
    throw std::runtime_error("cmd_invert: run retrieve first (spectra_for_arrivals.csv missing)");

  const Geometry geo = cfg.make_geometry();
  const GridSpec grid = cfg.make_grid();
  auto spectra = read_spectra_csv((out / "spectra_for_arrivals.csv").string());
  attach_positions(spectra, geo);

  const TravelTimeTable table = build_table(spectra);
  write_table_csv((out / "travel_times.csv").string(), table);

  const TomoResult result = invert_travel_times(table, geo, grid, cfg.tomo);
  save_pslb(result.c_rec, (out / "c_rec.pslb").string());
  {
    std::ofstream os(out / "misfit_history.csv");
    os << "iteration,misfit_rms\n" << std::setprecision(17);
    for (std::size_t i = 0; i < result.misfit_history.size(); ++i)
      os << i << ',' << result.misfit_history[i] << '\n';
  }

  json report;
  report["n_pairs"] = table.entries.size();
  report["n_asymmetric_pairs"] = table.asymmetric_pairs.size();
  report["misfit_final"] =
      result.misfit_history.empty() ? 0.0 : result.misfit_history.back();
  if (fs::exists(out / "c_true.pslb")) {
    const ScalarField c_true = load_pslb((out / "c_true.pslb").string());
    double num = 0, den = 0, bnum = 0, bden = 0;
    for (int k = 0; k < grid.dims[2]; ++k)
      for (int j = 0; j < grid.dims[1]; ++j)
        for (int i = 0; i < grid.dims[0]; ++i) {
          if (!geo.inside_omega(grid.node(i, j, k))) continue;
          const double t = c_true.at(i, j, k), r = result.c_rec.at(i, j, k);
          num += (r - t) * (r - t);
          den += t * t;
          bnum += (r - t) * (r - t);
          bden += (t - 1) * (t - 1);
        }
    report["relative_model_error"] = den > 0 ? std::sqrt(num / den) : 0.0;
    report["contrast_relative_error"] = bden > 0 ? std::sqrt(bnum / bden) : 0.0;
  }
  {
    std::ofstream os(out / "invert_report.json");
    os << report.dump(2) << '\n';
  }

  StageResult res;
  res.outputs = {"travel_times.csv", "c_rec.pslb", "misfit_history.csv", "invert_report.json"};
  write_manifest(cfg, "invert", res.outputs);
  return res;
}

namespace {

// adaptive Simpson for the oracle integral int_0^inf t^n e^{-i conj(a) t} e^{ikt} dt
cplx simpson(const std::function<cplx(double)>& f, double a, double b, cplx fa, cplx fb,
             cplx fm, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const cplx flm = f(lm), frm = f(rm);
  const cplx whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const cplx left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const cplx right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, fm, flm, tol / 2, depth - 1) +
         simpson(f, m, b, fm, fb, frm, tol / 2, depth - 1);
}

cplx quad_fourier(int n, cplx a, cplx k) {
  const auto f = [&](double t) {
    return std::pow(t, n) * std::exp(cplx(0, 1) * (k - std::conj(a)) * t);
  };
  const double rate = a.imag() - k.imag();
  const double T = 60.0 / rate;
  cplx acc(0, 0);
  const int n_seg = 16;
  for (int s = 0; s < n_seg; ++s) {
    const double lo = T * s / n_seg, hi = T * (s + 1) / n_seg;
    acc += simpson(f, lo, hi, f(lo), f(hi), f(0.5 * (lo + hi)), 1e-13, 40);
  }
  return acc;
}

}  // namespace

VerifyReport cmd_verify(const RunConfig& cfg) {
  VerifyReport report;

  {
    VerifyCheck c{"fourier_pair_vs_quadrature", 0, 1e-8, false};
    const cplx as[3] = {{0, 1}, {1, 1}, {-2, 0.5}};
    for (int n = 0; n <= 3; ++n)
      for (const cplx& a : as)
        for (int ki = -3; ki <= 3; ++ki) {
          const cplx k(ki, 0);
          const cplx closed = fourier_pair(n, a, k, cfg.debug_paper_fourier_constant);
          const cplx quad = quad_fourier(n, a, k);
          c.max_error = std::max(c.max_error, std::abs(closed - quad) / std::abs(quad));
        }
    c.pass = c.max_error <= c.tolerance;
    report.checks.push_back(c);
  }

  {
    VerifyCheck c{"blaschke_unimodular", 0, 1e-12, false};
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> re(-5, 5), im(0.1, 3), kk(-20, 20);
    std::vector<cplx> zeros;
    for (int i = 0; i < 5; ++i) zeros.emplace_back(re(rng), im(rng));
    const BlaschkeProduct b(zeros);
    for (int i = 0; i < 100; ++i)
      c.max_error = std::max(c.max_error, std::abs(std::abs(b.evaluate(kk(rng))) - 1.0));
    c.pass = c.max_error <= c.tolerance;
    report.checks.push_back(c);
  }

  {
    // H[k/(k^2+1)] = -1/(k^2+1): the closed-form pair that pins the sign
    VerifyCheck c{"hilbert_convention_pair", 0, 1e-3, false};
    const int n = 1 << 20;
    const double span = 2000.0;
    const double ds = 2 * span / n;
    std::vector<double> g(n);
    for (int j = 0; j < n; ++j) {
      const double s = -span + j * ds;
      double w = 1.0;
      const double frac = std::abs(s) / span;
      if (frac > 0.9) w = 0.5 * (1 + std::cos(kPi * (frac - 0.9) / 0.1));
      g[j] = w * s / (s * s + 1);
    }
    const auto h = hilbert_fft(g, cfg.debug_flip_hilbert);
    for (double k = -5; k <= 5; k += 0.25) {
      const double pos = (k + span) / ds;
      const int j = static_cast<int>(pos);
      const double t = pos - j;
      const double hk = (1 - t) * h[j] + t * h[j + 1];
      c.max_error = std::max(c.max_error, std::abs(hk - (-1.0 / (k * k + 1))));
    }
    c.pass = c.max_error <= c.tolerance;
    report.checks.push_back(c);
  }

  {
    VerifyCheck c{"exp_fit_round_trip", 0, 1e-6, false};
    ExpPolySum truth;
    truth.terms = {{cplx(2, 0), 0, cplx(1, 1)}, {cplx(0.5, -1), 0, cplx(2.5, 0.6)}};
    truth.canonicalize();
    const double dt = 0.1;
    const auto rec = prony_match(truth.sample(dt, 240), dt, 4);
    for (double t = 0; t < 12; t += 0.37)
      c.max_error = std::max(c.max_error, std::abs(rec.evaluate(t) - truth.evaluate(t)));
    c.pass = c.max_error <= c.tolerance;
    report.checks.push_back(c);
  }

  fs::create_directories(cfg.out_dir);
  std::ofstream os(fs::path(cfg.out_dir) / "verify_report.csv");
  os << "check,max_error,tolerance,pass\n" << std::setprecision(17);
  for (const auto& c : report.checks)
    os << c.name << ',' << c.max_error << ',' << c.tolerance << ',' << (c.pass ? 1 : 0)
       << '\n';
  return report;
}

}  // namespace phaselab
