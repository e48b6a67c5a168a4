#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "phaselab/tomography.hpp"

namespace phaselab {

namespace {

// c = 1 outside Omega, so the point-source solution is exact out to the
// source's clearance from Omega; seeding there removes the O(h) marching
// bias near the source
TravelTimeField solve_from(const ScalarField& c, const Geometry& geo, const Vec3& y) {
  EikonalOptions eo;
  eo.init_radius =
      (y - geo.omega_center).norm() - geo.omega_radius - 2 * c.grid.spacing;
  return eikonal_solve(c, y, eo);
}

}  // namespace

TravelTimeTable forward_times(const ScalarField& c, const Geometry& geometry) {
  TravelTimeTable table;
  for (std::size_t s = 0; s < geometry.sources.size(); ++s) {
    const TravelTimeField field = solve_from(c, geometry, geometry.sources[s]);
    for (std::size_t r = 0; r < geometry.surface_receivers.size(); ++r) {
      if (dist(geometry.surface_receivers[r], geometry.sources[s]) < 4 * c.grid.spacing)
        continue;  // skip self / coincident pairs
      table.entries.push_back({static_cast<int>(s), static_cast<int>(r),
                               field.tau.interp(geometry.surface_receivers[r]), 0.0, 1.0});
    }
  }
  return table;
}

namespace {

// deposit one ray-segment length onto the eight nodes around its midpoint
void deposit_segment(const GridSpec& g, const std::vector<int>& unknown_of_node,
                     const Vec3& p0, const Vec3& p1, double len, int row,
                     std::vector<TomoOperator::Triplet>& out) {
  const Vec3 mid = 0.5 * (p0 + p1);
  double fx = (mid.x - g.origin.x) / g.spacing;
  double fy = (mid.y - g.origin.y) / g.spacing;
  double fz = (mid.z - g.origin.z) / g.spacing;
  const int i = std::clamp(static_cast<int>(fx), 0, g.dims[0] - 2);
  const int j = std::clamp(static_cast<int>(fy), 0, g.dims[1] - 2);
  const int k = std::clamp(static_cast<int>(fz), 0, g.dims[2] - 2);
  fx = std::clamp(fx - i, 0.0, 1.0);
  fy = std::clamp(fy - j, 0.0, 1.0);
  fz = std::clamp(fz - k, 0.0, 1.0);
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const double w = (dx ? fx : 1 - fx) * (dy ? fy : 1 - fy) * (dz ? fz : 1 - fz);
        const int col = unknown_of_node[g.index(i + dx, j + dy, k + dz)];
        if (col >= 0 && w > 0) out.push_back({row, col, w * len});
      }
}

std::vector<int> omega_mask(const GridSpec& grid, const Geometry& geo, int& n_unknowns) {
  std::vector<int> unknown_of_node(grid.size(), -1);
  n_unknowns = 0;
  for (int k = 0; k < grid.dims[2]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[0]; ++i)
        if (geo.inside_omega(grid.node(i, j, k)))
          unknown_of_node[grid.index(i, j, k)] = n_unknowns++;
  return unknown_of_node;
}

double rms(const std::vector<double>& r) {
  if (r.empty()) return 0;
  double s = 0;
  for (double v : r) s += v * v;
  return std::sqrt(s / r.size());
}

std::vector<double> misfit_residuals(const ScalarField& c, const Geometry& geo,
                                     const std::vector<TravelTimeEntry>& data) {
  std::map<int, TravelTimeField> fields;
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& e : data) {
    auto it = fields.find(e.src_id);
    if (it == fields.end())
      it = fields.emplace(e.src_id, solve_from(c, geo, geo.sources[e.src_id])).first;
    out.push_back(e.tau_hat - it->second.tau.interp(geo.surface_receivers[e.rcv_id]));
  }
  return out;
}

}  // namespace

TomoOperator linearize(const ScalarField& m, const Geometry& geometry,
                       const std::vector<TravelTimeEntry>& data) {
  TomoOperator op;
  op.unknown_of_node = omega_mask(m.grid, geometry, op.n_unknowns);
  op.n_pairs = static_cast<int>(data.size());

  ScalarField c(m.grid);
  for (std::size_t i = 0; i < c.values.size(); ++i) c.values[i] = m.values[i] * m.values[i];

  std::map<int, TravelTimeField> fields;
  int row = 0;
  for (const auto& e : data) {
    auto it = fields.find(e.src_id);
    if (it == fields.end())
      it = fields.emplace(e.src_id, solve_from(c, geometry, geometry.sources[e.src_id])).first;
    const Vec3 x = geometry.surface_receivers[e.rcv_id];
    try {
      const Ray ray = trace_ray(it->second, x);
      for (std::size_t s = 0; s + 1 < ray.points.size(); ++s)
        deposit_segment(m.grid, op.unknown_of_node, ray.points[s], ray.points[s + 1],
                        ray.euclidean_lengths[s], row, op.triplets);
      op.residuals.push_back(e.tau_hat - it->second.tau.interp(x));
      op.row_pair.emplace_back(e.src_id, e.rcv_id);
      ++row;
    } catch (const MultipathError&) {
      ++op.n_failures;
    }
  }
  return op;
}

TomoResult invert_travel_times(const TravelTimeTable& table, const Geometry& geometry,
                               const GridSpec& grid, const TomoConfig& cfg) {
  cfg.validate();

  std::vector<TravelTimeEntry> data;
  std::set<int> srcs, rcvs;
  for (const auto& e : table.entries)
    if (e.quality >= 0.5) {
      data.push_back(e);
      srcs.insert(e.src_id);
      rcvs.insert(e.rcv_id);
    }
  if (srcs.size() < 8 || rcvs.size() < 8)
    throw std::invalid_argument(
        "invert_travel_times: need at least 8 sources x 8 receivers with quality >= 0.5");
  for (int s : srcs)
    if (s < 0 || s >= static_cast<int>(geometry.sources.size()))
      throw std::invalid_argument("invert_travel_times: src_id outside geometry");
  for (int r : rcvs)
    if (r < 0 || r >= static_cast<int>(geometry.surface_receivers.size()))
      throw std::invalid_argument("invert_travel_times: rcv_id outside geometry");

  ScalarField m(grid, 1.0);
  TomoResult res;
  int worse_streak = 0;

  for (int iter = 0; iter < cfg.max_gauss_newton_iters; ++iter) {
    TomoOperator op = linearize(m, geometry, data);
    if (op.n_failures * 5 > op.n_pairs) {
      throw RegularityError("invert_travel_times: ray tracing failed on " +
                            std::to_string(op.n_failures) + " of " +
                            std::to_string(op.n_pairs) + " pairs");
    }

    const double misfit = rms(op.residuals);
    if (!res.misfit_history.empty() && misfit > res.misfit_history.back() + 1e-15) {
      if (++worse_streak >= 2) {
        res.misfit_history.push_back(misfit);
        ScalarField c_rec(grid);
        for (std::size_t i = 0; i < m.values.size(); ++i)
          c_rec.values[i] = m.values[i] * m.values[i];
        res.c_rec = std::move(c_rec);
        throw DivergenceError("invert_travel_times: misfit increased twice", res);
      }
    } else {
      worse_streak = 0;
    }
    res.misfit_history.push_back(misfit);
    if (misfit < cfg.misfit_tol) break;
    if (iter + 1 == cfg.max_gauss_newton_iters) break;

    // stacked least squares: [J; sqrt(lambda) L] dm = [r; 0] with L a graph
    // Laplacian over the Omega nodes plus a small ridge
    const int n = op.n_unknowns;
    const int n_rows = static_cast<int>(op.residuals.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(op.triplets.size() + 8 * n);
    for (const auto& t : op.triplets) trip.emplace_back(t.row, t.col, t.w);

    const double sl = std::sqrt(cfg.lambda);
    int row = n_rows;
    for (int k = 0; k < grid.dims[2]; ++k)
      for (int j = 0; j < grid.dims[1]; ++j)
        for (int i = 0; i < grid.dims[0]; ++i) {
          const int u = op.unknown_of_node[grid.index(i, j, k)];
          if (u < 0) continue;
          const int di[6] = {1, -1, 0, 0, 0, 0};
          const int dj[6] = {0, 0, 1, -1, 0, 0};
          const int dk[6] = {0, 0, 0, 0, 1, -1};
          int deg = 0;
          for (int t = 0; t < 6; ++t) {
            const int ni = i + di[t], nj = j + dj[t], nk = k + dk[t];
            if (ni < 0 || nj < 0 || nk < 0 || ni >= grid.dims[0] || nj >= grid.dims[1] ||
                nk >= grid.dims[2])
              continue;
            const int v = op.unknown_of_node[grid.index(ni, nj, nk)];
            if (v >= 0) {
              trip.emplace_back(row, v, -sl);
              ++deg;
            }
          }
          trip.emplace_back(row, u, sl * deg + 0.1 * sl);
          ++row;
        }

    Eigen::SparseMatrix<double> A(row, n);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(row);
    for (int i = 0; i < n_rows; ++i) rhs(i) = op.residuals[i];

    Eigen::LeastSquaresConjugateGradient<Eigen::SparseMatrix<double>> solver;
    solver.setTolerance(1e-10);
    solver.setMaxIterations(4000);
    solver.compute(A);
    Eigen::VectorXd dm = solver.solve(rhs);

    // update smoothing: separable (1/4, 1/2, 1/4) passes inside the mask
    ScalarField delta(grid, 0.0);
    for (std::size_t idx = 0; idx < delta.values.size(); ++idx)
      if (op.unknown_of_node[idx] >= 0) delta.values[idx] = dm(op.unknown_of_node[idx]);
    const int passes = std::max(0, static_cast<int>(std::lround(cfg.smoothing_width)));
    for (int pass = 0; pass < passes; ++pass)
      for (int axis = 0; axis < 3; ++axis) {
        ScalarField next = delta;
        for (int k = 1; k + 1 < grid.dims[2]; ++k)
          for (int j = 1; j + 1 < grid.dims[1]; ++j)
            for (int i = 1; i + 1 < grid.dims[0]; ++i) {
              const std::size_t idx = grid.index(i, j, k);
              if (op.unknown_of_node[idx] < 0) continue;
              const int s[3] = {axis == 0, axis == 1, axis == 2};
              next.values[idx] =
                  0.5 * delta.values[idx] +
                  0.25 * (delta.values[grid.index(i - s[0], j - s[1], k - s[2])] +
                          delta.values[grid.index(i + s[0], j + s[1], k + s[2])]);
            }
        delta = std::move(next);
      }

    // step halving for a monotone misfit
    double alpha = 1.0;
    ScalarField m_trial = m;
    bool accepted = false;
    for (int half = 0; half < 3; ++half, alpha *= 0.5) {
      m_trial = m;
      for (std::size_t idx = 0; idx < m.values.size(); ++idx)
        if (op.unknown_of_node[idx] >= 0)
          m_trial.values[idx] = std::max(1.0, m.values[idx] + alpha * delta.values[idx]);
      ScalarField c_trial(grid);
      for (std::size_t idx = 0; idx < grid.size(); ++idx)
        c_trial.values[idx] = m_trial.values[idx] * m_trial.values[idx];
      if (rms(misfit_residuals(c_trial, geometry, data)) <= misfit) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // plateau: no step length improves the misfit
    m = std::move(m_trial);
  }

  ScalarField c_rec(grid, 1.0);
  for (std::size_t idx = 0; idx < m.values.size(); ++idx)
    c_rec.values[idx] = m.values[idx] * m.values[idx];
  res.c_rec = std::move(c_rec);
  return res;
}

}  // namespace phaselab
