#include "phaselab/eikonal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace phaselab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Godunov upwind update: solve sum_i max(0, (t - a_i)/h)^2 = s^2 with the
/// usual largest-consistent-subset rule. a_i are per-axis upwind values.
double upwind_solve(double a1, double a2, double a3, double h, double s) {
  double a[3] = {a1, a2, a3};
  std::sort(a, a + 3);
  double hs = h * s;
  // try one, two, three terms
  double t = a[0] + hs;
  if (t <= a[1]) return t;
  {
    double sum = a[0] + a[1];
    double disc = sum * sum - 2.0 * (a[0] * a[0] + a[1] * a[1] - hs * hs);
    if (disc >= 0) {
      t = 0.5 * (sum + std::sqrt(disc));
      if (t <= a[2]) return t;
    }
  }
  double sum = a[0] + a[1] + a[2];
  double disc = sum * sum - 3.0 * (a[0] * a[0] + a[1] * a[1] + a[2] * a[2] - hs * hs);
  if (disc >= 0) return (sum + std::sqrt(disc)) / 3.0;
  // Fallback: inconsistent neighbors, use the smallest single-axis update.
  return a[0] + hs;
}

}  // namespace

TravelTimeField eikonal_solve(const ScalarField& c, const Vec3& y,
                              const EikonalOptions& opts) {
  const GridSpec& g = c.grid;
  if (!g.contains(y)) throw std::invalid_argument("eikonal_solve: source outside grid");
  for (double v : c.values)
    if (!(v >= 1.0 - 1e-9) || !std::isfinite(v))
      throw std::invalid_argument("eikonal_solve: c must be finite and >= 1");

  const double h = g.spacing;
  const double r_init = opts.init_radius > 0 ? opts.init_radius : 4.0 * h;
  const double sy = std::sqrt(c.interp(y));

  TravelTimeField out;
  out.source = y;
  out.tau = ScalarField(g, kInf);

  enum : unsigned char { Far = 0, Narrow = 1, Accepted = 2 };
  std::vector<unsigned char> state(g.size(), Far);
  auto& tau = out.tau.values;

  // (value, linear index) min-heap with lazy deletion; lexicographic
  // tie-break keeps acceptance deterministic.
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

  // Locally exact seeding on the ball where c is (assumed) constant around y.
  int i0 = std::max(0, int((y.x - g.origin.x - r_init) / h));
  int j0 = std::max(0, int((y.y - g.origin.y - r_init) / h));
  int k0 = std::max(0, int((y.z - g.origin.z - r_init) / h));
  int i1 = std::min(g.dims[0] - 1, int((y.x - g.origin.x + r_init) / h) + 1);
  int j1 = std::min(g.dims[1] - 1, int((y.y - g.origin.y + r_init) / h) + 1);
  int k1 = std::min(g.dims[2] - 1, int((y.z - g.origin.z + r_init) / h) + 1);
  for (int k = k0; k <= k1; ++k)
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) {
        double d = dist(g.node(i, j, k), y);
        if (d <= r_init) {
          std::size_t idx = g.index(i, j, k);
          tau[idx] = sy * d;
          state[idx] = Narrow;
          heap.emplace(tau[idx], idx);
        }
      }
  if (heap.empty()) throw std::invalid_argument("eikonal_solve: init ball contains no node");

  const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
  auto decompose = [&](std::size_t idx, int& i, int& j, int& k) {
    i = int(idx % nx);
    j = int((idx / nx) % ny);
    k = int(idx / (std::size_t(nx) * ny));
  };

  while (!heap.empty()) {
    auto [val, idx] = heap.top();
    heap.pop();
    if (state[idx] == Accepted || val > tau[idx]) continue;
    state[idx] = Accepted;
    if (opts.record_acceptance_order) out.acceptance_order.push_back(val);

    int i, j, k;
    decompose(idx, i, j, k);
    const int di[6] = {1, -1, 0, 0, 0, 0};
    const int dj[6] = {0, 0, 1, -1, 0, 0};
    const int dk[6] = {0, 0, 0, 0, 1, -1};
    for (int n = 0; n < 6; ++n) {
      int ii = i + di[n], jj = j + dj[n], kk = k + dk[n];
      if (ii < 0 || jj < 0 || kk < 0 || ii >= nx || jj >= ny || kk >= nz) continue;
      std::size_t nidx = g.index(ii, jj, kk);
      if (state[nidx] == Accepted) continue;
      auto axis_min = [&](int ai, int aj, int ak) {
        double best = kInf;
        int pi = ii + ai, pj = jj + aj, pk = kk + ak;
        if (pi >= 0 && pj >= 0 && pk >= 0 && pi < nx && pj < ny && pk < nz &&
            state[g.index(pi, pj, pk)] == Accepted)
          best = tau[g.index(pi, pj, pk)];
        pi = ii - ai; pj = jj - aj; pk = kk - ak;
        if (pi >= 0 && pj >= 0 && pk >= 0 && pi < nx && pj < ny && pk < nz &&
            state[g.index(pi, pj, pk)] == Accepted)
          best = std::min(best, tau[g.index(pi, pj, pk)]);
        return best;
      };
      double a1 = axis_min(1, 0, 0), a2 = axis_min(0, 1, 0), a3 = axis_min(0, 0, 1);
      double s = std::sqrt(c.values[nidx]);
      double t = upwind_solve(a1, a2, a3, h, s);
      if (t < tau[nidx]) {
        tau[nidx] = t;
        state[nidx] = Narrow;
        heap.emplace(t, nidx);
      }
    }
  }
  return out;
}

Ray trace_ray(const TravelTimeField& field, const Vec3& x) {
  const GridSpec& g = field.tau.grid;
  const double h = g.spacing;
  const Vec3 y = field.source;
  if (!g.contains(x)) throw std::invalid_argument("trace_ray: receiver outside grid");
  if (dist(x, y) < 1e-12) throw std::invalid_argument("trace_ray: x == y");

  const double step = 0.5 * h;
  const double r_stop = 1.5 * h;
  const std::size_t max_steps = std::size_t(20.0 * dist(x, y) / step) + 200;

  std::vector<Vec3> pts{x};
  Vec3 pos = x;
  double last_tau = field.tau.interp(pos);
  int no_progress = 0;
  while (dist(pos, y) > r_stop) {
    if (pts.size() > max_steps)
      throw MultipathError("trace_ray: step budget exhausted (possible multipath)");
    auto dir_at = [&](const Vec3& p) -> Vec3 {
      Vec3 gr = field.tau.grad(p);
      double n = gr.norm();
      if (n < 1e-12) return {0, 0, 0};
      return gr / n;
    };
    Vec3 d1 = dir_at(pos);
    if (d1.norm() < 0.5) throw MultipathError("trace_ray: vanishing gradient off-source");
    double ds = std::min(step, dist(pos, y));
    Vec3 mid = pos - d1 * (0.5 * ds);
    Vec3 d2 = dir_at(mid);
    if (d2.norm() < 0.5) d2 = d1;
    Vec3 next = pos - d2 * ds;
    if (!g.contains(next)) {
      next = pos - d1 * ds;  // RK midpoint left the box, fall back to Euler
      if (!g.contains(next))
        throw MultipathError("trace_ray: descent left the grid");
    }
    double t = field.tau.interp(next);
    if (t >= last_tau - 1e-14) {
      if (++no_progress > 8)
        throw MultipathError("trace_ray: descent stagnated away from source");
    } else {
      no_progress = 0;
      last_tau = t;
    }
    pos = next;
    pts.push_back(pos);
  }
  pts.push_back(y);
  std::reverse(pts.begin(), pts.end());  // order y -> x

  Ray ray;
  ray.points = std::move(pts);
  ray.euclidean_lengths.reserve(ray.points.size() - 1);
  for (std::size_t i = 0; i + 1 < ray.points.size(); ++i)
    ray.euclidean_lengths.push_back(dist(ray.points[i], ray.points[i + 1]));
  return ray;
}

double geodesic_travel_time(const ScalarField& c, const Ray& ray) {
  double acc = 0;
  for (std::size_t i = 0; i + 1 < ray.points.size(); ++i) {
    double s0 = std::sqrt(c.interp(ray.points[i]));
    double s1 = std::sqrt(c.interp(ray.points[i + 1]));
    acc += 0.5 * (s0 + s1) * ray.euclidean_lengths[i];
  }
  return acc;
}

namespace {

struct RayState {
  Vec3 pos;
  Vec3 dir;  // unit tangent
};

/// d(pos)/ds = dir, d(dir)/ds = (I - dir dir^T) grad(ln sqrt(c)).
RayState ray_rhs(const ScalarField& c, const RayState& s) {
  Vec3 gl = c.grad(s.pos) / (2.0 * std::max(1e-12, c.interp(s.pos)));
  Vec3 perp = gl - s.dir * s.dir.dot(gl);
  return {s.dir, perp};
}

RayState rk4_step(const ScalarField& c, const RayState& s, double ds) {
  RayState k1 = ray_rhs(c, s);
  RayState m{s.pos + k1.pos * (ds / 2), s.dir + k1.dir * (ds / 2)};
  RayState k2 = ray_rhs(c, m);
  m = {s.pos + k2.pos * (ds / 2), s.dir + k2.dir * (ds / 2)};
  RayState k3 = ray_rhs(c, m);
  m = {s.pos + k3.pos * ds, s.dir + k3.dir * ds};
  RayState k4 = ray_rhs(c, m);
  RayState out{
      s.pos + (k1.pos + 2 * k2.pos + 2 * k3.pos + k4.pos) * (ds / 6),
      s.dir + (k1.dir + 2 * k2.dir + 2 * k3.dir + k4.dir) * (ds / 6)};
  out.dir = out.dir.normalized();
  return out;
}

/// Shoot a ray from y in direction u0 out to arclength s_max, returning the
/// position at the requested arclength (dense small steps, no storage).
Vec3 shoot_to(const ScalarField& c, const Vec3& y, const Vec3& u0, double s_max,
              double ds) {
  RayState st{y, u0.normalized()};
  double s = 0;
  while (s + ds < s_max) {
    st = rk4_step(c, st, ds);
    s += ds;
  }
  if (s_max - s > 1e-12) st = rk4_step(c, st, s_max - s);
  return st.pos;
}

}  // namespace

JacobianAmplitude jacobian_amplitude(const ScalarField& c, const TravelTimeField& field,
                                     const Vec3& x) {
  const Vec3 y = field.source;
  if (dist(x, y) < 1e-12)
    throw std::invalid_argument("jacobian_amplitude: x == y");
  const double h = c.grid.spacing;

  Ray ray = trace_ray(field, x);

  // Take-off direction from the near-source part of the ray (c is locally
  // constant there, so the polyline is straight).
  Vec3 u0{};
  for (const auto& p : ray.points)
    if (dist(p, y) >= 3.0 * h) {
      u0 = (p - y).normalized();
      break;
    }
  if (u0.norm() < 0.5) u0 = (x - y).normalized();

  // Right-handed frame (e1, e2, u0).
  Vec3 e1 = u0.cross(std::abs(u0.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0}).normalized();
  Vec3 e2 = u0.cross(e1);

  const double sigma = ray.length();
  const double delta = 1e-3;
  const double ds = 0.5 * h;

  Vec3 x0 = shoot_to(c, y, u0, sigma, ds);
  Vec3 xa = shoot_to(c, y, (u0 + e1 * delta).normalized(), sigma, ds);
  Vec3 xb = shoot_to(c, y, (u0 + e2 * delta).normalized(), sigma, ds);

  Vec3 dxa = (xa - x0) / delta;
  Vec3 dxb = (xb - x0) / delta;
  Vec3 v = ray.points.size() >= 2
               ? (ray.points.back() - ray.points[ray.points.size() - 2]).normalized()
               : u0;

  // Signed spreading: area per unit solid angle at the take-off point.
  double q = dxa.cross(dxb).dot(v);
  double tau_x = field.tau.interp(x);
  double ngx = std::sqrt(c.interp(x));
  double ngy = std::sqrt(c.interp(y));

  JacobianAmplitude ja;
  ja.jacobian = q > 0 ? tau_x * tau_x * ngx / q : (q == 0 ? 0.0 : -1.0);
  if (ja.jacobian <= 0)
    throw CausticError("jacobian_amplitude: non-positive geodesic Jacobian (caustic)");
  ja.amplitude = std::sqrt(ngy / (ngx * q)) / (4.0 * M_PI);
  return ja;
}

JacobianAmplitude jacobian_amplitude(const ScalarField& c, const Vec3& y, const Vec3& x) {
  return jacobian_amplitude(c, eikonal_solve(c, y), x);
}

RegularityReport check_regularity(const ScalarField& c, const Geometry& geometry) {
  RegularityReport rep;
  rep.sufficient_condition_min_eigenvalue = 1e300;
  rep.min_jacobian = 1e300;

  const GridSpec& g = c.grid;
  const double h = g.spacing;
  // Hessian of ln c by central differences over nodes of Omega-bar.
  for (int k = 1; k < g.dims[2] - 1; ++k)
    for (int j = 1; j < g.dims[1] - 1; ++j)
      for (int i = 1; i < g.dims[0] - 1; ++i) {
        if (!geometry.inside_omega(g.node(i, j, k))) continue;
        auto L = [&](int di, int dj, int dk) {
          return std::log(c.at(i + di, j + dj, k + dk));
        };
        Eigen::Matrix3d H;
        double l0 = L(0, 0, 0);
        H(0, 0) = (L(1, 0, 0) - 2 * l0 + L(-1, 0, 0)) / (h * h);
        H(1, 1) = (L(0, 1, 0) - 2 * l0 + L(0, -1, 0)) / (h * h);
        H(2, 2) = (L(0, 0, 1) - 2 * l0 + L(0, 0, -1)) / (h * h);
        H(0, 1) = H(1, 0) =
            (L(1, 1, 0) - L(1, -1, 0) - L(-1, 1, 0) + L(-1, -1, 0)) / (4 * h * h);
        H(0, 2) = H(2, 0) =
            (L(1, 0, 1) - L(1, 0, -1) - L(-1, 0, 1) + L(-1, 0, -1)) / (4 * h * h);
        H(1, 2) = H(2, 1) =
            (L(0, 1, 1) - L(0, 1, -1) - L(0, -1, 1) + L(0, -1, -1)) / (4 * h * h);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(H, Eigen::EigenvaluesOnly);
        rep.sufficient_condition_min_eigenvalue =
            std::min(rep.sufficient_condition_min_eigenvalue, es.eigenvalues()(0));
      }
  if (rep.sufficient_condition_min_eigenvalue == 1e300)
    rep.sufficient_condition_min_eigenvalue = 0;  // no Omega node sampled

  double max_s = 0;
  for (double v : c.values) max_s = std::max(max_s, std::sqrt(v));

  for (std::size_t si = 0; si < geometry.sources.size(); ++si) {
    TravelTimeField field = eikonal_solve(c, geometry.sources[si]);
    for (const auto& x : geometry.surface_receivers) {
      if (dist(x, geometry.sources[si]) < 4 * h) continue;
      ++rep.pairs_checked;
      try {
        Ray ray = trace_ray(field, x);
        double mismatch = std::abs(geodesic_travel_time(c, ray) - field.tau.interp(x));
        if (mismatch > 10.0 * h * max_s) {
          rep.multipath_detected = true;
          ++rep.pairs_failed;
          continue;
        }
        auto ja = jacobian_amplitude(c, field, x);
        rep.min_jacobian = std::min(rep.min_jacobian, ja.jacobian);
      } catch (const MultipathError&) {
        rep.multipath_detected = true;
        ++rep.pairs_failed;
      } catch (const CausticError&) {
        rep.multipath_detected = true;
        rep.min_jacobian = std::min(rep.min_jacobian, 0.0);
        ++rep.pairs_failed;
      }
    }
  }
  if (rep.min_jacobian == 1e300) rep.min_jacobian = 0;
  return rep;
}

}  // namespace phaselab
