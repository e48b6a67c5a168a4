#include <doctest.h>

#include <cmath>
#include <random>

#include "phaselab/eikonal.hpp"
#include "phaselab/medium.hpp"

using namespace phaselab;

namespace {

GridSpec grid32() { return GridSpec::centered_cube(32, 1.2); }

Geometry geo_small() { return Geometry::make_default({}, 0.5, 1.0, 0.45, 4, 2, 8); }

double max_tau_err_const(double cval, int n) {
  GridSpec g = GridSpec::centered_cube(n, 1.2);
  ScalarField c(g, cval);
  Vec3 y{0, 0, -1.0};
  EikonalOptions eo;
  eo.init_radius = 4 * GridSpec::centered_cube(32, 1.2).spacing;  // fixed across refinements
  auto f = eikonal_solve(c, y, eo);
  double worst = 0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        double want = std::sqrt(cval) * dist(g.node(i, j, k), y);
        worst = std::max(worst, std::abs(f.tau.at(i, j, k) - want));
      }
  return worst;
}

// Independent characteristics oracle: RK4 on dx/ds = p/n, dp/ds = grad n,
// dtau/ds = n with n = sqrt(c), shot from the source.
struct RayShot {
  Vec3 x;
  double tau;
};

RayShot shoot_ray(const ScalarField& c, const Vec3& y, const Vec3& dir, double s_end) {
  auto n_of = [&](const Vec3& p) { return std::sqrt(c.interp(p)); };
  auto gn_of = [&](const Vec3& p) {
    Vec3 gc = c.grad(p);
    return gc / (2.0 * n_of(p));
  };
  Vec3 x = y;
  Vec3 p = dir.normalized() * n_of(y);
  double tau = 0;
  const double ds = 0.25 * c.grid.spacing;
  struct State { Vec3 x, p; double tau; };
  auto deriv = [&](const State& s) {
    State d;
    d.x = s.p / n_of(s.x);
    d.p = gn_of(s.x);
    d.tau = n_of(s.x);
    return d;
  };
  State s{x, p, tau};
  for (double t = 0; t < s_end; t += ds) {
    auto k1 = deriv(s);
    State s2{s.x + 0.5 * ds * k1.x, s.p + 0.5 * ds * k1.p, 0};
    auto k2 = deriv(s2);
    State s3{s.x + 0.5 * ds * k2.x, s.p + 0.5 * ds * k2.p, 0};
    auto k3 = deriv(s3);
    State s4{s.x + ds * k3.x, s.p + ds * k3.p, 0};
    auto k4 = deriv(s4);
    s.x += (ds / 6) * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
    s.p += (ds / 6) * (k1.p + 2 * k2.p + 2 * k3.p + k4.p);
    s.tau += (ds / 6) * (k1.tau + 2 * k2.tau + 2 * k3.tau + k4.tau);
  }
  return {s.x, s.tau};
}

}  // namespace

TEST_CASE("free space: tau = |x-y| within O(h)") {
  GridSpec g = grid32();
  CHECK(max_tau_err_const(1.0, 32) < 2 * g.spacing);
}

TEST_CASE("c = 4: tau = 2|x-y| within O(h)") {
  GridSpec g = grid32();
  CHECK(max_tau_err_const(4.0, 32) < 2 * 2 * g.spacing);
}

TEST_CASE("monotone causality: accepted values are non-decreasing") {
  GridSpec g = grid32();
  auto geo = geo_small();
  auto c = make_phantom(PhantomKind::gaussian_bump, 0.1, 0.3, geo, g);
  EikonalOptions eo;
  eo.record_acceptance_order = true;
  auto f = eikonal_solve(c, {0, 0, -1.0}, eo);
  REQUIRE(!f.acceptance_order.empty());
  for (std::size_t i = 1; i < f.acceptance_order.size(); ++i)
    CHECK(f.acceptance_order[i] >= f.acceptance_order[i - 1] - 1e-12);
}

TEST_CASE("radial bump: fast marching matches the ray-shooting ODE oracle") {
  GridSpec g = grid32();
  auto geo = geo_small();
  auto c = make_phantom(PhantomKind::gaussian_bump, 0.1, 0.3, geo, g);
  Vec3 y{0, 0, -1.0};
  EikonalOptions eo;
  eo.init_radius = (y - geo.omega_center).norm() - geo.omega_radius - 2 * g.spacing;
  auto f = eikonal_solve(c, y, eo);
  double max_sqc = 0;
  for (double v : c.values) max_sqc = std::max(max_sqc, std::sqrt(v));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.35, 0.35);
  int checked = 0;
  for (int t = 0; t < 40 && checked < 20; ++t) {
    // aim into and past Omega so the ray crosses the heterogeneity
    Vec3 target{u(rng), u(rng), u(rng)};
    Vec3 dir = (target - y).normalized();
    auto shot = shoot_ray(c, y, dir, 1.35);
    if (!g.contains(shot.x, 2 * g.spacing)) continue;
    ++checked;
    CHECK(std::abs(f.tau.interp(shot.x) - shot.tau) < 3 * g.spacing * max_sqc);
  }
  CHECK(checked == 20);
}

TEST_CASE("trace_ray: straight segment in constant media") {
  GridSpec g = grid32();
  Vec3 y{0, 0, -1.0}, x{0.3, 0.2, 0.7};
  for (double cv : {1.0, 4.0}) {
    ScalarField c(g, cv);
    auto f = eikonal_solve(c, y);
    Ray r = trace_ray(f, x);
    REQUIRE(r.points.size() >= 2);
    CHECK(dist(r.points.front(), y) < g.spacing);
    CHECK(dist(r.points.back(), x) < g.spacing);
    CHECK(r.length() == doctest::Approx(dist(x, y)).epsilon(0.02));
    // all polyline points near the straight chord
    Vec3 d = (x - y).normalized();
    for (const auto& p : r.points) {
      Vec3 off = (p - y) - d * (p - y).dot(d);
      CHECK(off.norm() < 2 * g.spacing);
    }
  }
}

TEST_CASE("geodesic_travel_time closed forms and consistency") {
  GridSpec g = grid32();
  Ray straight;
  straight.points = {{0, 0, 0}, {0.3, 0, 0}};
  straight.euclidean_lengths = {0.3};
  CHECK(geodesic_travel_time(ScalarField(g, 1.0), straight) == doctest::Approx(0.3));
  CHECK(geodesic_travel_time(ScalarField(g, 4.0), straight) == doctest::Approx(0.6));

  auto geo = geo_small();
  auto c = make_phantom(PhantomKind::gaussian_bump, 0.1, 0.3, geo, g);
  double max_sqc = 0;
  for (double v : c.values) max_sqc = std::max(max_sqc, std::sqrt(v));
  Vec3 y{0, 0, -1.0};
  EikonalOptions eo;
  eo.init_radius = (y - geo.omega_center).norm() - geo.omega_radius - 2 * g.spacing;
  auto f = eikonal_solve(c, y, eo);
  for (Vec3 x : {Vec3{0, 0, 1.0}, Vec3{0.3, -0.2, 0.8}, Vec3{-0.5, 0.4, 0.6}}) {
    Ray r = trace_ray(f, x);
    CHECK(std::abs(geodesic_travel_time(c, r) - f.tau.interp(x)) <
          5 * g.spacing * max_sqc);
  }
}

TEST_CASE("jacobian_amplitude free-space calibration") {
  GridSpec g = GridSpec::centered_cube(32, 1.4);
  ScalarField c(g, 1.0);
  Vec3 y{0, 0, -1.2};
  auto f = eikonal_solve(c, y);

  auto ja1 = jacobian_amplitude(c, f, {0, 0, -0.2});  // |x-y| = 1
  CHECK(ja1.jacobian == doctest::Approx(1.0).epsilon(0.05));
  CHECK(ja1.amplitude == doctest::Approx(1.0 / (4 * M_PI)).epsilon(0.05));

  auto ja2 = jacobian_amplitude(c, f, {0, 0, 0.8});  // |x-y| = 2
  CHECK(ja2.amplitude == doctest::Approx(1.0 / (8 * M_PI)).epsilon(0.05));
}

TEST_CASE("check_regularity examples") {
  GridSpec g = grid32();
  auto geo = geo_small();

  auto r1 = check_regularity(ScalarField(g, 1.0), geo);
  CHECK(r1.sufficient_condition_min_eigenvalue == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(!r1.multipath_detected);
  CHECK(r1.min_jacobian == doctest::Approx(1.0).epsilon(0.1));

  auto weak = make_phantom(PhantomKind::gaussian_bump, 0.05, 0.3, geo, g);
  auto r2 = check_regularity(weak, geo);
  // interior max of ln c forces a negative Hessian eigenvalue, but the
  // sufficient condition is only sufficient: no multipath for a weak bump
  CHECK(r2.sufficient_condition_min_eigenvalue < 0);
  CHECK(!r2.multipath_detected);

  auto strong = make_phantom(PhantomKind::gaussian_bump, 2.0, 0.18, geo, g);
  auto r3 = check_regularity(strong, geo);
  CHECK(r3.multipath_detected);
}
