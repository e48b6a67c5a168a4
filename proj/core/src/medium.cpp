#include "phaselab/medium.hpp"

#include <cmath>
#include <sstream>

namespace phaselab {

double mollifier_bump(double s) {
  double s2 = s * s;
  if (s2 >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s2));
}

PhantomKind phantom_kind_from_string(const std::string& s) {
  if (s == "gaussian_bump") return PhantomKind::gaussian_bump;
  if (s == "smooth_plateau") return PhantomKind::smooth_plateau;
  if (s == "two_bumps") return PhantomKind::two_bumps;
  throw std::invalid_argument("unknown phantom kind: " + s);
}

namespace {

struct Bump {
  Vec3 center;
  double amplitude;
  double width;
};

double plateau_profile(double s) {
  // Flat top out to s = 0.5, mollifier taper to zero at s = 1.
  if (s <= 0.5) return 1.0;
  if (s >= 1.0) return 0.0;
  return mollifier_bump((s - 0.5) / 0.5);
}

}  // namespace

ScalarField make_phantom(PhantomKind kind, double amplitude, double width,
                         const Geometry& geometry, const GridSpec& grid) {
  if (amplitude < 0) throw std::invalid_argument("make_phantom: amplitude must be >= 0");
  if (!(width > 0)) throw std::invalid_argument("make_phantom: width must be > 0");

  std::vector<Bump> bumps;
  switch (kind) {
    case PhantomKind::gaussian_bump:
    case PhantomKind::smooth_plateau:
      bumps.push_back({geometry.omega_center, amplitude, width});
      break;
    case PhantomKind::two_bumps: {
      Vec3 off{geometry.omega_radius - width, 0, 0};
      bumps.push_back({geometry.omega_center - off * 0.55, amplitude, width});
      bumps.push_back({geometry.omega_center + off * 0.55, amplitude, width});
      break;
    }
  }

  double clearance = 2.0 * grid.spacing;
  for (const auto& b : bumps) {
    double reach = (b.center - geometry.omega_center).norm() + b.width;
    if (reach > geometry.omega_radius - clearance) {
      std::ostringstream msg;
      msg << "make_phantom: bump support overflows Omega: support reach " << reach
          << " vs allowed " << geometry.omega_radius - clearance
          << " (omega_radius " << geometry.omega_radius << ", clearance "
          << clearance << ")";
      throw std::invalid_argument(msg.str());
    }
  }

  ScalarField c(grid, 1.0);
  for (int k = 0; k < grid.dims[2]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[0]; ++i) {
        Vec3 p = grid.node(i, j, k);
        double beta = 0;
        for (const auto& b : bumps) {
          double s = dist(p, b.center) / b.width;
          beta += b.amplitude * (kind == PhantomKind::smooth_plateau
                                     ? plateau_profile(s)
                                     : mollifier_bump(s));
        }
        c.at(i, j, k) = 1.0 + beta;
      }
  return c;
}

AdmissibilityReport check_admissible(const ScalarField& c, const Geometry& geometry) {
  AdmissibilityReport r;
  r.min_c = 1e300;
  r.max_c = -1e300;
  const auto& g = c.grid;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        double v = c.at(i, j, k);
        r.min_c = std::min(r.min_c, v);
        r.max_c = std::max(r.max_c, v);
        if (!geometry.inside_omega(g.node(i, j, k)))
          r.max_dev_outside_omega = std::max(r.max_dev_outside_omega, std::abs(v - 1.0));
      }
  r.pass = r.min_c >= 1.0 - 1e-12 && r.max_dev_outside_omega <= 1e-12;
  return r;
}

}  // namespace phaselab
