#pragma once

#include <string>

#include "phaselab/geometry.hpp"

namespace phaselab {

enum class PhantomKind { gaussian_bump, smooth_plateau, two_bumps };

PhantomKind phantom_kind_from_string(const std::string& s);

/// c = 1 + beta, beta >= 0, compactly supported mollifier-tapered bump(s)
/// inside Omega. `width` is the support radius of each bump. Throws if the
/// support does not fit in Omega with >= 2h clearance.
ScalarField make_phantom(PhantomKind kind, double amplitude, double width,
                         const Geometry& geometry, const GridSpec& grid);

struct AdmissibilityReport {
  double min_c = 0;
  double max_c = 0;
  double max_dev_outside_omega = 0;  // max |c-1| outside Omega
  bool pass = false;
};

AdmissibilityReport check_admissible(const ScalarField& c, const Geometry& geometry);

/// exp(1 - 1/(1 - s^2)) for |s| < 1, zero otherwise; peak value 1 at s = 0.
double mollifier_bump(double s);

}  // namespace phaselab
