#pragma once

#include <optional>
#include <vector>

#include "phaselab/geometry.hpp"

namespace phaselab {

/// First-arrival travel time tau(., y) of |grad tau| = sqrt(c).
struct TravelTimeField {
  Vec3 source{};
  ScalarField tau;
  /// Accepted values in heap order, populated when requested; used by the
  /// monotone-causality property test.
  std::vector<double> acceptance_order;
};

struct EikonalOptions {
  /// Nodes within this radius of the source get the locally exact value
  /// sqrt(c(y))*|x-y|. Defaults to 4h when <= 0. Keep it fixed across grid
  /// refinements when measuring convergence order.
  double init_radius = 0.0;
  bool record_acceptance_order = false;
};

TravelTimeField eikonal_solve(const ScalarField& c, const Vec3& y,
                              const EikonalOptions& opts = {});

/// Polyline geodesic from y to x with per-segment Euclidean lengths.
struct Ray {
  std::vector<Vec3> points;              // ordered y -> x
  std::vector<double> euclidean_lengths; // per segment, size points.size()-1
  std::vector<double> jacobian_samples;  // filled by jacobian_amplitude when asked

  double length() const {
    double s = 0;
    for (double l : euclidean_lengths) s += l;
    return s;
  }
};

class MultipathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class CausticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Steepest-descent characteristic of tau from x back to the source.
/// Throws MultipathError if the descent stagnates away from the source.
Ray trace_ray(const TravelTimeField& tau, const Vec3& x);

/// Trapezoid quadrature of sqrt(c) against Euclidean arc length along the ray.
double geodesic_travel_time(const ScalarField& c, const Ray& ray);

struct JacobianAmplitude {
  double jacobian = 0;  // det of geodesic coordinates, 1 in free space
  double amplitude = 0; // leading geometric-optics amplitude
};

/// Geodesic Jacobian by a finite-difference fan of shot rays (take-off
/// perturbation 1e-3 rad) and the transport amplitude assembled from it.
/// Throws CausticError when J <= 0.
JacobianAmplitude jacobian_amplitude(const ScalarField& c, const TravelTimeField& tau,
                                     const Vec3& x);
JacobianAmplitude jacobian_amplitude(const ScalarField& c, const Vec3& y, const Vec3& x);

struct RegularityReport {
  double sufficient_condition_min_eigenvalue = 0;  // min eig of Hess(ln c) on Omega
  double min_jacobian = 0;
  bool multipath_detected = false;
  int pairs_checked = 0;
  int pairs_failed = 0;
};

/// Hessian-of-ln-c sufficient condition scan plus ray diagnostics over the
/// configured source/surface-receiver pairs. A negative Hessian eigenvalue
/// alone does not set multipath_detected; ray stagnation, travel-time
/// mismatch, or J <= 0 does.
RegularityReport check_regularity(const ScalarField& c, const Geometry& geometry);

}  // namespace phaselab
