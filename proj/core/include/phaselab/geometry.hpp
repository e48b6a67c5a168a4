#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace phaselab {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  double& operator[](int i) { return (&x)[i]; }
  double operator[](int i) const { return (&x)[i]; }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const { return *this / norm(); }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dist(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

/// Regular Cartesian grid: dims nodes per axis, uniform spacing, origin at
/// node (0,0,0). Values are stored row-major, x fastest.
struct GridSpec {
  std::array<int, 3> dims{};
  double spacing = 0;
  Vec3 origin{};

  GridSpec() = default;
  GridSpec(std::array<int, 3> d, double h, Vec3 o) : dims(d), spacing(h), origin(o) {
    for (int n : dims)
      if (n < 8) throw std::invalid_argument("GridSpec: dims must be >= 8 per axis");
    if (!(spacing > 0)) throw std::invalid_argument("GridSpec: spacing must be > 0");
  }

  /// Cube grid centered at the coordinate origin with half-width hw.
  static GridSpec centered_cube(int n, double hw) {
    double h = 2.0 * hw / (n - 1);
    return GridSpec({n, n, n}, h, {-hw, -hw, -hw});
  }

  std::size_t size() const {
    return std::size_t(dims[0]) * dims[1] * dims[2];
  }
  std::size_t index(int i, int j, int k) const {
    return std::size_t(i) + dims[0] * (std::size_t(j) + dims[1] * std::size_t(k));
  }
  Vec3 node(int i, int j, int k) const {
    return {origin.x + i * spacing, origin.y + j * spacing, origin.z + k * spacing};
  }
  Vec3 max_corner() const {
    return node(dims[0] - 1, dims[1] - 1, dims[2] - 1);
  }
  bool contains(const Vec3& p, double margin = 0.0) const {
    Vec3 hi = max_corner();
    return p.x >= origin.x + margin && p.x <= hi.x - margin &&
           p.y >= origin.y + margin && p.y <= hi.y - margin &&
           p.z >= origin.z + margin && p.z <= hi.z - margin;
  }
  bool operator==(const GridSpec& o) const {
    return dims == o.dims && spacing == o.spacing &&
           origin.x == o.origin.x && origin.y == o.origin.y && origin.z == o.origin.z;
  }
};

/// Real scalar field sampled on a GridSpec (c, beta, m = sqrt(c), tau, ...).
struct ScalarField {
  GridSpec grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g, double fill = 0.0)
      : grid(g), values(g.size(), fill) {}

  double& at(int i, int j, int k) { return values[grid.index(i, j, k)]; }
  double at(int i, int j, int k) const { return values[grid.index(i, j, k)]; }

  /// Trilinear interpolation; clamps to the grid box.
  double interp(const Vec3& p) const;

  /// Central-difference gradient at an interior point (trilinear between
  /// node gradients would need a precomputed field; this samples interp).
  Vec3 grad(const Vec3& p) const;
};

void save_pslb(const ScalarField& f, const std::string& path);
ScalarField load_pslb(const std::string& path);

/// Wavenumber band (a, b) with n_k samples.
struct Band {
  double k_min = 0, k_max = 0;
  int n_k = 0;

  Band() = default;
  Band(double a, double b, int n) : k_min(a), k_max(b), n_k(n) {
    if (!(0 < a && a < b)) throw std::invalid_argument("Band: need 0 < a < b");
    if (n < 16) throw std::invalid_argument("Band: n_k must be >= 16");
  }
  double width() const { return k_max - k_min; }
  std::vector<double> grid() const {
    std::vector<double> ks(n_k);
    for (int i = 0; i < n_k; ++i)
      ks[i] = k_min + width() * i / (n_k - 1);
    return ks;
  }
};

/// Ball model of the scatterer support Omega inside the measurement sphere
/// S = boundary of G. Sources live on S; each source has a set of near
/// receivers inside B_omega(y) and (optionally) receivers on S itself.
struct Geometry {
  Vec3 omega_center{};
  double omega_radius = 0;
  Vec3 s_center{};
  double s_radius = 0;
  double near_radius = 0;  // omega in the problem statement
  std::vector<Vec3> sources;
  std::vector<std::vector<Vec3>> near_receivers;   // per source, inside B_omega(y)
  std::vector<Vec3> surface_receivers;             // shared, on S

  Geometry() = default;
  Geometry(Vec3 oc, double orad, Vec3 sc, double srad, double nrad);

  void add_source(const Vec3& y, const std::vector<Vec3>& near);
  void set_surface_receivers(const std::vector<Vec3>& rcv);

  double dist_s_to_omega() const {
    return s_radius - ((omega_center - s_center).norm() + omega_radius);
  }
  bool inside_omega(const Vec3& p, double margin = 0.0) const {
    return (p - omega_center).norm() <= omega_radius - margin;
  }

  /// n_src sources spread on S (Fibonacci sphere), n_near receivers per
  /// source placed inward along the chord at radii in (0.5, 0.95)*omega,
  /// and n_surf shared receivers on S.
  static Geometry make_default(Vec3 center, double omega_radius, double s_radius,
                               double near_radius, int n_src, int n_near, int n_surf);
};

std::vector<Vec3> fibonacci_sphere(const Vec3& center, double radius, int n,
                                   double phase = 0.0);

}  // namespace phaselab
