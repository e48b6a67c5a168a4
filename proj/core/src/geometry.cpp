#include "phaselab/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

namespace phaselab {

double ScalarField::interp(const Vec3& p) const {
  const auto& g = grid;
  double fx = (p.x - g.origin.x) / g.spacing;
  double fy = (p.y - g.origin.y) / g.spacing;
  double fz = (p.z - g.origin.z) / g.spacing;
  fx = std::clamp(fx, 0.0, double(g.dims[0] - 1));
  fy = std::clamp(fy, 0.0, double(g.dims[1] - 1));
  fz = std::clamp(fz, 0.0, double(g.dims[2] - 1));
  int i = std::min(int(fx), g.dims[0] - 2);
  int j = std::min(int(fy), g.dims[1] - 2);
  int k = std::min(int(fz), g.dims[2] - 2);
  double ax = fx - i, ay = fy - j, az = fz - k;
  auto v = [&](int di, int dj, int dk) { return at(i + di, j + dj, k + dk); };
  double c00 = v(0, 0, 0) * (1 - ax) + v(1, 0, 0) * ax;
  double c10 = v(0, 1, 0) * (1 - ax) + v(1, 1, 0) * ax;
  double c01 = v(0, 0, 1) * (1 - ax) + v(1, 0, 1) * ax;
  double c11 = v(0, 1, 1) * (1 - ax) + v(1, 1, 1) * ax;
  double c0 = c00 * (1 - ay) + c10 * ay;
  double c1 = c01 * (1 - ay) + c11 * ay;
  return c0 * (1 - az) + c1 * az;
}

Vec3 ScalarField::grad(const Vec3& p) const {
  double h = grid.spacing * 0.5;
  return {(interp({p.x + h, p.y, p.z}) - interp({p.x - h, p.y, p.z})) / (2 * h),
          (interp({p.x, p.y + h, p.z}) - interp({p.x, p.y - h, p.z})) / (2 * h),
          (interp({p.x, p.y, p.z + h}) - interp({p.x, p.y, p.z - h})) / (2 * h)};
}

namespace {

template <typename T>
void write_le(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

}  // namespace

void save_pslb(const ScalarField& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_pslb: cannot open " + path);
  os.write("PSLB", 4);
  write_le<std::uint32_t>(os, 1);
  for (int d : f.grid.dims) write_le<std::uint32_t>(os, std::uint32_t(d));
  write_le<double>(os, f.grid.spacing);
  for (int i = 0; i < 3; ++i) write_le<double>(os, f.grid.origin[i]);
  for (double v : f.values) write_le<double>(os, v);
  if (!os) throw std::runtime_error("save_pslb: write failed for " + path);
}

ScalarField load_pslb(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_pslb: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::strncmp(magic, "PSLB", 4) != 0)
    throw std::runtime_error("load_pslb: bad magic in " + path);
  auto version = read_le<std::uint32_t>(is);
  if (version != 1) throw std::runtime_error("load_pslb: unsupported version");
  std::array<int, 3> dims;
  for (int& d : dims) d = int(read_le<std::uint32_t>(is));
  double spacing = read_le<double>(is);
  Vec3 origin;
  for (int i = 0; i < 3; ++i) origin[i] = read_le<double>(is);
  ScalarField f(GridSpec(dims, spacing, origin));
  for (double& v : f.values) v = read_le<double>(is);
  if (!is) throw std::runtime_error("load_pslb: truncated file " + path);
  return f;
}

Geometry::Geometry(Vec3 oc, double orad, Vec3 sc, double srad, double nrad)
    : omega_center(oc), omega_radius(orad), s_center(sc), s_radius(srad),
      near_radius(nrad) {
  if (!(orad > 0 && srad > orad))
    throw std::invalid_argument("Geometry: need 0 < omega_radius < s_radius");
  if (dist_s_to_omega() <= 0)
    throw std::invalid_argument("Geometry: S intersects closure of Omega");
  if (!(nrad > 0 && nrad < dist_s_to_omega()))
    throw std::invalid_argument("Geometry: near_radius must lie in (0, dist(S, dOmega))");
}

void Geometry::add_source(const Vec3& y, const std::vector<Vec3>& near) {
  if (std::abs((y - s_center).norm() - s_radius) > 1e-9 * s_radius)
    throw std::invalid_argument("Geometry: source must lie on S");
  for (const auto& x : near) {
    double d = dist(x, y);
    if (!(d > 0 && d < near_radius))
      throw std::invalid_argument("Geometry: near receiver must satisfy 0 < |x-y| < omega");
  }
  sources.push_back(y);
  near_receivers.push_back(near);
}

void Geometry::set_surface_receivers(const std::vector<Vec3>& rcv) {
  for (const auto& x : rcv)
    if (std::abs((x - s_center).norm() - s_radius) > 1e-9 * s_radius)
      throw std::invalid_argument("Geometry: surface receiver must lie on S");
  surface_receivers = rcv;
}

std::vector<Vec3> fibonacci_sphere(const Vec3& center, double radius, int n,
                                   double phase) {
  std::vector<Vec3> pts;
  pts.reserve(n);
  const double ga = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    double z = 1.0 - 2.0 * (i + 0.5) / n;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double phi = ga * i + phase;
    pts.push_back(center + radius * Vec3{r * std::cos(phi), r * std::sin(phi), z});
  }
  return pts;
}

Geometry Geometry::make_default(Vec3 center, double omega_radius, double s_radius,
                                double near_radius, int n_src, int n_near,
                                int n_surf) {
  if (n_src > n_surf)
    throw std::invalid_argument("make_default: n_src must be <= n_surf");
  Geometry g(center, omega_radius, center, s_radius, near_radius);
  // sources are the first n_src surface receivers, so that src_id s and
  // surface rcv_id s name the same point and tau(x,y) = tau(y,x) holds per id
  auto surf = fibonacci_sphere(center, s_radius, n_surf);
  std::vector<Vec3> srcs(surf.begin(), surf.begin() + n_src);
  for (const auto& y : srcs) {
    // Near receivers along the inward radial chord, staggered off-axis a bit
    // so they do not all share one line.
    Vec3 inward = (center - y).normalized();
    Vec3 ortho = inward.cross(std::abs(inward.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0})
                     .normalized();
    std::vector<Vec3> near;
    for (int j = 0; j < n_near; ++j) {
      double t = (0.55 + 0.4 * j / std::max(1, n_near - 1)) * near_radius;
      Vec3 x = y + inward * t + ortho * (0.08 * near_radius * (j % 2 ? 1 : -1));
      if (dist(x, y) >= near_radius) x = y + inward * t;
      near.push_back(x);
    }
    g.add_source(y, near);
  }
  g.set_surface_receivers(surf);
  return g;
}

}  // namespace phaselab
