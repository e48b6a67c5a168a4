#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "phaselab/config.hpp"

namespace phaselab {

std::uint64_t fnv1a64(const void* data, std::size_t n_bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t i = 0; i < n_bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::uint64_t h = 14695981039346656037ULL;
  char buf[1 << 16];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!is) break;
  }
  return h;
}

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for " + key + ": '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value for " + key + ": '" + v + "'");
  }
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  const auto b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

}  // namespace

void RunConfig::apply(const std::string& key, const std::string& value) {
  if (key == "run.out_dir") out_dir = value;
  else if (key == "run.seed") seed = static_cast<std::uint64_t>(to_int(key, value));
  else if (key == "run.workers") workers = static_cast<int>(to_int(key, value));
  else if (key == "phantom.kind") phantom_kind = value;
  else if (key == "phantom.amplitude") phantom_amplitude = to_double(key, value);
  else if (key == "phantom.width") phantom_width = to_double(key, value);
  else if (key == "grid.n") grid_n = static_cast<int>(to_int(key, value));
  else if (key == "grid.half_width") grid_half_width = to_double(key, value);
  else if (key == "geometry.omega_radius") omega_radius = to_double(key, value);
  else if (key == "geometry.s_radius") s_radius = to_double(key, value);
  else if (key == "geometry.near_radius") near_radius = to_double(key, value);
  else if (key == "geometry.n_sources") n_sources = static_cast<int>(to_int(key, value));
  else if (key == "geometry.n_near") n_near = static_cast<int>(to_int(key, value));
  else if (key == "geometry.n_surface") n_surface = static_cast<int>(to_int(key, value));
  else if (key == "band.k_min") band_k_min = to_double(key, value);
  else if (key == "band.k_max") band_k_max = to_double(key, value);
  else if (key == "band.n_k") band_n_k = static_cast<int>(to_int(key, value));
  else if (key == "forward.mode") forward_mode = value;
  else if (key == "forward.t_window") fdtd_t_window = to_double(key, value);
  else if (key == "continuation.mode") continuation_mode = value;
  else if (key == "retrieval.max_zeros")
    retrieval_max_zeros = static_cast<int>(to_int(key, value));
  else if (key == "retrieval.noise_level") retrieval_noise_level = to_double(key, value);
  else if (key == "tomo.lambda") tomo.lambda = to_double(key, value);
  else if (key == "tomo.max_iters")
    tomo.max_gauss_newton_iters = static_cast<int>(to_int(key, value));
  else if (key == "tomo.misfit_tol") tomo.misfit_tol = to_double(key, value);
  else if (key == "tomo.smoothing_width") tomo.smoothing_width = to_double(key, value);
  else
    throw ConfigError("config: unknown key '" + key + "'");
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) + " is not key = value");
    cfg.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  if (phantom_kind != "none" && phantom_kind != "gaussian_bump" &&
      phantom_kind != "smooth_plateau" && phantom_kind != "two_bumps")
    throw ConfigError("config: unknown phantom.kind '" + phantom_kind + "'");
  if (forward_mode != "fdtd" && forward_mode != "geometric_optics")
    throw ConfigError("config: unknown forward.mode '" + forward_mode + "'");
  if (continuation_mode != "near_ball_only" && continuation_mode != "oracle_surface")
    throw ConfigError("config: unknown continuation.mode '" + continuation_mode + "'");
  if (grid_n < 8) throw ConfigError("config: grid.n must be >= 8");
  if (!(grid_half_width > 0)) throw ConfigError("config: grid.half_width must be > 0");
  if (!(s_radius < grid_half_width))
    throw ConfigError("config: geometry.s_radius must fit inside the grid");
  if (!(0 < band_k_min && band_k_min < band_k_max))
    throw ConfigError("config: need 0 < band.k_min < band.k_max");
  if (band_n_k < 16) throw ConfigError("config: band.n_k must be >= 16");
  if (retrieval_max_zeros < 0 || retrieval_max_zeros > 4)
    throw ConfigError("config: retrieval.max_zeros must be in [0, 4]");
  if (retrieval_noise_level < 0) throw ConfigError("config: negative noise level");
  if (workers < 1) throw ConfigError("config: run.workers must be >= 1");
  try {
    tomo.validate();
    (void)make_geometry();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

std::string RunConfig::canonical() const {
  std::map<std::string, std::string> kv;
  std::ostringstream tmp;
  tmp.precision(17);
  auto put = [&](const std::string& k, auto v) {
    tmp.str("");
    tmp << v;
    kv[k] = tmp.str();
  };
  put("run.seed", seed);
  put("phantom.kind", phantom_kind);
  put("phantom.amplitude", phantom_amplitude);
  put("phantom.width", phantom_width);
  put("grid.n", grid_n);
  put("grid.half_width", grid_half_width);
  put("geometry.omega_radius", omega_radius);
  put("geometry.s_radius", s_radius);
  put("geometry.near_radius", near_radius);
  put("geometry.n_sources", n_sources);
  put("geometry.n_near", n_near);
  put("geometry.n_surface", n_surface);
  put("band.k_min", band_k_min);
  put("band.k_max", band_k_max);
  put("band.n_k", band_n_k);
  put("forward.mode", forward_mode);
  put("forward.t_window", fdtd_t_window);
  put("continuation.mode", continuation_mode);
  put("retrieval.max_zeros", retrieval_max_zeros);
  put("retrieval.noise_level", retrieval_noise_level);
  put("tomo.lambda", tomo.lambda);
  put("tomo.max_iters", tomo.max_gauss_newton_iters);
  put("tomo.misfit_tol", tomo.misfit_tol);
  put("tomo.smoothing_width", tomo.smoothing_width);
  put("debug.flip_hilbert", debug_flip_hilbert ? 1 : 0);
  put("debug.paper_fourier_constant", debug_paper_fourier_constant ? 1 : 0);
  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << " = " << v << '\n';
  return os.str();
}

GridSpec RunConfig::make_grid() const { return GridSpec::centered_cube(grid_n, grid_half_width); }

Band RunConfig::make_band() const { return Band(band_k_min, band_k_max, band_n_k); }

Geometry RunConfig::make_geometry() const {
  return Geometry::make_default({0, 0, 0}, omega_radius, s_radius, near_radius, n_sources,
                                n_near, n_surface);
}

}  // namespace phaselab
