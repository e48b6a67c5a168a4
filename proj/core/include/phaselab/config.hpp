#pragma once

#include <cstdint>
#include <string>

#include "phaselab/geometry.hpp"
#include "phaselab/tomography.hpp"

namespace phaselab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat dotted-key experiment configuration ("section.key = value" lines,
/// '#' comments, unknown keys rejected).
struct RunConfig {
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int workers = 1;

  std::string phantom_kind = "gaussian_bump";  // or smooth_plateau, two_bumps, none
  double phantom_amplitude = 0.05;
  double phantom_width = 0.3;

  int grid_n = 48;
  double grid_half_width = 1.2;

  double omega_radius = 0.5;
  double s_radius = 1.0;
  double near_radius = 0.45;
  int n_sources = 12;
  int n_near = 4;
  int n_surface = 24;

  double band_k_min = 5.0;
  double band_k_max = 12.0;
  int band_n_k = 96;

  std::string forward_mode = "geometric_optics";  // or fdtd
  double fdtd_t_window = 4.0;

  std::string continuation_mode = "oracle_surface";  // or near_ball_only

  int retrieval_max_zeros = 0;
  double retrieval_noise_level = 0.0;

  TomoConfig tomo;

  bool debug_flip_hilbert = false;
  bool debug_paper_fourier_constant = false;

  static RunConfig from_file(const std::string& path);
  void apply(const std::string& key, const std::string& value);
  void validate() const;

  /// Sorted key=value dump; hashed into the manifests and written alongside
  /// the outputs for reproducibility.
  std::string canonical() const;

  GridSpec make_grid() const;
  Band make_band() const;
  Geometry make_geometry() const;
};

std::uint64_t fnv1a64(const void* data, std::size_t n_bytes);
std::uint64_t hash_file(const std::string& path);

}  // namespace phaselab
