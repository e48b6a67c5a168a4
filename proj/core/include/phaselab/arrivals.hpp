#pragma once

#include <string>
#include <vector>

#include "phaselab/traces.hpp"

namespace phaselab {

struct TravelTimeEntry {
  int src_id = -1, rcv_id = -1;
  double tau_hat = 0;
  double amp_hat = 0;
  double quality = 0;
};

struct TravelTimeTable {
  std::vector<TravelTimeEntry> entries;
  std::vector<std::pair<int, int>> asymmetric_pairs;  // reciprocity mismatch > 2*dt_res
  double dt_resolution = 0;                           // pi / (b - a)
};

void write_table_csv(const std::string& path, const TravelTimeTable& table);
TravelTimeTable read_table_csv(const std::string& path);

/// Hann-windowed inverse transform of the band spectrum to a real band-limited
/// time trace; t_max = 0 picks the alias-safe default. The effective pulse
/// width is stored as an equivalent Gaussian sigma so pick_arrival can convert
/// peak heights back to delta-coefficient amplitudes.
TimeTrace to_time(const SpectralTrace& u, double t_max = 0);

class NoArrivalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Pick {
  double tau_hat = 0;
  double amp_hat = 0;
  double quality = 0;
};

/// Earliest local maximum of |v| after min_time exceeding 3x the robust noise
/// floor (1.4826 * median |v|), refined by quadratic interpolation.
Pick pick_arrival(const TimeTrace& trace, double min_time);

/// to_time + pick_arrival per pair, reciprocal pairs averaged. min_time per
/// pair is 0.5 * |x - y| (precursors are numerical; c >= 1 means tau >= |x-y|).
TravelTimeTable build_table(const std::vector<SpectralTrace>& spectra);

}  // namespace phaselab
