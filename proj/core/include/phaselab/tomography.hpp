#pragma once

#include <vector>

#include "phaselab/arrivals.hpp"
#include "phaselab/eikonal.hpp"

namespace phaselab {

struct TomoConfig {
  double lambda = 3e-3;           // Tikhonov weight on the smoothing operator
  int max_gauss_newton_iters = 8;
  double misfit_tol = 1e-8;       // RMS seconds
  double smoothing_width = 1.0;   // update smoothing, in cells

  void validate() const {
    if (!(lambda > 0)) throw std::invalid_argument("TomoConfig: lambda must be > 0");
    if (max_gauss_newton_iters < 1)
      throw std::invalid_argument("TomoConfig: need at least one iteration");
  }
};

struct TomoResult {
  ScalarField c_rec;
  std::vector<double> misfit_history;  // RMS residual before each update
  double relative_model_error = -1;    // filled by callers holding the truth
};

class RegularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, TomoResult partial_result)
      : std::runtime_error(what), partial(std::move(partial_result)) {}
  TomoResult partial;
};

/// Eikonal travel times for every source x surface-receiver pair; the data
/// oracle and the misfit engine of the inversion.
TravelTimeTable forward_times(const ScalarField& c, const Geometry& geometry);

/// One Fermat linearization of the travel-time map around slowness-index
/// field m = sqrt(c): rows are ray quadratures of delta-m restricted to the
/// nodes inside Omega. Exposed for the adjoint and first-order property tests.
struct TomoOperator {
  int n_unknowns = 0;
  std::vector<int> unknown_of_node;  // -1 outside Omega
  struct Triplet {
    int row, col;
    double w;
  };
  std::vector<Triplet> triplets;
  std::vector<double> residuals;  // observed - predicted, per retained row
  std::vector<std::pair<int, int>> row_pair;  // (src_id, rcv_id) per row
  int n_failures = 0;
  int n_pairs = 0;
};

TomoOperator linearize(const ScalarField& m, const Geometry& geometry,
                       const std::vector<TravelTimeEntry>& data);

/// Gauss-Newton on m = sqrt(c) with m = 1 pinned outside Omega, Laplacian
/// Tikhonov smoothing, step halving, and projection m >= 1.
TomoResult invert_travel_times(const TravelTimeTable& table, const Geometry& geometry,
                               const GridSpec& grid, const TomoConfig& cfg);

}  // namespace phaselab
