#include <fftw3.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "phaselab/phase_retrieval.hpp"

namespace phaselab {

// H[e^{iws}](k) = -i sgn(w) e^{iwk}, so each DFT mode is multiplied by
// -i sgn(w_m); modes m < n/2 carry w > 0, modes m > n/2 carry w < 0.
std::vector<double> hilbert_fft(const std::vector<double>& g, bool flip) {
  const std::size_t n = g.size();
  if (n < 4) throw std::invalid_argument("hilbert_fft: need at least 4 samples");

  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = g[i];

  fftw_plan fwd = fftw_plan_dft_1d(static_cast<int>(n),
                                   reinterpret_cast<fftw_complex*>(buf.data()),
                                   reinterpret_cast<fftw_complex*>(buf.data()),
                                   FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);

  const cplx mul_pos = flip ? cplx(0, 1) : cplx(0, -1);
  buf[0] = 0.0;
  for (std::size_t m = 1; m < n; ++m) {
    if (2 * m < n)
      buf[m] *= mul_pos;
    else if (2 * m == n)
      buf[m] = 0.0;
    else
      buf[m] *= -mul_pos;
  }

  fftw_plan bwd = fftw_plan_dft_1d(static_cast<int>(n),
                                   reinterpret_cast<fftw_complex*>(buf.data()),
                                   reinterpret_cast<fftw_complex*>(buf.data()),
                                   FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(bwd);
  fftw_destroy_plan(bwd);

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real() / static_cast<double>(n);
  return out;
}

}  // namespace phaselab
