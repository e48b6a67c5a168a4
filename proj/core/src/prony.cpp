#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "phaselab/phase_retrieval.hpp"

namespace phaselab {

cplx ExpPolySum::evaluate(double t) const {
  cplx acc(0, 0);
  for (const Term& term : terms)
    acc += term.coefficient * std::pow(t, term.power) *
           std::exp(cplx(0, -1) * std::conj(term.frequency) * t);
  return acc;
}

std::vector<cplx> ExpPolySum::sample(double dt, int n) const {
  std::vector<cplx> out(n);
  for (int i = 0; i < n; ++i) out[i] = evaluate(i * dt);
  return out;
}

void ExpPolySum::canonicalize() {
  // merge coincident (frequency, power) terms, drop negligible coefficients
  std::vector<Term> merged;
  for (const Term& t : terms) {
    bool found = false;
    for (Term& m : merged)
      if (m.power == t.power && std::abs(m.frequency - t.frequency) < 1e-12) {
        m.coefficient += t.coefficient;
        found = true;
        break;
      }
    if (!found) merged.push_back(t);
  }
  double scale = 0;
  for (const Term& t : merged) scale = std::max(scale, std::abs(t.coefficient));
  terms.clear();
  for (const Term& t : merged)
    if (std::abs(t.coefficient) > 1e-12 * scale) terms.push_back(t);
  std::sort(terms.begin(), terms.end(), [](const Term& x, const Term& y) {
    return std::make_tuple(x.frequency.imag(), x.frequency.real(), x.power) <
           std::make_tuple(y.frequency.imag(), y.frequency.real(), y.power);
  });
}

void write_exppolysum_csv(const std::string& path, const ExpPolySum& s) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "coef_re,coef_im,power,freq_re,freq_im\n" << std::setprecision(17);
  for (const auto& t : s.terms)
    os << t.coefficient.real() << ',' << t.coefficient.imag() << ',' << t.power << ','
       << t.frequency.real() << ',' << t.frequency.imag() << '\n';
}

ExpPolySum read_exppolysum_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != "coef_re,coef_im,power,freq_re,freq_im")
    throw std::runtime_error("unexpected exppolysum header in " + path);
  ExpPolySum s;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string c[5];
    for (auto& x : c) std::getline(ss, x, ',');
    s.terms.push_back({cplx(std::stod(c[0]), std::stod(c[1])), std::stoi(c[2]),
                       cplx(std::stod(c[3]), std::stod(c[4]))});
  }
  return s;
}

namespace {

struct Cluster {
  cplx pole;  // z-plane
  int mult = 0;
};

std::vector<Cluster> cluster_poles(std::vector<cplx> poles, double radius) {
  std::vector<Cluster> out;
  std::vector<bool> used(poles.size(), false);
  for (std::size_t i = 0; i < poles.size(); ++i) {
    if (used[i]) continue;
    cplx sum = poles[i];
    int cnt = 1;
    used[i] = true;
    for (std::size_t j = i + 1; j < poles.size(); ++j)
      if (!used[j] && std::abs(poles[j] - poles[i]) < radius) {
        sum += poles[j];
        ++cnt;
        used[j] = true;
      }
    out.push_back({sum / double(cnt), cnt});
  }
  return out;
}

}  // namespace

ExpPolySum prony_match(const std::vector<cplx>& samples, double dt, int max_terms) {
  using MatC = Eigen::MatrixXcd;
  using VecC = Eigen::VectorXcd;

  const int n = static_cast<int>(samples.size());
  if (max_terms < 0 || max_terms > 16)
    throw std::invalid_argument("prony_match: max_terms out of range");
  if (dt <= 0) throw std::invalid_argument("prony_match: dt <= 0");

  double energy = 0;
  for (const cplx& x : samples) energy += std::norm(x);
  ExpPolySum best_sum;
  if (energy < 1e-280 || max_terms == 0) return best_sum;
  if (n < 4 * std::max(1, max_terms))
    throw std::invalid_argument("prony_match: too few samples for the requested order");
  const double amp_scale = std::sqrt(energy / n);

  // matrix pencil: Hankel Y0/Y1 with pencil parameter L ~ n/3
  const int L = std::clamp(n / 3, max_terms + 1, n - max_terms - 1);
  const int rows = n - L;
  MatC y0(rows, L), y1(rows, L);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < L; ++j) {
      y0(i, j) = samples[i + j];
      y1(i, j) = samples[i + j + 1];
    }
  Eigen::JacobiSVD<MatC> svd(y0, Eigen::ComputeThinU | Eigen::ComputeThinV);

  double best_res = std::numeric_limits<double>::infinity();
  for (int r = 1; r <= max_terms; ++r) {
    if (r > std::min(rows, L)) break;
    if (svd.singularValues()(r - 1) < 1e-14 * svd.singularValues()(0)) break;

    const MatC u = svd.matrixU().leftCols(r);
    const MatC v = svd.matrixV().leftCols(r);
    VecC sinv(r);
    for (int i = 0; i < r; ++i) sinv(i) = 1.0 / svd.singularValues()(i);
    const MatC a = sinv.asDiagonal() * u.adjoint() * y1 * v;  // r x r
    Eigen::ComplexEigenSolver<MatC> es(a);

    std::vector<cplx> poles;
    for (int i = 0; i < r; ++i) {
      cplx z = es.eigenvalues()(i);
      if (std::abs(z) < 1e-8 || std::abs(z) > 1.05) continue;  // spurious / growing
      if (std::abs(z) > 1) z /= std::abs(z);
      poles.push_back(z);
    }
    const auto clusters = cluster_poles(std::move(poles), 1e-3);

    // coefficients directly in the t-basis t^p z^(t/dt)
    int cols = 0;
    for (const auto& c : clusters) cols += c.mult;
    if (cols == 0 || cols > max_terms) continue;
    MatC design(n, cols);
    {
      int col = 0;
      for (const auto& c : clusters)
        for (int p = 0; p < c.mult; ++p, ++col) {
          cplx zp(1, 0);
          for (int i = 0; i < n; ++i) {
            design(i, col) = std::pow(i * dt, p) * zp;
            zp *= c.pole;
          }
        }
    }
    VecC rhs(n);
    for (int i = 0; i < n; ++i) rhs(i) = samples[i];
    Eigen::JacobiSVD<MatC> lsq(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    lsq.setThreshold(1e-12);
    const VecC coef = lsq.solve(rhs);
    const double res = (design * coef - rhs).norm() / std::sqrt(energy);

    if (res < best_res) {
      best_res = res;
      best_sum.terms.clear();
      int col = 0;
      for (const auto& c : clusters) {
        const cplx dbar = cplx(0, 1) * std::log(c.pole) / dt;
        const cplx d = std::conj(dbar);
        for (int p = 0; p < c.mult; ++p, ++col)
          if (std::abs(coef(col)) > 1e-10 * amp_scale)
            best_sum.terms.push_back({coef(col), p, d});
      }
      best_sum.canonicalize();
    }
    if (best_res <= 1e-6) break;  // residual drop threshold reached
  }

  if (best_res * best_res > 1e-4)
    throw UnderfitError("prony_match: residual plateau at " + std::to_string(best_res) +
                        " of signal amplitude; increase max_terms");
  return best_sum;
}

}  // namespace phaselab
