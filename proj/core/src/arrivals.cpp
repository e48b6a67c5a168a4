#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

#include "phaselab/arrivals.hpp"

namespace phaselab {

namespace {
constexpr double kPi = std::numbers::pi;
}

void write_table_csv(const std::string& path, const TravelTimeTable& table) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "src_id,rcv_id,tau,amp,quality\n" << std::setprecision(17);
  for (const auto& e : table.entries)
    os << e.src_id << ',' << e.rcv_id << ',' << e.tau_hat << ',' << e.amp_hat << ','
       << e.quality << '\n';
}

TravelTimeTable read_table_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != "src_id,rcv_id,tau,amp,quality")
    throw std::runtime_error("unexpected table header in " + path);
  TravelTimeTable t;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string c[5];
    for (auto& x : c) std::getline(ss, x, ',');
    t.entries.push_back({std::stoi(c[0]), std::stoi(c[1]), std::stod(c[2]), std::stod(c[3]),
                         std::stod(c[4])});
  }
  return t;
}

TimeTrace to_time(const SpectralTrace& u, double t_max) {
  const auto& k = u.k_grid;
  if (k.size() < 64) throw std::invalid_argument("to_time: need >= 64 band samples");
  const double a = k.front(), b = k.back();
  const double dk = (b - a) / (k.size() - 1);

  if (t_max <= 0) t_max = 0.45 * 2 * kPi / dk;  // alias-safe default
  if (b - a < 4 * 2 * kPi / t_max)
    throw std::invalid_argument("to_time: band too narrow for the requested window");

  TimeTrace out;
  out.src_id = u.src_id;
  out.rcv_id = u.rcv_id;
  out.source = u.source;
  out.receiver = u.receiver;
  out.dt = 0.25 * kPi / b;
  // Hann kernel peak (b-a)/(2*pi) expressed as an equivalent Gaussian height
  out.wavelet_sigma = std::sqrt(2 * kPi) / (b - a);
  out.wavelet_t0 = 0;

  const int nt = std::max(8, static_cast<int>(t_max / out.dt));
  out.values.resize(nt);
  for (int j = 0; j < nt; ++j) {
    const double t = j * out.dt;
    cplx acc(0, 0);
    for (std::size_t i = 0; i < k.size(); ++i) {
      const double w = 0.5 * (1 - std::cos(2 * kPi * i / (k.size() - 1)));
      const double trap = (i == 0 || i + 1 == k.size()) ? 0.5 : 1.0;
      acc += trap * w * u.values[i] * std::exp(cplx(0, -k[i] * t));
    }
    // the band is one-sided, so this is the analytic signal; store its
    // envelope so picking sees the pulse, not the band-pass carrier
    out.values[j] = (dk / kPi) * std::abs(acc);
  }
  return out;
}

Pick pick_arrival(const TimeTrace& trace, double min_time) {
  if (min_time < 0) throw std::invalid_argument("pick_arrival: min_time < 0");
  const auto& v = trace.values;
  const std::size_t n = v.size();
  if (n < 3) throw NoArrivalError("pick_arrival: trace too short");

  std::vector<double> mags(n);
  for (std::size_t i = 0; i < n; ++i) mags[i] = std::abs(v[i]);
  std::vector<double> sorted = mags;
  std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
  const double floor = std::max(1.4826 * sorted[n / 2], 1e-300);
  const double threshold = 3 * floor;

  const std::size_t start =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(min_time / trace.dt)));
  for (std::size_t i = start; i + 1 < n; ++i) {
    if (mags[i] < threshold) continue;
    if (mags[i] < mags[i - 1] || mags[i] < mags[i + 1]) continue;

    const double y0 = mags[i - 1], y1 = mags[i], y2 = mags[i + 1];
    const double denom = y0 - 2 * y1 + y2;
    double off = 0, peak = y1;
    if (denom < 0) {
      off = std::clamp(0.5 * (y0 - y2) / denom, -0.5, 0.5);
      peak = y1 - 0.25 * (y0 - y2) * off;
    }
    Pick p;
    p.tau_hat = (i + off) * trace.dt - trace.wavelet_t0;
    const double kernel_height =
        trace.wavelet_sigma > 0 ? 1.0 / (trace.wavelet_sigma * std::sqrt(2 * kPi)) : 1.0;
    p.amp_hat = peak / kernel_height;
    p.quality = std::clamp(peak / threshold, 0.0, 1.0);
    return p;
  }
  throw NoArrivalError("pick_arrival: no local maximum above 3x noise floor");
}

TravelTimeTable build_table(const std::vector<SpectralTrace>& spectra) {
  TravelTimeTable table;
  if (spectra.empty()) return table;

  const double a = spectra.front().k_grid.front(), b = spectra.front().k_grid.back();
  table.dt_resolution = kPi / (b - a);

  std::map<std::pair<int, int>, TravelTimeEntry> picked;
  std::size_t failures = 0;
  for (const auto& u : spectra) {
    const double dist = (u.receiver - u.source).norm();
    try {
      const Pick p = pick_arrival(to_time(u), 0.5 * dist);
      picked[{u.src_id, u.rcv_id}] = {u.src_id, u.rcv_id, p.tau_hat, p.amp_hat, p.quality};
    } catch (const NoArrivalError&) {
      ++failures;
    }
  }
  if (failures * 5 > spectra.size())
    throw std::runtime_error("build_table: more than 20% of pairs failed the pick");

  std::map<std::pair<int, int>, bool> done;
  for (const auto& [key, e] : picked) {
    if (done[key]) continue;
    const auto rkey = std::make_pair(key.second, key.first);
    auto it = picked.find(rkey);
    if (it != picked.end() && rkey != key) {
      TravelTimeEntry avg = e;
      avg.tau_hat = 0.5 * (e.tau_hat + it->second.tau_hat);
      avg.amp_hat = 0.5 * (e.amp_hat + it->second.amp_hat);
      avg.quality = std::min(e.quality, it->second.quality);
      if (std::abs(e.tau_hat - it->second.tau_hat) > 2 * table.dt_resolution)
        table.asymmetric_pairs.push_back(key);
      table.entries.push_back(avg);
      done[key] = done[rkey] = true;
    } else {
      table.entries.push_back(e);
      done[key] = true;
    }
  }
  return table;
}

}  // namespace phaselab
