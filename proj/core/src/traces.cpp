#include "phaselab/traces.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace phaselab {

namespace {

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path,
                                                    const std::string& expect_header) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty csv " + path);
  if (line != expect_header)
    throw std::runtime_error("unexpected header in " + path + ": " + line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

void write_spectra_csv(const std::string& path, const std::vector<SpectralTrace>& traces) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "src_id,rcv_id,k,re,im\n";
  os << std::setprecision(17);
  for (const auto& t : traces)
    for (std::size_t i = 0; i < t.k_grid.size(); ++i)
      os << t.src_id << ',' << t.rcv_id << ',' << t.k_grid[i] << ','
         << t.values[i].real() << ',' << t.values[i].imag() << '\n';
}

std::vector<SpectralTrace> read_spectra_csv(const std::string& path) {
  auto rows = read_csv_rows(path, "src_id,rcv_id,k,re,im");
  std::map<std::pair<int, int>, SpectralTrace> by_pair;
  for (const auto& r : rows) {
    if (r.size() != 5) throw std::runtime_error("bad row in " + path);
    auto key = std::make_pair(std::stoi(r[0]), std::stoi(r[1]));
    auto& t = by_pair[key];
    t.src_id = key.first;
    t.rcv_id = key.second;
    t.k_grid.push_back(std::stod(r[2]));
    t.values.emplace_back(std::stod(r[3]), std::stod(r[4]));
  }
  std::vector<SpectralTrace> out;
  out.reserve(by_pair.size());
  for (auto& [k, v] : by_pair) out.push_back(std::move(v));
  return out;
}

void write_phaseless_csv(const std::string& path, const std::vector<PhaselessTrace>& traces) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "src_id,rcv_id,k,abs\n";
  os << std::setprecision(17);
  for (const auto& t : traces)
    for (std::size_t i = 0; i < t.k_grid.size(); ++i)
      os << t.src_id << ',' << t.rcv_id << ',' << t.k_grid[i] << ','
         << t.values[i] << '\n';
}

std::vector<PhaselessTrace> read_phaseless_csv(const std::string& path) {
  auto rows = read_csv_rows(path, "src_id,rcv_id,k,abs");
  std::map<std::pair<int, int>, PhaselessTrace> by_pair;
  for (const auto& r : rows) {
    if (r.size() != 4) throw std::runtime_error("bad row in " + path);
    auto key = std::make_pair(std::stoi(r[0]), std::stoi(r[1]));
    auto& t = by_pair[key];
    t.src_id = key.first;
    t.rcv_id = key.second;
    t.k_grid.push_back(std::stod(r[2]));
    t.values.push_back(std::stod(r[3]));
  }
  std::vector<PhaselessTrace> out;
  out.reserve(by_pair.size());
  for (auto& [k, v] : by_pair) out.push_back(std::move(v));
  return out;
}

void write_time_traces_csv(const std::string& path, const std::vector<TimeTrace>& traces) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "src_id,rcv_id,t,re,im\n";
  os << std::setprecision(17);
  for (const auto& t : traces)
    for (std::size_t i = 0; i < t.values.size(); ++i)
      os << t.src_id << ',' << t.rcv_id << ',' << i * t.dt << ','
         << t.values[i] << ",0\n";
}

}  // namespace phaselab
