#include <CLI11.hpp>
#include <iostream>

#include "phaselab/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericalFailure = 3, kVerifyFailure = 4 };

void print_stage(const std::string& name, const phaselab::StageResult& r) {
  if (r.skipped) {
    std::cout << name << ": up to date, skipped\n";
    return;
  }
  std::cout << name << ": wrote " << r.outputs.size() << " files\n";
  for (const auto& f : r.outputs) std::cout << "  " << f << '\n';
}

int run_verify(const phaselab::RunConfig& cfg) {
  const auto report = phaselab::cmd_verify(cfg);
  for (const auto& c : report.checks)
    std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  max_error=" << c.max_error
              << " tol=" << c.tolerance << '\n';
  return report.all_pass() ? kOk : kVerifyFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phaselab: phaseless scattering data simulation, phase retrieval and "
               "travel-time tomography"};
  app.require_subcommand(1);
  app.fallthrough();  // accept the global flags after the subcommand too

  std::string config_path, out_dir;
  int workers = 0;
  long long seed = -1;
  bool flip_hilbert = false, paper_fourier = false;

  app.add_option("--config", config_path, "experiment config file (key = value lines)");
  app.add_option("--out", out_dir, "output directory (overrides run.out_dir)");
  app.add_option("--workers", workers, "worker thread count (overrides run.workers)");
  app.add_option("--seed", seed, "random seed (overrides run.seed)");
  app.add_flag("--debug-flip-hilbert", flip_hilbert,
               "flip the Hilbert-transform sign (forces the convention self-test to fail)");
  app.add_flag("--debug-paper-fourier-constant", paper_fourier,
               "use the alternative closed-form transform constant (quadrature mismatch)");

  auto* sim = app.add_subcommand("simulate", "phantom + forward model -> phaseless data");
  auto* ret = app.add_subcommand("retrieve", "phase retrieval from modulus data");
  auto* inv = app.add_subcommand("invert", "arrival picking + travel-time tomography");
  auto* ver = app.add_subcommand("verify", "lemma-level analytic self-checks");
  auto* all = app.add_subcommand("all", "verify + simulate + retrieve + invert");

  CLI11_PARSE(app, argc, argv);

  phaselab::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = phaselab::RunConfig::from_file(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (workers > 0) cfg.workers = workers;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.debug_flip_hilbert = flip_hilbert;
    cfg.debug_paper_fourier_constant = paper_fourier;
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (sim->parsed()) {
      print_stage("simulate", phaselab::cmd_simulate(cfg));
    } else if (ret->parsed()) {
      print_stage("retrieve", phaselab::cmd_retrieve(cfg));
    } else if (inv->parsed()) {
      print_stage("invert", phaselab::cmd_invert(cfg));
    } else if (ver->parsed()) {
      return run_verify(cfg);
    } else if (all->parsed()) {
      const int vr = run_verify(cfg);
      if (vr != kOk) return vr;
      print_stage("simulate", phaselab::cmd_simulate(cfg));
      print_stage("retrieve", phaselab::cmd_retrieve(cfg));
      print_stage("invert", phaselab::cmd_invert(cfg));
    }
  } catch (const phaselab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kOk;
}
