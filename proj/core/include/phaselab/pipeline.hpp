#pragma once

#include <string>
#include <vector>

#include "phaselab/config.hpp"
#include "phaselab/tomography.hpp"

namespace phaselab {

struct StageResult {
  bool skipped = false;  // manifest matched, nothing recomputed
  std::vector<std::string> outputs;
};

/// phantom -> forward -> |u|; writes fields, truth spectra, phaseless traces
/// and a content-hash manifest. Re-running with an unchanged config and
/// intact outputs is a no-op.
StageResult cmd_simulate(const RunConfig& cfg);

/// Phase retrieval on the near-ball phaseless traces (+ oracle continuation
/// hand-off for the surface pairs); writes retrieved spectra, zero reports
/// and, when truth is present, per-pair error curves.
StageResult cmd_retrieve(const RunConfig& cfg);

/// Arrival picking on the surface spectra and travel-time tomography;
/// writes c_rec.pslb, misfit history and a report with the model error
/// when the true field is available.
StageResult cmd_invert(const RunConfig& cfg);

struct VerifyCheck {
  std::string name;
  double max_error = 0;
  double tolerance = 0;
  bool pass = false;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return !checks.empty();
  }
};

/// Lemma-level analytic self-checks: closed-form transform vs adaptive
/// quadrature, Blaschke unimodularity, Hilbert convention pair, exponential
/// fit round-trip. Debug flags deliberately break the corresponding check.
VerifyReport cmd_verify(const RunConfig& cfg);

}  // namespace phaselab
