#pragma once

#include <string>

#include <json.hpp>

#include "dpcp/central.hpp"
#include "dpcp/common.hpp"
#include "dpcp/datagen.hpp"
#include "dpcp/distributed.hpp"
#include "dpcp/graph.hpp"

namespace dpcp {

inline constexpr const char* kVersion = "0.1.0";

// Strict JSON -> config conversion: unknown keys are rejected so typos fail
// loudly instead of silently running defaults.
SynthConfig synth_config_from_json(const nlohmann::json& j);
PcpConfig pcp_config_from_json(const nlohmann::json& j);
// rho is required unless a positive fallback (e.g. twice a known true rank)
// is supplied.
DpcpConfig dpcp_config_from_json(const nlohmann::json& j, int fallback_rho = 0);

nlohmann::json to_json(const SynthConfig& cfg);
nlohmann::json to_json(const PcpConfig& cfg);
nlohmann::json to_json(const DpcpConfig& cfg);

// Each runner materializes one run directory: outputs plus meta.json echoing
// the configuration. Nothing below writes timestamps; reruns with the same
// inputs produce byte-identical files.

struct SynthOutputs {
  SyntheticDataset data;
  MeterGraph graph;
};
// Writes X.csv, O.csv, Y.csv (blanks for unobserved), graph.json, meta.json.
SynthOutputs run_synth(const SynthConfig& cfg, const std::string& out_dir);

// Writes X_hat.csv, O_hat.csv, trace.csv, meta.json.
PcpSolution run_central(const ObservationSet& obs, const PcpConfig& cfg,
                        const std::string& out_dir);

// Writes X_hat.csv, O_hat.csv, trace.csv, meta.json. Ground-truth matrices,
// when given, populate the per-round error columns.
RunResult run_dpcp(const ObservationSet& obs, const MeterGraph& g,
                   const DpcpConfig& cfg, const std::string& out_dir,
                   const Matrix* x_true = nullptr, const Matrix* o_true = nullptr);

struct CompareOutcome {
  nlohmann::json report;
  bool central_converged = false;
  bool dpcp_converged = false;
};
// Spec document: {"out": dir, "synth": {...}} or
// {"out": dir, "data": csv, "graph": json, "truth_x": csv?, "truth_o": csv?},
// plus {"central": {...}, "dpcp": {...}}. Runs both solvers on the same
// observations and writes data/, central/, dpcp/, report.json, meta.json and
// a byte-exact copy of the spec document.
CompareOutcome run_compare(const nlohmann::json& spec, const std::string& spec_text);

// Observed entries keep their measured value; unobserved ones are filled from
// the low-rank estimate.
Matrix impute(const ObservationSet& obs, const Matrix& x_hat);

}  // namespace dpcp
