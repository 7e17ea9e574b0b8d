#include "dpcp/experiment.hpp"

#include <filesystem>
#include <initializer_list>
#include <string>

#include "dpcp/io.hpp"
#include "dpcp/metrics.hpp"

namespace dpcp {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* what) {
  if (!j.is_object())
    throw ValidationError(std::string(what) + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw ValidationError(std::string(what) + ": unknown key '" + item.key() + "'");
  }
}

double get_num(const json& j, const char* key, double def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number())
    throw ValidationError(std::string("config: '") + key + "' must be a number");
  return j[key].get<double>();
}

double require_num(const json& j, const char* key, const char* what) {
  if (!j.contains(key))
    throw ValidationError(std::string(what) + ": missing required key '" + key + "'");
  return get_num(j, key, 0.0);
}

int get_int(const json& j, const char* key, int def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number_integer())
    throw ValidationError(std::string("config: '") + key + "' must be an integer");
  return j[key].get<int>();
}

std::uint64_t get_u64(const json& j, const char* key, std::uint64_t def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number_unsigned() && !j[key].is_number_integer())
    throw ValidationError(std::string("config: '") + key + "' must be an integer");
  return j[key].get<std::uint64_t>();
}

std::string get_str(const json& j, const char* key, const std::string& def) {
  if (!j.contains(key)) return def;
  if (!j[key].is_string())
    throw ValidationError(std::string("config: '") + key + "' must be a string");
  return j[key].get<std::string>();
}

json versions() {
  json v;
  v["dpcp"] = kVersion;
  v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
               std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  return v;
}

void write_meta(const fs::path& dir, json meta) {
  meta["versions"] = versions();
  write_json((dir / "meta.json").string(), meta);
}

json kkt_json(const KktGaps& g) {
  json j;
  j["spectral_gap"] = g.spectral_gap;
  j["inf_gap"] = g.inf_gap;
  j["support_gap"] = g.support_gap;
  j["alignment_gap"] = g.alignment_gap;
  return j;
}

}  // namespace

SynthConfig synth_config_from_json(const json& j) {
  check_keys(j,
             {"n_nodes", "horizon", "rank", "sigma2", "p_out", "amplitude", "p_obs",
              "d_c", "seed"},
             "synth config");
  SynthConfig cfg;
  cfg.n_nodes = get_int(j, "n_nodes", cfg.n_nodes);
  cfg.horizon = get_int(j, "horizon", cfg.horizon);
  cfg.rank = get_int(j, "rank", cfg.rank);
  cfg.sigma2 = get_num(j, "sigma2", cfg.sigma2);
  cfg.p_out = get_num(j, "p_out", cfg.p_out);
  cfg.amplitude = get_num(j, "amplitude", cfg.amplitude);
  cfg.p_obs = get_num(j, "p_obs", cfg.p_obs);
  cfg.d_c = get_num(j, "d_c", cfg.d_c);
  cfg.seed = get_u64(j, "seed", cfg.seed);
  validate(cfg);
  return cfg;
}

PcpConfig pcp_config_from_json(const json& j) {
  check_keys(j, {"lambda1", "lambdastar", "max_iters", "tol", "step"}, "central config");
  PcpConfig cfg;
  cfg.lambda_1 = require_num(j, "lambda1", "central config");
  cfg.lambda_star = require_num(j, "lambdastar", "central config");
  cfg.max_iters = get_int(j, "max_iters", cfg.max_iters);
  cfg.tol_rel = get_num(j, "tol", cfg.tol_rel);
  cfg.step = get_num(j, "step", cfg.step);
  validate(cfg);
  return cfg;
}

DpcpConfig dpcp_config_from_json(const json& j, int fallback_rho) {
  check_keys(j,
             {"rho", "c", "lambda1", "lambdastar", "rounds", "consensus_tol",
              "objective_tol", "seed", "p_reg", "threads"},
             "dpcp config");
  DpcpConfig cfg;
  cfg.rho = get_int(j, "rho", fallback_rho);
  if (cfg.rho < 1)
    throw ValidationError("dpcp config: 'rho' is required (no rank hint available)");
  cfg.c = get_num(j, "c", cfg.c);
  cfg.lambda_1 = require_num(j, "lambda1", "dpcp config");
  cfg.lambda_star = require_num(j, "lambdastar", "dpcp config");
  cfg.max_rounds = get_int(j, "rounds", cfg.max_rounds);
  cfg.consensus_tol = get_num(j, "consensus_tol", cfg.consensus_tol);
  cfg.objective_tol = get_num(j, "objective_tol", cfg.objective_tol);
  cfg.seed = get_u64(j, "seed", cfg.seed);
  const std::string reg = get_str(j, "p_reg", "lambda_star");
  if (reg == "lambda_star")
    cfg.p_reg = PReg::kLambdaStar;
  else if (reg == "one")
    cfg.p_reg = PReg::kOne;
  else
    throw ValidationError("dpcp config: 'p_reg' must be 'lambda_star' or 'one'");
  cfg.threads = get_int(j, "threads", cfg.threads);
  validate(cfg);
  return cfg;
}

json to_json(const SynthConfig& cfg) {
  json j;
  j["n_nodes"] = cfg.n_nodes;
  j["horizon"] = cfg.horizon;
  j["rank"] = cfg.rank;
  j["sigma2"] = cfg.sigma2;
  j["p_out"] = cfg.p_out;
  j["amplitude"] = cfg.amplitude;
  j["p_obs"] = cfg.p_obs;
  j["d_c"] = cfg.d_c;
  j["seed"] = cfg.seed;
  return j;
}

json to_json(const PcpConfig& cfg) {
  json j;
  j["lambda1"] = cfg.lambda_1;
  j["lambdastar"] = cfg.lambda_star;
  j["max_iters"] = cfg.max_iters;
  j["tol"] = cfg.tol_rel;
  j["step"] = cfg.step;
  return j;
}

json to_json(const DpcpConfig& cfg) {
  json j;
  j["rho"] = cfg.rho;
  j["c"] = cfg.c;
  j["lambda1"] = cfg.lambda_1;
  j["lambdastar"] = cfg.lambda_star;
  j["rounds"] = cfg.max_rounds;
  j["consensus_tol"] = cfg.consensus_tol;
  j["objective_tol"] = cfg.objective_tol;
  j["seed"] = cfg.seed;
  j["p_reg"] = cfg.p_reg == PReg::kLambdaStar ? "lambda_star" : "one";
  j["threads"] = cfg.threads;
  return j;
}

SynthOutputs run_synth(const SynthConfig& cfg, const std::string& out_dir) {
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  auto [data, graph] = synthesize(cfg);
  write_matrix((dir / "X.csv").string(), data.X);
  write_matrix((dir / "O.csv").string(), data.O);
  write_matrix((dir / "Y.csv").string(), data.Y_obs, &data.mask);
  write_graph((dir / "graph.json").string(), graph);
  json meta;
  meta["command"] = "synth";
  meta["config"] = to_json(cfg);
  write_meta(dir, meta);
  return {std::move(data), std::move(graph)};
}

PcpSolution run_central(const ObservationSet& obs, const PcpConfig& cfg,
                        const std::string& out_dir) {
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  PcpSolution sol = solve(obs, cfg);
  write_matrix((dir / "X_hat.csv").string(), sol.X_hat);
  write_matrix((dir / "O_hat.csv").string(), sol.O_hat);
  write_central_trace((dir / "trace.csv").string(), sol);
  json meta;
  meta["command"] = "central";
  meta["config"] = to_json(cfg);
  meta["converged"] = sol.converged;
  meta["iters"] = sol.iters;
  meta["objective"] = sol.objective_trace.back();
  meta["kkt"] = kkt_json(sol.gaps);
  write_meta(dir, meta);
  return sol;
}

RunResult run_dpcp(const ObservationSet& obs, const MeterGraph& g,
                   const DpcpConfig& cfg, const std::string& out_dir,
                   const Matrix* x_true, const Matrix* o_true) {
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  RunResult result = run(obs, g, cfg, x_true, o_true);
  const auto [x_hat, o_hat] = aggregate_estimate(result.states);
  write_matrix((dir / "X_hat.csv").string(), x_hat);
  write_matrix((dir / "O_hat.csv").string(), o_hat);
  write_dpcp_trace((dir / "trace.csv").string(), result.traces);
  const Certificate cert = certificate(result.states, obs, cfg.lambda_star);
  json meta;
  meta["command"] = "dpcp";
  meta["config"] = to_json(cfg);
  meta["stop_reason"] = to_string(result.stop_reason);
  meta["rounds"] = result.traces.size();
  meta["consensus_max"] =
      result.traces.empty() ? 0.0 : result.traces.back().consensus_max;
  meta["objective"] = result.traces.empty() ? 0.0 : result.traces.back().objective;
  meta["certificate"] = {{"holds", cert.holds},
                         {"residual_spectral", cert.residual_spectral}};
  write_meta(dir, meta);
  return result;
}

CompareOutcome run_compare(const json& spec, const std::string& spec_text) {
  check_keys(spec, {"out", "synth", "data", "graph", "truth_x", "truth_o", "central",
                    "dpcp"},
             "compare spec");
  const std::string out = get_str(spec, "out", "");
  if (out.empty()) throw ValidationError("compare spec: missing 'out' directory");
  if (!spec.contains("central") || !spec.contains("dpcp"))
    throw ValidationError("compare spec: needs 'central' and 'dpcp' sections");
  const bool has_synth = spec.contains("synth");
  const bool has_data = spec.contains("data");
  if (has_synth == has_data)
    throw ValidationError("compare spec: exactly one of 'synth' or 'data' required");
  if (has_synth && (spec.contains("truth_x") || spec.contains("truth_o") ||
                    spec.contains("graph")))
    throw ValidationError("compare spec: 'synth' generates its own graph and truth");
  if (has_data && !spec.contains("graph"))
    throw ValidationError("compare spec: 'data' needs a 'graph' file");

  const fs::path dir(out);
  fs::create_directories(dir);
  write_text((dir / "spec.json").string(), spec_text);

  ObservationSet obs;
  MeterGraph graph;
  Matrix x_true_store, o_true_store;
  const Matrix* x_true = nullptr;
  const Matrix* o_true = nullptr;
  int fallback_rho = 0;
  if (has_synth) {
    const SynthConfig synth_cfg = synth_config_from_json(spec["synth"]);
    SynthOutputs so = run_synth(synth_cfg, (dir / "data").string());
    obs = so.data.observations();
    graph = std::move(so.graph);
    x_true_store = std::move(so.data.X);
    o_true_store = std::move(so.data.O);
    x_true = &x_true_store;
    o_true = &o_true_store;
    fallback_rho = 2 * synth_cfg.rank;
  } else {
    obs = read_observations(get_str(spec, "data", ""));
    graph = read_graph(get_str(spec, "graph", ""));
    if (spec.contains("truth_x")) {
      x_true_store = read_matrix(get_str(spec, "truth_x", ""));
      x_true = &x_true_store;
    }
    if (spec.contains("truth_o")) {
      o_true_store = read_matrix(get_str(spec, "truth_o", ""));
      o_true = &o_true_store;
    }
  }

  const PcpConfig central_cfg = pcp_config_from_json(spec["central"]);
  const DpcpConfig dpcp_cfg = dpcp_config_from_json(spec["dpcp"], fallback_rho);

  const PcpSolution central = run_central(obs, central_cfg, (dir / "central").string());
  const RunResult dist =
      run_dpcp(obs, graph, dpcp_cfg, (dir / "dpcp").string(), x_true, o_true);
  const auto [x_dpcp, o_dpcp] = aggregate_estimate(dist.states);
  const Certificate cert = certificate(dist.states, obs, dpcp_cfg.lambda_star);

  json report;
  const double central_norm = central.X_hat.norm();
  const double diff = (x_dpcp - central.X_hat).norm();
  report["discrepancy_X"] = central_norm == 0.0 ? diff : diff / central_norm;
  report["discrepancy_absolute"] = central_norm == 0.0;
  report["central"] = {{"converged", central.converged},
                       {"iters", central.iters},
                       {"objective", central.objective_trace.back()},
                       {"kkt", kkt_json(central.gaps)}};
  report["dpcp"] = {
      {"stop_reason", to_string(dist.stop_reason)},
      {"rounds", dist.traces.size()},
      {"objective", dist.traces.empty() ? 0.0 : dist.traces.back().objective},
      {"consensus_max", dist.traces.empty() ? 0.0 : dist.traces.back().consensus_max},
      {"certificate",
       {{"holds", cert.holds}, {"residual_spectral", cert.residual_spectral}}}};
  if (x_true != nullptr && o_true != nullptr) {
    report["report_central"] = to_json(make_report(
        central.X_hat, central.O_hat, *x_true, *o_true, obs.mask, central_cfg.lambda_1 / 2.0));
    report["report_dpcp"] = to_json(
        make_report(x_dpcp, o_dpcp, *x_true, *o_true, obs.mask, dpcp_cfg.lambda_1 / 2.0));
  }
  write_json((dir / "report.json").string(), report);

  json meta;
  meta["command"] = "compare";
  meta["central"] = to_json(central_cfg);
  meta["dpcp"] = to_json(dpcp_cfg);
  write_meta(dir, meta);

  CompareOutcome outcome;
  outcome.report = std::move(report);
  outcome.central_converged = central.converged;
  outcome.dpcp_converged = dist.stop_reason == StopReason::kConverged;
  return outcome;
}

Matrix impute(const ObservationSet& obs, const Matrix& x_hat) {
  validate(obs);
  if (x_hat.rows() != obs.rows() || x_hat.cols() != obs.cols())
    throw ValidationError("impute: estimate shape does not match observations");
  Matrix out = obs.values;
  for (Index j = 0; j < out.cols(); ++j)
    for (Index i = 0; i < out.rows(); ++i)
      if (obs.mask(i, j) == 0.0) out(i, j) = x_hat(i, j);
  return out;
}

}  // namespace dpcp
