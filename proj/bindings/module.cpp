// Python bindings for the main operations: synthetic data generation, the
// centralized solver, the distributed consensus solver, and the error metrics.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dpcp/central.hpp"
#include "dpcp/datagen.hpp"
#include "dpcp/distributed.hpp"
#include "dpcp/experiment.hpp"
#include "dpcp/graph.hpp"
#include "dpcp/kernels.hpp"
#include "dpcp/metrics.hpp"

namespace py = pybind11;

namespace {

using dpcp::Matrix;

// Values are masked on the way in so callers may pass a dense matrix.
dpcp::ObservationSet make_observations(const Matrix& values, const Matrix& mask) {
  if (values.rows() != mask.rows() || values.cols() != mask.cols())
    throw dpcp::ValidationError("observations: value/mask shape mismatch");
  dpcp::ObservationSet obs{values.cwiseProduct(mask), mask};
  dpcp::validate(obs);
  return obs;
}

dpcp::MeterGraph graph_from_edges(int n, std::vector<std::pair<int, int>> edges) {
  dpcp::MeterGraph g = dpcp::make_graph(n, std::move(edges));
  if (!dpcp::is_connected(g)) throw dpcp::ValidationError("graph is not connected");
  return g;
}

py::dict solve_central(const Matrix& values, const Matrix& mask, double lambda1,
                       double lambdastar, int max_iters, double tol, double step) {
  const dpcp::ObservationSet obs = make_observations(values, mask);
  dpcp::PcpConfig cfg;
  cfg.lambda_1 = lambda1;
  cfg.lambda_star = lambdastar;
  cfg.max_iters = max_iters;
  cfg.tol_rel = tol;
  cfg.step = step;
  const dpcp::PcpSolution sol = dpcp::solve(obs, cfg);
  py::dict out;
  out["X_hat"] = sol.X_hat;
  out["O_hat"] = sol.O_hat;
  out["objective"] = sol.objective_trace;
  out["iters"] = sol.iters;
  out["converged"] = sol.converged;
  out["spectral_gap"] = sol.gaps.spectral_gap;
  out["inf_gap"] = sol.gaps.inf_gap;
  out["support_gap"] = sol.gaps.support_gap;
  out["alignment_gap"] = sol.gaps.alignment_gap;
  return out;
}

py::dict run_dpcp(const Matrix& values, const Matrix& mask,
                  std::vector<std::pair<int, int>> edges, int rho, double c,
                  double lambda1, double lambdastar, int rounds, double consensus_tol,
                  double objective_tol, std::uint64_t seed, const std::string& p_reg,
                  int threads) {
  const dpcp::ObservationSet obs = make_observations(values, mask);
  const dpcp::MeterGraph g =
      graph_from_edges(static_cast<int>(values.rows()), std::move(edges));
  dpcp::DpcpConfig cfg;
  cfg.rho = rho;
  cfg.c = c;
  cfg.lambda_1 = lambda1;
  cfg.lambda_star = lambdastar;
  cfg.max_rounds = rounds;
  cfg.consensus_tol = consensus_tol;
  cfg.objective_tol = objective_tol;
  cfg.seed = seed;
  if (p_reg == "lambda_star")
    cfg.p_reg = dpcp::PReg::kLambdaStar;
  else if (p_reg == "one")
    cfg.p_reg = dpcp::PReg::kOne;
  else
    throw dpcp::ValidationError("p_reg must be 'lambda_star' or 'one'");
  cfg.threads = threads;

  const dpcp::RunResult r = dpcp::run(obs, g, cfg);
  const auto [x_hat, o_hat] = dpcp::aggregate_estimate(r.states);
  const dpcp::Certificate cert = dpcp::certificate(r.states, obs, cfg.lambda_star);
  py::dict out;
  out["X_hat"] = x_hat;
  out["O_hat"] = o_hat;
  out["rounds"] = static_cast<int>(r.traces.size());
  out["stop_reason"] = std::string(to_string(r.stop_reason));
  std::vector<double> consensus, objective;
  consensus.reserve(r.traces.size());
  objective.reserve(r.traces.size());
  for (const dpcp::RoundTrace& tr : r.traces) {
    consensus.push_back(tr.consensus_max);
    objective.push_back(tr.objective);
  }
  out["consensus"] = consensus;
  out["objective"] = objective;
  out["certificate_holds"] = cert.holds;
  out["certificate_residual"] = cert.residual_spectral;
  return out;
}

py::dict make_synthetic(int n_nodes, int horizon, int rank, double sigma2, double p_out,
                        double amplitude, double p_obs, double d_c, std::uint64_t seed) {
  dpcp::SynthConfig cfg;
  cfg.n_nodes = n_nodes;
  cfg.horizon = horizon;
  cfg.rank = rank;
  cfg.sigma2 = sigma2;
  cfg.p_out = p_out;
  cfg.amplitude = amplitude;
  cfg.p_obs = p_obs;
  cfg.d_c = d_c;
  cfg.seed = seed;
  auto [d, g] = dpcp::synthesize(cfg);
  py::dict out;
  out["X"] = d.X;
  out["O"] = d.O;
  out["E"] = d.E;
  out["mask"] = d.mask;
  out["Y"] = d.Y_obs;
  out["edges"] = g.edges;
  return out;
}

py::dict support_scores(const Matrix& o_hat, const Matrix& o_true, double threshold) {
  const dpcp::SupportScore s = dpcp::support_detection(o_hat, o_true, threshold);
  py::dict out;
  out["precision"] = s.precision;
  out["recall"] = s.recall;
  out["f1"] = s.f1;
  return out;
}

}  // namespace

PYBIND11_MODULE(dpcp, m) {
  m.doc() = "Load-curve cleansing: low-rank plus sparse decomposition, centralized "
            "and distributed over a meter network";

  py::register_exception<dpcp::ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<dpcp::ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<dpcp::NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  m.def("solve_central", &solve_central, py::arg("values"), py::arg("mask"),
        py::arg("lambda1"), py::arg("lambdastar"), py::arg("max_iters") = 1000,
        py::arg("tol") = 1e-9, py::arg("step") = 1.0,
        "Centralized low-rank + sparse decomposition of masked observations.");

  m.def("run_dpcp", &run_dpcp, py::arg("values"), py::arg("mask"), py::arg("edges"),
        py::arg("rho"), py::arg("c") = 1.0, py::arg("lambda1") = 0.0,
        py::arg("lambdastar") = 0.0, py::arg("rounds") = 1000,
        py::arg("consensus_tol") = 1e-3, py::arg("objective_tol") = 1e-9,
        py::arg("seed") = 1, py::arg("p_reg") = "lambda_star", py::arg("threads") = 1,
        "Distributed consensus solver over the given edge list; one node per row.");

  m.def("make_synthetic", &make_synthetic, py::arg("n_nodes") = 25,
        py::arg("horizon") = 600, py::arg("rank") = 3, py::arg("sigma2") = 1e-3,
        py::arg("p_out") = 0.05, py::arg("amplitude") = 1.0, py::arg("p_obs") = 0.7,
        py::arg("d_c") = 0.4, py::arg("seed") = 1,
        "Synthetic low-rank loads with outliers, noise, a mask and a connected "
        "geometric graph.");

  m.def("relative_error", &dpcp::relative_error, py::arg("estimate"), py::arg("truth"));
  m.def("imputation_error", &dpcp::imputation_error, py::arg("x_hat"),
        py::arg("x_true"), py::arg("mask"),
        "Relative error restricted to unobserved entries.");
  m.def("support_detection", &support_scores, py::arg("o_hat"), py::arg("o_true"),
        py::arg("threshold"));
  m.def("suggest_lambdas", &dpcp::suggest_lambdas, py::arg("n"), py::arg("t"),
        py::arg("sigma2_hat"), py::arg("c1") = 1.0, py::arg("scale") = 1.0);
  m.def("soft_threshold",
        py::overload_cast<const Matrix&, double>(&dpcp::soft_threshold), py::arg("a"),
        py::arg("tau"));

  m.attr("__version__") = dpcp::kVersion;
}
