#include "dpcp/distributed.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include <Eigen/Cholesky>

#include "dpcp/kernels.hpp"
#include "dpcp/rng.hpp"

namespace dpcp {

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::kConverged: return "converged";
    case StopReason::kMaxRounds: return "max_rounds";
  }
  return "unknown";
}

void validate(const DpcpConfig& cfg) {
  if (cfg.rho < 1) throw ValidationError("dpcp: factor width must be >= 1");
  if (!(cfg.c > 0.0)) throw ValidationError("dpcp: consensus penalty must be positive");
  if (!(cfg.lambda_star >= 0.0 && cfg.lambda_1 >= 0.0))
    throw ValidationError("dpcp: regularization weights must be >= 0");
  if (cfg.max_rounds < 0) throw ValidationError("dpcp: max_rounds must be >= 0");
  if (!(cfg.consensus_tol > 0.0 && cfg.objective_tol > 0.0))
    throw ValidationError("dpcp: tolerances must be positive");
  if (cfg.threads < 1) throw ValidationError("dpcp: threads must be >= 1");
}

std::vector<NodeState> init_network(const ObservationSet& obs, const MeterGraph& g,
                                    const DpcpConfig& cfg) {
  validate(cfg);
  validate(obs);
  if (g.n_nodes != obs.rows())
    throw ValidationError("dpcp: graph size does not match observation rows");
  if (!is_connected(g)) throw ValidationError("dpcp: graph is not connected");

  const Index t = obs.cols();
  const Index rho = cfg.rho;
  const double sd = 1.0 / std::sqrt(static_cast<double>(rho));
  std::vector<NodeState> states(static_cast<std::size_t>(g.n_nodes));
  for (int n = 0; n < g.n_nodes; ++n) {
    NodeState& s = states[static_cast<std::size_t>(n)];
    s.id = n;
    s.n_network = g.n_nodes;
    s.y = obs.values.row(n).transpose();
    s.omega = obs.mask.row(n).transpose();
    Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(n)));
    s.Q.resize(t, rho);
    for (Index j = 0; j < rho; ++j)
      for (Index i = 0; i < t; ++i) s.Q(i, j) = sd * rng.gaussian();
    s.p.resize(rho);
    for (Index i = 0; i < rho; ++i) s.p(i) = sd * rng.gaussian();
    s.o = Vector::Zero(t);
    s.S = Matrix::Zero(t, rho);
    s.neighbors = g.neighborhoods[static_cast<std::size_t>(n)];
  }
  return states;
}

namespace {

void check_messages(const NodeState& node, const QMessages& neighbor_q) {
  if (neighbor_q.size() != node.neighbors.size())
    throw ValidationError("dpcp: node " + std::to_string(node.id) +
                          " received wrong number of neighbor messages");
  for (int m : node.neighbors) {
    auto it = neighbor_q.find(m);
    if (it == neighbor_q.end() || it->second == nullptr)
      throw ValidationError("dpcp: node " + std::to_string(node.id) +
                            " missing message from neighbor " + std::to_string(m));
  }
}

}  // namespace

void s1_dual_update(NodeState& node, const QMessages& neighbor_q, double c) {
  check_messages(node, neighbor_q);
  for (int m : node.neighbors) node.S += c * (node.Q - *neighbor_q.at(m));
}

Matrix s2_q_update(const NodeState& node, const QMessages& neighbor_q,
                   const DpcpConfig& cfg) {
  check_messages(node, neighbor_q);
  const double degree = static_cast<double>(node.neighbors.size());
  const double alpha =
      cfg.lambda_star / static_cast<double>(node.n_network) + 2.0 * cfg.c * degree;
  if (!(alpha > 0.0))
    throw ValidationError("dpcp: factor update needs lambda_star > 0 or a neighbor");

  // Right-hand side rows: data term on observed slots, dual and consensus
  // terms everywhere.
  Matrix consensus = degree * node.Q;
  for (int m : node.neighbors) consensus += *neighbor_q.at(m);
  const Vector data = node.omega.cwiseProduct(node.y - node.o);
  Matrix r = data * node.p.transpose() - node.S + cfg.c * consensus;

  // Observed slots share one rho x rho SPD system; unobserved ones are the
  // pure diagonal alpha * q_t = r_t.
  Matrix m = node.p * node.p.transpose();
  m.diagonal().array() += alpha;
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericalError("dpcp: factor-slot system not positive definite");

  const Index t = node.y.size();
  Matrix q_next(t, cfg.rho);
  for (Index i = 0; i < t; ++i) {
    if (node.omega(i) != 0.0)
      q_next.row(i) = llt.solve(r.row(i).transpose()).transpose();
    else
      q_next.row(i) = r.row(i) / alpha;
  }
  if (!q_next.allFinite()) throw NumericalError("dpcp: non-finite factor update");
  return q_next;
}

Vector s3_p_update(const NodeState& node, const DpcpConfig& cfg) {
  const Matrix qw = node.omega.asDiagonal() * node.Q;
  const Matrix a = node.Q.transpose() * qw;
  const Vector b = qw.transpose() * (node.y - node.o);
  double reg = cfg.p_reg == PReg::kLambdaStar ? cfg.lambda_star : 1.0;
  if (reg == 0.0) reg = 1e-12;
  return solve_small_spd(a, b, reg);
}

Vector s4_o_update(const NodeState& node, double lambda_1) {
  const Vector residual = node.omega.cwiseProduct(node.y - node.Q * node.p);
  Vector o(residual.size());
  for (Index i = 0; i < residual.size(); ++i)
    o(i) = soft_threshold(residual(i), lambda_1);
  return o;
}

double factorized_objective(const std::vector<NodeState>& states,
                            const DpcpConfig& cfg) {
  const double n = static_cast<double>(states.size());
  double f = 0.0;
  for (const NodeState& s : states) {
    const Vector misfit = s.omega.cwiseProduct(s.y - s.Q * s.p - s.o);
    f += 0.5 * misfit.squaredNorm();
    f += cfg.lambda_1 * s.o.lpNorm<1>();
    f += 0.5 * cfg.lambda_star * s.p.squaredNorm();
    f += 0.5 * cfg.lambda_star / n * s.Q.squaredNorm();
  }
  return f;
}

ConsensusReport consensus_error(const std::vector<NodeState>& states) {
  ConsensusReport rep;
  if (states.empty()) return rep;
  Matrix mean = states[0].Q;
  for (std::size_t i = 1; i < states.size(); ++i) mean += states[i].Q;
  mean /= static_cast<double>(states.size());
  const double ref = mean.norm();
  rep.degenerate_reference = ref == 0.0;
  rep.per_node.reserve(states.size());
  for (const NodeState& s : states) {
    const double d = (s.Q - mean).norm();
    rep.per_node.push_back(rep.degenerate_reference ? d : d / ref);
  }
  return rep;
}

std::pair<Matrix, Matrix> aggregate_estimate(const std::vector<NodeState>& states) {
  if (states.empty()) return {Matrix(), Matrix()};
  const Index n = static_cast<Index>(states.size());
  const Index t = states[0].y.size();
  Matrix x(n, t), o(n, t);
  for (Index i = 0; i < n; ++i) {
    const NodeState& s = states[static_cast<std::size_t>(i)];
    x.row(i) = (s.Q * s.p).transpose();
    o.row(i) = s.o.transpose();
  }
  return {std::move(x), std::move(o)};
}

namespace {

double rel_error(const Matrix& hat, const Matrix& truth) {
  const double ref = truth.norm();
  if (ref == 0.0) throw ValidationError("dpcp: zero-norm ground truth");
  return (hat - truth).norm() / ref;
}

void update_node(NodeState& node, const std::vector<Matrix>& snapshot,
                 const DpcpConfig& cfg) {
  QMessages messages;
  for (int m : node.neighbors)
    messages.emplace(m, &snapshot[static_cast<std::size_t>(m)]);
  s1_dual_update(node, messages, cfg.c);
  node.Q = s2_q_update(node, messages, cfg);
  node.p = s3_p_update(node, cfg);
  node.o = s4_o_update(node, cfg.lambda_1);
}

}  // namespace

RoundTrace run_round(std::vector<NodeState>& states, const MeterGraph& g,
                     const DpcpConfig& cfg, const Matrix* x_true,
                     const Matrix* o_true) {
  if (static_cast<int>(states.size()) != g.n_nodes)
    throw ValidationError("dpcp: state count does not match graph");

  std::vector<Matrix> snapshot;
  snapshot.reserve(states.size());
  for (const NodeState& s : states) snapshot.push_back(s.Q);

  const int workers = std::min<int>(cfg.threads, static_cast<int>(states.size()));
  if (workers <= 1) {
    for (NodeState& s : states) update_node(s, snapshot, cfg);
  } else {
    // Contiguous chunks; each worker owns its nodes exclusively, so the
    // schedule cannot influence the result.
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    const std::size_t per = (states.size() + static_cast<std::size_t>(workers) - 1) /
                            static_cast<std::size_t>(workers);
    for (int w = 0; w < workers; ++w) {
      const std::size_t lo = static_cast<std::size_t>(w) * per;
      const std::size_t hi = std::min(states.size(), lo + per);
      pool.emplace_back([&, lo, hi, w] {
        try {
          for (std::size_t i = lo; i < hi; ++i) update_node(states[i], snapshot, cfg);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (std::thread& th : pool) th.join();
    for (const std::exception_ptr& e : errors)
      if (e) std::rethrow_exception(e);
  }

  RoundTrace trace;
  const ConsensusReport consensus = consensus_error(states);
  trace.consensus = consensus.per_node;
  trace.consensus_max =
      trace.consensus.empty()
          ? 0.0
          : *std::max_element(trace.consensus.begin(), trace.consensus.end());
  trace.objective = factorized_objective(states, cfg);
  if (x_true != nullptr || o_true != nullptr) {
    const auto [x_hat, o_hat] = aggregate_estimate(states);
    if (x_true != nullptr) trace.e_X = rel_error(x_hat, *x_true);
    if (o_true != nullptr) trace.e_O = rel_error(o_hat, *o_true);
  }
  if (!states.empty()) {
    Matrix dual_sum = states[0].S;
    for (std::size_t i = 1; i < states.size(); ++i) dual_sum += states[i].S;
    trace.dual_sum_max = dual_sum.cwiseAbs().maxCoeff();
  }
  return trace;
}

RunResult run(const ObservationSet& obs, const MeterGraph& g, const DpcpConfig& cfg,
              const Matrix* x_true, const Matrix* o_true) {
  RunResult result;
  result.states = init_network(obs, g, cfg);
  result.traces.reserve(static_cast<std::size_t>(cfg.max_rounds));
  for (int k = 1; k <= cfg.max_rounds; ++k) {
    RoundTrace trace = run_round(result.states, g, cfg, x_true, o_true);
    trace.k = k;
    result.traces.push_back(std::move(trace));
    const RoundTrace& now = result.traces.back();
    if (!std::isfinite(now.objective) || now.objective > 1e12)
      throw DivergedError("dpcp: objective diverged at round " + std::to_string(k),
                          result.traces);
    if (k >= 11) {
      const double f_now = now.objective;
      const double f_then = result.traces[static_cast<std::size_t>(k - 11)].objective;
      const bool plateau =
          std::abs(f_now - f_then) / std::max(1.0, std::abs(f_then)) < cfg.objective_tol;
      if (plateau && now.consensus_max < cfg.consensus_tol) {
        result.stop_reason = StopReason::kConverged;
        break;
      }
    }
  }
  return result;
}

Certificate certificate(const std::vector<NodeState>& states, const ObservationSet& obs,
                        double lambda_star) {
  Certificate cert;
  if (states.empty()) return cert;
  Matrix q_bar = states[0].Q;
  for (std::size_t i = 1; i < states.size(); ++i) q_bar += states[i].Q;
  q_bar /= static_cast<double>(states.size());

  const Index n = static_cast<Index>(states.size());
  const Index t = states[0].y.size();
  Matrix x_hat(n, t), o_hat(n, t);
  for (Index i = 0; i < n; ++i) {
    const NodeState& s = states[static_cast<std::size_t>(i)];
    x_hat.row(i) = (q_bar * s.p).transpose();
    o_hat.row(i) = s.o.transpose();
  }
  const Matrix residual = obs.mask.cwiseProduct(obs.values - x_hat - o_hat);
  cert.residual_spectral = spectral_norm(residual);
  cert.holds = cert.residual_spectral < lambda_star;
  return cert;
}

}  // namespace dpcp
