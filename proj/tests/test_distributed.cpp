#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dpcp/central.hpp"
#include "dpcp/datagen.hpp"
#include "dpcp/distributed.hpp"
#include "dpcp/rng.hpp"
#include "oracles.hpp"

using dpcp::DpcpConfig;
using dpcp::Index;
using dpcp::Matrix;
using dpcp::MeterGraph;
using dpcp::NodeState;
using dpcp::ObservationSet;
using dpcp::QMessages;
using dpcp::Vector;

namespace {

ObservationSet small_observations(Index n, Index t, double p_obs, std::uint64_t seed) {
  dpcp::Rng rng(seed);
  ObservationSet obs;
  obs.values.resize(n, t);
  obs.mask.resize(n, t);
  for (Index j = 0; j < t; ++j)
    for (Index i = 0; i < n; ++i) {
      obs.mask(i, j) = rng.uniform() < p_obs ? 1.0 : 0.0;
      obs.values(i, j) = obs.mask(i, j) * 2.0 * rng.gaussian();
    }
  return obs;
}

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  dpcp::Rng rng(seed);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.gaussian();
  return m;
}

// A free-standing node for step-level tests.
NodeState make_node(Index t, int rho, std::uint64_t seed, double p_obs = 0.7,
                    int n_network = 3) {
  NodeState node;
  node.id = 0;
  node.n_network = n_network;
  dpcp::Rng rng(seed);
  node.y.resize(t);
  node.omega.resize(t);
  for (Index i = 0; i < t; ++i) {
    node.omega(i) = rng.uniform() < p_obs ? 1.0 : 0.0;
    node.y(i) = node.omega(i) * 2.0 * rng.gaussian();
  }
  node.Q = random_matrix(t, rho, seed + 1);
  node.p = random_matrix(rho, 1, seed + 2).col(0);
  node.o = node.omega.cwiseProduct(random_matrix(t, 1, seed + 3).col(0) * 0.1);
  node.S = random_matrix(t, rho, seed + 4) * 0.05;
  return node;
}

}  // namespace

TEST_CASE("network initialization") {
  const ObservationSet obs = small_observations(4, 10, 0.7, 50);
  const MeterGraph g = dpcp::make_graph(4, {{0, 1}, {1, 2}, {2, 3}});
  DpcpConfig cfg;
  cfg.rho = 3;
  cfg.lambda_star = 0.5;
  cfg.lambda_1 = 0.1;
  cfg.seed = 9;

  const auto states = dpcp::init_network(obs, g, cfg);
  REQUIRE(states.size() == 4);
  for (const NodeState& s : states) {
    CHECK(s.S.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.o.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.Q.rows() == 10);
    CHECK(s.Q.cols() == 3);
    CHECK(s.n_network == 4);
  }
  CHECK(states[1].neighbors == (std::vector<int>{0, 2}));

  // Same seed reproduces the initialization bit for bit.
  const auto again = dpcp::init_network(obs, g, cfg);
  for (std::size_t i = 0; i < states.size(); ++i) {
    CHECK(states[i].Q == again[i].Q);
    CHECK(states[i].p == again[i].p);
  }

  const MeterGraph split = dpcp::make_graph(4, {{0, 1}, {2, 3}});
  CHECK_THROWS_AS(dpcp::init_network(obs, split, cfg), dpcp::ValidationError);
  const MeterGraph wrong = dpcp::make_graph(3, {{0, 1}, {1, 2}});
  CHECK_THROWS_AS(dpcp::init_network(obs, wrong, cfg), dpcp::ValidationError);
}

TEST_CASE("dual update accumulates disagreement") {
  NodeState node = make_node(6, 2, 60);
  node.neighbors = {1};
  const Matrix s_before = node.S;

  // Equal factors leave the dual untouched.
  QMessages same;
  const Matrix q_copy = node.Q;
  same.emplace(1, &q_copy);
  dpcp::s1_dual_update(node, same, 1.0);
  CHECK((node.S - s_before).norm() == 0.0);

  // A single neighbor with difference D adds exactly c*D.
  const Matrix q_far = random_matrix(6, 2, 61);
  QMessages far;
  far.emplace(1, &q_far);
  dpcp::s1_dual_update(node, far, 1.0);
  CHECK((node.S - (s_before + (node.Q - q_far))).norm() <= 1e-14);

  // Protocol errors: missing or surplus messages.
  node.neighbors = {1, 2};
  CHECK_THROWS_AS(dpcp::s1_dual_update(node, far, 1.0), dpcp::ValidationError);
  QMessages extra = far;
  const Matrix q3 = node.Q;
  extra.emplace(3, &q3);
  CHECK_THROWS_AS(dpcp::s1_dual_update(node, extra, 1.0), dpcp::ValidationError);
}

TEST_CASE("pairwise dual contributions cancel across the network") {
  const ObservationSet obs = small_observations(3, 8, 0.8, 70);
  const MeterGraph g = dpcp::make_graph(3, {{0, 1}, {1, 2}});
  DpcpConfig cfg;
  cfg.rho = 2;
  cfg.c = 1.3;
  cfg.lambda_star = 0.4;
  cfg.lambda_1 = 0.05;
  cfg.seed = 71;
  auto states = dpcp::init_network(obs, g, cfg);
  for (int k = 1; k <= 25; ++k) {
    const dpcp::RoundTrace tr = dpcp::run_round(states, g, cfg);
    CHECK(tr.dual_sum_max <= 1e-9 * cfg.c * k);
  }
}

TEST_CASE("factor update matches the dense Kronecker-system solve") {
  for (std::uint64_t seed = 80; seed < 86; ++seed) {
    const Index t = 8;
    const int rho = 2;
    NodeState node = make_node(t, rho, seed);
    node.neighbors = {1, 2};
    node.n_network = 3;
    const Matrix q1 = random_matrix(t, rho, seed + 10);
    const Matrix q2 = random_matrix(t, rho, seed + 20);
    QMessages messages;
    messages.emplace(1, &q1);
    messages.emplace(2, &q2);

    DpcpConfig cfg;
    cfg.rho = rho;
    cfg.c = 0.9;
    cfg.lambda_star = 0.6;
    cfg.lambda_1 = 0.1;

    const Matrix q_next = dpcp::s2_q_update(node, messages, cfg);

    // Dense route: the printed inverse-system form under column-major vec.
    const double alpha = cfg.lambda_star / 3.0 + 2.0 * cfg.c * 2.0;
    const Matrix omega_diag = node.omega.asDiagonal();
    const Matrix h = oracle::kron(node.p * node.p.transpose(), omega_diag) +
                     alpha * Matrix::Identity(t * rho, t * rho);
    const Matrix r = node.omega.cwiseProduct(node.y - node.o) * node.p.transpose() -
                     node.S + cfg.c * (2.0 * node.Q + q1 + q2);
    const Vector sol = h.fullPivLu().solve(oracle::vec(r));
    const Matrix q_ref = oracle::unvec(sol, t, rho);
    CHECK((q_next - q_ref).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("factor update closed forms in degenerate corners") {
  const Index t = 6;
  DpcpConfig cfg;
  cfg.rho = 2;
  cfg.c = 1.0;
  cfg.lambda_star = 0.5;

  // Zero factor row: the quadratic term vanishes and the update is linear.
  NodeState node = make_node(t, 2, 90);
  node.neighbors = {1};
  node.n_network = 2;
  node.p.setZero();
  const Matrix q1 = random_matrix(t, 2, 91);
  QMessages messages;
  messages.emplace(1, &q1);
  const double alpha = cfg.lambda_star / 2.0 + 2.0 * cfg.c;
  Matrix expected = (cfg.c * (node.Q + q1) - node.S) / alpha;
  CHECK((dpcp::s2_q_update(node, messages, cfg) - expected).cwiseAbs().maxCoeff() <=
        1e-12);

  // A node that observes nothing still participates through consensus.
  NodeState blind = make_node(t, 2, 92, 0.0);
  blind.neighbors = {1};
  blind.n_network = 2;
  blind.o.setZero();
  expected = (cfg.c * (blind.Q + q1) - blind.S) / alpha;
  CHECK((dpcp::s2_q_update(blind, messages, cfg) - expected).cwiseAbs().maxCoeff() <=
        1e-12);
}

TEST_CASE("factor-row update solves the ridge problem") {
  DpcpConfig cfg;
  cfg.rho = 3;
  cfg.lambda_star = 0.8;

  // Nothing observed: zero right-hand side, zero row.
  NodeState blind = make_node(10, 3, 100, 0.0);
  CHECK(dpcp::s3_p_update(blind, cfg).norm() == 0.0);

  // Orthonormal factor on a full mask with no regularization: least squares.
  NodeState node = make_node(12, 3, 101, 1.0);
  node.o.setZero();
  const Eigen::HouseholderQR<Matrix> qr(random_matrix(12, 3, 102));
  node.Q = qr.householderQ() * Matrix::Identity(12, 3);
  DpcpConfig loose = cfg;
  loose.lambda_star = 0.0;
  const Vector p = dpcp::s3_p_update(node, loose);
  CHECK((p - node.Q.transpose() * node.y).norm() <= 1e-8);

  // Random instance against the conjugate-gradient quadratic minimizer.
  for (std::uint64_t seed = 110; seed < 114; ++seed) {
    NodeState rnd = make_node(15, 3, seed);
    const Vector sol = dpcp::s3_p_update(rnd, cfg);
    const Matrix qw = rnd.omega.asDiagonal() * rnd.Q;
    const Matrix a =
        rnd.Q.transpose() * qw + cfg.lambda_star * Matrix::Identity(3, 3);
    const Vector b = qw.transpose() * (rnd.y - rnd.o);
    const Vector ref = oracle::cg_solve(a, b);
    CHECK((sol - ref).norm() <= 1e-8 * std::max(1.0, ref.norm()));
  }

  // The printed unit-regularizer variant.
  DpcpConfig unit = cfg;
  unit.p_reg = dpcp::PReg::kOne;
  NodeState rnd = make_node(15, 3, 120);
  const Vector sol = dpcp::s3_p_update(rnd, unit);
  const Matrix qw = rnd.omega.asDiagonal() * rnd.Q;
  const Matrix a = rnd.Q.transpose() * qw + Matrix::Identity(3, 3);
  const Vector b = qw.transpose() * (rnd.y - rnd.o);
  CHECK((sol - oracle::cg_solve(a, b)).norm() <= 1e-8);
}

TEST_CASE("outlier update is an entrywise lasso on the mask") {
  NodeState node = make_node(20, 2, 130);
  const Vector residual = node.omega.cwiseProduct(node.y - node.Q * node.p);

  CHECK(dpcp::s4_o_update(node, residual.cwiseAbs().maxCoeff() + 1.0).norm() == 0.0);
  CHECK((dpcp::s4_o_update(node, 0.0) - residual).norm() == 0.0);

  const Vector o = dpcp::s4_o_update(node, 0.3);
  for (Index i = 0; i < 20; ++i) {
    if (node.omega(i) == 0.0)
      CHECK(o(i) == 0.0);
    else
      CHECK(o(i) == doctest::Approx(oracle::lasso_1d(residual(i), 0.3)).epsilon(1e-6));
  }
}

TEST_CASE("single-node network degenerates to a local factorization") {
  const ObservationSet obs = small_observations(1, 12, 0.8, 140);
  const MeterGraph g = dpcp::make_graph(1, {});
  DpcpConfig cfg;
  cfg.rho = 2;
  cfg.lambda_star = 0.3;
  cfg.lambda_1 = 0.05;
  cfg.max_rounds = 40;
  cfg.seed = 141;
  auto states = dpcp::init_network(obs, g, cfg);
  for (int k = 0; k < 10; ++k) {
    const dpcp::RoundTrace tr = dpcp::run_round(states, g, cfg);
    CHECK(states[0].S.cwiseAbs().maxCoeff() == 0.0);
    CHECK(tr.consensus_max == 0.0);
    CHECK(std::isfinite(tr.objective));
  }
}

TEST_CASE("round trace reports finite nonnegative diagnostics") {
  const ObservationSet obs = small_observations(5, 10, 0.7, 150);
  const MeterGraph g = dpcp::make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}});
  DpcpConfig cfg;
  cfg.rho = 2;
  cfg.lambda_star = 0.4;
  cfg.lambda_1 = 0.1;
  cfg.seed = 151;
  auto states = dpcp::init_network(obs, g, cfg);
  const Matrix x_true = random_matrix(5, 10, 152);
  const Matrix o_true = random_matrix(5, 10, 153);
  const dpcp::RoundTrace tr = dpcp::run_round(states, g, cfg, &x_true, &o_true);
  REQUIRE(tr.e_X.has_value());
  REQUIRE(tr.e_O.has_value());
  CHECK(*tr.e_X >= 0.0);
  CHECK(*tr.e_O >= 0.0);
  CHECK(tr.consensus_max >= 0.0);
  for (double c : tr.consensus) CHECK(c >= 0.0);
  CHECK(std::isfinite(tr.objective));
}

TEST_CASE("zero-round run returns the initial network") {
  const ObservationSet obs = small_observations(3, 6, 0.9, 160);
  const MeterGraph g = dpcp::make_graph(3, {{0, 1}, {1, 2}});
  DpcpConfig cfg;
  cfg.rho = 2;
  cfg.lambda_star = 0.2;
  cfg.lambda_1 = 0.05;
  cfg.max_rounds = 0;
  cfg.seed = 161;
  const dpcp::RunResult r = dpcp::run(obs, g, cfg);
  CHECK(r.traces.empty());
  CHECK(r.stop_reason == dpcp::StopReason::kMaxRounds);
  CHECK(r.states[0].S.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("small instance converges with consensus below tolerance") {
  // Structured low-rank data so the factors have real signal to agree on.
  dpcp::SynthConfig sc;
  sc.n_nodes = 6;
  sc.horizon = 14;
  sc.rank = 2;
  sc.p_obs = 0.8;
  sc.seed = 170;
  const dpcp::SyntheticDataset d = dpcp::make_dataset(sc);
  const ObservationSet obs = d.observations();
  const MeterGraph g =
      dpcp::make_graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}, {1, 4}});
  DpcpConfig cfg;
  cfg.rho = 3;
  cfg.lambda_star = 0.5;
  cfg.lambda_1 = 0.1;
  cfg.max_rounds = 20000;
  cfg.consensus_tol = 1e-5;
  cfg.seed = 171;
  const dpcp::RunResult r = dpcp::run(obs, g, cfg);
  CHECK(r.stop_reason == dpcp::StopReason::kConverged);
  REQUIRE_FALSE(r.traces.empty());
  CHECK(r.traces.back().consensus_max <= cfg.consensus_tol);

  // Off-mask outliers are exactly zero at every node.
  for (const NodeState& s : r.states)
    for (Index i = 0; i < s.o.size(); ++i)
      if (s.omega(i) == 0.0) CHECK(s.o(i) == 0.0);

  // Near consensus the aggregated estimate has numerical rank at most rho:
  // the trailing singular values sit at the consensus-error level.
  const auto [x_hat, o_hat] = dpcp::aggregate_estimate(r.states);
  CHECK(x_hat.norm() > 1.0);  // the factors did not collapse to the zero saddle
  const Vector s = oracle::singular_values(x_hat);
  if (s.size() > cfg.rho) CHECK(s(cfg.rho) <= std::max(1e-3 * s(0), 1e-10));
}

TEST_CASE("runs are bit-identical across seeds and thread counts") {
  const ObservationSet obs = small_observations(8, 12, 0.7, 180);
  const MeterGraph g = dpcp::make_graph(
      8, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {0, 7}, {2, 6}});
  DpcpConfig cfg;
  cfg.rho = 2;
  cfg.lambda_star = 0.4;
  cfg.lambda_1 = 0.08;
  cfg.max_rounds = 60;
  cfg.seed = 181;

  const dpcp::RunResult a = dpcp::run(obs, g, cfg);
  const dpcp::RunResult b = dpcp::run(obs, g, cfg);
  DpcpConfig parallel = cfg;
  parallel.threads = 8;
  const dpcp::RunResult c = dpcp::run(obs, g, parallel);

  REQUIRE(a.traces.size() == b.traces.size());
  REQUIRE(a.traces.size() == c.traces.size());
  for (std::size_t i = 0; i < a.traces.size(); ++i) {
    CHECK(a.traces[i].objective == b.traces[i].objective);
    CHECK(a.traces[i].objective == c.traces[i].objective);
    CHECK(a.traces[i].consensus == b.traces[i].consensus);
    CHECK(a.traces[i].consensus == c.traces[i].consensus);
    CHECK(a.traces[i].dual_sum_max == c.traces[i].dual_sum_max);
  }
  for (std::size_t n = 0; n < a.states.size(); ++n) {
    CHECK(a.states[n].Q == c.states[n].Q);
    CHECK(a.states[n].p == c.states[n].p);
    CHECK(a.states[n].o == c.states[n].o);
    CHECK(a.states[n].S == c.states[n].S);
  }
}

TEST_CASE("aggregate estimate identities") {
  const ObservationSet obs = small_observations(4, 8, 0.8, 190);
  const MeterGraph g = dpcp::make_graph(4, {{0, 1}, {1, 2}, {2, 3}});
  DpcpConfig cfg;
  cfg.rho = 2;
  cfg.lambda_star = 0.3;
  cfg.lambda_1 = 0.05;
  cfg.seed = 191;
  auto states = dpcp::init_network(obs, g, cfg);

  for (NodeState& s : states) s.p.setZero();
  auto [x_zero, o_zero] = dpcp::aggregate_estimate(states);
  CHECK(x_zero.norm() == 0.0);

  const Matrix q_shared = random_matrix(8, 2, 192);
  Matrix p_stack(4, 2);
  for (std::size_t n = 0; n < states.size(); ++n) {
    states[n].Q = q_shared;
    states[n].p = random_matrix(2, 1, 200 + n).col(0);
    p_stack.row(static_cast<Index>(n)) = states[n].p.transpose();
  }
  auto [x_hat, o_hat] = dpcp::aggregate_estimate(states);
  CHECK((x_hat - p_stack * q_shared.transpose()).norm() <= 1e-13);
}

TEST_CASE("consensus error formula and degenerate branch") {
  const ObservationSet obs = small_observations(2, 5, 1.0, 210);
  const MeterGraph g = dpcp::make_graph(2, {{0, 1}});
  DpcpConfig cfg;
  cfg.rho = 2;
  cfg.lambda_star = 0.3;
  cfg.lambda_1 = 0.05;
  cfg.seed = 211;
  auto states = dpcp::init_network(obs, g, cfg);

  states[1].Q = states[0].Q;
  dpcp::ConsensusReport rep = dpcp::consensus_error(states);
  CHECK(rep.per_node[0] == 0.0);
  CHECK(rep.per_node[1] == 0.0);
  CHECK_FALSE(rep.degenerate_reference);

  // Opposite factors: the mean vanishes and absolute distances are reported.
  states[1].Q = -states[0].Q;
  rep = dpcp::consensus_error(states);
  CHECK(rep.degenerate_reference);
  CHECK(rep.per_node[0] == doctest::Approx(states[0].Q.norm()));

  // Random states match a direct recomputation.
  states[0].Q = random_matrix(5, 2, 212);
  states[1].Q = random_matrix(5, 2, 213);
  rep = dpcp::consensus_error(states);
  const Matrix mean = 0.5 * (states[0].Q + states[1].Q);
  for (int n = 0; n < 2; ++n)
    CHECK(rep.per_node[static_cast<std::size_t>(n)] ==
          doctest::Approx((states[static_cast<std::size_t>(n)].Q - mean).norm() /
                          mean.norm()));
}

TEST_CASE("certificate thresholds on the residual spectral norm") {
  const ObservationSet obs = small_observations(3, 6, 1.0, 220);
  const MeterGraph g = dpcp::make_graph(3, {{0, 1}, {1, 2}});
  DpcpConfig cfg;
  cfg.rho = 2;
  cfg.lambda_star = 0.3;
  cfg.lambda_1 = 0.05;
  cfg.seed = 221;
  auto states = dpcp::init_network(obs, g, cfg);

  // Make the residual exactly zero: identical factors, o soaking up the rest.
  const Matrix q_shared = random_matrix(6, 2, 222);
  for (NodeState& s : states) {
    s.Q = q_shared;
    s.p = random_matrix(2, 1, 223).col(0);
    s.o = s.omega.cwiseProduct(s.y - s.Q * s.p);
  }
  dpcp::Certificate cert = dpcp::certificate(states, obs, 0.5);
  CHECK(cert.residual_spectral <= 1e-12);
  CHECK(cert.holds);

  // lambda_star = 0 can never certify (strict inequality).
  cert = dpcp::certificate(states, obs, 0.0);
  CHECK_FALSE(cert.holds);
}

TEST_CASE("objective blow-up raises a divergence error carrying the trace") {
  ObservationSet obs;
  obs.values = Matrix::Ones(3, 5) * 1e12;
  obs.mask = Matrix::Ones(3, 5);
  const MeterGraph g = dpcp::make_graph(3, {{0, 1}, {1, 2}});
  DpcpConfig cfg;
  cfg.rho = 1;
  cfg.lambda_star = 0.1;
  cfg.lambda_1 = 0.1;
  cfg.max_rounds = 5;
  cfg.seed = 230;
  bool thrown = false;
  try {
    dpcp::run(obs, g, cfg);
  } catch (const dpcp::DivergedError& e) {
    thrown = true;
    CHECK_FALSE(e.traces.empty());
  }
  CHECK(thrown);
}
