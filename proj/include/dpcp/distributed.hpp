#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "dpcp/common.hpp"
#include "dpcp/graph.hpp"

namespace dpcp {

// Regularizer used in the per-node factor-row solve: the coefficient derived
// from the factorized objective (lambda_star), or the literal unit matrix
// variant. Both are legitimate readings of the update; lambda_star is the one
// consistent with the penalty (lambda_star/2)(||P||^2 + ||Q||^2).
enum class PReg { kLambdaStar, kOne };

struct DpcpConfig {
  int rho = 1;                 // factor width, an upper bound on rank(X_hat)
  double c = 1.0;              // consensus penalty, > 0
  double lambda_star = 0.0;
  double lambda_1 = 0.0;
  int max_rounds = 1000;
  double consensus_tol = 1e-3;
  double objective_tol = 1e-9;  // relative change over a 10-round lookback
  std::uint64_t seed = 1;
  PReg p_reg = PReg::kLambdaStar;
  int threads = 1;  // intra-round workers; results are schedule-independent
};

// Per-meter solver state. Each node owns one row of the data and of the
// estimates, a local copy Q of the shared factor, and the aggregated dual S.
struct NodeState {
  int id = 0;
  int n_network = 0;  // total node count N; scales the factor penalty
  Vector y;           // T measurements (zero where unobserved)
  Vector omega;       // T observation indicators in {0,1}
  Matrix Q;           // T x rho local factor copy
  Vector p;           // rho factor row
  Vector o;           // T outlier estimate, zero off-mask
  Matrix S;           // T x rho aggregated dual
  std::vector<int> neighbors;
};

// Previous-round factor copies of a node's neighbors, keyed by node id.
// Values point into the round's immutable broadcast snapshot.
using QMessages = std::map<int, const Matrix*>;

struct RoundTrace {
  int k = 0;
  std::optional<double> e_X;  // present when ground truth was supplied
  std::optional<double> e_O;
  std::vector<double> consensus;  // per-node relative factor disagreement
  double consensus_max = 0.0;
  double objective = 0.0;      // factorized objective at the current iterates
  double dual_sum_max = 0.0;   // max-abs entry of the networkwide dual sum
};

enum class StopReason { kConverged, kMaxRounds };
const char* to_string(StopReason r);

struct RunResult {
  std::vector<NodeState> states;
  std::vector<RoundTrace> traces;
  StopReason stop_reason = StopReason::kMaxRounds;
};

// Divergence (factorized objective above 1e12); carries the trace up to and
// including the offending round.
class DivergedError : public NumericalError {
 public:
  DivergedError(const std::string& what, std::vector<RoundTrace> traces)
      : NumericalError(what), traces(std::move(traces)) {}
  std::vector<RoundTrace> traces;
};

void validate(const DpcpConfig& cfg);

// S := 0, o := 0, Q and p i.i.d. N(0, 1/rho) from a per-node derived stream.
std::vector<NodeState> init_network(const ObservationSet& obs, const MeterGraph& g,
                                    const DpcpConfig& cfg);

// S += c * sum over neighbors of (Q_self - Q_neighbor). Messages must cover
// the neighborhood exactly; anything else throws ValidationError.
void s1_dual_update(NodeState& node, const QMessages& neighbor_q, double c);

// Per-time-slot solve of the local factor quadratic:
// (omega_t * p p' + alpha I) q_t = omega_t (y_t - o_t) p - s_t
//   + c * sum over neighbors (q_self_t + q_neighbor_t),
// alpha = lambda_star/N + 2 c |J_n|. Reads the node's previous-round Q, p, o,
// S (S already advanced by s1 this round). Returns the new Q.
Matrix s2_q_update(const NodeState& node, const QMessages& neighbor_q,
                   const DpcpConfig& cfg);

// Factor-row ridge solve against the new Q and the previous-round o:
// p = (Q' diag(omega) Q + reg I)^{-1} Q' diag(omega) (y - o).
Vector s3_p_update(const NodeState& node, const DpcpConfig& cfg);

// Soft-threshold of the masked residual; exact zeros off-mask.
Vector s4_o_update(const NodeState& node, double lambda_1);

// Sum over nodes of the local data misfit, the l1 penalty, and the scaled
// factor penalties; equals the global factorized objective once every Q agrees.
double factorized_objective(const std::vector<NodeState>& states,
                            const DpcpConfig& cfg);

struct ConsensusReport {
  std::vector<double> per_node;
  bool degenerate_reference = false;  // mean factor had zero norm; values absolute
};
ConsensusReport consensus_error(const std::vector<NodeState>& states);

// Row n of X_hat is Q_n p_n; row n of O_hat is o_n.
std::pair<Matrix, Matrix> aggregate_estimate(const std::vector<NodeState>& states);

// One synchronous round: snapshot all Q, then per node [S1]..[S4] against the
// snapshot, then the trace from the post-round states. Node updates may run on
// cfg.threads workers; the result does not depend on the schedule.
RoundTrace run_round(std::vector<NodeState>& states, const MeterGraph& g,
                     const DpcpConfig& cfg, const Matrix* x_true = nullptr,
                     const Matrix* o_true = nullptr);

// Rounds until max_rounds, or until consensus_max < consensus_tol and the
// relative objective change over the last 10 rounds drops below objective_tol.
RunResult run(const ObservationSet& obs, const MeterGraph& g, const DpcpConfig& cfg,
              const Matrix* x_true = nullptr, const Matrix* o_true = nullptr);

struct Certificate {
  bool holds = false;
  double residual_spectral = 0.0;
};

// Global-optimality check at (approximate) consensus: spectral norm of the
// masked residual Y - P Qbar' - O strictly below lambda_star certifies that
// the factored iterate solves the convex program.
Certificate certificate(const std::vector<NodeState>& states, const ObservationSet& obs,
                        double lambda_star);

}  // namespace dpcp
