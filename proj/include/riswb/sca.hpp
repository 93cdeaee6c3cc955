#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "riswb/metrics.hpp"
#include "riswb/scenario.hpp"
#include "riswb/switches.hpp"

namespace riswb {

struct SolverOptions {
  double tau = 1.0;
  double epsilon = 1e-4;
  int max_iterations = 100;
  double step_a = 0.9;   // a(t) in the step rule
  double step_b = 0.95;  // b(t) = step_b * t
  bool cooperative = true;  // false zeroes every pricing term
  bool bd = true;           // false freezes S at identity and skips its update
  double bisection_rel_tol = 1e-9;
  int bisection_max_iters = 200;
  int workers = 1;  // per-BS subproblems within one iteration

  void validate() const;
};

struct SolverState {
  PrecoderSet precoders;                      // w[k][l]: N_tx x N_sub
  std::vector<Eigen::VectorXd> capacitances;  // [k]: N_ris
  std::vector<SwitchMatrix> switches;         // [k]
  int iteration = 0;
  double step = 1.0;       // alpha used to reach this iterate
  double objective = 0.0;  // Rbar, 1/N_sub-normalized sum rate
};

// Matched filter to the own direct channel with an equal power split meeting
// P_k^max with equality; c at the box midpoint; S identity.
SolverState make_initial_state(const WidebandScenario& sc);

// Throws if any feasibility invariant (power, box, permutation) is violated.
void check_state(const SolverState& state, const WidebandScenario& sc);

// Prices BS k receives from the other cells at iterate t.
struct PricingBundle {
  std::vector<Eigen::MatrixXcd> precoder;  // [l]: N_tx x N_sub, col n = pi_bar
  Eigen::VectorXd capacitance;             // N_ris
  Eigen::MatrixXd switch_price;            // N_ris x N_ris
};

// Per-iterate quantities shared by the three block updates.
struct IterateCache {
  CompositeChannels f;
  std::vector<Eigen::MatrixXcd> phi;   // [k]: N_ris x N_sub
  std::vector<Eigen::MatrixXcd> dphi;  // [k]: N_ris x N_sub, d phi / d C
  std::vector<std::vector<Eigen::VectorXd>> mui;  // [cell][local]: N_sub
  std::vector<std::vector<Eigen::VectorXd>> snr;  // [cell][local]: N_sub
};

IterateCache make_cache(const SolverState& state, const WidebandScenario& sc);

// pi_bar for precoder (k, l) on subcarrier n; zero when K = 1 or in
// non-cooperative mode.
Eigen::VectorXcd pricing_precoder(const SolverState& state,
                                  const IterateCache& cache,
                                  const WidebandScenario& sc, int k, int l,
                                  int n, const SolverOptions& opt);

struct SurrogateCoeffs {
  double a = 0.0;
  Eigen::VectorXcd b;
};

SurrogateCoeffs surrogate_coeffs(const SolverState& state,
                                 const IterateCache& cache,
                                 const WidebandScenario& sc, int k, int l,
                                 int n);

// Closed-form maximizer of the concave per-BS surrogate under the power ball,
// with a bisection on the multiplier when the budget binds. Returns the
// unblended hat precoders for every UE of cell k.
std::vector<Eigen::MatrixXcd> update_precoder(const SolverState& state,
                                              const IterateCache& cache,
                                              const WidebandScenario& sc, int k,
                                              const SolverOptions& opt);

// (gamma_c, pi_c), the own-rate gradient and the pricing term w.r.t. c_k.
std::pair<Eigen::VectorXd, Eigen::VectorXd> capacitance_gradients(
    const SolverState& state, const IterateCache& cache,
    const WidebandScenario& sc, int k, const SolverOptions& opt);

Eigen::VectorXd update_capacitances(const SolverState& state, int k,
                                    const Eigen::VectorXd& gamma,
                                    const Eigen::VectorXd& pi,
                                    const SolverOptions& opt,
                                    const RisCircuitParams& circuit);

// (Gamma_S, Pi_S) as real matrices; entry (i, j) prices placing a 1 at S(i,j).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> switch_gradients(
    const SolverState& state, const IterateCache& cache,
    const WidebandScenario& sc, int k, const SolverOptions& opt);

// argmax over permutations of Tr((Gamma + Pi + tau * S^t)^T S) via the LAP.
SwitchMatrix update_switch(const SolverState& state, int k,
                           const Eigen::MatrixXd& gamma,
                           const Eigen::MatrixXd& pi, const SolverOptions& opt);

// alpha^t = (alpha^{t-1} + a) / (1 + b t), t >= 1, alpha^0 = 1.
double step_size(int t, double a, double b, double alpha_prev);

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  std::vector<double> per_cell_rate;
  double step = 1.0;
};

struct SolverResult {
  SolverState state;  // converged iterate, or the best one seen if not
  std::vector<IterationRecord> trace;
  bool converged = false;
};

SolverResult run_algorithm1(const WidebandScenario& sc,
                            const SolverOptions& opt);
SolverResult run_algorithm1(const WidebandScenario& sc, const SolverOptions& opt,
                            const SolverState& init);

}  // namespace riswb
