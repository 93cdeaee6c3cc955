#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "riswb/scenario.hpp"
#include "riswb/switches.hpp"

namespace riswb {

// All downlink precoders: w[k][l] is an N_tx x N_sub matrix whose column n is
// w_{l_k, n}.
struct PrecoderSet {
  std::vector<std::vector<Eigen::MatrixXcd>> w;

  double cell_power(int k) const;
};

// Cached composite channels: f[j][u] is N_tx x N_sub with column n = f_{j,u,n},
// the channel from BS j (through RIS j) to global UE u. Stored as the column
// vector whose adjoint is the row appearing in the rate terms.
struct CompositeChannels {
  std::vector<std::vector<Eigen::MatrixXcd>> f;
};

// Builds every f_{j,u,n} from the scenario and the RIS state of each cell.
CompositeChannels build_composites(const WidebandScenario& sc,
                                   const std::vector<Eigen::VectorXd>& c,
                                   const std::vector<SwitchMatrix>& S);

struct RateReport {
  std::vector<double> per_ue;  // bits/s/Hz
  double sum_rate = 0.0;
  int index = 0;               // iteration or episode
  std::uint64_t seed = 0;
  std::string mode;
};

// gamma_n = |m v_n|^2 / (sum_{j != n} |m v_j|^2 + sigma2 / p)
double sinr_narrowband(const Eigen::RowVectorXcd& m, const Eigen::MatrixXcd& V,
                       int target, double sigma2, double p);

// Sum over UEs of log2(1 + gamma_n); m_rows holds one row m_n per UE.
double sum_rate_narrowband(const std::vector<Eigen::RowVectorXcd>& m_rows,
                           const Eigen::MatrixXcd& V, double sigma2, double p);

// Desired-signal power and MUI (noise plus intra- and inter-cell
// interference) for one UE on one subcarrier.
struct LinkPower {
  double signal = 0.0;
  double mui = 0.0;
};

LinkPower link_power(const CompositeChannels& f, const PrecoderSet& W,
                     double sigma2, const WidebandScenario& sc, int cell,
                     int local_ue, int n);

// (1/N_sub) sum_n log2(1 + |f^H w|^2 / MUI) for UE l of cell k; MUI contains
// the noise floor plus intra- and inter-cell interference.
double rate_wideband(const CompositeChannels& f, const PrecoderSet& W,
                     double sigma2, const WidebandScenario& sc, int cell,
                     int local_ue);

// Sum of rate_wideband over every UE of every cell.
double total_rate(const CompositeChannels& f, const PrecoderSet& W,
                  double sigma2, const WidebandScenario& sc);

struct MonteCarloResult {
  double mean = 0.0;
  double stderr_of_mean = 0.0;
  int n_runs = 0;
  std::vector<double> samples;
};

// Runs evaluator(i, seed_i) for i in [0, n_runs) on disjoint derived streams;
// deterministic regardless of worker count.
MonteCarloResult monte_carlo(
    const std::function<double(int, std::uint64_t)>& evaluator, int n_runs,
    std::uint64_t seed, const std::string& stream_name, int workers = 0);

// One row per record; floats rendered with "%.10g" so identical runs are
// byte-identical.
std::string format_double(double v);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace riswb
