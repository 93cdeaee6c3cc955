#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "riswb/banded.hpp"
#include "riswb/codebook.hpp"
#include "riswb/rng.hpp"
#include "riswb/scenario.hpp"

namespace riswb {

// Shapes of the K shared MBACNN controllers plus the BS fusion network.
struct ArchitectureSpec {
  int n_tx = 16;
  int n_ue = 1;
  int n_ris = 400;
  int n_surfaces = 1;  // K
  int n_bands = 1;     // N_B; 0 = conventional diagonal RIS
  int phase_bits = 1;  // b
  int codebook_size = 16;
  bool direct_blocked = true;
  std::array<int, 3> conv_channels = {8, 8, 1};
  int conv_kernel = 3;
  int ris_hidden = 0;   // 0 -> 4 * n_ris
  int prec_hidden = 0;  // 0 -> 2 * codebook_size
  int ff_hidden = 0;    // NE-FF extractor width; 0 -> 4 * n_ris

  int d_cat() const { return 2 * n_tx + 2 * n_ue; }
  int n_phase_states() const { return 1 << phase_bits; }
  int feature_len() const { return n_ris * d_cat(); }
  int ris_head_out() const {
    const int diag = phase_bits == 1 ? n_ris : n_ris * n_phase_states();
    return diag + 2 * n_bands * n_ris;
  }
  int ris_hidden_width() const { return ris_hidden > 0 ? ris_hidden : 4 * n_ris; }
  int prec_hidden_width() const {
    return prec_hidden > 0 ? prec_hidden : 2 * codebook_size;
  }
  int ff_hidden_width() const { return ff_hidden > 0 ? ff_hidden : 4 * n_ris; }
  int ff_input_len() const {
    return 2 * n_tx * n_ris + 2 * n_ris * n_ue +
           (direct_blocked ? 0 : 2 * n_tx * n_ue);
  }
  int fusion_in() const { return n_surfaces * n_ue * codebook_size; }

  void validate() const;
};

struct GenomeSegment {
  std::string name;
  int offset = 0;
  int rows = 0;
  int cols = 0;  // 1 for bias vectors

  int len() const { return rows * cols; }
};

// Maps genome positions to layers. Genes [0, w_ris_len) form W_ris (shared by
// all K controllers); the remainder is the BS fusion network W_bs.
struct GenomeLayout {
  std::vector<GenomeSegment> segments;
  int total = 0;
  int w_ris_len = 0;
  bool ff_variant = false;

  const GenomeSegment& find(const std::string& name) const;
};

GenomeLayout genome_layout(const ArchitectureSpec& arch, bool ff_variant = false);

struct Genome {
  Eigen::VectorXd values;
};

// i.i.d. N(0, 0.5^2) initialization.
Genome random_genome(const GenomeLayout& layout, RngStream& rng);

// [Re{H}; Im{H}]: doubles the row count.
Eigen::MatrixXd stack_real(const Eigen::MatrixXcd& h);

// A = softmax(Q K^T / sqrt(scale_dim)) P with Q = Wq X, K = Wk X, P = Wv X;
// the softmax runs over the complete score array (all entries sum to 1).
Eigen::MatrixXd attention_layer(const Eigen::MatrixXd& x,
                                const Eigen::MatrixXd& wq,
                                const Eigen::MatrixXd& wk,
                                const Eigen::MatrixXd& wv, int scale_dim);

struct ControllerDecision {
  BandedRisConfig config;
  std::vector<int> precoder_indices;  // N_ue entries, 0-based codebook columns
};

// Full MBACNN pass on the real-stacked channels (h_d ignored when the
// architecture flags the direct channel as blocked).
ControllerDecision mbacnn_forward(const Genome& genome,
                                  const GenomeLayout& layout,
                                  const ArchitectureSpec& arch,
                                  const Eigen::MatrixXd& h_d,
                                  const Eigen::MatrixXd& h1,
                                  const Eigen::MatrixXd& h2);

// NE-FF baseline: plain MLP feature extractor feeding the same output heads.
ControllerDecision neff_forward(const Genome& genome, const GenomeLayout& layout,
                                const ArchitectureSpec& arch,
                                const Eigen::MatrixXd& h_d,
                                const Eigen::MatrixXd& h1,
                                const Eigen::MatrixXd& h2);

// BS fusion: one-hot encodes the K candidate index sets and selects the final
// codebook index per UE.
std::vector<int> fusion_forward(const Genome& genome, const GenomeLayout& layout,
                                const ArchitectureSpec& arch,
                                const std::vector<std::vector<int>>& candidates);

// Sum rate of one narrowband channel draw under the configurations phis and
// the precoding matrix v; p is the per-stream transmit power.
double broadcast_sum_rate(const NarrowbandChannelSet& ch,
                          const std::vector<Eigen::MatrixXcd>& phis,
                          const Eigen::MatrixXcd& v, double sigma2, double p);

struct EvalOptions {
  bool zero_phi = false;    // all reflections off (direct-only oracle hook)
  int restrict_blocks = 0;  // >0: diag states equal inside each of the blocks
  bool stochastic = false;  // sample precoder indices from the softmax
};

// Fitness = sum over N_EP episodes and T steps of the instantaneous sum rate.
double evaluate_genome(const Genome& genome, const GenomeLayout& layout,
                       const ArchitectureSpec& arch,
                       const NarrowbandConfig& cfg, int n_episodes, int horizon,
                       std::uint64_t seed, const EvalOptions& opts = {});

struct CosyneParams {
  int population = 100;
  int generations = 25;
  double mutation_prob = 0.3;
  double mutation_var = 0.2;
  double elite_fraction = 0.25;
  int n_episodes = 100;
  int horizon = 50;
  int workers = 1;

  void validate() const;
};

struct Population {
  Eigen::MatrixXd genes;  // one genome per row
  Eigen::VectorXd fitness;
  std::vector<std::uint8_t> evaluated;  // elites carry their fitness over
  int generation = 0;
};

Population init_population(const GenomeLayout& layout, int size, RngStream& rng);

// Rank, copy elites, breed offspring (one-point crossover of two random elite
// parents + per-gene Gaussian mutation), then the CoSyNE per-gene permutation
// shuffle across the offspring.
Population cosyne_step(const Population& pop, const CosyneParams& params,
                       RngStream& rng);

struct GenerationStats {
  int generation = 0;
  double best = 0.0;
  double mean = 0.0;
};

struct TrainResult {
  Genome best;
  double best_fitness = 0.0;
  std::vector<GenerationStats> curve;
};

TrainResult train(const ArchitectureSpec& arch, const NarrowbandConfig& cfg,
                  const CosyneParams& params, std::uint64_t seed,
                  bool ff_variant = false, const EvalOptions& opts = {});

struct BesResult {
  BandedRisConfig config;
  std::vector<int> precoder_indices;
  double sum_rate = 0.0;
};

// Exhaustive search over 2^n_blk block-diagonal patterns x codebook^N_ue;
// refuses (with the candidate count) above max_candidates.
BesResult bes_baseline(const NarrowbandChannelSet& ch,
                       const NarrowbandConfig& cfg, int n_blk,
                       const PrecoderCodebook& codebook,
                       std::uint64_t max_candidates = 1u << 22);

struct Checkpoint {
  ArchitectureSpec arch;
  bool ff_variant = false;
  Genome genome;
  double best_fitness = 0.0;
  std::vector<GenerationStats> curve;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace riswb
