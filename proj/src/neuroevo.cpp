#include "riswb/neuroevo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <utility>

#include <json.hpp>

#include "riswb/common.hpp"
#include "riswb/metrics.hpp"
#include "riswb/parallel.hpp"

namespace riswb {

namespace {

constexpr double kLayerNormEps = 1e-5;

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

Eigen::MatrixXd reshape(const Eigen::VectorXd& v, int rows, int cols) {
  if (v.size() != static_cast<Eigen::Index>(rows) * cols)
    throw DimensionError("reshape: length mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

Eigen::Map<const Eigen::MatrixXd> seg_matrix(const Genome& g,
                                             const GenomeLayout& layout,
                                             const std::string& name) {
  const GenomeSegment& s = layout.find(name);
  return {g.values.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<const Eigen::VectorXd> seg_vector(const Genome& g,
                                             const GenomeLayout& layout,
                                             const std::string& name) {
  const GenomeSegment& s = layout.find(name);
  return {g.values.data() + s.offset, s.rows};
}

// Entire score array normalized jointly, not per row.
Eigen::MatrixXd softmax_all(const Eigen::MatrixXd& z) {
  const Eigen::ArrayXXd e = (z.array() - z.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& m) {
  const double mean = m.mean();
  const double var = (m.array() - mean).square().mean();
  return ((m.array() - mean) / std::sqrt(var + kLayerNormEps)).matrix();
}

// Zero-padded same-size cross-correlation; kernel weights for output channel o
// and input channel i live in w(o, i*k*k + r*k + c).
std::vector<Eigen::MatrixXd> conv_layer(const std::vector<Eigen::MatrixXd>& in,
                                        const Eigen::MatrixXd& w,
                                        const Eigen::VectorXd& b, int k,
                                        bool relu) {
  const int in_ch = static_cast<int>(in.size());
  const int out_ch = static_cast<int>(w.rows());
  if (w.cols() != static_cast<Eigen::Index>(in_ch) * k * k || b.size() != out_ch)
    throw DimensionError("conv_layer: weight shape mismatch");
  const int rows = static_cast<int>(in[0].rows());
  const int cols = static_cast<int>(in[0].cols());
  const int pad = k / 2;
  std::vector<Eigen::MatrixXd> out(out_ch);
  for (int o = 0; o < out_ch; ++o) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Constant(rows, cols, b(o));
    for (int i = 0; i < in_ch; ++i) {
      for (int r = 0; r < k; ++r) {
        const int y0 = std::max(0, pad - r);
        const int y1 = std::min(rows, rows + pad - r);
        if (y1 <= y0) continue;
        for (int c = 0; c < k; ++c) {
          const int x0 = std::max(0, pad - c);
          const int x1 = std::min(cols, cols + pad - c);
          if (x1 <= x0) continue;
          acc.block(y0, x0, y1 - y0, x1 - x0) +=
              w(o, i * k * k + r * k + c) *
              in[i].block(y0 + r - pad, x0 + c - pad, y1 - y0, x1 - x0);
        }
      }
    }
    out[o] = relu ? acc.cwiseMax(0.0).eval() : std::move(acc);
  }
  return out;
}

int argmax_index(const Eigen::VectorXd& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

int sample_index(const Eigen::VectorXd& logits, RngStream& rng) {
  Eigen::ArrayXd p = (logits.array() - logits.maxCoeff()).exp();
  p /= p.sum();
  const double r = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    acc += p(i);
    if (r < acc) return i;
  }
  return static_cast<int>(p.size()) - 1;
}

void check_genome(const Genome& g, const GenomeLayout& layout) {
  if (g.values.size() != layout.total)
    throw DimensionError("genome length does not match the layout");
}

// Convolutional feature map flattened column-major into the head input.
Eigen::VectorXd mbacnn_features(const Genome& g, const GenomeLayout& layout,
                                const ArchitectureSpec& arch,
                                const Eigen::MatrixXd& h_d,
                                const Eigen::MatrixXd& h1,
                                const Eigen::MatrixXd& h2) {
  if (h1.rows() != 2 * arch.n_tx || h1.cols() != arch.n_ris)
    throw DimensionError("mbacnn_features: h1 must be 2*n_tx x n_ris");
  if (h2.rows() != 2 * arch.n_ris || h2.cols() != arch.n_ue)
    throw DimensionError("mbacnn_features: h2 must be 2*n_ris x n_ue");

  // Token rows: one per RIS element.
  const Eigen::MatrixXd x1 = h1.transpose();
  Eigen::MatrixXd x2(arch.n_ris, 2 * arch.n_ue);
  x2 << h2.topRows(arch.n_ris), h2.bottomRows(arch.n_ris);

  const int scale = 2 * arch.n_tx;
  const Eigen::MatrixXd a1 =
      attention_layer(x1, seg_matrix(g, layout, "attn1_q"),
                      seg_matrix(g, layout, "attn1_k"),
                      seg_matrix(g, layout, "attn1_v"), scale);
  const Eigen::MatrixXd a2 =
      attention_layer(x2, seg_matrix(g, layout, "attn2_q"),
                      seg_matrix(g, layout, "attn2_k"),
                      seg_matrix(g, layout, "attn2_v"), scale);
  Eigen::MatrixXd a_cat(arch.n_ris, arch.d_cat());
  a_cat << a1, a2;

  Eigen::MatrixXd a_total;
  if (arch.direct_blocked) {
    a_total = layer_norm(a_cat);
  } else {
    if (h_d.rows() != 2 * arch.n_tx || h_d.cols() != arch.n_ue)
      throw DimensionError("mbacnn_features: h_d must be 2*n_tx x n_ue");
    Eigen::MatrixXd xd(arch.n_tx, 2 * arch.n_ue);
    xd << h_d.topRows(arch.n_tx), h_d.bottomRows(arch.n_tx);
    const Eigen::MatrixXd ad =
        attention_layer(xd, seg_matrix(g, layout, "attn0_q"),
                        seg_matrix(g, layout, "attn0_k"),
                        seg_matrix(g, layout, "attn0_v"), scale);
    const Eigen::VectorXd a0_flat =
        seg_matrix(g, layout, "ff0_w") * flatten(ad) +
        seg_vector(g, layout, "ff0_b");
    const Eigen::MatrixXd a0 = reshape(a0_flat, arch.n_ris, arch.d_cat());
    a_total = layer_norm(a_cat) + layer_norm(a0);
  }

  std::vector<Eigen::MatrixXd> maps{std::move(a_total)};
  maps = conv_layer(maps, seg_matrix(g, layout, "conv1_w"),
                    seg_vector(g, layout, "conv1_b"), arch.conv_kernel, true);
  maps = conv_layer(maps, seg_matrix(g, layout, "conv2_w"),
                    seg_vector(g, layout, "conv2_b"), arch.conv_kernel, true);
  maps = conv_layer(maps, seg_matrix(g, layout, "conv3_w"),
                    seg_vector(g, layout, "conv3_b"), arch.conv_kernel, false);
  return flatten(maps[0]);
}

Eigen::VectorXd neff_features(const Genome& g, const GenomeLayout& layout,
                              const ArchitectureSpec& arch,
                              const Eigen::MatrixXd& h_d,
                              const Eigen::MatrixXd& h1,
                              const Eigen::MatrixXd& h2) {
  if (h1.rows() != 2 * arch.n_tx || h1.cols() != arch.n_ris)
    throw DimensionError("neff_features: h1 must be 2*n_tx x n_ris");
  if (h2.rows() != 2 * arch.n_ris || h2.cols() != arch.n_ue)
    throw DimensionError("neff_features: h2 must be 2*n_ris x n_ue");
  Eigen::VectorXd x(arch.ff_input_len());
  Eigen::Index off = 0;
  x.segment(off, h1.size()) = flatten(h1);
  off += h1.size();
  x.segment(off, h2.size()) = flatten(h2);
  off += h2.size();
  if (!arch.direct_blocked) {
    if (h_d.rows() != 2 * arch.n_tx || h_d.cols() != arch.n_ue)
      throw DimensionError("neff_features: h_d must be 2*n_tx x n_ue");
    x.segment(off, h_d.size()) = flatten(h_d);
  }
  const Eigen::VectorXd hidden =
      (seg_matrix(g, layout, "ext_w1") * x + seg_vector(g, layout, "ext_b1"))
          .cwiseMax(0.0);
  return seg_matrix(g, layout, "ext_w2") * hidden +
         seg_vector(g, layout, "ext_b2");
}

struct HeadOutputs {
  Eigen::VectorXd ris;
  std::vector<Eigen::VectorXd> prec;
};

HeadOutputs controller_heads(const Genome& g, const GenomeLayout& layout,
                             const ArchitectureSpec& arch,
                             const Eigen::VectorXd& features) {
  HeadOutputs out;
  const Eigen::VectorXd rh =
      (seg_matrix(g, layout, "ris_w1") * features +
       seg_vector(g, layout, "ris_b1"))
          .cwiseMax(0.0);
  out.ris = seg_matrix(g, layout, "ris_w2") * rh + seg_vector(g, layout, "ris_b2");
  out.prec.resize(arch.n_ue);
  for (int u = 0; u < arch.n_ue; ++u) {
    const std::string tag = "prec" + std::to_string(u);
    const Eigen::VectorXd ph =
        (seg_matrix(g, layout, tag + "_w1") * features +
         seg_vector(g, layout, tag + "_b1"))
            .cwiseMax(0.0);
    out.prec[u] =
        seg_matrix(g, layout, tag + "_w2") * ph + seg_vector(g, layout, tag + "_b2");
  }
  return out;
}

// Sign parse for b = 1 and the switch entries: >= 0 selects state 0 / ON.
BandedRisConfig parse_ris_output(const ArchitectureSpec& arch,
                                 const Eigen::VectorXd& y) {
  if (y.size() != arch.ris_head_out())
    throw DimensionError("parse_ris_output: head output length mismatch");
  BandedRisConfig cfg;
  cfg.n_ris = arch.n_ris;
  cfg.n_b = arch.n_bands;
  cfg.diag_states.resize(arch.n_ris);
  int off = 0;
  if (arch.phase_bits == 1) {
    for (int i = 0; i < arch.n_ris; ++i)
      cfg.diag_states[i] = y(i) >= 0.0 ? 0 : 1;
    off = arch.n_ris;
  } else {
    const int s = arch.n_phase_states();
    for (int i = 0; i < arch.n_ris; ++i)
      cfg.diag_states[i] = argmax_index(y.segment(i * s, s));
    off = arch.n_ris * s;
  }
  cfg.band_switches.assign(2 * static_cast<std::size_t>(arch.n_bands) * arch.n_ris, 0);
  for (std::size_t j = 0; j < cfg.band_switches.size(); ++j)
    cfg.band_switches[j] = y(off + static_cast<int>(j)) >= 0.0 ? 1 : 0;
  return cfg;
}

Eigen::VectorXd fusion_logits(const Genome& g, const GenomeLayout& layout,
                              const ArchitectureSpec& arch,
                              const std::vector<std::vector<int>>& candidates) {
  if (static_cast<int>(candidates.size()) != arch.n_surfaces)
    throw DimensionError("fusion: expected one candidate set per surface");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(arch.fusion_in());
  for (int k = 0; k < arch.n_surfaces; ++k) {
    if (static_cast<int>(candidates[k].size()) != arch.n_ue)
      throw DimensionError("fusion: candidate set must hold one index per UE");
    for (int u = 0; u < arch.n_ue; ++u) {
      const int idx = candidates[k][u];
      if (idx < 0 || idx >= arch.codebook_size)
        throw DomainError("fusion: candidate index out of range");
      x(k * arch.n_ue * arch.codebook_size + u * arch.codebook_size + idx) = 1.0;
    }
  }
  const Eigen::VectorXd hidden =
      (seg_matrix(g, layout, "fusion_w1") * x + seg_vector(g, layout, "fusion_b1"))
          .cwiseMax(0.0);
  return seg_matrix(g, layout, "fusion_w2") * hidden +
         seg_vector(g, layout, "fusion_b2");
}

// Diagonal states forced equal inside each of n_blk contiguous blocks; the
// block's first element decides.
void apply_block_restriction(BandedRisConfig& cfg, int n_blk) {
  const int bs = cfg.n_ris / n_blk;
  for (int blk = 0; blk < n_blk; ++blk) {
    const int s = cfg.diag_states[blk * bs];
    for (int i = 1; i < bs; ++i) cfg.diag_states[blk * bs + i] = s;
  }
}

}  // namespace

void ArchitectureSpec::validate() const {
  if (n_tx < 1 || n_ue < 1 || n_ris < 1 || n_surfaces < 1)
    throw ConfigError("architecture: dimensions must be positive");
  if (n_bands < 0 || n_bands > std::max(0, n_ris - 1))
    throw ConfigError("architecture: n_bands must lie in [0, n_ris - 1]");
  if (phase_bits < 1 || phase_bits > 8)
    throw ConfigError("architecture: phase_bits must lie in [1, 8]");
  if (codebook_size < 1)
    throw ConfigError("architecture: codebook_size must be positive");
  if (conv_channels[0] < 1 || conv_channels[1] < 1 || conv_channels[2] != 1)
    throw ConfigError("architecture: conv channels must be positive and end at 1");
  if (conv_kernel < 1 || conv_kernel % 2 == 0)
    throw ConfigError("architecture: conv_kernel must be odd");
  if (ris_hidden < 0 || prec_hidden < 0 || ff_hidden < 0)
    throw ConfigError("architecture: hidden widths must be non-negative");
}

const GenomeSegment& GenomeLayout::find(const std::string& name) const {
  for (const GenomeSegment& s : segments)
    if (s.name == name) return s;
  throw ConfigError("unknown genome segment: " + name);
}

GenomeLayout genome_layout(const ArchitectureSpec& arch, bool ff_variant) {
  arch.validate();
  GenomeLayout layout;
  layout.ff_variant = ff_variant;
  auto add = [&layout](const std::string& name, int rows, int cols) {
    layout.segments.push_back({name, layout.total, rows, cols});
    layout.total += rows * cols;
  };

  const int feat = arch.feature_len();
  if (ff_variant) {
    add("ext_w1", arch.ff_hidden_width(), arch.ff_input_len());
    add("ext_b1", arch.ff_hidden_width(), 1);
    add("ext_w2", feat, arch.ff_hidden_width());
    add("ext_b2", feat, 1);
  } else {
    for (const char* branch : {"attn1", "attn2"}) {
      add(std::string(branch) + "_q", arch.n_ris, arch.n_ris);
      add(std::string(branch) + "_k", arch.n_ris, arch.n_ris);
      add(std::string(branch) + "_v", arch.n_ris, arch.n_ris);
    }
    if (!arch.direct_blocked) {
      add("attn0_q", arch.n_tx, arch.n_tx);
      add("attn0_k", arch.n_tx, arch.n_tx);
      add("attn0_v", arch.n_tx, arch.n_tx);
      add("ff0_w", feat, 2 * arch.n_tx * arch.n_ue);
      add("ff0_b", feat, 1);
    }
    const int k2 = arch.conv_kernel * arch.conv_kernel;
    add("conv1_w", arch.conv_channels[0], k2);
    add("conv1_b", arch.conv_channels[0], 1);
    add("conv2_w", arch.conv_channels[1], arch.conv_channels[0] * k2);
    add("conv2_b", arch.conv_channels[1], 1);
    add("conv3_w", arch.conv_channels[2], arch.conv_channels[1] * k2);
    add("conv3_b", arch.conv_channels[2], 1);
  }

  add("ris_w1", arch.ris_hidden_width(), feat);
  add("ris_b1", arch.ris_hidden_width(), 1);
  add("ris_w2", arch.ris_head_out(), arch.ris_hidden_width());
  add("ris_b2", arch.ris_head_out(), 1);
  for (int u = 0; u < arch.n_ue; ++u) {
    const std::string tag = "prec" + std::to_string(u);
    add(tag + "_w1", arch.prec_hidden_width(), feat);
    add(tag + "_b1", arch.prec_hidden_width(), 1);
    add(tag + "_w2", arch.codebook_size, arch.prec_hidden_width());
    add(tag + "_b2", arch.codebook_size, 1);
  }
  layout.w_ris_len = layout.total;

  add("fusion_w1", arch.fusion_in(), arch.fusion_in());
  add("fusion_b1", arch.fusion_in(), 1);
  add("fusion_w2", arch.n_ue * arch.codebook_size, arch.fusion_in());
  add("fusion_b2", arch.n_ue * arch.codebook_size, 1);
  return layout;
}

Genome random_genome(const GenomeLayout& layout, RngStream& rng) {
  Genome g;
  g.values.resize(layout.total);
  for (int i = 0; i < layout.total; ++i) g.values(i) = 0.5 * rng.gaussian();
  return g;
}

Eigen::MatrixXd stack_real(const Eigen::MatrixXcd& h) {
  Eigen::MatrixXd out(2 * h.rows(), h.cols());
  out << h.real(), h.imag();
  return out;
}

Eigen::MatrixXd attention_layer(const Eigen::MatrixXd& x,
                                const Eigen::MatrixXd& wq,
                                const Eigen::MatrixXd& wk,
                                const Eigen::MatrixXd& wv, int scale_dim) {
  if (wq.rows() != x.rows() || wq.cols() != x.rows() || wk.rows() != x.rows() ||
      wk.cols() != x.rows() || wv.rows() != x.rows() || wv.cols() != x.rows())
    throw DimensionError("attention_layer: weights must be square over tokens");
  if (scale_dim < 1) throw DomainError("attention_layer: scale_dim must be positive");
  const Eigen::MatrixXd q = wq * x;
  const Eigen::MatrixXd k = wk * x;
  const Eigen::MatrixXd p = wv * x;
  const Eigen::MatrixXd scores =
      q * k.transpose() / std::sqrt(static_cast<double>(scale_dim));
  return softmax_all(scores) * p;
}

ControllerDecision mbacnn_forward(const Genome& genome,
                                  const GenomeLayout& layout,
                                  const ArchitectureSpec& arch,
                                  const Eigen::MatrixXd& h_d,
                                  const Eigen::MatrixXd& h1,
                                  const Eigen::MatrixXd& h2) {
  if (layout.ff_variant)
    throw ConfigError("mbacnn_forward: layout was built for the NE-FF variant");
  check_genome(genome, layout);
  const Eigen::VectorXd feat =
      mbacnn_features(genome, layout, arch, h_d, h1, h2);
  const HeadOutputs heads = controller_heads(genome, layout, arch, feat);
  ControllerDecision d;
  d.config = parse_ris_output(arch, heads.ris);
  d.config.validate(arch.n_phase_states());
  d.precoder_indices.resize(arch.n_ue);
  for (int u = 0; u < arch.n_ue; ++u)
    d.precoder_indices[u] = argmax_index(heads.prec[u]);
  return d;
}

ControllerDecision neff_forward(const Genome& genome, const GenomeLayout& layout,
                                const ArchitectureSpec& arch,
                                const Eigen::MatrixXd& h_d,
                                const Eigen::MatrixXd& h1,
                                const Eigen::MatrixXd& h2) {
  if (!layout.ff_variant)
    throw ConfigError("neff_forward: layout was built for the attention variant");
  check_genome(genome, layout);
  const Eigen::VectorXd feat = neff_features(genome, layout, arch, h_d, h1, h2);
  const HeadOutputs heads = controller_heads(genome, layout, arch, feat);
  ControllerDecision d;
  d.config = parse_ris_output(arch, heads.ris);
  d.config.validate(arch.n_phase_states());
  d.precoder_indices.resize(arch.n_ue);
  for (int u = 0; u < arch.n_ue; ++u)
    d.precoder_indices[u] = argmax_index(heads.prec[u]);
  return d;
}

std::vector<int> fusion_forward(const Genome& genome, const GenomeLayout& layout,
                                const ArchitectureSpec& arch,
                                const std::vector<std::vector<int>>& candidates) {
  check_genome(genome, layout);
  const Eigen::VectorXd logits = fusion_logits(genome, layout, arch, candidates);
  std::vector<int> out(arch.n_ue);
  for (int u = 0; u < arch.n_ue; ++u)
    out[u] = argmax_index(logits.segment(u * arch.codebook_size, arch.codebook_size));
  return out;
}

double broadcast_sum_rate(const NarrowbandChannelSet& ch,
                          const std::vector<Eigen::MatrixXcd>& phis,
                          const Eigen::MatrixXcd& v, double sigma2, double p) {
  const int n_ue = static_cast<int>(ch.h_direct.cols());
  const std::size_t n_surf = ch.h_bs_ris.size();
  if (phis.size() != n_surf)
    throw DimensionError("broadcast_sum_rate: one Phi per surface required");
  std::vector<Eigen::RowVectorXcd> m_rows(n_ue);
  for (int u = 0; u < n_ue; ++u) {
    std::vector<NarrowbandContribution> contribs(n_surf);
    for (std::size_t k = 0; k < n_surf; ++k)
      contribs[k] = {ch.h_ris_ue[k].col(u), phis[k], ch.h_bs_ris[k]};
    m_rows[u] = effective_channel_narrowband(ch.h_direct.col(u), contribs);
  }
  return sum_rate_narrowband(m_rows, v, sigma2, p);
}

double evaluate_genome(const Genome& genome, const GenomeLayout& layout,
                       const ArchitectureSpec& arch,
                       const NarrowbandConfig& cfg, int n_episodes, int horizon,
                       std::uint64_t seed, const EvalOptions& opts) {
  arch.validate();
  cfg.validate();
  check_genome(genome, layout);
  if (arch.n_tx != cfg.n_tx || arch.n_ris != cfg.n_ris || arch.n_ue != cfg.n_ue ||
      arch.n_surfaces != cfg.n_ris_surfaces ||
      arch.direct_blocked != cfg.direct_blocked)
    throw ConfigError("evaluate_genome: architecture and scenario disagree");
  if (arch.codebook_size != arch.n_tx)
    throw ConfigError("evaluate_genome: DFT codebook needs codebook_size == n_tx");
  if (n_episodes < 1 || horizon < 1)
    throw ConfigError("evaluate_genome: episode counts must be positive");
  if (opts.restrict_blocks > 0 && arch.n_ris % opts.restrict_blocks != 0)
    throw ConfigError("evaluate_genome: restrict_blocks must divide n_ris");

  const PrecoderCodebook codebook = dft_codebook(arch.n_tx);
  const std::vector<cxd> phase_set = phase_set_for_bits(arch.phase_bits);
  double total = 0.0;
  for (int ep = 0; ep < n_episodes; ++ep) {
    RngStream rng(derive_stream_seed(seed, "episode", ep));
    for (int t = 0; t < horizon; ++t) {
      const NarrowbandChannelSet ch = sample_narrowband(cfg, rng);
      const Eigen::MatrixXd hd =
          arch.direct_blocked ? Eigen::MatrixXd() : stack_real(ch.h_direct);
      std::vector<Eigen::MatrixXcd> phis(arch.n_surfaces);
      std::vector<std::vector<int>> candidates(arch.n_surfaces);
      for (int k = 0; k < arch.n_surfaces; ++k) {
        const Eigen::MatrixXd h1 = stack_real(ch.h_bs_ris[k]);
        const Eigen::MatrixXd h2 = stack_real(ch.h_ris_ue[k]);
        const Eigen::VectorXd feat =
            layout.ff_variant ? neff_features(genome, layout, arch, hd, h1, h2)
                              : mbacnn_features(genome, layout, arch, hd, h1, h2);
        const HeadOutputs heads = controller_heads(genome, layout, arch, feat);
        BandedRisConfig rc = parse_ris_output(arch, heads.ris);
        if (opts.restrict_blocks > 0)
          apply_block_restriction(rc, opts.restrict_blocks);
        rc.validate(arch.n_phase_states());
        phis[k] = opts.zero_phi
                      ? Eigen::MatrixXcd::Zero(arch.n_ris, arch.n_ris).eval()
                      : banded_phi(rc, phase_set);
        candidates[k].resize(arch.n_ue);
        for (int u = 0; u < arch.n_ue; ++u)
          candidates[k][u] = opts.stochastic ? sample_index(heads.prec[u], rng)
                                             : argmax_index(heads.prec[u]);
      }
      const Eigen::VectorXd flog = fusion_logits(genome, layout, arch, candidates);
      Eigen::MatrixXcd v(arch.n_tx, arch.n_ue);
      for (int u = 0; u < arch.n_ue; ++u) {
        const Eigen::VectorXd slice =
            flog.segment(u * arch.codebook_size, arch.codebook_size);
        const int idx =
            opts.stochastic ? sample_index(slice, rng) : argmax_index(slice);
        v.col(u) = codebook.codeword(idx);
      }
      total += broadcast_sum_rate(ch, phis, v, cfg.noise_variance, cfg.tx_power);
    }
  }
  return total;
}

void CosyneParams::validate() const {
  if (population < 2) throw ConfigError("cosyne: population must hold at least 2");
  if (generations < 1) throw ConfigError("cosyne: generations must be positive");
  if (mutation_prob < 0.0 || mutation_prob > 1.0)
    throw ConfigError("cosyne: mutation_prob must lie in [0, 1]");
  if (mutation_var < 0.0) throw ConfigError("cosyne: mutation_var must be >= 0");
  if (elite_fraction <= 0.0 || elite_fraction > 1.0)
    throw ConfigError("cosyne: elite_fraction must lie in (0, 1]");
  if (n_episodes < 1 || horizon < 1)
    throw ConfigError("cosyne: episode counts must be positive");
  if (workers < 0) throw ConfigError("cosyne: workers must be >= 0");
}

Population init_population(const GenomeLayout& layout, int size, RngStream& rng) {
  if (size < 2) throw ConfigError("population must hold at least two genomes");
  Population pop;
  pop.genes.resize(size, layout.total);
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < layout.total; ++j) pop.genes(i, j) = 0.5 * rng.gaussian();
  pop.fitness = Eigen::VectorXd::Constant(
      size, -std::numeric_limits<double>::infinity());
  pop.evaluated.assign(size, 0);
  pop.generation = 0;
  return pop;
}

Population cosyne_step(const Population& pop, const CosyneParams& params,
                       RngStream& rng) {
  params.validate();
  const int n = static_cast<int>(pop.genes.rows());
  const int n_genes = static_cast<int>(pop.genes.cols());
  if (n < 2) throw ConfigError("cosyne_step: population must hold at least 2");
  for (int i = 0; i < n; ++i)
    if (!pop.evaluated[i] || !std::isfinite(pop.fitness(i)))
      throw ConfigError("cosyne_step: population is not fully evaluated");

  // Rank by fitness, descending; ties keep the lower index first.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&pop](int a, int b) {
    return pop.fitness(a) > pop.fitness(b);
  });

  const int n_elite = std::min(
      n, std::max(2, static_cast<int>(std::floor(n * params.elite_fraction))));
  const int n_off = n - n_elite;
  const double sigma = std::sqrt(params.mutation_var);

  Population next;
  next.genes.resize(n, n_genes);
  next.fitness.resize(n);
  next.evaluated.assign(n, 0);
  next.generation = pop.generation + 1;
  for (int e = 0; e < n_elite; ++e) {
    next.genes.row(e) = pop.genes.row(order[e]);
    next.fitness(e) = pop.fitness(order[e]);
    next.evaluated[e] = 1;
  }
  for (int o = 0; o < n_off; ++o) {
    const int pa = order[rng.uniform_int(0, n_elite - 1)];
    const int pb = order[rng.uniform_int(0, n_elite - 1)];
    Eigen::RowVectorXd child(n_genes);
    if (n_genes > 1) {
      const int cp = rng.uniform_int(1, n_genes - 1);
      child.head(cp) = pop.genes.row(pa).head(cp);
      child.tail(n_genes - cp) = pop.genes.row(pb).tail(n_genes - cp);
    } else {
      child = pop.genes.row(pa);
    }
    for (int j = 0; j < n_genes; ++j)
      if (rng.uniform() < params.mutation_prob) child(j) += sigma * rng.gaussian();
    next.genes.row(n_elite + o) = child;
    next.fitness(n_elite + o) = -std::numeric_limits<double>::infinity();
  }

  // Per-gene permutation across the offspring rows; elites stay intact.
  if (n_off > 1) {
    for (int j = 0; j < n_genes; ++j) {
      for (int i = n_off - 1; i >= 1; --i) {
        const int k = rng.uniform_int(0, i);
        std::swap(next.genes(n_elite + i, j), next.genes(n_elite + k, j));
      }
    }
  }
  return next;
}

TrainResult train(const ArchitectureSpec& arch, const NarrowbandConfig& cfg,
                  const CosyneParams& params, std::uint64_t seed,
                  bool ff_variant, const EvalOptions& opts) {
  arch.validate();
  cfg.validate();
  params.validate();
  const GenomeLayout layout = genome_layout(arch, ff_variant);

  RngStream init_rng(derive_stream_seed(seed, "init", 0));
  Population pop = init_population(layout, params.population, init_rng);
  RngStream evo_rng(derive_stream_seed(seed, "evolve", 0));
  // A fixed evaluation seed makes fitness deterministic, so elite scores carry
  // over exactly.
  const std::uint64_t eval_seed = derive_stream_seed(seed, "eval", 0);
  const int workers = resolve_worker_count(params.workers);

  TrainResult res;
  for (int gen = 0; gen < params.generations; ++gen) {
    std::vector<int> pending;
    for (int i = 0; i < params.population; ++i)
      if (!pop.evaluated[i]) pending.push_back(i);
    parallel_for_indexed(static_cast<int>(pending.size()), workers, [&](int idx) {
      const int i = pending[idx];
      const Genome g{pop.genes.row(i).transpose()};
      pop.fitness(i) = evaluate_genome(g, layout, arch, cfg, params.n_episodes,
                                       params.horizon, eval_seed, opts);
      pop.evaluated[i] = 1;
    });
    res.curve.push_back({gen, pop.fitness.maxCoeff(), pop.fitness.mean()});
    if (gen + 1 < params.generations) pop = cosyne_step(pop, params, evo_rng);
  }

  int best = 0;
  for (int i = 1; i < params.population; ++i)
    if (pop.fitness(i) > pop.fitness(best)) best = i;
  res.best.values = pop.genes.row(best).transpose();
  res.best_fitness = pop.fitness(best);
  return res;
}

BesResult bes_baseline(const NarrowbandChannelSet& ch,
                       const NarrowbandConfig& cfg, int n_blk,
                       const PrecoderCodebook& codebook,
                       std::uint64_t max_candidates) {
  if (ch.h_bs_ris.size() != 1)
    throw ConfigError("bes_baseline: exhaustive search covers a single surface");
  const int n_ris = static_cast<int>(ch.h_bs_ris[0].cols());
  const int n_ue = static_cast<int>(ch.h_direct.cols());
  if (n_blk < 1 || n_ris % n_blk != 0)
    throw ConfigError("bes_baseline: n_blk must divide n_ris");
  if (n_blk >= 32)
    throw ConfigError("bes_baseline: block count too large to enumerate");
  const int card = codebook.card();
  double count = std::ldexp(1.0, n_blk);
  for (int u = 0; u < n_ue; ++u) count *= card;
  if (count > static_cast<double>(max_candidates))
    throw ConfigError("bes_baseline: " + format_double(count) +
                      " candidates exceed the cap of " +
                      std::to_string(max_candidates));

  const std::vector<cxd> phase_set = phase_set_for_bits(1);
  const int bs = n_ris / n_blk;
  BesResult best;
  best.sum_rate = -std::numeric_limits<double>::infinity();

  std::vector<int> combo(n_ue, 0);
  for (std::uint32_t mask = 0; mask < (1u << n_blk); ++mask) {
    BandedRisConfig rc;
    rc.n_ris = n_ris;
    rc.n_b = 0;
    rc.diag_states.resize(n_ris);
    for (int blk = 0; blk < n_blk; ++blk) {
      const int state = (mask >> blk) & 1u ? 1 : 0;
      for (int i = 0; i < bs; ++i) rc.diag_states[blk * bs + i] = state;
    }
    const Eigen::MatrixXcd phi = banded_phi(rc, phase_set);
    std::vector<Eigen::RowVectorXcd> m_rows(n_ue);
    for (int u = 0; u < n_ue; ++u) {
      std::vector<NarrowbandContribution> contribs{
          {ch.h_ris_ue[0].col(u), phi, ch.h_bs_ris[0]}};
      m_rows[u] = effective_channel_narrowband(ch.h_direct.col(u), contribs);
    }
    std::fill(combo.begin(), combo.end(), 0);
    while (true) {
      Eigen::MatrixXcd v(codebook.columns.rows(), n_ue);
      for (int u = 0; u < n_ue; ++u) v.col(u) = codebook.codeword(combo[u]);
      const double rate =
          sum_rate_narrowband(m_rows, v, cfg.noise_variance, cfg.tx_power);
      if (rate > best.sum_rate) {
        best.sum_rate = rate;
        best.config = rc;
        best.precoder_indices = combo;
      }
      int digit = n_ue - 1;
      while (digit >= 0 && ++combo[digit] == card) combo[digit--] = 0;
      if (digit < 0) break;
    }
  }
  return best;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json j;
  j["format"] = "riswb-checkpoint-1";
  j["arch"] = {{"n_tx", ckpt.arch.n_tx},
               {"n_ue", ckpt.arch.n_ue},
               {"n_ris", ckpt.arch.n_ris},
               {"n_surfaces", ckpt.arch.n_surfaces},
               {"n_bands", ckpt.arch.n_bands},
               {"phase_bits", ckpt.arch.phase_bits},
               {"codebook_size", ckpt.arch.codebook_size},
               {"direct_blocked", ckpt.arch.direct_blocked},
               {"conv_channels", ckpt.arch.conv_channels},
               {"conv_kernel", ckpt.arch.conv_kernel},
               {"ris_hidden", ckpt.arch.ris_hidden},
               {"prec_hidden", ckpt.arch.prec_hidden},
               {"ff_hidden", ckpt.arch.ff_hidden}};
  j["ff_variant"] = ckpt.ff_variant;
  j["best_fitness"] = ckpt.best_fitness;
  j["genome"] = std::vector<double>(
      ckpt.genome.values.data(), ckpt.genome.values.data() + ckpt.genome.values.size());
  nlohmann::json curve = nlohmann::json::array();
  for (const GenerationStats& s : ckpt.curve)
    curve.push_back({{"generation", s.generation}, {"best", s.best}, {"mean", s.mean}});
  j["curve"] = curve;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed while writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  Checkpoint ckpt;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("format").get<std::string>() != "riswb-checkpoint-1")
      throw IoError(path + ": unknown checkpoint format");
    const nlohmann::json& a = j.at("arch");
    ckpt.arch.n_tx = a.at("n_tx").get<int>();
    ckpt.arch.n_ue = a.at("n_ue").get<int>();
    ckpt.arch.n_ris = a.at("n_ris").get<int>();
    ckpt.arch.n_surfaces = a.at("n_surfaces").get<int>();
    ckpt.arch.n_bands = a.at("n_bands").get<int>();
    ckpt.arch.phase_bits = a.at("phase_bits").get<int>();
    ckpt.arch.codebook_size = a.at("codebook_size").get<int>();
    ckpt.arch.direct_blocked = a.at("direct_blocked").get<bool>();
    ckpt.arch.conv_channels = a.at("conv_channels").get<std::array<int, 3>>();
    ckpt.arch.conv_kernel = a.at("conv_kernel").get<int>();
    ckpt.arch.ris_hidden = a.at("ris_hidden").get<int>();
    ckpt.arch.prec_hidden = a.at("prec_hidden").get<int>();
    ckpt.arch.ff_hidden = a.at("ff_hidden").get<int>();
    ckpt.ff_variant = j.at("ff_variant").get<bool>();
    ckpt.best_fitness = j.at("best_fitness").get<double>();
    const std::vector<double> genes = j.at("genome").get<std::vector<double>>();
    ckpt.genome.values =
        Eigen::Map<const Eigen::VectorXd>(genes.data(), genes.size());
    for (const nlohmann::json& s : j.at("curve"))
      ckpt.curve.push_back({s.at("generation").get<int>(),
                            s.at("best").get<double>(),
                            s.at("mean").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  const GenomeLayout layout = genome_layout(ckpt.arch, ckpt.ff_variant);
  if (ckpt.genome.values.size() != layout.total)
    throw IoError(path + ": genome length does not match the architecture");
  return ckpt;
}

}  // namespace riswb
