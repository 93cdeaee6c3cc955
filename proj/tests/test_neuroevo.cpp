#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <vector>

#include <json.hpp>

#include "riswb/codebook.hpp"
#include "riswb/neuroevo.hpp"

using namespace riswb;

namespace {

ArchitectureSpec desk_arch() {
  ArchitectureSpec a;
  a.n_tx = 2;
  a.n_ue = 2;
  a.n_ris = 4;
  a.n_surfaces = 2;
  a.n_bands = 1;
  a.phase_bits = 1;
  a.codebook_size = 3;
  a.conv_channels = {2, 2, 1};
  a.ris_hidden = 5;
  a.prec_hidden = 3;
  a.ff_hidden = 6;
  return a;
}

Eigen::MatrixXd random_mat(int r, int c, RngStream& rng) {
  Eigen::MatrixXd m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = rng.gaussian();
  return m;
}

// ---- Straight-line reference implementation, loops throughout -------------

Eigen::MatrixXd ref_seg(const Genome& g, const GenomeLayout& layout,
                        const std::string& name) {
  const GenomeSegment& s = layout.find(name);
  Eigen::MatrixXd m(s.rows, s.cols);
  for (int c = 0; c < s.cols; ++c)
    for (int r = 0; r < s.rows; ++r) m(r, c) = g.values(s.offset + c * s.rows + r);
  return m;
}

Eigen::VectorXd ref_flatten(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.size());
  int idx = 0;
  for (int c = 0; c < m.cols(); ++c)
    for (int r = 0; r < m.rows(); ++r) v(idx++) = m(r, c);
  return v;
}

Eigen::MatrixXd ref_softmax_all(const Eigen::MatrixXd& z) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < z.rows(); ++i)
    for (int j = 0; j < z.cols(); ++j) mx = std::max(mx, z(i, j));
  Eigen::MatrixXd e(z.rows(), z.cols());
  double sum = 0.0;
  for (int i = 0; i < z.rows(); ++i)
    for (int j = 0; j < z.cols(); ++j) {
      e(i, j) = std::exp(z(i, j) - mx);
      sum += e(i, j);
    }
  return e / sum;
}

Eigen::MatrixXd ref_attention(const Eigen::MatrixXd& x, const Eigen::MatrixXd& wq,
                              const Eigen::MatrixXd& wk, const Eigen::MatrixXd& wv,
                              int scale) {
  const Eigen::MatrixXd q = wq * x;
  const Eigen::MatrixXd k = wk * x;
  const Eigen::MatrixXd p = wv * x;
  const Eigen::MatrixXd s =
      ref_softmax_all(q * k.transpose() / std::sqrt(double(scale)));
  return s * p;
}

Eigen::MatrixXd ref_layer_norm(const Eigen::MatrixXd& m) {
  double mean = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) mean += m(i, j);
  mean /= double(m.size());
  double var = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      var += (m(i, j) - mean) * (m(i, j) - mean);
  var /= double(m.size());
  return (m.array() - mean).matrix() / std::sqrt(var + 1e-5);
}

// Per-pixel zero-padded cross-correlation.
std::vector<Eigen::MatrixXd> ref_conv(const std::vector<Eigen::MatrixXd>& in,
                                      const Eigen::MatrixXd& w,
                                      const Eigen::VectorXd& b, int k,
                                      bool relu) {
  const int rows = int(in[0].rows()), cols = int(in[0].cols());
  const int pad = k / 2;
  std::vector<Eigen::MatrixXd> out(w.rows());
  for (int o = 0; o < w.rows(); ++o) {
    out[o].resize(rows, cols);
    for (int y = 0; y < rows; ++y)
      for (int x = 0; x < cols; ++x) {
        double acc = b(o);
        for (std::size_t i = 0; i < in.size(); ++i)
          for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c) {
              const int yy = y + r - pad, xx = x + c - pad;
              if (yy < 0 || yy >= rows || xx < 0 || xx >= cols) continue;
              acc += w(o, int(i) * k * k + r * k + c) * in[i](yy, xx);
            }
        out[o](y, x) = relu ? std::max(0.0, acc) : acc;
      }
  }
  return out;
}

int ref_argmax(const Eigen::VectorXd& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

ControllerDecision ref_forward(const Genome& g, const GenomeLayout& layout,
                               const ArchitectureSpec& arch,
                               const Eigen::MatrixXd& hd,
                               const Eigen::MatrixXd& h1,
                               const Eigen::MatrixXd& h2, bool ff) {
  Eigen::VectorXd feat;
  if (ff) {
    Eigen::VectorXd x(arch.ff_input_len());
    int off = 0;
    const Eigen::VectorXd f1 = ref_flatten(h1), f2 = ref_flatten(h2);
    for (int i = 0; i < f1.size(); ++i) x(off++) = f1(i);
    for (int i = 0; i < f2.size(); ++i) x(off++) = f2(i);
    if (!arch.direct_blocked) {
      const Eigen::VectorXd fd = ref_flatten(hd);
      for (int i = 0; i < fd.size(); ++i) x(off++) = fd(i);
    }
    const Eigen::VectorXd hid =
        (ref_seg(g, layout, "ext_w1") * x + ref_seg(g, layout, "ext_b1").col(0))
            .cwiseMax(0.0);
    feat = ref_seg(g, layout, "ext_w2") * hid + ref_seg(g, layout, "ext_b2").col(0);
  } else {
    const Eigen::MatrixXd x1 = h1.transpose();
    Eigen::MatrixXd x2(arch.n_ris, 2 * arch.n_ue);
    for (int i = 0; i < arch.n_ris; ++i)
      for (int u = 0; u < arch.n_ue; ++u) {
        x2(i, u) = h2(i, u);
        x2(i, arch.n_ue + u) = h2(arch.n_ris + i, u);
      }
    const int scale = 2 * arch.n_tx;
    const Eigen::MatrixXd a1 =
        ref_attention(x1, ref_seg(g, layout, "attn1_q"),
                      ref_seg(g, layout, "attn1_k"),
                      ref_seg(g, layout, "attn1_v"), scale);
    const Eigen::MatrixXd a2 =
        ref_attention(x2, ref_seg(g, layout, "attn2_q"),
                      ref_seg(g, layout, "attn2_k"),
                      ref_seg(g, layout, "attn2_v"), scale);
    Eigen::MatrixXd a_cat(arch.n_ris, arch.d_cat());
    a_cat.leftCols(2 * arch.n_tx) = a1;
    a_cat.rightCols(2 * arch.n_ue) = a2;

    Eigen::MatrixXd a_total;
    if (arch.direct_blocked) {
      a_total = ref_layer_norm(a_cat);
    } else {
      Eigen::MatrixXd xd(arch.n_tx, 2 * arch.n_ue);
      for (int i = 0; i < arch.n_tx; ++i)
        for (int u = 0; u < arch.n_ue; ++u) {
          xd(i, u) = hd(i, u);
          xd(i, arch.n_ue + u) = hd(arch.n_tx + i, u);
        }
      const Eigen::MatrixXd ad =
          ref_attention(xd, ref_seg(g, layout, "attn0_q"),
                        ref_seg(g, layout, "attn0_k"),
                        ref_seg(g, layout, "attn0_v"), scale);
      const Eigen::VectorXd a0f = ref_seg(g, layout, "ff0_w") * ref_flatten(ad) +
                                  ref_seg(g, layout, "ff0_b").col(0);
      Eigen::MatrixXd a0(arch.n_ris, arch.d_cat());
      int idx = 0;
      for (int c = 0; c < a0.cols(); ++c)
        for (int r = 0; r < a0.rows(); ++r) a0(r, c) = a0f(idx++);
      a_total = ref_layer_norm(a_cat) + ref_layer_norm(a0);
    }

    std::vector<Eigen::MatrixXd> maps{a_total};
    maps = ref_conv(maps, ref_seg(g, layout, "conv1_w"),
                    ref_seg(g, layout, "conv1_b").col(0), arch.conv_kernel, true);
    maps = ref_conv(maps, ref_seg(g, layout, "conv2_w"),
                    ref_seg(g, layout, "conv2_b").col(0), arch.conv_kernel, true);
    maps = ref_conv(maps, ref_seg(g, layout, "conv3_w"),
                    ref_seg(g, layout, "conv3_b").col(0), arch.conv_kernel, false);
    feat = ref_flatten(maps[0]);
  }

  const Eigen::VectorXd rh = (ref_seg(g, layout, "ris_w1") * feat +
                              ref_seg(g, layout, "ris_b1").col(0))
                                 .cwiseMax(0.0);
  const Eigen::VectorXd ris =
      ref_seg(g, layout, "ris_w2") * rh + ref_seg(g, layout, "ris_b2").col(0);

  ControllerDecision d;
  d.config.n_ris = arch.n_ris;
  d.config.n_b = arch.n_bands;
  d.config.diag_states.resize(arch.n_ris);
  int off = 0;
  if (arch.phase_bits == 1) {
    for (int i = 0; i < arch.n_ris; ++i)
      d.config.diag_states[i] = ris(i) >= 0.0 ? 0 : 1;
    off = arch.n_ris;
  } else {
    const int s = arch.n_phase_states();
    for (int i = 0; i < arch.n_ris; ++i)
      d.config.diag_states[i] = ref_argmax(ris.segment(i * s, s));
    off = arch.n_ris * s;
  }
  d.config.band_switches.assign(2 * std::size_t(arch.n_bands) * arch.n_ris, 0);
  for (std::size_t j = 0; j < d.config.band_switches.size(); ++j)
    d.config.band_switches[j] = ris(off + int(j)) >= 0.0 ? 1 : 0;

  d.precoder_indices.resize(arch.n_ue);
  for (int u = 0; u < arch.n_ue; ++u) {
    const std::string tag = "prec" + std::to_string(u);
    const Eigen::VectorXd ph = (ref_seg(g, layout, tag + "_w1") * feat +
                                ref_seg(g, layout, tag + "_b1").col(0))
                                   .cwiseMax(0.0);
    d.precoder_indices[u] = ref_argmax(ref_seg(g, layout, tag + "_w2") * ph +
                                       ref_seg(g, layout, tag + "_b2").col(0));
  }
  return d;
}

NarrowbandConfig desk_narrowband() {
  NarrowbandConfig cfg;
  cfg.n_tx = 2;
  cfg.n_ris = 4;
  cfg.n_ue = 1;
  cfg.n_ris_surfaces = 1;
  cfg.ue_mean_positions = {Vec3(8, 10, 1.5)};
  return cfg;
}

}  // namespace

TEST_CASE("genome layout accounting") {
  ArchitectureSpec arch = desk_arch();
  const GenomeLayout layout = genome_layout(arch, false);

  int expect_off = 0;
  for (const GenomeSegment& s : layout.segments) {
    CHECK(s.offset == expect_off);
    expect_off += s.len();
  }
  CHECK(layout.total == expect_off);
  CHECK_FALSE(layout.ff_variant);
  // The fusion block sits entirely above the controller boundary.
  CHECK(layout.find("fusion_w1").offset == layout.w_ris_len);
  CHECK(layout.find("ris_w1").offset < layout.w_ris_len);
  CHECK(layout.find("attn1_q").rows == arch.n_ris);
  CHECK(layout.find("conv2_w").cols ==
        arch.conv_channels[0] * arch.conv_kernel * arch.conv_kernel);
  CHECK(layout.find("fusion_w2").rows == arch.n_ue * arch.codebook_size);
  CHECK_THROWS_AS(layout.find("nope"), ConfigError);

  // Blocked architectures drop the direct-path branch entirely.
  bool has_attn0 = false;
  for (const GenomeSegment& s : layout.segments)
    if (s.name == "attn0_q") has_attn0 = true;
  CHECK_FALSE(has_attn0);
  ArchitectureSpec open = arch;
  open.direct_blocked = false;
  const GenomeLayout lo = genome_layout(open, false);
  CHECK(lo.find("attn0_q").rows == arch.n_tx);
  CHECK(lo.find("ff0_w").rows == arch.feature_len());
  CHECK(lo.total > layout.total);

  const GenomeLayout lf = genome_layout(arch, true);
  CHECK(lf.ff_variant);
  CHECK(lf.find("ext_w1").cols == arch.ff_input_len());
  CHECK(lf.find("ext_w2").rows == arch.feature_len());

  ArchitectureSpec bad = arch;
  bad.conv_kernel = 4;
  CHECK_THROWS_AS(genome_layout(bad, false), ConfigError);
  bad = arch;
  bad.conv_channels = {2, 2, 3};
  CHECK_THROWS_AS(genome_layout(bad, false), ConfigError);
  bad = arch;
  bad.n_bands = arch.n_ris;
  CHECK_THROWS_AS(genome_layout(bad, false), ConfigError);
}

TEST_CASE("attention layer matches the straight-line reference") {
  RngStream rng(301);
  for (int trial = 0; trial < 50; ++trial) {
    const int tokens = rng.uniform_int(2, 6);
    const int cols = rng.uniform_int(1, 5);
    const int scale = rng.uniform_int(1, 8);
    const Eigen::MatrixXd x = random_mat(tokens, cols, rng);
    const Eigen::MatrixXd wq = random_mat(tokens, tokens, rng);
    const Eigen::MatrixXd wk = random_mat(tokens, tokens, rng);
    const Eigen::MatrixXd wv = random_mat(tokens, tokens, rng);
    const Eigen::MatrixXd a = attention_layer(x, wq, wk, wv, scale);
    const Eigen::MatrixXd r = ref_attention(x, wq, wk, wv, scale);
    REQUIRE(a.rows() == tokens);
    REQUIRE(a.cols() == cols);
    CHECK((a - r).cwiseAbs().maxCoeff() < 1e-10);
  }
  Eigen::MatrixXd x = random_mat(3, 2, rng);
  CHECK_THROWS_AS(attention_layer(x, random_mat(2, 2, rng), random_mat(3, 3, rng),
                                  random_mat(3, 3, rng), 4),
                  DimensionError);
  CHECK_THROWS_AS(attention_layer(x, random_mat(3, 3, rng), random_mat(3, 3, rng),
                                  random_mat(3, 3, rng), 0),
                  DomainError);
}

TEST_CASE("stack_real") {
  Eigen::MatrixXcd h(2, 1);
  h << cxd(1, -2), cxd(3, 4);
  const Eigen::MatrixXd s = stack_real(h);
  REQUIRE(s.rows() == 4);
  CHECK(s(0, 0) == 1.0);
  CHECK(s(1, 0) == 3.0);
  CHECK(s(2, 0) == -2.0);
  CHECK(s(3, 0) == 4.0);
}

TEST_CASE("controller forward matches the straight-line reference") {
  for (const bool blocked : {true, false}) {
    for (const int bits : {1, 2}) {
      ArchitectureSpec arch = desk_arch();
      arch.direct_blocked = blocked;
      arch.phase_bits = bits;
      const GenomeLayout layout = genome_layout(arch, false);
      const GenomeLayout layout_ff = genome_layout(arch, true);
      RngStream rng(400 + bits + (blocked ? 10 : 0));
      for (int trial = 0; trial < 40; ++trial) {
        const Genome g = random_genome(layout, rng);
        const Genome gf = random_genome(layout_ff, rng);
        const Eigen::MatrixXd h1 = random_mat(2 * arch.n_tx, arch.n_ris, rng);
        const Eigen::MatrixXd h2 = random_mat(2 * arch.n_ris, arch.n_ue, rng);
        const Eigen::MatrixXd hd =
            blocked ? Eigen::MatrixXd()
                    : random_mat(2 * arch.n_tx, arch.n_ue, rng);

        const ControllerDecision d = mbacnn_forward(g, layout, arch, hd, h1, h2);
        const ControllerDecision r = ref_forward(g, layout, arch, hd, h1, h2, false);
        CHECK(d.config.diag_states == r.config.diag_states);
        CHECK(d.config.band_switches == r.config.band_switches);
        CHECK(d.precoder_indices == r.precoder_indices);

        const ControllerDecision df =
            neff_forward(gf, layout_ff, arch, hd, h1, h2);
        const ControllerDecision rf =
            ref_forward(gf, layout_ff, arch, hd, h1, h2, true);
        CHECK(df.config.diag_states == rf.config.diag_states);
        CHECK(df.config.band_switches == rf.config.band_switches);
        CHECK(df.precoder_indices == rf.precoder_indices);
      }
    }
  }
}

TEST_CASE("forward outputs are always feasible") {
  ArchitectureSpec arch = desk_arch();
  arch.phase_bits = 2;
  const GenomeLayout layout = genome_layout(arch, false);
  RngStream rng(500);
  for (int trial = 0; trial < 300; ++trial) {
    const Genome g = random_genome(layout, rng);
    const Eigen::MatrixXd h1 = random_mat(2 * arch.n_tx, arch.n_ris, rng);
    const Eigen::MatrixXd h2 = random_mat(2 * arch.n_ris, arch.n_ue, rng);
    const ControllerDecision d =
        mbacnn_forward(g, layout, arch, Eigen::MatrixXd(), h1, h2);
    d.config.validate(arch.n_phase_states());
    for (int s : d.config.diag_states) {
      CHECK(s >= 0);
      CHECK(s < arch.n_phase_states());
    }
    REQUIRE(d.precoder_indices.size() == 2);
    for (int idx : d.precoder_indices) {
      CHECK(idx >= 0);
      CHECK(idx < arch.codebook_size);
    }
  }

  const Genome g = random_genome(layout, rng);
  CHECK_THROWS_AS(mbacnn_forward(g, layout, arch, Eigen::MatrixXd(),
                                 random_mat(3, arch.n_ris, rng),
                                 random_mat(2 * arch.n_ris, arch.n_ue, rng)),
                  DimensionError);
  Genome short_g = g;
  short_g.values.conservativeResize(layout.total - 1);
  CHECK_THROWS_AS(mbacnn_forward(short_g, layout, arch, Eigen::MatrixXd(),
                                 random_mat(2 * arch.n_tx, arch.n_ris, rng),
                                 random_mat(2 * arch.n_ris, arch.n_ue, rng)),
                  DimensionError);
  const GenomeLayout lf = genome_layout(arch, true);
  CHECK_THROWS_AS(mbacnn_forward(random_genome(lf, rng), lf, arch,
                                 Eigen::MatrixXd(),
                                 random_mat(2 * arch.n_tx, arch.n_ris, rng),
                                 random_mat(2 * arch.n_ris, arch.n_ue, rng)),
                  ConfigError);
}

TEST_CASE("fusion selects through the one-hot encoding") {
  ArchitectureSpec arch = desk_arch();  // K = 2, n_ue = 2, card = 3
  const GenomeLayout layout = genome_layout(arch, false);
  Genome g;
  g.values = Eigen::VectorXd::Zero(layout.total);

  // Identity hidden layer, then pass controller 0's one-hot bits through.
  const GenomeSegment& w1 = layout.find("fusion_w1");
  for (int i = 0; i < w1.rows; ++i) g.values(w1.offset + i * w1.rows + i) = 1.0;
  const GenomeSegment& w2 = layout.find("fusion_w2");
  for (int r = 0; r < w2.rows; ++r)
    g.values(w2.offset + r * w2.rows + r) = 1.0;  // column r, row r

  RngStream rng(600);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<int>> cands(2);
    for (auto& c : cands) {
      c.resize(arch.n_ue);
      for (int& v : c) v = rng.uniform_int(0, arch.codebook_size - 1);
    }
    CHECK(fusion_forward(g, layout, arch, cands) == cands[0]);
  }

  CHECK_THROWS_AS(fusion_forward(g, layout, arch, {{0, 0}}), DimensionError);
  CHECK_THROWS_AS(fusion_forward(g, layout, arch, {{0, 0}, {0, 3}}), DomainError);
  CHECK_THROWS_AS(fusion_forward(g, layout, arch, {{0}, {0}}), DimensionError);
}

TEST_CASE("broadcast sum rate reduces to the manual narrowband route") {
  NarrowbandConfig cfg = desk_narrowband();
  cfg.n_ue = 1;
  RngStream rng(700);
  const NarrowbandChannelSet ch = sample_narrowband(cfg, rng);
  const PrecoderCodebook cb = dft_codebook(cfg.n_tx);

  BandedRisConfig rc;
  rc.n_ris = 4;
  rc.n_b = 0;
  rc.diag_states = {0, 1, 1, 0};
  const Eigen::MatrixXcd phi = banded_phi(rc, phase_set_for_bits(1));

  Eigen::MatrixXcd v(cfg.n_tx, 1);
  v.col(0) = cb.codeword(1);
  const double r =
      broadcast_sum_rate(ch, {phi}, v, cfg.noise_variance, cfg.tx_power);

  const Eigen::RowVectorXcd m = ch.h_direct.col(0).adjoint() +
                                ch.h_ris_ue[0].col(0).adjoint() * phi *
                                    ch.h_bs_ris[0].adjoint();
  const double sig = std::norm((m * v.col(0))(0, 0));
  const double expect =
      std::log2(1.0 + sig / (cfg.noise_variance / cfg.tx_power));
  CHECK(r == doctest::Approx(expect).epsilon(1e-12));

  // Reflections off and a blocked direct path leave nothing.
  const Eigen::MatrixXcd zero = Eigen::MatrixXcd::Zero(4, 4);
  CHECK(broadcast_sum_rate(ch, {zero}, v, cfg.noise_variance, cfg.tx_power) ==
        0.0);
  CHECK_THROWS_AS(
      broadcast_sum_rate(ch, {phi, phi}, v, cfg.noise_variance, cfg.tx_power),
      DimensionError);
}

TEST_CASE("genome evaluation is deterministic and honors its options") {
  ArchitectureSpec arch;
  arch.n_tx = 2;
  arch.n_ue = 1;
  arch.n_ris = 4;
  arch.n_surfaces = 1;
  arch.codebook_size = 2;
  arch.conv_channels = {2, 2, 1};
  arch.ris_hidden = 4;
  arch.prec_hidden = 4;
  const NarrowbandConfig cfg = desk_narrowband();
  const GenomeLayout layout = genome_layout(arch, false);
  RngStream rng(800);
  const Genome g = random_genome(layout, rng);

  const double f1 = evaluate_genome(g, layout, arch, cfg, 2, 3, 99);
  const double f2 = evaluate_genome(g, layout, arch, cfg, 2, 3, 99);
  CHECK(f1 == f2);
  CHECK(f1 > 0.0);
  CHECK(evaluate_genome(g, layout, arch, cfg, 2, 3, 100) != f1);

  // Reflections off with a blocked direct path: exactly zero fitness.
  EvalOptions zp;
  zp.zero_phi = true;
  CHECK(evaluate_genome(g, layout, arch, cfg, 2, 3, 99, zp) == 0.0);

  // One block per element restricts nothing.
  EvalOptions rb;
  rb.restrict_blocks = arch.n_ris;
  CHECK(evaluate_genome(g, layout, arch, cfg, 2, 3, 99, rb) == f1);
  EvalOptions rb2;
  rb2.restrict_blocks = 3;
  CHECK_THROWS_AS(evaluate_genome(g, layout, arch, cfg, 2, 3, 99, rb2),
                  ConfigError);

  // Stochastic selection is reproducible under the same seed.
  EvalOptions st;
  st.stochastic = true;
  const double s1 = evaluate_genome(g, layout, arch, cfg, 2, 3, 99, st);
  CHECK(s1 == evaluate_genome(g, layout, arch, cfg, 2, 3, 99, st));

  ArchitectureSpec bad = arch;
  bad.n_ris = 8;
  const GenomeLayout bl = genome_layout(bad, false);
  CHECK_THROWS_AS(
      evaluate_genome(random_genome(bl, rng), bl, bad, cfg, 1, 1, 1),
      ConfigError);
  bad = arch;
  bad.codebook_size = 3;
  const GenomeLayout bl2 = genome_layout(bad, false);
  CHECK_THROWS_AS(
      evaluate_genome(random_genome(bl2, rng), bl2, bad, cfg, 1, 1, 1),
      ConfigError);
}

TEST_CASE("population init and the cosyne step") {
  ArchitectureSpec arch;
  arch.n_tx = 2;
  arch.n_ue = 1;
  arch.n_ris = 4;
  arch.codebook_size = 2;
  arch.conv_channels = {2, 2, 1};
  arch.ris_hidden = 3;
  arch.prec_hidden = 3;
  const GenomeLayout layout = genome_layout(arch, false);

  RngStream rng(900);
  Population pop = init_population(layout, 8, rng);
  CHECK(pop.genes.rows() == 8);
  CHECK(pop.genes.cols() == layout.total);
  CHECK(pop.generation == 0);
  for (int i = 0; i < 8; ++i) {
    CHECK_FALSE(pop.evaluated[i]);
    CHECK(pop.fitness(i) == -std::numeric_limits<double>::infinity());
  }
  RngStream rng2(900);
  const Population pop2 = init_population(layout, 8, rng2);
  CHECK(pop.genes.cwiseEqual(pop2.genes).all());
  CHECK_THROWS_AS(init_population(layout, 1, rng), ConfigError);

  CosyneParams params;
  params.population = 8;
  params.elite_fraction = 0.25;  // floor(8 * 0.25) = 2 elites
  params.mutation_prob = 0.4;
  params.mutation_var = 0.1;

  // Stepping an unevaluated population is refused.
  RngStream step_rng(901);
  CHECK_THROWS_AS(cosyne_step(pop, params, step_rng), ConfigError);

  for (int i = 0; i < 8; ++i) {
    pop.fitness(i) = double((i * 3) % 8);  // distinct, scrambled ranks
    pop.evaluated[i] = 1;
  }
  // Ranked order: fitness values 7 (row 5), 6 (row 2), ...
  RngStream srng(902);
  const Population next = cosyne_step(pop, params, srng);
  CHECK(next.generation == 1);
  CHECK(next.genes.row(0).cwiseEqual(pop.genes.row(5)).all());
  CHECK(next.genes.row(1).cwiseEqual(pop.genes.row(2)).all());
  CHECK(next.fitness(0) == 7.0);
  CHECK(next.fitness(1) == 6.0);
  CHECK(next.evaluated[0]);
  CHECK(next.evaluated[1]);
  for (int o = 2; o < 8; ++o) {
    CHECK_FALSE(next.evaluated[o]);
    CHECK(next.fitness(o) == -std::numeric_limits<double>::infinity());
  }

  // Determinism of the step.
  RngStream srng2(902);
  const Population again = cosyne_step(pop, params, srng2);
  CHECK(next.genes.cwiseEqual(again.genes).all());

  // Without mutation every offspring gene is copied from some elite.
  CosyneParams pure = params;
  pure.mutation_prob = 0.0;
  RngStream prng(903);
  const Population bred = cosyne_step(pop, pure, prng);
  for (int j = 0; j < layout.total; ++j) {
    const std::set<double> allowed{pop.genes(5, j), pop.genes(2, j)};
    for (int o = 2; o < 8; ++o) CHECK(allowed.count(bred.genes(o, j)) == 1);
  }

  // Ties keep the lower row first.
  Population tied = pop;
  tied.fitness.setConstant(1.0);
  RngStream trng(904);
  const Population tnext = cosyne_step(tied, params, trng);
  CHECK(tnext.genes.row(0).cwiseEqual(pop.genes.row(0)).all());
  CHECK(tnext.genes.row(1).cwiseEqual(pop.genes.row(1)).all());
}

TEST_CASE("training is elitist, monotone, and reproducible") {
  ArchitectureSpec arch;
  arch.n_tx = 2;
  arch.n_ue = 1;
  arch.n_ris = 4;
  arch.codebook_size = 2;
  arch.conv_channels = {2, 2, 1};
  arch.ris_hidden = 3;
  arch.prec_hidden = 3;
  const NarrowbandConfig cfg = desk_narrowband();

  CosyneParams params;
  params.population = 6;
  params.generations = 4;
  params.n_episodes = 1;
  params.horizon = 2;
  params.elite_fraction = 0.34;

  const TrainResult res = train(arch, cfg, params, 4242);
  REQUIRE(res.curve.size() == 4);
  for (std::size_t i = 0; i < res.curve.size(); ++i) {
    CHECK(res.curve[i].generation == int(i));
    CHECK(res.curve[i].best >= res.curve[i].mean);
    if (i > 0) CHECK(res.curve[i].best >= res.curve[i - 1].best);
  }
  CHECK(res.best_fitness == res.curve.back().best);
  const GenomeLayout layout = genome_layout(arch, false);
  CHECK(res.best.values.size() == layout.total);
  // The reported champion reproduces its fitness under the training seed.
  const double replay =
      evaluate_genome(res.best, layout, arch, cfg, params.n_episodes,
                      params.horizon, derive_stream_seed(4242, "eval", 0));
  CHECK(replay == res.best_fitness);

  const TrainResult res2 = train(arch, cfg, params, 4242);
  CHECK(res2.best_fitness == res.best_fitness);
  CHECK(res2.best.values.cwiseEqual(res.best.values).all());

  const TrainResult rff = train(arch, cfg, params, 4242, true);
  REQUIRE(rff.curve.size() == 4);
  for (std::size_t i = 1; i < rff.curve.size(); ++i)
    CHECK(rff.curve[i].best >= rff.curve[i - 1].best);
}

TEST_CASE("exhaustive baseline beats every restricted configuration") {
  NarrowbandConfig cfg = desk_narrowband();
  cfg.n_ris = 8;
  RngStream rng(1000);
  const NarrowbandChannelSet ch = sample_narrowband(cfg, rng);
  const PrecoderCodebook cb = dft_codebook(cfg.n_tx);
  const int n_blk = 4;

  const BesResult bes = bes_baseline(ch, cfg, n_blk, cb);
  CHECK(std::isfinite(bes.sum_rate));
  CHECK(bes.config.n_b == 0);
  REQUIRE(bes.precoder_indices.size() == 1);

  // Independent evaluation of the winning configuration.
  const Eigen::MatrixXcd phi =
      banded_phi(bes.config, phase_set_for_bits(1));
  Eigen::MatrixXcd v(cfg.n_tx, 1);
  v.col(0) = cb.codeword(bes.precoder_indices[0]);
  CHECK(broadcast_sum_rate(ch, {phi}, v, cfg.noise_variance, cfg.tx_power) ==
        doctest::Approx(bes.sum_rate).epsilon(1e-12));

  // No member of the blocked space does better.
  const int bs = cfg.n_ris / n_blk;
  for (std::uint32_t mask = 0; mask < (1u << n_blk); ++mask) {
    BandedRisConfig rc;
    rc.n_ris = cfg.n_ris;
    rc.n_b = 0;
    rc.diag_states.resize(cfg.n_ris);
    for (int blk = 0; blk < n_blk; ++blk)
      for (int i = 0; i < bs; ++i)
        rc.diag_states[blk * bs + i] = (mask >> blk) & 1u ? 1 : 0;
    const Eigen::MatrixXcd p = banded_phi(rc, phase_set_for_bits(1));
    for (int c = 0; c < cb.card(); ++c) {
      Eigen::MatrixXcd vv(cfg.n_tx, 1);
      vv.col(0) = cb.codeword(c);
      CHECK(broadcast_sum_rate(ch, {p}, vv, cfg.noise_variance, cfg.tx_power) <=
            bes.sum_rate + 1e-12);
    }
  }

  NarrowbandConfig two = cfg;
  two.n_ris_surfaces = 2;
  two.ris_positions = {Vec3(0, 3, 2.0), Vec3(1, 3, 2.0)};
  RngStream rng2(1001);
  const NarrowbandChannelSet ch2 = sample_narrowband(two, rng2);
  CHECK_THROWS_AS(bes_baseline(ch2, two, 4, cb), ConfigError);
  CHECK_THROWS_AS(bes_baseline(ch, cfg, 3, cb), ConfigError);
  CHECK_THROWS_AS(bes_baseline(ch, cfg, 4, cb, 8), ConfigError);
}

TEST_CASE("checkpoints round-trip") {
  ArchitectureSpec arch = desk_arch();
  arch.codebook_size = arch.n_tx;
  const GenomeLayout layout = genome_layout(arch, false);
  RngStream rng(1100);
  Checkpoint ck;
  ck.arch = arch;
  ck.ff_variant = false;
  ck.genome = random_genome(layout, rng);
  ck.best_fitness = 12.5;
  ck.curve = {{0, 1.0, 0.5}, {1, 2.0, 1.25}};

  const std::string path = "/tmp/riswb_test_ckpt.json";
  save_checkpoint(path, ck);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.arch.n_tx == arch.n_tx);
  CHECK(back.arch.n_ris == arch.n_ris);
  CHECK(back.arch.n_surfaces == arch.n_surfaces);
  CHECK(back.arch.conv_channels == arch.conv_channels);
  CHECK(back.arch.ris_hidden == arch.ris_hidden);
  CHECK(back.ff_variant == ck.ff_variant);
  CHECK(back.best_fitness == ck.best_fitness);
  CHECK(back.genome.values.cwiseEqual(ck.genome.values).all());
  REQUIRE(back.curve.size() == 2);
  CHECK(back.curve[1].generation == 1);
  CHECK(back.curve[1].best == 2.0);
  CHECK(back.curve[1].mean == 1.25);

  // Corrupt the stored genome length.
  {
    std::ifstream in(path);
    nlohmann::json j = nlohmann::json::parse(in);
    j["genome"].erase(j["genome"].size() - 1);
    std::ofstream out(path);
    out << j.dump();
  }
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
  {
    std::ofstream out(path);
    out << "{\"format\": \"other\"}";
  }
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
  CHECK_THROWS_AS(save_checkpoint("/nonexistent-dir/x.json", ck), IoError);
}
