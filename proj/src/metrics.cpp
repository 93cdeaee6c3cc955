#include "riswb/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "riswb/channel.hpp"
#include "riswb/circuit.hpp"
#include "riswb/parallel.hpp"
#include "riswb/rng.hpp"

namespace riswb {

double PrecoderSet::cell_power(int k) const {
  double p = 0.0;
  for (const auto& wl : w.at(static_cast<std::size_t>(k))) {
    p += wl.squaredNorm();
  }
  return p;
}

CompositeChannels build_composites(const WidebandScenario& sc,
                                   const std::vector<Eigen::VectorXd>& c,
                                   const std::vector<SwitchMatrix>& S) {
  const int K = sc.n_cells();
  if (static_cast<int>(c.size()) != K || static_cast<int>(S.size()) != K) {
    throw DimensionError("build_composites: need one capacitance vector and one switch matrix per cell");
  }
  // phi[j](m, n): reflection coefficient of element m of RIS j at subcarrier n.
  std::vector<Eigen::MatrixXcd> phi(static_cast<std::size_t>(K));
  for (int j = 0; j < K; ++j) {
    const auto& cj = c[static_cast<std::size_t>(j)];
    if (cj.size() != sc.n_ris()) {
      throw DimensionError("build_composites: capacitance vector has wrong length");
    }
    if (S[static_cast<std::size_t>(j)].size() != sc.n_ris()) {
      throw DimensionError("build_composites: switch matrix has wrong size");
    }
    phi[static_cast<std::size_t>(j)].resize(sc.n_ris(), sc.n_sub());
    for (int n = 0; n < sc.n_sub(); ++n) {
      const double f = sc.subcarrier_freqs[static_cast<std::size_t>(n)];
      for (int m = 0; m < sc.n_ris(); ++m) {
        phi[static_cast<std::size_t>(j)](m, n) =
            reflection_coefficient(f, cj(m), sc.config.circuit);
      }
    }
  }

  CompositeChannels out;
  out.f.resize(static_cast<std::size_t>(K));
  for (int j = 0; j < K; ++j) {
    out.f[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(sc.n_ues()));
    for (int u = 0; u < sc.n_ues(); ++u) {
      Eigen::MatrixXcd fu(sc.n_tx(), sc.n_sub());
      for (int n = 0; n < sc.n_sub(); ++n) {
        fu.col(n) = composite_channel_wideband(
            sc.h_direct[static_cast<std::size_t>(j)][static_cast<std::size_t>(u)].col(n),
            sc.g_ris_ue[static_cast<std::size_t>(j)][static_cast<std::size_t>(u)].col(n),
            S[static_cast<std::size_t>(j)],
            phi[static_cast<std::size_t>(j)].col(n),
            sc.h_bs_ris[static_cast<std::size_t>(j)][static_cast<std::size_t>(n)]);
      }
      out.f[static_cast<std::size_t>(j)][static_cast<std::size_t>(u)] = std::move(fu);
    }
  }
  return out;
}

double sinr_narrowband(const Eigen::RowVectorXcd& m, const Eigen::MatrixXcd& V,
                       int target, double sigma2, double p) {
  if (m.size() != V.rows()) {
    throw DimensionError("sinr_narrowband: channel row and precoder matrix disagree");
  }
  if (target < 0 || target >= V.cols()) {
    throw DimensionError("sinr_narrowband: target column out of range");
  }
  if (sigma2 <= 0.0 || p <= 0.0) {
    throw DomainError("sinr_narrowband: sigma2 and p must be positive");
  }
  const Eigen::RowVectorXcd prod = m * V;
  double interference = 0.0;
  for (int j = 0; j < V.cols(); ++j) {
    if (j == target) continue;
    interference += std::norm(prod(j));
  }
  return std::norm(prod(target)) / (interference + sigma2 / p);
}

double sum_rate_narrowband(const std::vector<Eigen::RowVectorXcd>& m_rows,
                           const Eigen::MatrixXcd& V, double sigma2, double p) {
  if (static_cast<int>(m_rows.size()) != V.cols()) {
    throw DimensionError("sum_rate_narrowband: one channel row per precoded stream required");
  }
  double r = 0.0;
  for (int n = 0; n < V.cols(); ++n) {
    r += std::log2(1.0 + sinr_narrowband(m_rows[static_cast<std::size_t>(n)], V, n, sigma2, p));
  }
  return r;
}

LinkPower link_power(const CompositeChannels& f, const PrecoderSet& W,
                     double sigma2, const WidebandScenario& sc, int cell,
                     int local_ue, int n) {
  const int g = sc.global_ue(cell, local_ue);
  LinkPower lp;
  lp.mui = sigma2;
  for (int j = 0; j < sc.n_cells(); ++j) {
    // Composite channel from BS j (through RIS j) to the victim UE.
    const Eigen::VectorXcd fj =
        f.f[static_cast<std::size_t>(j)][static_cast<std::size_t>(g)].col(n);
    const int Lj = static_cast<int>(sc.cell_ues[static_cast<std::size_t>(j)].size());
    for (int i = 0; i < Lj; ++i) {
      const double term =
          std::norm(fj.dot(W.w[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)].col(n)));
      if (j == cell && i == local_ue) {
        lp.signal = term;
      } else {
        lp.mui += term;
      }
    }
  }
  return lp;
}

double rate_wideband(const CompositeChannels& f, const PrecoderSet& W,
                     double sigma2, const WidebandScenario& sc, int cell,
                     int local_ue) {
  double r = 0.0;
  for (int n = 0; n < sc.n_sub(); ++n) {
    const LinkPower lp = link_power(f, W, sigma2, sc, cell, local_ue, n);
    r += std::log2(1.0 + lp.signal / lp.mui);
  }
  return r / static_cast<double>(sc.n_sub());
}

double total_rate(const CompositeChannels& f, const PrecoderSet& W,
                  double sigma2, const WidebandScenario& sc) {
  double r = 0.0;
  for (int k = 0; k < sc.n_cells(); ++k) {
    const int Lk = static_cast<int>(sc.cell_ues[static_cast<std::size_t>(k)].size());
    for (int l = 0; l < Lk; ++l) {
      r += rate_wideband(f, W, sigma2, sc, k, l);
    }
  }
  return r;
}

MonteCarloResult monte_carlo(
    const std::function<double(int, std::uint64_t)>& evaluator, int n_runs,
    std::uint64_t seed, const std::string& stream_name, int workers) {
  if (n_runs <= 0) {
    throw DomainError("monte_carlo: n_runs must be positive");
  }
  MonteCarloResult res;
  res.n_runs = n_runs;
  res.samples.assign(static_cast<std::size_t>(n_runs), 0.0);
  parallel_for_indexed(n_runs, workers, [&](int i) {
    const std::uint64_t s = derive_stream_seed(seed, stream_name, static_cast<std::uint64_t>(i));
    res.samples[static_cast<std::size_t>(i)] = evaluator(i, s);
  });
  double mean = 0.0;
  for (double v : res.samples) mean += v;
  mean /= static_cast<double>(n_runs);
  double var = 0.0;
  for (double v : res.samples) var += (v - mean) * (v - mean);
  res.mean = mean;
  if (n_runs > 1) {
    var /= static_cast<double>(n_runs - 1);
    res.stderr_of_mean = std::sqrt(var / static_cast<double>(n_runs));
  }
  return res;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return std::string(buf);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("write_csv: cannot open " + path);
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw DimensionError("write_csv: row width does not match header");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
  if (!out) {
    throw IoError("write_csv: write failed for " + path);
  }
}

}  // namespace riswb
