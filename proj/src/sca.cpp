#include "riswb/sca.hpp"

#include <algorithm>
#include <cmath>

#include "riswb/assignment.hpp"
#include "riswb/channel.hpp"
#include "riswb/circuit.hpp"
#include "riswb/parallel.hpp"

namespace riswb {

namespace {

constexpr double kInvLn2 = 1.4426950408889634;  // 1/ln(2)

int cell_count_checked(const SolverState& state, const WidebandScenario& sc) {
  const int K = sc.n_cells();
  if (static_cast<int>(state.precoders.w.size()) != K ||
      static_cast<int>(state.capacitances.size()) != K ||
      static_cast<int>(state.switches.size()) != K) {
    throw DimensionError("solver state does not match the scenario cell count");
  }
  return K;
}

}  // namespace

void SolverOptions::validate() const {
  if (tau <= 0.0) throw ConfigError("solver: tau must be > 0");
  if (epsilon <= 0.0) throw ConfigError("solver: epsilon must be > 0");
  if (max_iterations < 1) throw ConfigError("solver: max_iterations must be >= 1");
  if (step_a <= 0.0 || step_b <= 0.0) {
    throw ConfigError("solver: step rule constants must be > 0");
  }
  if (bisection_rel_tol <= 0.0 || bisection_max_iters < 1) {
    throw ConfigError("solver: invalid bisection settings");
  }
}

SolverState make_initial_state(const WidebandScenario& sc) {
  const int K = sc.n_cells();
  SolverState st;
  st.precoders.w.resize(static_cast<std::size_t>(K));
  st.capacitances.resize(static_cast<std::size_t>(K));
  st.switches.reserve(static_cast<std::size_t>(K));
  const auto& circuit = sc.config.circuit;
  for (int k = 0; k < K; ++k) {
    const int Lk = static_cast<int>(sc.cell_ues[static_cast<std::size_t>(k)].size());
    const double p_stream =
        sc.config.power.p_max_per_bs[static_cast<std::size_t>(k)] /
        static_cast<double>(Lk * sc.n_sub());
    auto& wk = st.precoders.w[static_cast<std::size_t>(k)];
    wk.resize(static_cast<std::size_t>(Lk));
    for (int l = 0; l < Lk; ++l) {
      const int g = sc.global_ue(k, l);
      const Eigen::MatrixXcd& h =
          sc.h_direct[static_cast<std::size_t>(k)][static_cast<std::size_t>(g)];
      Eigen::MatrixXcd wl(sc.n_tx(), sc.n_sub());
      for (int n = 0; n < sc.n_sub(); ++n) {
        Eigen::VectorXcd dir = h.col(n);
        const double nn = dir.norm();
        if (nn > 1e-300) {
          dir /= nn;
        } else {
          dir.setZero();
          dir(0) = 1.0;
        }
        wl.col(n) = std::sqrt(p_stream) * dir;
      }
      wk[static_cast<std::size_t>(l)] = std::move(wl);
    }
    st.capacitances[static_cast<std::size_t>(k)] =
        Eigen::VectorXd::Constant(sc.n_ris(), 0.5 * (circuit.c_min + circuit.c_max));
    st.switches.push_back(SwitchMatrix::identity(sc.n_ris()));
  }
  return st;
}

void check_state(const SolverState& state, const WidebandScenario& sc) {
  const int K = cell_count_checked(state, sc);
  const auto& circuit = sc.config.circuit;
  for (int k = 0; k < K; ++k) {
    const double p = state.precoders.cell_power(k);
    const double budget = sc.config.power.p_max_per_bs[static_cast<std::size_t>(k)];
    if (!(p <= budget + 1e-8)) {
      throw ValidationError("solver state: power budget violated at cell " + std::to_string(k));
    }
    const auto& ck = state.capacitances[static_cast<std::size_t>(k)];
    if (ck.size() != sc.n_ris()) {
      throw DimensionError("solver state: capacitance vector has wrong length");
    }
    for (int m = 0; m < ck.size(); ++m) {
      if (!(ck(m) >= circuit.c_min && ck(m) <= circuit.c_max)) {
        throw ValidationError("solver state: capacitance out of box at cell " + std::to_string(k));
      }
    }
    const auto& Sk = state.switches[static_cast<std::size_t>(k)];
    if (Sk.size() != sc.n_ris()) {
      throw DimensionError("solver state: switch matrix has wrong size");
    }
    validate_switch(Sk.perm);
  }
}

IterateCache make_cache(const SolverState& state, const WidebandScenario& sc) {
  const int K = cell_count_checked(state, sc);
  const double sigma2 = sc.config.power.noise_variance;
  IterateCache cache;
  cache.phi.resize(static_cast<std::size_t>(K));
  cache.dphi.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    Eigen::MatrixXcd p(sc.n_ris(), sc.n_sub());
    Eigen::MatrixXcd dp(sc.n_ris(), sc.n_sub());
    const auto& ck = state.capacitances[static_cast<std::size_t>(k)];
    for (int n = 0; n < sc.n_sub(); ++n) {
      const double f = sc.subcarrier_freqs[static_cast<std::size_t>(n)];
      for (int m = 0; m < sc.n_ris(); ++m) {
        p(m, n) = reflection_coefficient(f, ck(m), sc.config.circuit);
        // reflection_derivative returns d(phi*)/dC; the chain rule below
        // multiplies against the unconjugated d(phi)/dC.
        dp(m, n) = std::conj(reflection_derivative(f, ck(m), sc.config.circuit));
      }
    }
    cache.phi[static_cast<std::size_t>(k)] = std::move(p);
    cache.dphi[static_cast<std::size_t>(k)] = std::move(dp);
  }

  cache.f.f.resize(static_cast<std::size_t>(K));
  for (int j = 0; j < K; ++j) {
    cache.f.f[static_cast<std::size_t>(j)].resize(static_cast<std::size_t>(sc.n_ues()));
    for (int u = 0; u < sc.n_ues(); ++u) {
      Eigen::MatrixXcd fu(sc.n_tx(), sc.n_sub());
      for (int n = 0; n < sc.n_sub(); ++n) {
        fu.col(n) = composite_channel_wideband(
            sc.h_direct[static_cast<std::size_t>(j)][static_cast<std::size_t>(u)].col(n),
            sc.g_ris_ue[static_cast<std::size_t>(j)][static_cast<std::size_t>(u)].col(n),
            state.switches[static_cast<std::size_t>(j)],
            cache.phi[static_cast<std::size_t>(j)].col(n),
            sc.h_bs_ris[static_cast<std::size_t>(j)][static_cast<std::size_t>(n)]);
      }
      cache.f.f[static_cast<std::size_t>(j)][static_cast<std::size_t>(u)] = std::move(fu);
    }
  }

  cache.mui.resize(static_cast<std::size_t>(K));
  cache.snr.resize(static_cast<std::size_t>(K));
  for (int j = 0; j < K; ++j) {
    const int Lj = static_cast<int>(sc.cell_ues[static_cast<std::size_t>(j)].size());
    cache.mui[static_cast<std::size_t>(j)].assign(static_cast<std::size_t>(Lj),
                                                  Eigen::VectorXd(sc.n_sub()));
    cache.snr[static_cast<std::size_t>(j)].assign(static_cast<std::size_t>(Lj),
                                                  Eigen::VectorXd(sc.n_sub()));
    for (int i = 0; i < Lj; ++i) {
      for (int n = 0; n < sc.n_sub(); ++n) {
        const LinkPower lp =
            link_power(cache.f, state.precoders, sigma2, sc, j, i, n);
        cache.mui[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)](n) = lp.mui;
        cache.snr[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)](n) =
            lp.signal / lp.mui;
      }
    }
  }
  return cache;
}

Eigen::VectorXcd pricing_precoder(const SolverState& state,
                                  const IterateCache& cache,
                                  const WidebandScenario& sc, int k, int l,
                                  int n, const SolverOptions& opt) {
  Eigen::VectorXcd pi = Eigen::VectorXcd::Zero(sc.n_tx());
  if (!opt.cooperative || sc.n_cells() == 1) return pi;
  const Eigen::VectorXcd wl =
      state.precoders.w[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)].col(n);
  for (int j = 0; j < sc.n_cells(); ++j) {
    if (j == k) continue;
    const int Lj = static_cast<int>(sc.cell_ues[static_cast<std::size_t>(j)].size());
    for (int i = 0; i < Lj; ++i) {
      const int g = sc.global_ue(j, i);
      const double snr = cache.snr[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)](n);
      const double mui = cache.mui[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)](n);
      const double coef = snr / ((1.0 + snr) * mui);
      // Channel from BS k toward the victim UE of cell j.
      const Eigen::VectorXcd fk =
          cache.f.f[static_cast<std::size_t>(k)][static_cast<std::size_t>(g)].col(n);
      pi.noalias() -= (kInvLn2 * coef * fk.dot(wl)) * fk;
    }
  }
  return pi;
}

SurrogateCoeffs surrogate_coeffs(const SolverState& state,
                                 const IterateCache& cache,
                                 const WidebandScenario& sc, int k, int l,
                                 int n) {
  const int g = sc.global_ue(k, l);
  const Eigen::VectorXcd fk =
      cache.f.f[static_cast<std::size_t>(k)][static_cast<std::size_t>(g)].col(n);
  const Eigen::VectorXcd wl =
      state.precoders.w[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)].col(n);
  const cxd u = fk.dot(wl);  // f^H w at the iterate
  const double sig = std::norm(u);
  const double mui = cache.mui[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)](n);
  SurrogateCoeffs sg;
  sg.a = kInvLn2 * sig / ((mui + sig) * mui);
  sg.b = (kInvLn2 / mui) * u * fk;
  return sg;
}

namespace {

// (a f f^H + mu I)^{-1} v via Sherman-Morrison; the extra 1/2 comes from the
// first-order condition of Re{v^H w} (its w*-gradient is v/2).
Eigen::VectorXcd precoder_solution(double mu, double a,
                                   const Eigen::VectorXcd& f,
                                   const Eigen::VectorXcd& v) {
  const cxd fv = f.dot(v);
  return (0.5 / mu) * (v - f * (a * fv / (mu + a * f.squaredNorm())));
}

}  // namespace

std::vector<Eigen::MatrixXcd> update_precoder(const SolverState& state,
                                              const IterateCache& cache,
                                              const WidebandScenario& sc, int k,
                                              const SolverOptions& opt) {
  const int Lk = static_cast<int>(sc.cell_ues[static_cast<std::size_t>(k)].size());
  const double budget = sc.config.power.p_max_per_bs[static_cast<std::size_t>(k)];

  std::vector<Eigen::MatrixXd> a_coef(static_cast<std::size_t>(Lk));
  std::vector<Eigen::MatrixXcd> v(static_cast<std::size_t>(Lk));
  std::vector<Eigen::MatrixXcd> fch(static_cast<std::size_t>(Lk));
  for (int l = 0; l < Lk; ++l) {
    const int g = sc.global_ue(k, l);
    fch[static_cast<std::size_t>(l)] =
        cache.f.f[static_cast<std::size_t>(k)][static_cast<std::size_t>(g)];
    a_coef[static_cast<std::size_t>(l)].resize(1, sc.n_sub());
    v[static_cast<std::size_t>(l)].resize(sc.n_tx(), sc.n_sub());
    for (int n = 0; n < sc.n_sub(); ++n) {
      const SurrogateCoeffs sg = surrogate_coeffs(state, cache, sc, k, l, n);
      a_coef[static_cast<std::size_t>(l)](0, n) = sg.a;
      v[static_cast<std::size_t>(l)].col(n) =
          pricing_precoder(state, cache, sc, k, l, n, opt) + 2.0 * sg.b +
          opt.tau *
              state.precoders.w[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)].col(n);
    }
  }

  auto solve_all = [&](double lambda) {
    std::vector<Eigen::MatrixXcd> w(static_cast<std::size_t>(Lk));
    const double mu = 0.5 * opt.tau + lambda;
    for (int l = 0; l < Lk; ++l) {
      w[static_cast<std::size_t>(l)].resize(sc.n_tx(), sc.n_sub());
      for (int n = 0; n < sc.n_sub(); ++n) {
        w[static_cast<std::size_t>(l)].col(n) = precoder_solution(
            mu, a_coef[static_cast<std::size_t>(l)](0, n),
            fch[static_cast<std::size_t>(l)].col(n), v[static_cast<std::size_t>(l)].col(n));
      }
    }
    return w;
  };
  auto power_of = [](const std::vector<Eigen::MatrixXcd>& w) {
    double p = 0.0;
    for (const auto& wl : w) p += wl.squaredNorm();
    return p;
  };

  std::vector<Eigen::MatrixXcd> w = solve_all(0.0);
  if (power_of(w) <= budget) {
    return w;  // multiplier inactive
  }

  double hi = 1.0;
  int doublings = 0;
  while (power_of(solve_all(hi)) > budget) {
    hi *= 2.0;
    if (++doublings > 60) {
      throw SolverError("update_precoder: failed to bracket the power multiplier");
    }
  }
  double lo = 0.0;
  double lambda = hi;
  for (int it = 0; it < opt.bisection_max_iters; ++it) {
    lambda = 0.5 * (lo + hi);
    const double p = power_of(solve_all(lambda));
    if (std::abs(p - budget) / budget < opt.bisection_rel_tol) break;
    if (p > budget) {
      lo = lambda;
    } else {
      hi = lambda;
    }
  }
  w = solve_all(lambda);
  if (power_of(w) > budget) {
    w = solve_all(hi);  // hi side is always feasible
  }
  return w;
}

namespace {

// Diagonal of M = A + C Phi^H B for one (precoder m, victim UE) pair:
// entry p = [H w_m]_p * conj([S^T g]_p) * conj(f^H w_m).
Eigen::VectorXcd m_diagonal(const Eigen::VectorXcd& hw, const Eigen::VectorXcd& stg,
                            cxd u) {
  return hw.cwiseProduct(stg.conjugate()) * std::conj(u);
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> capacitance_gradients(
    const SolverState& state, const IterateCache& cache,
    const WidebandScenario& sc, int k, const SolverOptions& opt) {
  const int Lk = static_cast<int>(sc.cell_ues[static_cast<std::size_t>(k)].size());
  const auto& Sk = state.switches[static_cast<std::size_t>(k)];
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(sc.n_ris());
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(sc.n_ris());

  for (int n = 0; n < sc.n_sub(); ++n) {
    const Eigen::MatrixXcd& H = sc.h_bs_ris[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)];
    const Eigen::VectorXcd dphi = cache.dphi[static_cast<std::size_t>(k)].col(n);
    // H w_m for every local precoder m of cell k.
    std::vector<Eigen::VectorXcd> hw(static_cast<std::size_t>(Lk));
    for (int m = 0; m < Lk; ++m) {
      hw[static_cast<std::size_t>(m)].noalias() =
          H * state.precoders.w[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)].col(n);
    }

    // Own-cell terms (gamma).
    for (int l = 0; l < Lk; ++l) {
      const int g = sc.global_ue(k, l);
      const Eigen::VectorXcd stg =
          Sk.apply_transpose(sc.g_ris_ue[static_cast<std::size_t>(k)][static_cast<std::size_t>(g)].col(n));
      const Eigen::VectorXcd fl =
          cache.f.f[static_cast<std::size_t>(k)][static_cast<std::size_t>(g)].col(n);
      const double mui = cache.mui[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)](n);
      const double snr = cache.snr[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)](n);
      const double sig = snr * mui;

      Eigen::VectorXd d_sig(sc.n_ris());
      Eigen::VectorXd d_mui = Eigen::VectorXd::Zero(sc.n_ris());
      for (int m = 0; m < Lk; ++m) {
        const cxd u = fl.dot(
            state.precoders.w[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)].col(n));
        const Eigen::VectorXd d =
            2.0 * dphi.cwiseProduct(m_diagonal(hw[static_cast<std::size_t>(m)], stg, u))
                      .real();
        if (m == l) {
          d_sig = d;
        } else {
          d_mui += d;
        }
      }
      gamma += kInvLn2 / ((1.0 + snr) * mui * mui) * (mui * d_sig - sig * d_mui);
    }

    // Cross-cell pricing (pi).
    if (opt.cooperative && sc.n_cells() > 1) {
      for (int j = 0; j < sc.n_cells(); ++j) {
        if (j == k) continue;
        const int Lj = static_cast<int>(sc.cell_ues[static_cast<std::size_t>(j)].size());
        for (int i = 0; i < Lj; ++i) {
          const int g = sc.global_ue(j, i);
          const Eigen::VectorXcd stg = Sk.apply_transpose(
              sc.g_ris_ue[static_cast<std::size_t>(k)][static_cast<std::size_t>(g)].col(n));
          const Eigen::VectorXcd fk =
              cache.f.f[static_cast<std::size_t>(k)][static_cast<std::size_t>(g)].col(n);
          const double mui = cache.mui[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)](n);
          const double snr = cache.snr[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)](n);
          Eigen::VectorXcd diag_sum = Eigen::VectorXcd::Zero(sc.n_ris());
          for (int m = 0; m < Lk; ++m) {
            const cxd u = fk.dot(
                state.precoders.w[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)].col(n));
            diag_sum += m_diagonal(hw[static_cast<std::size_t>(m)], stg, u);
          }
          const Eigen::VectorXd d_mui = 2.0 * dphi.cwiseProduct(diag_sum).real();
          pi -= kInvLn2 * snr / ((1.0 + snr) * mui) * d_mui;
        }
      }
    }
  }
  return {gamma, pi};
}

Eigen::VectorXd update_capacitances(const SolverState& state, int k,
                                    const Eigen::VectorXd& gamma,
                                    const Eigen::VectorXd& pi,
                                    const SolverOptions& opt,
                                    const RisCircuitParams& circuit) {
  const Eigen::VectorXd beta =
      opt.tau * state.capacitances[static_cast<std::size_t>(k)] + gamma + pi;
  return (beta / opt.tau)
      .cwiseMax(circuit.c_min)
      .cwiseMin(circuit.c_max);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> switch_gradients(
    const SolverState& state, const IterateCache& cache,
    const WidebandScenario& sc, int k, const SolverOptions& opt) {
  const int Lk = static_cast<int>(sc.cell_ues[static_cast<std::size_t>(k)].size());
  Eigen::MatrixXcd gamma_c = Eigen::MatrixXcd::Zero(sc.n_ris(), sc.n_ris());
  Eigen::MatrixXcd pi_c = Eigen::MatrixXcd::Zero(sc.n_ris(), sc.n_ris());

  for (int n = 0; n < sc.n_sub(); ++n) {
    const Eigen::MatrixXcd& H = sc.h_bs_ris[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)];
    const Eigen::VectorXcd phi = cache.phi[static_cast<std::size_t>(k)].col(n);
    // Phi H w_m for every local precoder of cell k.
    std::vector<Eigen::VectorXcd> phw(static_cast<std::size_t>(Lk));
    for (int m = 0; m < Lk; ++m) {
      phw[static_cast<std::size_t>(m)] = phi.cwiseProduct(
          H * state.precoders.w[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)].col(n));
    }

    for (int l = 0; l < Lk; ++l) {
      const int g = sc.global_ue(k, l);
      const Eigen::VectorXcd gl =
          sc.g_ris_ue[static_cast<std::size_t>(k)][static_cast<std::size_t>(g)].col(n);
      const Eigen::VectorXcd fl =
          cache.f.f[static_cast<std::size_t>(k)][static_cast<std::size_t>(g)].col(n);
      const double mui = cache.mui[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)](n);
      const double snr = cache.snr[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)](n);
      const double sig = snr * mui;

      // N^T for each precoder m: conj(u_m) * conj(g_l) phw_m^T (rank one).
      Eigen::MatrixXcd num = Eigen::MatrixXcd::Zero(sc.n_ris(), sc.n_ris());
      for (int m = 0; m < Lk; ++m) {
        const cxd u = fl.dot(
            state.precoders.w[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)].col(n));
        const Eigen::MatrixXcd nt =
            std::conj(u) * gl.conjugate() * phw[static_cast<std::size_t>(m)].transpose();
        if (m == l) {
          num += mui * nt;
        } else {
          num -= sig * nt;
        }
      }
      gamma_c += 2.0 * kInvLn2 / ((1.0 + snr) * mui * mui) * num;
    }

    if (opt.cooperative && sc.n_cells() > 1) {
      for (int j = 0; j < sc.n_cells(); ++j) {
        if (j == k) continue;
        const int Lj = static_cast<int>(sc.cell_ues[static_cast<std::size_t>(j)].size());
        for (int i = 0; i < Lj; ++i) {
          const int g = sc.global_ue(j, i);
          const Eigen::VectorXcd gi =
              sc.g_ris_ue[static_cast<std::size_t>(k)][static_cast<std::size_t>(g)].col(n);
          const Eigen::VectorXcd fk =
              cache.f.f[static_cast<std::size_t>(k)][static_cast<std::size_t>(g)].col(n);
          const double mui = cache.mui[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)](n);
          const double snr = cache.snr[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)](n);
          Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(sc.n_ris());
          for (int m = 0; m < Lk; ++m) {
            const cxd u = fk.dot(
                state.precoders.w[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)].col(n));
            acc += std::conj(u) * phw[static_cast<std::size_t>(m)];
          }
          pi_c -= 2.0 * kInvLn2 * snr / ((1.0 + snr) * mui) *
                  (gi.conjugate() * acc.transpose());
        }
      }
    }
  }
  return {gamma_c.real(), pi_c.real()};
}

SwitchMatrix update_switch(const SolverState& state, int k,
                           const Eigen::MatrixXd& gamma,
                           const Eigen::MatrixXd& pi, const SolverOptions& opt) {
  const Eigen::MatrixXd cost =
      gamma + pi + opt.tau * state.switches[static_cast<std::size_t>(k)].dense();
  return solve_lap_max(cost).perm;
}

double step_size(int t, double a, double b, double alpha_prev) {
  if (t < 1) throw DomainError("step_size: t must be >= 1");
  return (alpha_prev + a) / (1.0 + b * static_cast<double>(t));
}

namespace {

IterationRecord make_record(const SolverState& state, const IterateCache& cache,
                            const WidebandScenario& sc) {
  IterationRecord rec;
  rec.iteration = state.iteration;
  rec.step = state.step;
  const double sigma2 = sc.config.power.noise_variance;
  rec.per_cell_rate.resize(static_cast<std::size_t>(sc.n_cells()));
  double total = 0.0;
  for (int k = 0; k < sc.n_cells(); ++k) {
    double rk = 0.0;
    const int Lk = static_cast<int>(sc.cell_ues[static_cast<std::size_t>(k)].size());
    for (int l = 0; l < Lk; ++l) {
      rk += rate_wideband(cache.f, state.precoders, sigma2, sc, k, l);
    }
    rec.per_cell_rate[static_cast<std::size_t>(k)] = rk;
    total += rk;
  }
  rec.objective = total;
  return rec;
}

}  // namespace

SolverResult run_algorithm1(const WidebandScenario& sc,
                            const SolverOptions& opt) {
  return run_algorithm1(sc, opt, make_initial_state(sc));
}

SolverResult run_algorithm1(const WidebandScenario& sc, const SolverOptions& opt,
                            const SolverState& init) {
  opt.validate();
  const int K = sc.n_cells();
  SolverState state = init;
  state.iteration = 0;
  state.step = 1.0;
  check_state(state, sc);

  IterateCache cache = make_cache(state, sc);
  SolverResult result;
  {
    const IterationRecord rec = make_record(state, cache, sc);
    state.objective = rec.objective;
    result.trace.push_back(rec);
  }
  SolverState best = state;

  double alpha = 1.0;
  double rbar_prev = state.objective;
  for (int t = 1; t <= opt.max_iterations; ++t) {
    alpha = step_size(t, opt.step_a, opt.step_b, alpha);

    std::vector<std::vector<Eigen::MatrixXcd>> w_hat(static_cast<std::size_t>(K));
    std::vector<Eigen::VectorXd> c_hat(static_cast<std::size_t>(K));
    std::vector<SwitchMatrix> s_hat(static_cast<std::size_t>(K),
                                    SwitchMatrix::identity(sc.n_ris()));
    parallel_for_indexed(K, opt.workers, [&](int k) {
      w_hat[static_cast<std::size_t>(k)] = update_precoder(state, cache, sc, k, opt);
      const auto [gamma_c, pi_c] = capacitance_gradients(state, cache, sc, k, opt);
      c_hat[static_cast<std::size_t>(k)] =
          update_capacitances(state, k, gamma_c, pi_c, opt, sc.config.circuit);
      if (opt.bd) {
        const auto [gamma_s, pi_s] = switch_gradients(state, cache, sc, k, opt);
        s_hat[static_cast<std::size_t>(k)] = update_switch(state, k, gamma_s, pi_s, opt);
      } else {
        s_hat[static_cast<std::size_t>(k)] = state.switches[static_cast<std::size_t>(k)];
      }
    });

    for (int k = 0; k < K; ++k) {
      auto& wk = state.precoders.w[static_cast<std::size_t>(k)];
      for (std::size_t l = 0; l < wk.size(); ++l) {
        wk[l] += alpha * (w_hat[static_cast<std::size_t>(k)][l] - wk[l]);
      }
      auto& ck = state.capacitances[static_cast<std::size_t>(k)];
      ck += alpha * (c_hat[static_cast<std::size_t>(k)] - ck);
      // The switch blend runs at alpha = 1 so the iterate stays a permutation.
      state.switches[static_cast<std::size_t>(k)] = s_hat[static_cast<std::size_t>(k)];
    }
    state.iteration = t;
    state.step = alpha;
    check_state(state, sc);

    cache = make_cache(state, sc);
    const IterationRecord rec = make_record(state, cache, sc);
    state.objective = rec.objective;
    result.trace.push_back(rec);
    if (state.objective > best.objective) best = state;

    if (std::abs((state.objective - rbar_prev) / state.objective) <= opt.epsilon) {
      result.converged = true;
      break;
    }
    rbar_prev = state.objective;
  }

  result.state = result.converged ? state : best;
  return result;
}

}  // namespace riswb
