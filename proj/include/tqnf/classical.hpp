#pragma once

#include <cmath>
#include <vector>

#include "tqnf/context.hpp"
#include "tqnf/moyal.hpp"
#include "tqnf/qnf.hpp"
#include "tqnf/symbol.hpp"

namespace tqnf {

// hbar = 0 track: the same order-by-order recursion driven by the classical
// bracket kernel. The quantum coefficients reduce to these as hbar -> 0.
inline NormalForm classical_birkhoff(const AtomicSymbol& v, int K,
                                     const Context& ctx, RadiusSchedule schedule,
                                     const PruneOptions* opts = nullptr,
                                     double tol = 1e-12) {
  return qnf_construct(v, K, ctx, std::move(schedule), BracketKind::poisson,
                       opts, tol);
}

struct PhasePoint {
  std::vector<double> xi;
  std::vector<double> x;
};

namespace detail {

// Real gradient fields of a real-valued generator at a phase point:
// d/dxi_k brings i p omega_k, d/dx_k brings i q_k.
inline void flow_fields(const AtomicSymbol& w, const Context& ctx,
                        const PhasePoint& z, std::vector<double>& dxi,
                        std::vector<double>& dx) {
  const int l = ctx.l;
  std::fill(dxi.begin(), dxi.end(), 0.0);
  std::fill(dx.begin(), dx.end(), 0.0);
  double t = 0.0;
  for (int i = 0; i < l; ++i) t += ctx.omega[static_cast<std::size_t>(i)] * z.xi[static_cast<std::size_t>(i)];
  for (auto it = w.raw().begin(); it != w.raw().end(); ++it) {
    const Atom a = w.atom_at(it);
    double phase = a.p * t;
    for (int i = 0; i < l; ++i)
      phase += static_cast<double>(a.q[static_cast<std::size_t>(i)]) * z.x[static_cast<std::size_t>(i)];
    const Complex e = a.amp * std::exp(kI * phase);
    for (int i = 0; i < l; ++i) {
      // dx/ds = dW/dxi, dxi/ds = -dW/dx
      dx[static_cast<std::size_t>(i)] +=
          std::real(kI * a.p * ctx.omega[static_cast<std::size_t>(i)] * e);
      dxi[static_cast<std::size_t>(i)] -=
          std::real(kI * static_cast<double>(a.q[static_cast<std::size_t>(i)]) * e);
    }
  }
}

}  // namespace detail

// Classic fixed-step RK4 integration of the flow of a real-valued generator;
// the torus coordinates are reduced mod 2 pi at the end.
inline PhasePoint hamiltonian_flow(const AtomicSymbol& w0, const Context& ctx,
                                   PhasePoint start, double eps, int steps) {
  if (steps < 1) fail(ErrorKind::invalid_config, "flow needs at least one step");
  const int l = ctx.l;
  const double h = eps / static_cast<double>(steps);
  std::vector<double> k1x(static_cast<std::size_t>(l)), k1xi(static_cast<std::size_t>(l)),
      k2x(static_cast<std::size_t>(l)), k2xi(static_cast<std::size_t>(l)),
      k3x(static_cast<std::size_t>(l)), k3xi(static_cast<std::size_t>(l)),
      k4x(static_cast<std::size_t>(l)), k4xi(static_cast<std::size_t>(l));
  PhasePoint z = std::move(start);
  PhasePoint tmp = z;
  for (int n = 0; n < steps; ++n) {
    detail::flow_fields(w0, ctx, z, k1xi, k1x);
    for (int i = 0; i < l; ++i) {
      tmp.xi[static_cast<std::size_t>(i)] = z.xi[static_cast<std::size_t>(i)] + 0.5 * h * k1xi[static_cast<std::size_t>(i)];
      tmp.x[static_cast<std::size_t>(i)] = z.x[static_cast<std::size_t>(i)] + 0.5 * h * k1x[static_cast<std::size_t>(i)];
    }
    detail::flow_fields(w0, ctx, tmp, k2xi, k2x);
    for (int i = 0; i < l; ++i) {
      tmp.xi[static_cast<std::size_t>(i)] = z.xi[static_cast<std::size_t>(i)] + 0.5 * h * k2xi[static_cast<std::size_t>(i)];
      tmp.x[static_cast<std::size_t>(i)] = z.x[static_cast<std::size_t>(i)] + 0.5 * h * k2x[static_cast<std::size_t>(i)];
    }
    detail::flow_fields(w0, ctx, tmp, k3xi, k3x);
    for (int i = 0; i < l; ++i) {
      tmp.xi[static_cast<std::size_t>(i)] = z.xi[static_cast<std::size_t>(i)] + h * k3xi[static_cast<std::size_t>(i)];
      tmp.x[static_cast<std::size_t>(i)] = z.x[static_cast<std::size_t>(i)] + h * k3x[static_cast<std::size_t>(i)];
    }
    detail::flow_fields(w0, ctx, tmp, k4xi, k4x);
    for (int i = 0; i < l; ++i) {
      z.xi[static_cast<std::size_t>(i)] +=
          h / 6.0 * (k1xi[static_cast<std::size_t>(i)] + 2.0 * k2xi[static_cast<std::size_t>(i)] +
                     2.0 * k3xi[static_cast<std::size_t>(i)] + k4xi[static_cast<std::size_t>(i)]);
      z.x[static_cast<std::size_t>(i)] +=
          h / 6.0 * (k1x[static_cast<std::size_t>(i)] + 2.0 * k2x[static_cast<std::size_t>(i)] +
                     2.0 * k3x[static_cast<std::size_t>(i)] + k4x[static_cast<std::size_t>(i)]);
    }
  }
  const double two_pi = 2.0 * M_PI;
  for (int i = 0; i < l; ++i) {
    double& xi = z.x[static_cast<std::size_t>(i)];
    xi = std::fmod(xi, two_pi);
    if (xi < 0.0) xi += two_pi;
  }
  return z;
}

struct TrajectoryPoint {
  int step = 0;
  double t = 0.0;  // flow time
  PhasePoint z;
};

// Same integrator, recording every sub-step for the trajectory report.
inline std::vector<TrajectoryPoint> hamiltonian_flow_trajectory(
    const AtomicSymbol& w0, const Context& ctx, PhasePoint start, double eps,
    int steps) {
  std::vector<TrajectoryPoint> out;
  out.push_back({0, 0.0, start});
  const double h = eps / static_cast<double>(steps);
  PhasePoint z = std::move(start);
  for (int n = 1; n <= steps; ++n) {
    z = hamiltonian_flow(w0, ctx, z, h, 1);
    out.push_back({n, h * n, z});
  }
  return out;
}

struct SampleGrid {
  std::vector<PhasePoint> points;

  // Tensor grid: nx^l torus points and a few flow-variable values t realized
  // as xi = t omega / |omega|_2^2.
  static SampleGrid tensor(const Context& ctx, int nx,
                           std::span<const double> t_values) {
    SampleGrid g;
    const int l = ctx.l;
    const double om2 = ctx.omega_l2sq();
    std::vector<int> idx(static_cast<std::size_t>(l), 0);
    for (double t : t_values) {
      std::fill(idx.begin(), idx.end(), 0);
      while (true) {
        PhasePoint z;
        z.xi.resize(static_cast<std::size_t>(l));
        z.x.resize(static_cast<std::size_t>(l));
        for (int i = 0; i < l; ++i) {
          z.xi[static_cast<std::size_t>(i)] = t * ctx.omega[static_cast<std::size_t>(i)] / om2;
          z.x[static_cast<std::size_t>(i)] =
              2.0 * M_PI * static_cast<double>(idx[static_cast<std::size_t>(i)]) / nx;
        }
        g.points.push_back(std::move(z));
        int i = 0;
        for (; i < l; ++i) {
          if (++idx[static_cast<std::size_t>(i)] < nx) break;
          idx[static_cast<std::size_t>(i)] = 0;
        }
        if (i == l) break;
      }
    }
    return g;
  }
};

// Sup over the sample grid of the difference between the conjugated symbol
// L + B (computed through the bracket series at ctx.hbar, with generator
// w_quantum) and the classical transport (L + A) o flow(w0, eps).
inline double egorov_residual(const AtomicSymbol& a, const AtomicSymbol& w_quantum,
                              const AtomicSymbol& w0, double eps,
                              const Context& ctx, const SampleGrid& grid,
                              double rho_in, double rho_out, int flow_steps = 10000,
                              double tol = 1e-12) {
  // B = A + sum_{j>=0} eps^{j+1}/(j+1) * ad^j(Y1)/j!,
  // Y1 = {L, W}_M + {A, W}_M.
  AtomicSymbol a_tagged = a;
  a_tagged.set_hbar_tag(w_quantum.hbar_tag());
  AtomicSymbol y1 = merge_add(bracket_with_linear(w_quantum, ctx),
                              moyal_bracket(a_tagged, w_quantum, ctx));
  AtomicSymbol b = a_tagged;
  if (!y1.empty()) {
    AdjointSeries series =
        adjoint_series(w_quantum, y1, std::abs(eps), ctx, rho_in, rho_out, tol);
    double eps_pow = 1.0;
    for (std::size_t j = 0; j < series.terms.size(); ++j) {
      eps_pow *= eps;
      b = merge_add(
          b, series.terms[j].scaled(Complex{eps_pow / static_cast<double>(j + 1), 0.0}));
    }
  }

  double worst = 0.0;
  for (const PhasePoint& z : grid.points) {
    double t = 0.0;
    for (int i = 0; i < ctx.l; ++i)
      t += ctx.omega[static_cast<std::size_t>(i)] * z.xi[static_cast<std::size_t>(i)];
    const double quantum = t + std::real(b.eval(t, z.x));
    const PhasePoint zf = hamiltonian_flow(w0, ctx, z, eps, flow_steps);
    double tf = 0.0;
    for (int i = 0; i < ctx.l; ++i)
      tf += ctx.omega[static_cast<std::size_t>(i)] * zf.xi[static_cast<std::size_t>(i)];
    const double classical = tf + std::real(a.eval(tf, zf.x));
    worst = std::max(worst, std::abs(quantum - classical));
  }
  return worst;
}

inline double egorov_residual(const AtomicSymbol& a, const AtomicSymbol& w,
                              double eps, const Context& ctx,
                              const SampleGrid& grid, double rho_in,
                              double rho_out, int flow_steps = 10000,
                              double tol = 1e-12) {
  return egorov_residual(a, w, w, eps, ctx, grid, rho_in, rho_out, flow_steps, tol);
}

}  // namespace tqnf
