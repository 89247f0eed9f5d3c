#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "tqnf/context.hpp"
#include "tqnf/homological.hpp"
#include "tqnf/moyal.hpp"
#include "tqnf/symbol.hpp"

namespace tqnf {

enum class BracketKind { moyal, poisson };

inline AtomicSymbol apply_bracket(BracketKind kind, const AtomicSymbol& x,
                                  const AtomicSymbol& w, const Context& ctx,
                                  const PruneOptions* opts = nullptr) {
  return kind == BracketKind::moyal ? moyal_bracket(x, w, ctx, opts)
                                    : poisson_bracket(x, w, ctx, opts);
}

// Strictly decreasing radii rho_1 = rho > rho_2 > ... with rho_s - d_s > rho/2;
// losses d_s proportional to 1/(s+1)^2 scaled so the total stays below rho/2.
struct RadiusSchedule {
  std::vector<double> rho;  // rho[s-1] = rho_s, s = 1..K
  std::vector<double> d;    // d[s-1] = d_s

  static RadiusSchedule make(double rho0, int orders) {
    // sum_{s>=1} 1/(s+1)^2 = pi^2/6 - 1
    const double c = 0.99 * (0.5 * rho0) / (M_PI * M_PI / 6.0 - 1.0);
    RadiusSchedule out;
    double r = rho0;
    for (int s = 1; s <= orders; ++s) {
      const double ds = c / static_cast<double>((s + 1) * (s + 1));
      out.rho.push_back(r);
      out.d.push_back(ds);
      r -= ds;
    }
    return out;
  }
};

struct NormalFormOrder {
  AtomicSymbol V_s;  // assembled perturbation at this order
  AtomicSymbol B;    // x-independent correction (q = 0 atoms)
  AtomicSymbol W;    // generator (no q = 0 atom)
  double norm_V = 0.0, norm_B = 0.0, norm_W = 0.0;
};

struct NormalForm {
  int K = 0;
  double hbar = 0.0;
  BracketKind kind = BracketKind::moyal;
  RadiusSchedule schedule;
  std::vector<NormalFormOrder> orders;  // index s-1 holds order s

  const AtomicSymbol& B(int s) const { return orders.at(static_cast<std::size_t>(s - 1)).B; }
  const AtomicSymbol& W(int s) const { return orders.at(static_cast<std::size_t>(s - 1)).W; }
};

namespace detail {

inline void compositions_of(int n, std::vector<std::vector<int>>& out) {
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int rest) {
    if (rest == 0) {
      out.push_back(cur);
      return;
    }
    for (int j = 1; j <= rest; ++j) {
      cur.push_back(j);
      rec(rest - j);
      cur.pop_back();
    }
  };
  rec(n);
}

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace detail

// Order-by-order normal form to order K: at each order s the perturbation V_s
// collects all iterated brackets of the previous generators with the linear
// part and with V, then the homological equation {W_s, .}: splits V_s into its
// x-average B_s and the generator W_s.
inline NormalForm qnf_construct(const AtomicSymbol& v, int K, const Context& ctx,
                                RadiusSchedule schedule,
                                BracketKind kind = BracketKind::moyal,
                                const PruneOptions* opts = nullptr,
                                double tol = 1e-12) {
  if (K < 1 || K > 6)
    fail(ErrorKind::invalid_config, "normal-form order K must be in [1,6]");
  if (static_cast<int>(schedule.rho.size()) < K)
    fail(ErrorKind::invalid_config, "radius schedule shorter than K");

  NormalForm nf;
  nf.K = K;
  nf.hbar = ctx.hbar;
  nf.kind = kind;
  nf.schedule = schedule;

  const DivisorModel identity_divisor;
  std::vector<AtomicSymbol> gens;  // W_1 .. W_{s-1}

  auto chain = [&](const AtomicSymbol& seed, const std::vector<int>& tuple) {
    // Innermost bracket first: ad_{j_r}, then j_{r-1}, ..., j_1 with
    // ad_j(X) = {X, W_j}_M. The seed L_omega is handled by the caller.
    AtomicSymbol x = seed;
    for (auto it = tuple.rbegin(); it != tuple.rend(); ++it) {
      if (x.empty()) break;
      x = apply_bracket(kind, x, gens[static_cast<std::size_t>(*it - 1)], ctx, opts);
    }
    return x;
  };

  for (int s = 1; s <= K; ++s) {
    AtomicSymbol v_s = AtomicSymbol::zero(ctx);
    if (s == 1) {
      v_s = v;
    } else {
      // Brackets seeded by L_omega: the innermost {L_omega, W_j}_M is exact.
      std::vector<std::vector<int>> comps;
      detail::compositions_of(s, comps);
      for (const auto& tuple : comps) {
        const int r = static_cast<int>(tuple.size());
        if (r < 2) continue;
        AtomicSymbol seed = bracket_with_linear(
            gens[static_cast<std::size_t>(tuple.back() - 1)], ctx);
        std::vector<int> rest(tuple.begin(), tuple.end() - 1);
        AtomicSymbol term = chain(seed, rest);
        v_s = merge_add(v_s, term.scaled(Complex{1.0 / detail::factorial(r), 0.0}));
      }
      // Brackets seeded by V itself.
      comps.clear();
      detail::compositions_of(s - 1, comps);
      AtomicSymbol v_tagged = v;
      for (const auto& tuple : comps) {
        const int r = static_cast<int>(tuple.size());
        AtomicSymbol term = chain(v_tagged, tuple);
        v_s = merge_add(v_s, term.scaled(Complex{1.0 / detail::factorial(r), 0.0}));
      }
    }
    v_s = apply_prune(std::move(v_s), opts);

    const double rho_s = schedule.rho[static_cast<std::size_t>(s - 1)];
    const double d_s = schedule.d[static_cast<std::size_t>(s - 1)];
    HomologicalSolution sol = solve_homological(v_s, identity_divisor, ctx, rho_s, d_s, tol);

    NormalFormOrder order;
    order.norm_V = weighted_norm(v_s, rho_s);
    order.norm_B = weighted_norm(sol.N, rho_s);
    order.norm_W = weighted_norm(sol.W, rho_s - d_s);
    order.V_s = std::move(v_s);
    order.B = std::move(sol.N);
    order.W = std::move(sol.W);
    nf.orders.push_back(std::move(order));
    gens.push_back(nf.orders.back().W);
  }
  return nf;
}

// Eigenvalue of the normal form at lattice point n:
//   hbar <omega, n> + sum_s eps^s B_s(hbar <omega, n>).
inline double qnf_eigenvalue(const NormalForm& nf, std::span<const int> n,
                             double eps, const Context& ctx) {
  const double t = ctx.hbar * ctx.omega_dot(n);
  double lambda = t;
  double eps_pow = 1.0;
  for (int s = 1; s <= nf.K; ++s) {
    eps_pow *= eps;
    const Complex b = nf.B(s).eval_mean(t);
    if (std::abs(b.imag()) > 1e-10 * std::max(std::abs(b), 1e-30))
      fail(ErrorKind::not_real, "normal-form coefficient has a nonreal value");
    lambda += eps_pow * b.real();
  }
  return lambda;
}

// Closed-form a-priori bounds for the order-K truncation, reported in
// log-space. The smallness hypothesis mu_s < 1/2 is evaluated and flagged;
// the bound is returned either way.
struct QnfRemainderBound {
  double ln_remainder = 0.0;  // ln of the remainder bound at order K+1
  double ln_b_series = 0.0;   // ln of the bound on sum_s ||B_s|| eps^s
  bool hypothesis_ok = false;
  std::vector<double> mu;
};

inline QnfRemainderBound qnf_remainder_bound(int K, double eps, double norm_v,
                                             const Context& ctx,
                                             const RadiusSchedule& schedule) {
  if (eps == 0.0) {
    QnfRemainderBound out;
    out.ln_remainder = -std::numeric_limits<double>::infinity();
    out.ln_b_series = -std::numeric_limits<double>::infinity();
    out.hypothesis_ok = true;
    return out;
  }
  const double tau = ctx.tau;
  const double ln_kconst = std::log(8.0) + (tau + 5.0) * std::log(2.0) +
                           std::log(ctx.gamma) + tau * std::log(tau) -
                           (2.0 + tau) * std::log(ctx.rho);
  const double ln_e_norm = std::log(norm_v);
  const double ln_eps = std::log(std::abs(eps));

  QnfRemainderBound out;
  const double kp1 = static_cast<double>(K + 1);
  out.ln_remainder = kp1 * (ln_e_norm + ln_kconst + ln_eps) +
                     (tau + 2.0) * kp1 * std::log(kp1);
  double ln_sum = -std::numeric_limits<double>::infinity();
  for (int s = 1; s <= K; ++s) {
    const double ls = s * (ln_e_norm + ln_kconst + ln_eps) +
                      (tau + 2.0) * s * std::log(static_cast<double>(s));
    ln_sum = std::max(ln_sum, ls) +
             std::log1p(std::exp(std::min(ln_sum, ls) - std::max(ln_sum, ls)));
  }
  out.ln_b_series = ln_sum;

  out.hypothesis_ok = true;
  double delta = 0.0;
  for (int s = 1; s <= K; ++s) {
    const double d_s = schedule.d[static_cast<std::size_t>(s - 1)];
    delta += d_s;
    const double mu_s = 8.0 * ctx.gamma * std::pow(tau, tau) * norm_v /
                        (std::pow(d_s, tau) * delta * delta);
    out.mu.push_back(mu_s);
    if (!(mu_s < 0.5)) out.hypothesis_ok = false;
  }
  return out;
}

}  // namespace tqnf
