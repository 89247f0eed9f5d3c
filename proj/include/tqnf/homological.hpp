#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "tqnf/context.hpp"
#include "tqnf/moyal.hpp"
#include "tqnf/symbol.hpp"

namespace tqnf {

// One accumulated correction of the divisor function F(u) = u + Phi(u):
// Phi = sum_s eps_s N_s(u) with x-independent N_s, each carrying the radius
// rho_s and loss d_s at which its norm enters the contraction budget theta.
struct DivisorTerm {
  double eps = 0.0;
  AtomicSymbol mean_symbol;  // q = 0 atoms only
  double rho = 0.0;
  double d = 0.0;
};

struct DivisorModel {
  std::vector<DivisorTerm> terms;

  bool empty() const {
    for (const auto& t : terms)
      if (t.eps != 0.0 && !t.mean_symbol.empty()) return false;
    return true;
  }

  // theta = sum_s |eps_s| ||N_s||_{rho_s} / (e d_s); the Neumann series in the
  // shift quotient converges geometrically when theta < 1.
  double theta() const {
    double th = 0.0;
    for (const auto& t : terms) {
      if (t.mean_symbol.empty()) continue;
      th += std::abs(t.eps) * weighted_norm(t.mean_symbol, t.rho) /
            (std::exp(1.0) * t.d);
    }
    return th;
  }

  AtomicSymbol phi_symbol(const Context& ctx) const {
    AtomicSymbol phi = AtomicSymbol::zero(ctx);
    phi.set_real_valued(true);
    for (const auto& t : terms)
      phi = merge_add(phi, t.mean_symbol.scaled(Complex{t.eps, 0.0}));
    return phi;
  }
};

namespace detail {

// Shift-quotient atoms: each Phi-atom at dual frequency p contributes
// amplitude * factor(p) at the same p (q stays 0).
template <class Factor>
AtomicSymbol shift_quotient_with(const DivisorModel& div, const Context& ctx,
                                 Factor&& factor) {
  AtomicSymbol g = AtomicSymbol::zero(ctx);
  for (const auto& term : div.terms) {
    if (term.eps == 0.0) continue;
    for (auto it = term.mean_symbol.raw().begin();
         it != term.mean_symbol.raw().end(); ++it) {
      const Atom a = term.mean_symbol.atom_at(it);
      const Complex amp = term.eps * a.amp * factor(a.p);
      if (amp == Complex{0.0, 0.0}) continue;
      g.add_keyed(it->first, amp);
    }
  }
  return g;
}

}  // namespace detail

// g(u, zeta) = (Phi(u + zeta) - Phi(u)) / zeta as a function of u:
// each Phi-atom amplitude is multiplied by (e^{i zeta p} - 1)/zeta.
inline AtomicSymbol divisor_shift_quotient(const DivisorModel& div, double zeta,
                                           const Context& ctx) {
  if (zeta == 0.0) fail(ErrorKind::zero_shift, "shift quotient needs zeta != 0");
  return detail::shift_quotient_with(div, ctx, [zeta](double p) {
    return (std::exp(kI * (zeta * p)) - 1.0) / zeta;
  });
}

// Same difference quotient written on the midpoint variable v = u + zeta/2:
// (Phi(v + zeta/2) - Phi(v - zeta/2))/zeta, factor 2i sin(p zeta/2)/zeta.
// This is the form the Weyl matrix elements see, so the per-mode solve below
// is exact against the infinite-matrix equation. Real-valued as a symbol.
inline AtomicSymbol divisor_shift_quotient_midpoint(const DivisorModel& div,
                                                    double zeta,
                                                    const Context& ctx) {
  if (zeta == 0.0) fail(ErrorKind::zero_shift, "shift quotient needs zeta != 0");
  AtomicSymbol g = detail::shift_quotient_with(div, ctx, [zeta](double p) {
    return Complex{0.0, 2.0 * std::sin(0.5 * p * zeta) / zeta};
  });
  g.set_real_valued(true);
  return g;
}

struct HomologicalSolution {
  AtomicSymbol W;  // no q = 0 atoms
  AtomicSymbol N;  // the q = 0 part of V, exactly
  double residual_bound = 0.0;
  int neumann_order = 0;
};

// Solves {F(L_omega), W}_M + V = N for atomic V against the divisor
// F(u) = u + Phi(u). Per q-mode the matrix equation inverts
// -i<omega,q>(1 + g~(v, zeta_q)) with zeta_q = hbar<omega,q>, expanded as the
// Neumann series sum_n (-g~)^n, truncated when the geometric tail bound drops
// below tol relative to ||V||_{rho_in}.
inline HomologicalSolution solve_homological(const AtomicSymbol& v,
                                             const DivisorModel& div,
                                             const Context& ctx, double rho_in,
                                             double d, double tol = 1e-10) {
  if (!(d > 0.0) || !(d < rho_in))
    fail(ErrorKind::invalid_config, "need 0 < d < rho_in");
  const double theta = div.theta();
  if (theta >= 1.0)
    fail(ErrorKind::neumann_diverges,
         "divisor contraction theta = " + std::to_string(theta) + " >= 1");

  HomologicalSolution sol;
  sol.N = v.mean_part();
  sol.W = AtomicSymbol::zero(ctx);

  // Group the oscillating modes of V.
  const std::size_t pd = v.p_dim();
  std::map<std::vector<std::int32_t>, AtomicSymbol> modes;
  for (auto it = v.raw().begin(); it != v.raw().end(); ++it) {
    std::vector<std::int32_t> q(it->first.begin() + static_cast<std::ptrdiff_t>(pd),
                                it->first.end());
    bool qzero = std::all_of(q.begin(), q.end(), [](auto z) { return z == 0; });
    if (qzero) continue;
    auto [mit, ins] = modes.try_emplace(q, AtomicSymbol::zero(ctx));
    mit->second.add_keyed(it->first, it->second);
  }

  const double norm_v = weighted_norm(v, rho_in);
  const double tol_abs = tol * std::max(norm_v, 1e-300);
  const std::size_t n_modes = std::max<std::size_t>(modes.size(), 1);

  for (auto& [q, vq] : modes) {
    const double wq = ctx.omega_dot_int(q);
    double ql1 = 0.0;
    for (auto qi : q) ql1 += std::abs(qi);
    if (std::abs(wq) <= 1e-15 * std::max(1.0, ql1 * ctx.omega_l1()))
      fail(ErrorKind::resonant_mode,
           "<omega,q> vanishes on a mode with nonzero amplitude");

    // Identity-divisor solution of the mode: W_q = V_q / (i <omega,q>).
    AtomicSymbol base = vq.scaled(Complex{1.0, 0.0} / (kI * wq));
    if (div.empty()) {
      for (const auto& [k, a] : base.raw()) sol.W.add_keyed(k, a);
      continue;
    }

    const double zeta = ctx.hbar * wq;
    const AtomicSymbol g = divisor_shift_quotient_midpoint(div, zeta, ctx);
    const double theta_q = weighted_norm(g, rho_in);
    if (theta_q >= 1.0)
      fail(ErrorKind::neumann_diverges, "per-mode shift quotient norm >= 1");

    AtomicSymbol acc = base;
    AtomicSymbol power = base;
    const double base_norm = weighted_norm(base, rho_in);
    int n = 0;
    double tail = base_norm * theta_q / (1.0 - theta_q);
    while (std::abs(wq) * (1.0 + theta_q) * tail >= tol_abs / static_cast<double>(n_modes) &&
           theta_q > 0.0) {
      ++n;
      if (n > 512)
        fail(ErrorKind::neumann_diverges, "Neumann series did not reach tolerance");
      power = pointwise_product(power, g).scaled(Complex{-1.0, 0.0});
      acc = merge_add(acc, power);
      tail = base_norm * std::pow(theta_q, n + 1) / (1.0 - theta_q);
    }
    sol.neumann_order = std::max(sol.neumann_order, n);
    sol.residual_bound += std::abs(wq) * (1.0 + theta_q) * tail;
    for (const auto& [k, a] : acc.raw()) sol.W.add_keyed(k, a);
  }

  if (!div.empty()) sol.W.set_hbar_tag(ctx.hbar);
  bool divisor_real = true;
  for (const auto& t : div.terms) divisor_real = divisor_real && t.mean_symbol.real_valued();
  sol.W.set_real_valued(v.real_valued() && divisor_real &&
                        sol.W.is_hermitian_symmetric());
  return sol;
}

// Bracket of the full divisor function with W:
// {F(L_omega), W}_M = {L_omega, W}_M + {Phi(L_omega), W}_M, both exact on atoms.
inline AtomicSymbol divisor_bracket(const DivisorModel& div, const AtomicSymbol& w,
                                    const Context& ctx) {
  AtomicSymbol out = bracket_with_linear(w, ctx);
  if (!div.empty()) {
    AtomicSymbol phi = div.phi_symbol(ctx);
    phi.set_hbar_tag(w.hbar_tag());
    out = merge_add(out, moyal_bracket(phi, w, ctx));
  }
  return out;
}

// Weighted norm of {F(L_omega), W}_M + V - N at rho_out.
inline double verify_homological(const HomologicalSolution& sol,
                                 const AtomicSymbol& v, const DivisorModel& div,
                                 const Context& ctx, double rho_out) {
  AtomicSymbol resid = divisor_bracket(div, sol.W, ctx);
  AtomicSymbol v_tagged = v;
  v_tagged.set_hbar_tag(resid.hbar_tag());
  AtomicSymbol n_tagged = sol.N;
  n_tagged.set_hbar_tag(resid.hbar_tag());
  resid = merge_add(resid, v_tagged) - n_tagged;
  return weighted_norm(resid, rho_out);
}

}  // namespace tqnf
