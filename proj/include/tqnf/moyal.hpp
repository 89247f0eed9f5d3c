#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "tqnf/context.hpp"
#include "tqnf/symbol.hpp"

namespace tqnf {

// Twisted-convolution phase of an atom pair:
//   Omega = p_F <omega, q_G> - p_G <omega, q_F>.
// It is the symplectic pairing of the two dual-lattice points (p omega, q),
// antisymmetric under swapping the atoms.
inline double symplectic_phase(const Atom& f, const Atom& g, const Context& ctx) {
  return f.p * ctx.omega_dot_int(g.q) - g.p * ctx.omega_dot_int(f.q);
}

namespace detail {

template <class Kernel>
AtomicSymbol pairwise_product(const AtomicSymbol& f, const AtomicSymbol& g,
                              Kernel&& kernel, const PruneOptions* opts) {
  AtomicSymbol out(f.dim(), f.basis());
  const std::size_t pd = f.p_dim();
  for (auto itf = f.raw().begin(); itf != f.raw().end(); ++itf) {
    const Atom af = f.atom_at(itf);
    for (auto itg = g.raw().begin(); itg != g.raw().end(); ++itg) {
      const Atom ag = g.atom_at(itg);
      const Complex mul = kernel(af, ag);
      if (mul == Complex{0.0, 0.0}) continue;
      AtomicSymbol::Key key(itf->first.size());
      for (std::size_t i = 0; i < pd; ++i) key[i] = itf->first[i] + itg->first[i];
      for (std::size_t i = pd; i < key.size(); ++i)
        key[i] = itf->first[i] + itg->first[i];
      out.add_keyed(std::move(key), af.amp * ag.amp * mul);
    }
  }
  return apply_prune(std::move(out), opts);
}

inline void require_compatible(const AtomicSymbol& f, const AtomicSymbol& g,
                               const Context& ctx) {
  if (!hbar_tags_compatible(f, g))
    fail(ErrorKind::incompatible_hbar_tag, "product of symbols produced at different hbar");
  if ((f.hbar_tag() && *f.hbar_tag() != ctx.hbar) ||
      (g.hbar_tag() && *g.hbar_tag() != ctx.hbar))
    fail(ErrorKind::incompatible_hbar_tag, "symbol hbar tag differs from context hbar");
}

}  // namespace detail

// Symbol of the operator product F(hbar) G(hbar): atom keys add and the pair
// amplitude picks up the phase e^{i hbar Omega / 2}.
inline AtomicSymbol star_product(const AtomicSymbol& f, const AtomicSymbol& g,
                                 const Context& ctx,
                                 const PruneOptions* opts = nullptr) {
  detail::require_compatible(f, g, ctx);
  AtomicSymbol out = detail::pairwise_product(
      f, g,
      [&](const Atom& af, const Atom& ag) {
        return std::exp(kI * (0.5 * ctx.hbar * symplectic_phase(af, ag, ctx)));
      },
      opts);
  out.set_hbar_tag(ctx.hbar);
  out.set_real_valued(false);
  return out;
}

// Symbol of [F, G]/(i hbar): pair amplitude a_F a_G (2/hbar) sin(hbar Omega/2).
// Real-valuedness is preserved (commutator of self-adjoint operators over i).
inline AtomicSymbol moyal_bracket(const AtomicSymbol& f, const AtomicSymbol& g,
                                  const Context& ctx,
                                  const PruneOptions* opts = nullptr) {
  detail::require_compatible(f, g, ctx);
  if (&f == &g || f.raw() == g.raw()) {
    AtomicSymbol zero(f.dim(), f.basis());
    zero.set_hbar_tag(ctx.hbar);
    zero.set_real_valued(f.real_valued());
    return zero;
  }
  AtomicSymbol out = detail::pairwise_product(
      f, g,
      [&](const Atom& af, const Atom& ag) -> Complex {
        const double om = symplectic_phase(af, ag, ctx);
        return Complex{(2.0 / ctx.hbar) * std::sin(0.5 * ctx.hbar * om), 0.0};
      },
      opts);
  out.set_hbar_tag(ctx.hbar);
  out.set_real_valued(f.real_valued() && g.real_valued());
  return out;
}

// hbar -> 0 limit of the bracket kernel: pair amplitude a_F a_G Omega.
inline AtomicSymbol poisson_bracket(const AtomicSymbol& f, const AtomicSymbol& g,
                                    const Context& ctx,
                                    const PruneOptions* opts = nullptr) {
  if (&f == &g || f.raw() == g.raw()) {
    AtomicSymbol zero(f.dim(), f.basis());
    zero.set_hbar_tag(merged_hbar_tag(f, g));
    zero.set_real_valued(f.real_valued());
    return zero;
  }
  AtomicSymbol out = detail::pairwise_product(
      f, g,
      [&](const Atom& af, const Atom& ag) -> Complex {
        return Complex{symplectic_phase(af, ag, ctx), 0.0};
      },
      opts);
  out.set_hbar_tag(f.hbar_tag() ? f.hbar_tag() : g.hbar_tag());
  out.set_real_valued(f.real_valued() && g.real_valued());
  return out;
}

// Plain pointwise product of the two functions (keys add, no phase).
inline AtomicSymbol pointwise_product(const AtomicSymbol& f, const AtomicSymbol& g,
                                      const PruneOptions* opts = nullptr) {
  if (!hbar_tags_compatible(f, g))
    fail(ErrorKind::incompatible_hbar_tag, "product of symbols produced at different hbar");
  AtomicSymbol out(f.dim(), f.basis());
  for (auto itf = f.raw().begin(); itf != f.raw().end(); ++itf) {
    for (auto itg = g.raw().begin(); itg != g.raw().end(); ++itg) {
      AtomicSymbol::Key key(itf->first.size());
      for (std::size_t i = 0; i < key.size(); ++i)
        key[i] = itf->first[i] + itg->first[i];
      out.add_keyed(std::move(key), itf->second * itg->second);
    }
  }
  out.set_hbar_tag(merged_hbar_tag(f, g));
  out.set_real_valued(f.real_valued() && g.real_valued());
  return apply_prune(std::move(out), opts);
}

// Bracket with the linear flow symbol: symbol of [L_omega, S]/(i hbar).
// Exact at every hbar, each atom picks up the factor -i <omega, q>.
inline AtomicSymbol bracket_with_linear(const AtomicSymbol& s, const Context& ctx) {
  AtomicSymbol out(s.dim(), s.basis());
  const std::size_t pd = s.p_dim();
  for (auto it = s.raw().begin(); it != s.raw().end(); ++it) {
    std::span<const std::int32_t> q(it->first.data() + pd, it->first.size() - pd);
    const double wq = ctx.omega_dot_int(q);
    if (wq == 0.0) continue;
    out.add_keyed(it->first, it->second * (-kI) * wq);
  }
  out.set_hbar_tag(s.hbar_tag());
  out.set_real_valued(s.real_valued());
  return out;
}

// Weighted-norm distance between the bracket and its classical limit at
// radius rho_out; O(hbar^2) for hbar-independent inputs.
inline double poisson_limit_residual(const AtomicSymbol& f, const AtomicSymbol& g,
                                     const Context& ctx, double rho_out) {
  const AtomicSymbol mb = moyal_bracket(f, g, ctx);
  AtomicSymbol pb = poisson_bracket(f, g, ctx);
  pb.set_hbar_tag(mb.hbar_tag());
  return weighted_norm(mb - pb, rho_out);
}

// Truncated adjoint series: terms[m] = ad_W^m(X)/m! with ad_W(X) = {X, W}_M,
// so that  e^{i t W/hbar} X e^{-i t W/hbar}  has symbol  sum_m t^m terms[m].
// Truncation uses the iterated-bracket tail bound: with
// x = t_max ||W||_{rho_in} / d  and d = rho_in - rho_out,
//   ||t^m terms[m]||_{rho_out} <= sqrt(2 pi m) x^m ||X||_{rho_in} / (e d),
// summable for x < 1 with an explicit geometric-tail majorant.
struct AdjointSeries {
  std::vector<AtomicSymbol> terms;
  double tail_bound = 0.0;
  int order = 0;

  AtomicSymbol eval(double t) const {
    AtomicSymbol acc = terms.front();
    double tm = 1.0;
    for (std::size_t m = 1; m < terms.size(); ++m) {
      tm *= t;
      acc = acc + terms[m].scaled(Complex{tm, 0.0});
    }
    return acc;
  }
};

inline double adjoint_tail_majorant(double x, int m_star, double norm_x,
                                    double d) {
  // sum_{m > m*} sqrt(2 pi m) x^m <= sqrt(2 pi) x^{m*+1}((m*+1)(1-x)+x)/(1-x)^2
  const double geo = std::pow(x, m_star + 1) *
                     ((m_star + 1) * (1.0 - x) + x) / ((1.0 - x) * (1.0 - x));
  return std::sqrt(2.0 * M_PI) * geo * norm_x / (std::exp(1.0) * d);
}

inline AdjointSeries adjoint_series(const AtomicSymbol& w, const AtomicSymbol& x,
                                    double t_max, const Context& ctx,
                                    double rho_in, double rho_out, double tol,
                                    const PruneOptions* opts = nullptr,
                                    int max_order = 64) {
  if (!(rho_out < rho_in))
    fail(ErrorKind::invalid_config, "adjoint series needs rho_out < rho_in");
  const double d = rho_in - rho_out;
  const double norm_w = weighted_norm(w, rho_in);
  const double norm_x = weighted_norm(x, rho_in);
  const double ratio = std::abs(t_max) * norm_w / d;
  if (!(ratio < 1.0))
    fail(ErrorKind::series_diverges,
         "conjugation series: |t| ||W||/d = " + std::to_string(ratio) + " >= 1");

  AdjointSeries out;
  out.terms.push_back(x);
  if (norm_x == 0.0 || norm_w == 0.0) return out;
  for (int m = 1; m <= max_order; ++m) {
    AtomicSymbol next = moyal_bracket(out.terms.back(), w, ctx, opts)
                            .scaled(Complex{1.0 / static_cast<double>(m), 0.0});
    const double tail = adjoint_tail_majorant(ratio, m, norm_x, d);
    out.terms.push_back(std::move(next));
    if (out.terms.back().empty()) {
      // The chain vanished identically; every later term is zero too.
      out.tail_bound = 0.0;
      out.order = m;
      return out;
    }
    if (tail < tol) {
      out.tail_bound = tail;
      out.order = m;
      return out;
    }
  }
  fail(ErrorKind::series_diverges, "conjugation series did not reach tolerance");
}

}  // namespace tqnf
