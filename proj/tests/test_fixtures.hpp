#pragma once

#include <random>
#include <vector>

#include "tqnf/tqnf.hpp"

namespace tqnf::testing {

inline constexpr double kGolden = 1.6180339887498948482;

// l = 2, omega = (1, golden), hbar = 0.1, rho = 0.5 workload used throughout.
inline Context canonical_context(double hbar = 0.1) {
  Context ctx = Context::make(2, {1.0, kGolden}, hbar, 1.0, 1.0, 0.5);
  ctx.basis = std::make_shared<FreqBasis>(std::vector<double>{1.0});
  return ctx;
}

// V = 2 cos t (cos x1 + cos x2): eight atoms of amplitude 1/2 at
// p = +-1, q in {+-e1, +-e2}.
inline AtomicSymbol canonical_potential(const Context& ctx) {
  AtomicSymbol v = AtomicSymbol::zero(ctx);
  for (int ps : {-1, 1}) {
    for (int axis : {0, 1}) {
      for (int qs : {-1, 1}) {
        std::vector<std::int32_t> p{static_cast<std::int32_t>(ps)};
        std::vector<std::int32_t> q(2, 0);
        q[static_cast<std::size_t>(axis)] = static_cast<std::int32_t>(qs);
        v.add_atom(p, q, Complex{0.5, 0.0});
      }
    }
  }
  v.set_real_valued(true);
  return v;
}

// Normalized-frame context for the inequality suite: random |omega|_1 <= 1.
inline Context random_normalized_context(std::mt19937_64& rng, int l = 2) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> omega(static_cast<std::size_t>(l));
  double s = 0.0;
  for (auto& w : omega) {
    w = u(rng);
    s += w;
  }
  const double shrink = u(rng);  // keep |omega|_1 strictly below 1
  for (auto& w : omega) w *= shrink / s;
  Context ctx = Context::make(l, omega, 0.25 * (1.0 + u(rng)), 1.5, 1.0, 1.0);
  ctx.basis = std::make_shared<FreqBasis>(std::vector<double>{1.0});
  return ctx;
}

inline AtomicSymbol random_symbol(std::mt19937_64& rng, const Context& ctx,
                                  int atoms, int p_range = 2, int q_range = 2,
                                  bool hermitian = true) {
  std::uniform_int_distribution<int> pi(-p_range, p_range);
  std::uniform_int_distribution<int> qi(-q_range, q_range);
  std::uniform_real_distribution<double> a(-1.0, 1.0);
  AtomicSymbol s = AtomicSymbol::zero(ctx);
  for (int k = 0; k < atoms; ++k) {
    std::vector<std::int32_t> p{static_cast<std::int32_t>(pi(rng))};
    std::vector<std::int32_t> q(static_cast<std::size_t>(ctx.l));
    for (auto& v : q) v = static_cast<std::int32_t>(qi(rng));
    const Complex amp{a(rng), hermitian ? a(rng) : 0.0};
    s.add_atom(p, q, amp);
    if (hermitian) {
      std::vector<std::int32_t> mp = p;
      std::vector<std::int32_t> mq = q;
      for (auto& v : mp) v = -v;
      for (auto& v : mq) v = -v;
      s.add_atom(mp, mq, std::conj(amp));
    }
  }
  s.set_real_valued(hermitian && s.is_hermitian_symmetric());
  return s;
}

}  // namespace tqnf::testing
