#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "test_fixtures.hpp"
#include "tqnf/tqnf.hpp"

using namespace tqnf;
using tqnf::testing::canonical_context;
using tqnf::testing::canonical_potential;
using tqnf::testing::random_normalized_context;
using tqnf::testing::random_symbol;

namespace {

AtomicSymbol single_atom(const Context& ctx, int p, std::vector<std::int32_t> q,
                         Complex a) {
  AtomicSymbol s = AtomicSymbol::zero(ctx);
  std::vector<std::int32_t> pc{static_cast<std::int32_t>(p)};
  s.add_atom(pc, q, a);
  return s;
}

// Interior comparison of quantize({F,G}_M) against the matrix commutator.
double bracket_oracle_gap(const AtomicSymbol& f, const AtomicSymbol& g,
                          const Context& ctx, int box_m) {
  const ModeBox box{ctx.l, box_m};
  OperatorMatrix fm = quantize(f, box, ctx);
  OperatorMatrix gm = quantize(g, box, ctx);
  OperatorMatrix comm = commutator_over_ihbar(fm, gm, ctx);
  OperatorMatrix mb = quantize(moyal_bracket(f, g, ctx), box, ctx);
  const int margin = std::max(f.max_q_linf(), g.max_q_linf());
  return max_interior_diff(comm, mb, margin);
}

}  // namespace

TEST_CASE("star product") {
  Context ctx = canonical_context();
  AtomicSymbol v = canonical_potential(ctx);

  SECTION("the unit symbol is a two-sided identity") {
    AtomicSymbol unit = AtomicSymbol::unit(ctx);
    AtomicSymbol left = star_product(unit, v, ctx);
    AtomicSymbol right = star_product(v, unit, ctx);
    REQUIRE(weighted_norm(left - v.scaled(Complex{1.0, 0.0}), 0.5) < 1e-15);
    REQUIRE(weighted_norm(right - v.scaled(Complex{1.0, 0.0}), 0.5) < 1e-15);
  }

  SECTION("x-independent symbols multiply with no phase") {
    AtomicSymbol a = single_atom(ctx, 1, {0, 0}, Complex{0.7, 0.2});
    AtomicSymbol b = single_atom(ctx, 2, {0, 0}, Complex{-0.3, 0.5});
    AtomicSymbol prod = star_product(a, b, ctx);
    REQUIRE(prod.atom_count() == 1);
    const Atom atom = prod.atoms()[0];
    REQUIRE(std::abs(atom.amp - Complex{0.7, 0.2} * Complex{-0.3, 0.5}) < 1e-16);
    REQUIRE(atom.p == 3.0);
  }

  SECTION("single-atom pair agrees with the matrix product") {
    AtomicSymbol f = single_atom(ctx, 1, {1, 0}, Complex{1.0, 0.0});
    AtomicSymbol g = single_atom(ctx, 0, {0, 1}, Complex{1.0, 0.0});
    AtomicSymbol prod = star_product(f, g, ctx);
    REQUIRE(prod.atom_count() == 1);
    // Expected phase from the composition law, computed independently:
    // Omega = p_f <omega, q_g> - p_g <omega, q_f> = 1 * phi.
    const double omega_phase = tqnf::testing::kGolden;
    const Complex expect = std::exp(kI * (0.5 * ctx.hbar * omega_phase));
    REQUIRE(std::abs(prod.atoms()[0].amp - expect) < 1e-15);

    const ModeBox box{2, 8};
    OperatorMatrix lhs;
    lhs.box = box;
    lhs.entries = quantize(f, box, ctx).entries * quantize(g, box, ctx).entries;
    OperatorMatrix rhs = quantize(prod, box, ctx);
    REQUIRE(max_interior_diff(lhs, rhs, 1) < 1e-14);
  }
}

TEST_CASE("moyal bracket") {
  Context ctx = canonical_context();
  AtomicSymbol v = canonical_potential(ctx);

  SECTION("antisymmetry: {F, F} is empty") {
    REQUIRE(moyal_bracket(v, v, ctx).empty());
  }

  SECTION("bracket with the linear symbol multiplies by -i<omega,q>") {
    std::mt19937_64 rng(31);
    AtomicSymbol f = random_symbol(rng, ctx, 6);
    AtomicSymbol lf = bracket_with_linear(f, ctx);
    for (const Atom& a : lf.atoms()) {
      bool found = false;
      for (const Atom& src : f.atoms()) {
        if (src.q == a.q && src.p_coeffs == a.p_coeffs) {
          const double wq = ctx.omega_dot_int(src.q);
          REQUIRE(std::abs(a.amp - src.amp * (-kI) * wq) < 1e-15);
          found = true;
        }
      }
      REQUIRE(found);
    }

    const ModeBox box{2, 8};
    OperatorMatrix lm = quantize_linear(box, ctx);
    OperatorMatrix fm = quantize(f, box, ctx);
    OperatorMatrix comm = commutator_over_ihbar(lm, fm, ctx);
    OperatorMatrix sym = quantize(lf, box, ctx);
    REQUIRE(max_interior_diff(comm, sym, f.max_q_linf()) < 1e-12);
  }

  SECTION("generic pair amplitude is (2/hbar) sin(hbar Omega / 2) a_F a_G") {
    Context c = ctx;
    c.hbar = 0.2;
    AtomicSymbol f = single_atom(c, 1, {1, 0}, Complex{0.8, -0.1});
    AtomicSymbol g = single_atom(c, -2, {0, 1}, Complex{0.4, 0.3});
    AtomicSymbol mb = moyal_bracket(f, g, c);
    REQUIRE(mb.atom_count() == 1);
    const double om = 1.0 * tqnf::testing::kGolden - (-2.0) * 1.0;
    const Complex expect =
        Complex{0.8, -0.1} * Complex{0.4, 0.3} * (2.0 / 0.2) * std::sin(0.1 * om);
    REQUIRE(std::abs(mb.atoms()[0].amp - expect) < 1e-15);
    REQUIRE(bracket_oracle_gap(f, g, c, 8) < 1e-13);
  }

  SECTION("matrix oracle equivalence on random symbols") {
    std::mt19937_64 rng(32);
    for (int it = 0; it < 12; ++it) {
      AtomicSymbol f = random_symbol(rng, ctx, 4, 2, 2);
      AtomicSymbol g = random_symbol(rng, ctx, 4, 2, 2);
      REQUIRE(bracket_oracle_gap(f, g, ctx, 8) < 1e-12);
    }
  }

  SECTION("hbar tags incompatible with the context are rejected") {
    AtomicSymbol f = single_atom(ctx, 1, {1, 0}, Complex{1.0, 0.0});
    AtomicSymbol g = single_atom(ctx, 0, {0, 1}, Complex{1.0, 0.0});
    f.set_hbar_tag(0.2);  // ctx.hbar is 0.1
    REQUIRE_THROWS_AS(moyal_bracket(f, g, ctx), EngineError);
    REQUIRE_THROWS_AS(star_product(f, g, ctx), EngineError);
  }

  SECTION("real-valuedness is preserved") {
    std::mt19937_64 rng(33);
    AtomicSymbol f = random_symbol(rng, ctx, 5);
    AtomicSymbol g = random_symbol(rng, ctx, 5);
    AtomicSymbol mb = moyal_bracket(f, g, ctx);
    REQUIRE(mb.real_valued());
    REQUIRE(mb.is_hermitian_symmetric());
  }
}

TEST_CASE("poisson limit residual") {
  Context ctx = canonical_context();
  AtomicSymbol v = canonical_potential(ctx);

  SECTION("constants commute") {
    AtomicSymbol a = single_atom(ctx, 0, {0, 0}, Complex{2.0, 0.0});
    AtomicSymbol b = single_atom(ctx, 0, {0, 0}, Complex{3.0, 0.0});
    REQUIRE(poisson_limit_residual(a, b, ctx, 0.25) == 0.0);
  }

  SECTION("the linear bracket has no quantum correction") {
    std::mt19937_64 rng(41);
    AtomicSymbol f = random_symbol(rng, ctx, 5);
    // Realize {F, L}_M at two different hbar through the exact rule; the
    // values coincide because the linear symbol sees no deformation.
    Context c2 = ctx;
    c2.hbar = 0.05;
    AtomicSymbol a = bracket_with_linear(f, ctx);
    AtomicSymbol b = bracket_with_linear(f, c2);
    REQUIRE(weighted_norm(a - b, 0.25) < 1e-14);
  }

  SECTION("O(hbar^2) scaling: halving gives ratio near 1/4") {
    std::mt19937_64 rng(42);
    AtomicSymbol g = random_symbol(rng, ctx, 5);
    Context c1 = ctx, c2 = ctx;
    c1.hbar = 0.2;
    c2.hbar = 0.1;
    const double r1 = poisson_limit_residual(v, g, c1, 0.25);
    const double r2 = poisson_limit_residual(v, g, c2, 0.25);
    REQUIRE(r1 > 0.0);
    const double ratio = r2 / r1;
    REQUIRE(ratio > 0.2);
    REQUIRE(ratio < 0.3);
  }
}

TEST_CASE("norm inequalities of the symbol algebra") {
  std::mt19937_64 rng(51);
  for (int it = 0; it < 60; ++it) {
    Context ctx = random_normalized_context(rng);
    AtomicSymbol f = random_symbol(rng, ctx, 5);
    AtomicSymbol g = random_symbol(rng, ctx, 5);
    std::uniform_real_distribution<double> du(0.05, 0.3);
    const double rho = 1.0;
    const double d = du(rng);
    const double d1 = du(rng);

    REQUIRE(weighted_norm(star_product(f, g, ctx), rho) <=
            weighted_norm(f, rho) * weighted_norm(g, rho) * (1.0 + 1e-12));

    const double lhs = weighted_norm(moyal_bracket(f, g, ctx), rho - d - d1);
    const double rhs = weighted_norm(f, rho) * weighted_norm(g, rho - d) /
                       (std::exp(2.0) * d1 * (d + d1));
    REQUIRE(lhs <= rhs * (1.0 + 1e-12));

    REQUIRE(weighted_norm(pointwise_product(f, g), rho) <=
            weighted_norm(f, rho) * weighted_norm(g, rho) * (1.0 + 1e-12));

    REQUIRE(weighted_norm(bracket_with_linear(f, ctx), rho - d) <=
            weighted_norm(f, rho) / d * (1.0 + 1e-12));
  }
}

TEST_CASE("iterated bracket bound") {
  std::mt19937_64 rng(52);
  for (int it = 0; it < 25; ++it) {
    Context ctx = random_normalized_context(rng);
    AtomicSymbol f = random_symbol(rng, ctx, 4);
    AtomicSymbol g = random_symbol(rng, ctx, 4);
    const double rho = 1.0;
    const double d = 0.35;
    AtomicSymbol chain = g;
    double factorial = 1.0;
    for (int r = 1; r <= 3; ++r) {
      chain = moyal_bracket(f, chain, ctx);
      factorial *= r;
      const double lhs = weighted_norm(chain, rho - d) / factorial;
      const double rhs = std::sqrt(2.0 * M_PI * r) / (std::exp(1.0) * d) *
                         std::pow(weighted_norm(f, rho) / d, r) *
                         weighted_norm(g, rho);
      REQUIRE(lhs <= rhs * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("adjoint series") {
  Context ctx = canonical_context();
  AtomicSymbol v = canonical_potential(ctx);

  SECTION("W = 0 returns the bare symbol") {
    AdjointSeries s =
        adjoint_series(AtomicSymbol::zero(ctx), v, 0.5, ctx, 0.5, 0.25, 1e-12);
    REQUIRE(s.terms.size() == 1);
    REQUIRE(s.tail_bound == 0.0);
  }

  SECTION("x-independent generator commutes with the linear part") {
    AtomicSymbol w = AtomicSymbol::zero(ctx);
    std::vector<std::int32_t> pc{1};
    std::vector<std::int32_t> q0{0, 0};
    w.add_atom(pc, q0, Complex{0.5, 0.0});
    REQUIRE(bracket_with_linear(w, ctx).empty());
  }

  SECTION("conjugation series matches the matrix conjugation") {
    HomologicalSolution sol =
        solve_homological(v, DivisorModel{}, ctx, 0.5, 0.125, 1e-12);
    const double t = 5e-3;
    AdjointSeries series = adjoint_series(sol.W, v, t, ctx, 0.375, 0.25, 1e-12);
    REQUIRE(series.tail_bound < 1e-12);
    REQUIRE(series.order >= 2);
    AtomicSymbol conj = series.eval(t);

    const ModeBox box{2, 10};
    OperatorMatrix wq = quantize(sol.W, box, ctx);
    OperatorMatrix u = unitary_exp(wq, t, ctx);
    OperatorMatrix vm = quantize(v, box, ctx);
    OperatorMatrix lhs;
    lhs.box = box;
    lhs.entries = u.entries * vm.entries * u.entries.adjoint();
    OperatorMatrix rhs = quantize(conj, box, ctx);
    REQUIRE(max_interior_diff(lhs, rhs, 5) < 1e-8);
  }

  SECTION("diverging series is rejected") {
    std::mt19937_64 rng(61);
    AtomicSymbol w = random_symbol(rng, ctx, 4);
    REQUIRE_THROWS_AS(adjoint_series(w, v, 1e3, ctx, 0.5, 0.25, 1e-10),
                      EngineError);
  }
}
