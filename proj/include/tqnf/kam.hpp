#pragma once

#include <cmath>
#include <vector>

#include "tqnf/context.hpp"
#include "tqnf/estimates.hpp"
#include "tqnf/homological.hpp"
#include "tqnf/moyal.hpp"
#include "tqnf/symbol.hpp"
#include "tqnf/weyl.hpp"

namespace tqnf {

// Radius bookkeeping of the superconvergent iteration:
// rho_{l+1} = rho_l - d_l with d_l = f/(l+1)^2 and f chosen so the total loss
// stays below rho/2 (f = 1 verbatim once rho > 1.01 * pi^2/3).
struct RadiusLedger {
  double rho0 = 0.0;
  std::vector<double> d;
  std::vector<double> rho;  // rho[l], l = 0..steps

  static RadiusLedger make(double rho0, int steps) {
    RadiusLedger out;
    out.rho0 = rho0;
    const double verbatim_threshold = 1.01 * M_PI * M_PI / 3.0;
    const double f = (rho0 > verbatim_threshold)
                         ? 1.0
                         : 0.99 * 3.0 * rho0 / (M_PI * M_PI);
    double r = rho0;
    out.rho.push_back(r);
    for (int l = 0; l < steps; ++l) {
      const double dl = f / static_cast<double>((l + 1) * (l + 1));
      out.d.push_back(dl);
      r -= dl;
      out.rho.push_back(r);
    }
    return out;
  }

  double delta(int ell) const {
    double s = 0.0;
    for (int j = 0; j < ell && j < static_cast<int>(d.size()); ++j) s += d[static_cast<std::size_t>(j)];
    return s;
  }
};

struct KamStepRecord {
  int ell = 0;
  double eps_ell = 0.0;
  double norm_V = 0.0;  // ||V_ell||_{rho_ell}
  double norm_W = 0.0;  // ||W_ell||_{rho_{ell+1}}
  double norm_N = 0.0;  // ||N_ell||_{rho_ell}
  double theta = 0.0;
  double A = 0.0;
  double E = 0.0;
  double slack = 0.0;  // cumulative truncation budget after the step
};

struct KamState {
  int ell = 0;
  double eps = 0.0;      // base perturbation parameter
  double eps_ell = 0.0;  // eps^{2^ell}, by exact squaring
  DivisorModel divisor;  // accumulated x-independent corrections
  AtomicSymbol V;        // current perturbation
  RadiusLedger ledger;
  std::vector<KamStepRecord> records;
  std::vector<std::pair<double, AtomicSymbol>> generators;  // (eps_l, W_l)
  double slack = 0.0;
  double norm_v0 = 0.0;
};

inline KamState kam_init(const AtomicSymbol& v, double eps, const Context& ctx,
                         int steps) {
  KamState st;
  st.eps = eps;
  st.eps_ell = eps;
  st.V = v;
  st.ledger = RadiusLedger::make(ctx.rho, steps);
  st.norm_v0 = weighted_norm(v, ctx.rho);
  return st;
}

// One superconvergent step: solve the homological equation against the
// accumulated divisor, conjugate, and keep the exact second-order Taylor
// remainder
//   V_{l+1} = eps^{-2} int_0^eps (eps - t) conj_t(R(t)) dt,
//   R(t) = {N,W}_M + {V,W}_M + t {{V,W}_M, W}_M,
// integrated term-by-term on the conjugation series
// (int_0^eps (eps-t) t^m dt = eps^{m+2}/((m+1)(m+2))).
inline KamState kam_step(const KamState& state, const Context& ctx,
                         double tol = 1e-10,
                         const PruneOptions* user_opts = nullptr) {
  const int ell = state.ell;
  if (ell >= static_cast<int>(state.ledger.d.size()))
    fail(ErrorKind::invalid_config, "radius ledger exhausted");
  const double d_ell = state.ledger.d[static_cast<std::size_t>(ell)];
  const double rho_ell = state.ledger.rho[static_cast<std::size_t>(ell)];
  const double rho_next = state.ledger.rho[static_cast<std::size_t>(ell) + 1];
  const double eps_ell = state.eps_ell;

  const double theta = state.divisor.theta();
  if (!(theta < 1.0))
    fail(ErrorKind::theta_too_large,
         "divisor contraction theta = " + std::to_string(theta));

  KamState next = state;
  next.ell = ell + 1;
  next.eps_ell = eps_ell * eps_ell;

  const double norm_v = weighted_norm(state.V, rho_ell);
  KamStepRecord rec;
  rec.ell = ell;
  rec.eps_ell = eps_ell;
  rec.norm_V = norm_v;
  rec.theta = theta;

  ConstantsLedger consts = evaluate_constants(
      ell, 0, std::abs(eps_ell), norm_v, theta, d_ell, state.ledger.delta(ell),
      ctx, state.norm_v0);
  rec.A = consts.A;
  rec.E = consts.E;
  if (!consts.step_condition_ok)
    fail(ErrorKind::step_condition_violated,
         "eps_ell * A * ||V|| / d_ell >= 1 at step " + std::to_string(ell));

  // Homological split of V_ell.
  const double rho_mid = rho_ell - 0.5 * d_ell;
  HomologicalSolution sol =
      solve_homological(state.V, state.divisor, ctx, rho_ell, 0.5 * d_ell, tol);
  next.slack += sol.residual_bound;
  rec.norm_N = weighted_norm(sol.N, rho_ell);
  rec.norm_W = weighted_norm(sol.W, rho_next);

  // Remainder brackets, exact on atoms up to the audited prune threshold:
  // far-tail series atoms carry weights many orders below tol and would make
  // every later pairwise product quadratically slower, so each product drops
  // them into the slack ledger.
  PruneOptions series_opts;
  SlackLedger series_slack;
  if (user_opts) series_opts = *user_opts;
  if (series_opts.tol <= 0.0) series_opts.tol = tol * 1e-5;
  series_opts.rho = rho_next;
  series_opts.slack = &series_slack;

  AtomicSymbol vw = moyal_bracket(state.V, sol.W, ctx, &series_opts);
  AtomicSymbol nw = moyal_bracket(sol.N, sol.W, ctx, &series_opts);
  AtomicSymbol r0 = merge_add(nw, vw);
  AtomicSymbol r1 = moyal_bracket(vw, sol.W, ctx, &series_opts);

  AtomicSymbol v_next = AtomicSymbol::zero(ctx);
  v_next.set_hbar_tag(ctx.hbar);
  double series_tails = 0.0;
  if (!r0.empty()) {
    AdjointSeries sa = adjoint_series(sol.W, r0, std::abs(eps_ell), ctx, rho_mid,
                                      rho_next, tol, &series_opts);
    double eps_pow = 1.0;
    for (std::size_t m = 0; m < sa.terms.size(); ++m) {
      const double coef = eps_pow / static_cast<double>((m + 1) * (m + 2));
      v_next = merge_add(v_next, sa.terms[m].scaled(Complex{coef, 0.0}));
      eps_pow *= eps_ell;
    }
    series_tails += 0.5 * sa.tail_bound;
  }
  if (!r1.empty()) {
    AdjointSeries sb = adjoint_series(sol.W, r1, std::abs(eps_ell), ctx, rho_mid,
                                      rho_next, tol, &series_opts);
    double eps_pow = eps_ell;
    for (std::size_t m = 0; m < sb.terms.size(); ++m) {
      const double coef = eps_pow / static_cast<double>((m + 2) * (m + 3));
      v_next = merge_add(v_next, sb.terms[m].scaled(Complex{coef, 0.0}));
      eps_pow *= eps_ell;
    }
    series_tails += std::abs(eps_ell) * sb.tail_bound / 6.0;
  }
  next.V = apply_prune(std::move(v_next), &series_opts);
  next.slack += series_tails + series_slack.total();

  DivisorTerm term;
  term.eps = eps_ell;
  term.mean_symbol = sol.N;
  term.rho = rho_ell;
  term.d = d_ell;
  next.divisor.terms.push_back(std::move(term));
  next.generators.emplace_back(eps_ell, sol.W);

  rec.slack = next.slack;
  next.records.push_back(rec);
  return next;
}

struct KamRun {
  KamState state;
  AtomicSymbol d_correction;  // sum_l eps_l N_l; the normal part is L + this
  std::vector<KamStepRecord> records;
  std::vector<double> log_eps_norm;  // ln(eps_l ||V_l||_{rho_l}) per step
  bool stopped_below_machine_scale = false;
};

inline KamRun kam_run(const AtomicSymbol& v, double eps, const Context& ctx,
                      int steps, double tol = 1e-10,
                      const PruneOptions* opts = nullptr) {
  if (steps < 0 || steps > 4)
    fail(ErrorKind::invalid_config, "kam steps limited to 0..4 at double precision");
  KamRun run;
  run.state = kam_init(v, eps, ctx, steps);
  run.d_correction = AtomicSymbol::zero(ctx);
  run.d_correction.set_real_valued(true);
  for (int l = 0; l < steps; ++l) {
    const double scale = run.state.eps_ell *
                         weighted_norm(run.state.V,
                                       run.state.ledger.rho[static_cast<std::size_t>(l)]);
    if (scale < 1e-250) {
      run.stopped_below_machine_scale = true;
      break;
    }
    run.log_eps_norm.push_back(std::log(scale));
    run.state = kam_step(run.state, ctx, tol, opts);
    const DivisorTerm& t = run.state.divisor.terms.back();
    run.d_correction =
        merge_add(run.d_correction, t.mean_symbol.scaled(Complex{t.eps, 0.0}));
  }
  if (!run.stopped_below_machine_scale && run.state.ell < static_cast<int>(run.state.ledger.rho.size())) {
    const double scale =
        run.state.eps_ell *
        weighted_norm(run.state.V,
                      run.state.ledger.rho[static_cast<std::size_t>(run.state.ell)]);
    if (scale > 0.0) run.log_eps_norm.push_back(std::log(scale));
  }
  run.records = run.state.records;
  return run;
}

// Ordered product of the step unitaries, latest step leftmost:
// U_n = e^{i eps_n W_n / hbar} ... e^{i eps_0 W_0 / hbar}.
inline OperatorMatrix unitary_product(
    const std::vector<std::pair<double, AtomicSymbol>>& generators,
    const ModeBox& box, const Context& ctx) {
  OperatorMatrix u = OperatorMatrix::identity(box);
  for (const auto& [eps_l, w_l] : generators) {
    OperatorMatrix wq = quantize(w_l, box, ctx);
    if (!wq.hermitian)
      fail(ErrorKind::not_hermitian, "step generator failed the hermitian check");
    OperatorMatrix e = unitary_exp(wq, eps_l, ctx);
    u.entries = e.entries * u.entries;
  }
  u.hermitian = false;
  return u;
}

}  // namespace tqnf
