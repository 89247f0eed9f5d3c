#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tqnf/context.hpp"

namespace tqnf {

// Value carried in natural log to survive e^{24(3+2tau)}-scale constants.
struct LogValue {
  double ln = 0.0;

  double log10() const { return ln / std::log(10.0); }
  double value() const { return std::exp(ln); }

  // (mantissa, decimal exponent) with mantissa in [1, 10).
  std::pair<double, int> mantissa_exp10() const {
    const double l10 = log10();
    const int e = static_cast<int>(std::floor(l10));
    return {std::pow(10.0, l10 - e), e};
  }
};

// Convergence-radius estimate: 1 / (e^{24(3+2tau)} (r+2)^{2tau} ||V||_rho).
// r = 0 reproduces the base radius with the factor 2^{2tau}.
inline LogValue epsilon_star_log(double tau, double norm_v, int r = 0) {
  if (!(norm_v > 0.0))
    fail(ErrorKind::invalid_config, "epsilon_star needs ||V|| > 0");
  LogValue out;
  out.ln = -24.0 * (3.0 + 2.0 * tau) -
           2.0 * tau * std::log(static_cast<double>(r + 2)) - std::log(norm_v);
  return out;
}

namespace detail {

inline void flip_to_canonical(std::vector<int>& q) {
  for (int v : q) {
    if (v > 0) return;
    if (v < 0) break;
  }
  for (int& v : q) v = -v;
}

template <class Visit>
void for_each_lattice(int l, int q_max, Visit&& visit) {
  // Shells of increasing |q|_1, lexicographic within a shell.
  std::vector<int> q(static_cast<std::size_t>(l), 0);
  std::function<void(int, int)> rec = [&](int i, int rest) {
    if (i == l - 1) {
      for (int v = -rest; v <= rest; v += (rest == 0 ? 1 : 2 * rest))
        if (std::abs(v) == rest) {
          q[static_cast<std::size_t>(i)] = v;
          visit(q);
          if (rest == 0) break;
        }
      return;
    }
    for (int v = -rest; v <= rest; ++v) {
      q[static_cast<std::size_t>(i)] = v;
      rec(i + 1, rest - std::abs(v));
    }
  };
  for (int shell = 1; shell <= q_max; ++shell) rec(0, shell);
}

}  // namespace detail

// Exhaustive verification of |<omega,q>|^{-1} <= gamma |q|_1^tau over
// 0 < |q|_1 <= q_max; the measured gamma is the max of |q|_1^{-tau}/|<omega,q>|
// and the maximizer is recorded. Vanishing denominators abort the scan.
inline DiophantineCertificate diophantine_certify(const std::vector<double>& omega,
                                                  double tau, int q_max) {
  const int l = static_cast<int>(omega.size());
  if (l < 2) fail(ErrorKind::invalid_config, "need at least two frequencies");
  if (q_max < 1) fail(ErrorKind::invalid_config, "q_max must be >= 1");

  DiophantineCertificate cert;
  cert.omega = omega;
  cert.tau = tau;
  cert.q_max = q_max;

  double best = 0.0;
  std::vector<int> best_q;
  double omega_abs_l1 = 0.0;
  for (double w : omega) omega_abs_l1 += std::abs(w);

  detail::for_each_lattice(l, q_max, [&](const std::vector<int>& q) {
    double dot = 0.0;
    double ql1 = 0.0;
    for (int i = 0; i < l; ++i) {
      dot += omega[static_cast<std::size_t>(i)] * q[static_cast<std::size_t>(i)];
      ql1 += std::abs(q[static_cast<std::size_t>(i)]);
    }
    if (std::abs(dot) <= 1e-15 * std::max(1.0, ql1 * omega_abs_l1)) {
      std::vector<int> rq = q;
      detail::flip_to_canonical(rq);
      DiophantineCertificate bad = cert;
      bad.worst_q = rq;
      std::string msg = "resonant lattice vector (";
      for (std::size_t i = 0; i < rq.size(); ++i)
        msg += (i ? "," : "") + std::to_string(rq[i]);
      msg += ")";
      fail(ErrorKind::resonant_frequency, msg);
    }
    const double ratio = 1.0 / (std::pow(ql1, tau) * std::abs(dot));
    if (ratio > best * (1.0 + 1e-15)) {
      best = ratio;
      best_q = q;
      detail::flip_to_canonical(best_q);
    }
  });

  cert.gamma_measured = best;
  cert.worst_q = best_q;
  return cert;
}

// Per-step constants of the superconvergent scheme, evaluated from recorded
// norms at k = 0 (the engine's algorithmic regime). All growth-prone factors
// stay in plain doubles at desk scale; mu powers are carried in logs.
struct ConstantsLedger {
  double theta = 0.0;
  double A = 0.0;
  double C = 0.0;
  double E = 0.0;
  double Psi = 0.0;
  double Pi = 0.0;
  double P = 0.0;
  double mu_ln = 0.0;      // ln mu, mu = e^{8(3+2tau)}
  double mu_ell_ln = 0.0;  // ln mu^{2^ell}
  double lambda_k = 0.0;   // 1 + 8 gamma tau^tau [2(k+1)^2]
  bool rho_exceeds_lambda = false;
  bool h3_holds = false;           // rho > 1 + 16 gamma tau^tau
  bool theta_le_inv_rho = false;   // theta <= 1/rho cross-check
  bool step_condition_ok = false;  // eps_ell A ||V_ell|| / d_ell < 1
  LogValue eps_star0;
  std::vector<double> eps_star_k_ln;  // k = 0..4
};

inline ConstantsLedger evaluate_constants(int ell, int k, double eps_ell,
                                          double norm_v_ell, double theta,
                                          double d_ell, double delta_ell,
                                          const Context& ctx, double norm_v0) {
  const double gamma = ctx.gamma;
  const double tau = ctx.tau;
  const double e1 = std::exp(1.0);
  ConstantsLedger c;
  c.theta = theta;

  const double kt = static_cast<double>(k);
  const double pow_kk = (k == 0) ? 1.0 : std::pow(kt, kt);
  const double pi_den = (k == 0) ? 1.0 : std::pow(e1 * delta_ell, kt);
  if (k > 0 && delta_ell == 0.0)
    c.Pi = std::numeric_limits<double>::infinity();
  else
    c.Pi = std::pow(2.0 * (kt + 1.0) * (kt + 1.0), kt + 1.0) * pow_kk / pi_den;

  c.P = (theta > 0.0)
            ? std::pow(theta, kt + 1.0) / std::pow(1.0 - theta, kt + 1.0)
            : 0.0;
  c.A = gamma * std::pow(tau, tau) / std::pow(e1 * d_ell, tau) * (1.0 + c.Pi * c.P);
  c.Psi = (kt + 1.0) * (kt + 1.0) * std::pow(4.0, kt) / std::pow(e1 * d_ell, 3.0) * c.Pi;

  const double drag = eps_ell * c.A * norm_v_ell / d_ell;
  c.step_condition_ok = drag < 1.0;
  const double denom = 1.0 - drag;
  const double inner = 2.0 + eps_ell * e1 * c.Psi * c.A * norm_v_ell;
  c.E = (denom > 0.0) ? c.Psi * c.A * inner / denom
                      : std::numeric_limits<double>::infinity();
  c.C = (kt + 1.0) * (kt + 1.0) * std::pow(16.0, kt) / std::pow(e1 * d_ell, 3.0) *
        c.A *
        (2.0 + eps_ell * (kt + 1.0) * std::pow(4.0, kt) /
                   std::pow(e1 * d_ell, 2.0) * c.A * norm_v_ell);

  c.mu_ln = 8.0 * (3.0 + 2.0 * tau);
  c.mu_ell_ln = std::ldexp(c.mu_ln, ell);  // 2^ell * ln mu
  c.lambda_k = 1.0 + 8.0 * gamma * std::pow(tau, tau) * 2.0 * (kt + 1.0) * (kt + 1.0);
  c.rho_exceeds_lambda = ctx.rho > c.lambda_k;
  c.h3_holds = ctx.rho > 1.0 + 16.0 * gamma * std::pow(tau, tau);
  c.theta_le_inv_rho = theta <= 1.0 / ctx.rho;

  if (norm_v0 > 0.0) {
    c.eps_star0 = epsilon_star_log(tau, norm_v0, 0);
    for (int r = 0; r <= 4; ++r)
      c.eps_star_k_ln.push_back(epsilon_star_log(tau, norm_v0, r).ln);
  }
  return c;
}

}  // namespace tqnf
