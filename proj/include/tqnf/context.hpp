#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tqnf/errors.hpp"

namespace tqnf {

// Certificate of the small-denominator bound |<omega,q>|^{-1} <= gamma |q|_1^tau,
// verified exhaustively for 0 < |q|_1 <= q_max.
struct DiophantineCertificate {
  std::vector<double> omega;
  double tau = 0.0;
  double gamma_measured = 0.0;
  int q_max = 0;
  std::vector<int> worst_q;
};

// Additive group of dual frequencies. Every p occurring in a symbol is an
// integer combination of a few base generators, so atom keys stay exact under
// all products and Neumann series. Generators are fixed once symbols exist.
class FreqBasis {
 public:
  FreqBasis() = default;
  explicit FreqBasis(std::vector<double> gens) : gens_(std::move(gens)) {}

  std::size_t size() const { return gens_.size(); }
  const std::vector<double>& generators() const { return gens_; }

  double value(std::span<const std::int32_t> coeffs) const {
    double p = 0.0;
    for (std::size_t i = 0; i < coeffs.size() && i < gens_.size(); ++i)
      p += static_cast<double>(coeffs[i]) * gens_[i];
    return p;
  }

  // Decompose p as an integer multiple of a single generator; add a new
  // (positive) generator when no existing one fits. Intended for input
  // parsing only.
  std::vector<std::int32_t> decompose_or_add(double p, double tol = 1e-9) {
    std::vector<std::int32_t> c(gens_.size(), 0);
    if (p == 0.0) return c;
    for (std::size_t i = 0; i < gens_.size(); ++i) {
      const double r = p / gens_[i];
      const double n = std::round(r);
      if (n != 0.0 && std::abs(r - n) <= tol * std::max(1.0, std::abs(r)) &&
          std::abs(n) < 1e9) {
        c[i] = static_cast<std::int32_t>(n);
        return c;
      }
    }
    gens_.push_back(std::abs(p));
    c.push_back(p > 0.0 ? 1 : -1);
    return c;
  }

 private:
  std::vector<double> gens_;
};

// Everything an hbar- or omega-dependent operation needs: dimension, the
// frequency vector (kept exactly as given; spectra are invariant under the
// rescaling omega -> omega/a, p -> a p, eps -> eps/a), Planck constant,
// small-denominator constants and the analyticity radius.
struct Context {
  int l = 2;
  std::vector<double> omega;
  double hbar = 0.1;
  double gamma = 1.0;  // > 1 in the hypothesis class
  double tau = 1.0;    // > l - 1
  double rho = 0.5;
  std::shared_ptr<FreqBasis> basis = std::make_shared<FreqBasis>();
  std::optional<DiophantineCertificate> certificate;

  static Context make(int l, std::vector<double> omega, double hbar,
                      double gamma, double tau, double rho) {
    if (l < 1) fail(ErrorKind::invalid_config, "dimension l must be >= 1");
    if (static_cast<int>(omega.size()) != l)
      fail(ErrorKind::invalid_config, "omega length must equal l");
    if (!(hbar > 0.0) || hbar > 1.0)
      fail(ErrorKind::invalid_config, "hbar must lie in (0, 1]");
    if (!(rho > 0.0)) fail(ErrorKind::invalid_config, "rho must be positive");
    Context ctx;
    ctx.l = l;
    ctx.omega = std::move(omega);
    ctx.hbar = hbar;
    ctx.gamma = gamma;
    ctx.tau = tau;
    ctx.rho = rho;
    return ctx;
  }

  double omega_l1() const {
    double s = 0.0;
    for (double w : omega) s += std::abs(w);
    return s;
  }

  double omega_l2sq() const {
    double s = 0.0;
    for (double w : omega) s += w * w;
    return s;
  }

  bool omega_normalized() const { return omega_l1() <= 1.0 + 1e-15; }

  // Rescaling factor onto the |omega|_1 <= 1 frame; applied as a factor on
  // eps (eps -> eps/alpha) with p-keys scaled by alpha.
  double eps_scale() const { return std::max(1.0, omega_l1()); }

  double omega_dot_int(std::span<const std::int32_t> q) const {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
      s += omega[i] * static_cast<double>(q[i]);
    return s;
  }

  double omega_dot(std::span<const int> q) const {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
      s += omega[i] * static_cast<double>(q[i]);
    return s;
  }

  // Same frame-invariant data expressed with |omega|_1 = 1; generators of the
  // dual-frequency basis pick up the factor alpha.
  Context normalized() const {
    const double a = omega_l1();
    Context ctx = *this;
    for (double& w : ctx.omega) w /= a;
    std::vector<double> gens = basis->generators();
    for (double& g : gens) g *= a;
    ctx.basis = std::make_shared<FreqBasis>(std::move(gens));
    ctx.certificate.reset();
    ctx.gamma = gamma * a;
    return ctx;
  }
};

}  // namespace tqnf
