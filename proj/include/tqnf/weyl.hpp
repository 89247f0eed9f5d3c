#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "tqnf/context.hpp"
#include "tqnf/moyal.hpp"
#include "tqnf/symbol.hpp"

namespace tqnf {

// Truncated Fourier basis {e_m : |m|_inf <= M} with lexicographic index map
// over (m_1, ..., m_l), each coordinate running -M..M (m_1 slowest).
struct ModeBox {
  int l = 2;
  int M = 8;

  int side() const { return 2 * M + 1; }
  int dim() const {
    int d = 1;
    for (int i = 0; i < l; ++i) d *= side();
    return d;
  }
  bool contains(std::span<const int> m) const {
    for (int i = 0; i < l; ++i)
      if (m[i] < -M || m[i] > M) return false;
    return true;
  }
  int index_of(std::span<const int> m) const {
    int idx = 0;
    for (int i = 0; i < l; ++i) idx = idx * side() + (m[i] + M);
    return idx;
  }
  std::vector<int> mode_of(int idx) const {
    std::vector<int> m(static_cast<std::size_t>(l));
    for (int i = l - 1; i >= 0; --i) {
      m[static_cast<std::size_t>(i)] = idx % side() - M;
      idx /= side();
    }
    return m;
  }

  bool operator==(const ModeBox& o) const { return l == o.l && M == o.M; }
};

struct OperatorMatrix {
  ModeBox box;
  Eigen::MatrixXcd entries;
  bool hermitian = false;

  static OperatorMatrix zero(const ModeBox& box) {
    OperatorMatrix a;
    a.box = box;
    a.entries = Eigen::MatrixXcd::Zero(box.dim(), box.dim());
    return a;
  }
  static OperatorMatrix identity(const ModeBox& box) {
    OperatorMatrix a;
    a.box = box;
    a.entries = Eigen::MatrixXcd::Identity(box.dim(), box.dim());
    a.hermitian = true;
    return a;
  }

  double hermiticity_defect() const {
    return (entries - entries.adjoint()).cwiseAbs().maxCoeff();
  }
  void refresh_hermitian_flag() {
    const double scale = entries.cwiseAbs().maxCoeff();
    hermitian = scale == 0.0 || hermiticity_defect() < 1e-12 * scale;
  }
};

// Matrix of a symbol on the box: entry (m+q, m) = sum over mode-q atoms of
// a e^{i hbar p <omega, m + q/2>}; target modes outside the box are dropped.
inline OperatorMatrix quantize(const AtomicSymbol& s, const ModeBox& box,
                               const Context& ctx) {
  OperatorMatrix out = OperatorMatrix::zero(box);
  const int dim = box.dim();
  std::vector<int> mq(static_cast<std::size_t>(box.l));
  for (auto it = s.raw().begin(); it != s.raw().end(); ++it) {
    const Atom a = s.atom_at(it);
    for (int col = 0; col < dim; ++col) {
      const std::vector<int> m = box.mode_of(col);
      bool inside = true;
      for (int i = 0; i < box.l; ++i) {
        mq[static_cast<std::size_t>(i)] = m[static_cast<std::size_t>(i)] + a.q[static_cast<std::size_t>(i)];
        if (mq[static_cast<std::size_t>(i)] < -box.M || mq[static_cast<std::size_t>(i)] > box.M) inside = false;
      }
      if (!inside) continue;
      double mid = 0.0;
      for (int i = 0; i < box.l; ++i)
        mid += ctx.omega[static_cast<std::size_t>(i)] *
               (static_cast<double>(m[static_cast<std::size_t>(i)]) +
                0.5 * static_cast<double>(a.q[static_cast<std::size_t>(i)]));
      out.entries(box.index_of(mq), col) += a.amp * std::exp(kI * (ctx.hbar * a.p * mid));
    }
  }
  out.refresh_hermitian_flag();
  return out;
}

// Diagonal matrix of the linear flow symbol L_omega: entries hbar <omega, m>.
inline OperatorMatrix quantize_linear(const ModeBox& box, const Context& ctx) {
  OperatorMatrix out = OperatorMatrix::zero(box);
  for (int i = 0; i < box.dim(); ++i) {
    const std::vector<int> m = box.mode_of(i);
    out.entries(i, i) = ctx.hbar * ctx.omega_dot(m);
  }
  out.hermitian = true;
  return out;
}

// Diagonal matrix of an x-independent symbol evaluated on the flow variable.
inline OperatorMatrix quantize_diagonal_function(const AtomicSymbol& s,
                                                 const ModeBox& box,
                                                 const Context& ctx) {
  OperatorMatrix out = OperatorMatrix::zero(box);
  for (int i = 0; i < box.dim(); ++i) {
    const std::vector<int> m = box.mode_of(i);
    out.entries(i, i) = s.eval_mean(ctx.hbar * ctx.omega_dot(m));
  }
  out.refresh_hermitian_flag();
  return out;
}

// Truncated matrix of H_eps = L_omega + eps V.
inline OperatorMatrix quantize_hamiltonian(const AtomicSymbol& v, double eps,
                                           const ModeBox& box, const Context& ctx) {
  OperatorMatrix h = quantize_linear(box, ctx);
  h.entries += eps * quantize(v, box, ctx).entries;
  h.refresh_hermitian_flag();
  return h;
}

struct EigenSolution {
  std::vector<double> values;   // ascending
  Eigen::MatrixXcd vectors;     // column k pairs with values[k]
};

// Deterministic dense Hermitian eigendecomposition (tridiagonalization with a
// fixed reduction order).
inline EigenSolution eigensolve(const OperatorMatrix& a) {
  if (!a.hermitian)
    fail(ErrorKind::not_hermitian, "eigensolve requires the hermitian flag");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a.entries);
  if (es.info() != Eigen::Success)
    fail(ErrorKind::not_hermitian, "eigendecomposition failed to converge");
  EigenSolution out;
  out.values.assign(es.eigenvalues().data(),
                    es.eigenvalues().data() + es.eigenvalues().size());
  out.vectors = es.eigenvectors();
  return out;
}

inline OperatorMatrix commutator_over_ihbar(const OperatorMatrix& a,
                                            const OperatorMatrix& b,
                                            const Context& ctx) {
  if (!(a.box == b.box)) fail(ErrorKind::box_mismatch, "mode boxes differ");
  OperatorMatrix out;
  out.box = a.box;
  out.entries = (a.entries * b.entries - b.entries * a.entries) / (kI * ctx.hbar);
  out.refresh_hermitian_flag();
  return out;
}

// L2 -> L2 bound of the quantized operator via the rho-weighted symbol norm.
inline double operator_norm_bound(const AtomicSymbol& s, double rho) {
  return weighted_norm(s, rho);
}

// Max |A - B| over entries whose row and column modes satisfy
// |m|_inf <= M - margin; truncation destroys exactness only within the span
// of the participating modes of the boundary.
inline double max_interior_diff(const OperatorMatrix& a, const OperatorMatrix& b,
                                int margin) {
  if (!(a.box == b.box)) fail(ErrorKind::box_mismatch, "mode boxes differ");
  const int dim = a.box.dim();
  const int cut = a.box.M - margin;
  double worst = 0.0;
  for (int r = 0; r < dim; ++r) {
    const std::vector<int> mr = a.box.mode_of(r);
    bool r_in = true;
    for (int v : mr) r_in = r_in && std::abs(v) <= cut;
    if (!r_in) continue;
    for (int c = 0; c < dim; ++c) {
      const std::vector<int> mc = a.box.mode_of(c);
      bool c_in = true;
      for (int v : mc) c_in = c_in && std::abs(v) <= cut;
      if (!c_in) continue;
      worst = std::max(worst, std::abs(a.entries(r, c) - b.entries(r, c)));
    }
  }
  return worst;
}

// exp(i scale W / hbar) for hermitian W via scaling and squaring with a
// Taylor kernel; the squaring count keeps the scaled norm below 1/2.
inline OperatorMatrix unitary_exp(const OperatorMatrix& w, double scale,
                                  const Context& ctx) {
  if (!w.hermitian)
    fail(ErrorKind::not_hermitian, "unitary_exp requires a hermitian generator");
  Eigen::MatrixXcd x = (kI * (scale / ctx.hbar)) * w.entries;
  const double nrm = x.cwiseAbs().rowwise().sum().maxCoeff();  // inf-norm
  int squarings = 0;
  double s = nrm;
  while (s > 0.5 && squarings < 64) {
    s *= 0.5;
    ++squarings;
  }
  x /= std::pow(2.0, squarings);
  const int dim = w.box.dim();
  Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(dim, dim);
  Eigen::MatrixXcd acc = term;
  for (int k = 1; k <= 40; ++k) {
    term = (term * x) / static_cast<double>(k);
    acc += term;
    if (term.cwiseAbs().maxCoeff() < 1e-17) break;
  }
  for (int k = 0; k < squarings; ++k) acc = acc * acc;
  OperatorMatrix out;
  out.box = w.box;
  out.entries = std::move(acc);
  out.hermitian = false;
  return out;
}

inline double unitarity_defect(const OperatorMatrix& u) {
  const int dim = u.box.dim();
  return (u.entries.adjoint() * u.entries - Eigen::MatrixXcd::Identity(dim, dim))
      .cwiseAbs()
      .maxCoeff();
}

}  // namespace tqnf
