#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tqnf/context.hpp"
#include "tqnf/qnf.hpp"
#include "tqnf/weyl.hpp"

namespace tqnf {

struct SpectrumEntry {
  std::vector<int> n;
  double lambda = 0.0;
  double overlap = 0.0;  // |<e_n, v>| of the labelling mode
  bool interior = false;
  bool ambiguous = false;  // overlap^2 <= 1/2, excluded from comparisons
};

struct LabeledSpectrum {
  ModeBox box;
  std::vector<SpectrumEntry> entries;  // ascending eigenvalue order
};

// Perturbative labelling: each eigenvector is assigned the basis mode with
// the largest overlap. Overlap^2 > 1/2 makes labels unique automatically.
inline LabeledSpectrum label_spectrum(const OperatorMatrix& h, const Context& ctx,
                                      int q_max, int margin = -1) {
  (void)ctx;
  if (!h.hermitian)
    fail(ErrorKind::not_hermitian, "label_spectrum needs a hermitian matrix");
  if (margin < 0) margin = 2 + q_max;
  const EigenSolution es = eigensolve(h);
  LabeledSpectrum out;
  out.box = h.box;
  const int dim = h.box.dim();
  const int interior_cut = h.box.M - q_max - margin;
  for (int k = 0; k < dim; ++k) {
    int best = 0;
    double best_mag = -1.0;
    for (int i = 0; i < dim; ++i) {
      const double m = std::abs(es.vectors(i, k));
      if (m > best_mag) {
        best_mag = m;
        best = i;
      }
    }
    SpectrumEntry e;
    e.n = h.box.mode_of(best);
    e.lambda = es.values[static_cast<std::size_t>(k)];
    e.overlap = best_mag;
    e.ambiguous = best_mag * best_mag <= 0.5;
    bool interior = interior_cut >= 0;
    for (int v : e.n) interior = interior && std::abs(v) <= interior_cut;
    e.interior = interior && !e.ambiguous;
    out.entries.push_back(std::move(e));
  }
  return out;
}

struct ErrorRow {
  std::vector<int> n;
  double lambda_matrix = 0.0;
  double lambda_formula = 0.0;
  double abs_err = 0.0;
};

struct ErrorTable {
  std::vector<ErrorRow> rows;
  double max_err = 0.0;
  double median_err = 0.0;
};

namespace detail {

template <class Formula>
ErrorTable compare_with(const LabeledSpectrum& spec, Formula&& formula) {
  ErrorTable t;
  std::vector<double> errs;
  for (const SpectrumEntry& e : spec.entries) {
    if (!e.interior) continue;
    ErrorRow row;
    row.n = e.n;
    row.lambda_matrix = e.lambda;
    row.lambda_formula = formula(e.n);
    row.abs_err = std::abs(row.lambda_matrix - row.lambda_formula);
    errs.push_back(row.abs_err);
    t.rows.push_back(std::move(row));
  }
  if (!errs.empty()) {
    t.max_err = *std::max_element(errs.begin(), errs.end());
    std::nth_element(errs.begin(), errs.begin() + static_cast<std::ptrdiff_t>(errs.size() / 2), errs.end());
    t.median_err = errs[errs.size() / 2];
  }
  return t;
}

}  // namespace detail

// Interior eigenvalues against the normal-form formula. compare_ebk is the
// same comparison fed with the classical (hbar = 0) coefficients.
inline ErrorTable compare_qnf(const LabeledSpectrum& spec, const NormalForm& nf,
                              double eps, const Context& ctx) {
  return detail::compare_with(spec, [&](const std::vector<int>& n) {
    return qnf_eigenvalue(nf, n, eps, ctx);
  });
}

inline ErrorTable compare_ebk(const LabeledSpectrum& spec,
                              const NormalForm& classical_nf, double eps,
                              const Context& ctx) {
  return detail::compare_with(spec, [&](const std::vector<int>& n) {
    return qnf_eigenvalue(classical_nf, n, eps, ctx);
  });
}

// Least-squares slope of log(err) against log(eps).
inline double fit_exponent(std::span<const double> eps,
                           std::span<const double> err) {
  const std::size_t n = eps.size();
  if (n < 2 || err.size() != n)
    fail(ErrorKind::invalid_config, "exponent fit needs >= 2 (eps, err) pairs");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(eps[i]);
    const double y = std::log(std::max(err[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

}  // namespace tqnf
