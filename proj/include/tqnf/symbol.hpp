#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tqnf/context.hpp"
#include "tqnf/errors.hpp"

namespace tqnf {

using Complex = std::complex<double>;
inline constexpr Complex kI{0.0, 1.0};

// Accumulates the weighted norm of everything an operation has discarded
// (pruned atoms, truncated series tails), so later inequality checks can
// include the truncation budget.
class SlackLedger {
 public:
  void add(double s) { total_ += s; }
  double total() const { return total_; }
  void reset() { total_ = 0.0; }

 private:
  double total_ = 0.0;
};

struct PruneOptions {
  double rho = 0.0;
  double tol = 0.0;  // 0 disables pruning
  SlackLedger* slack = nullptr;
  std::size_t atom_budget = 0;  // 0 disables the cap
};

// One Fourier atom: dual frequency p (an exact integer combination of the
// basis generators), torus mode q, complex amplitude.
struct Atom {
  std::vector<std::int32_t> p_coeffs;
  std::vector<std::int32_t> q;
  Complex amp;
  double p = 0.0;  // basis->value(p_coeffs), cached

  double q_l1() const {
    double s = 0.0;
    for (auto qi : q) s += std::abs(static_cast<double>(qi));
    return s;
  }
  double q_l2sq() const {
    double s = 0.0;
    for (auto qi : q) s += static_cast<double>(qi) * static_cast<double>(qi);
    return s;
  }
  bool q_zero() const {
    return std::all_of(q.begin(), q.end(), [](auto v) { return v == 0; });
  }
};

// Finite set of atoms keyed by (p, q), representing a function of
// (L_omega(xi), x) as a pure point measure in Fourier space. Immutable value
// semantics: every operation builds a fresh symbol.
class AtomicSymbol {
 public:
  using Key = std::vector<std::int32_t>;  // p_coeffs ++ q
  using Map = std::map<Key, Complex>;

  AtomicSymbol() = default;
  AtomicSymbol(int l, std::shared_ptr<FreqBasis> basis)
      : l_(l), basis_(std::move(basis)) {}

  static AtomicSymbol zero(const Context& ctx) {
    return AtomicSymbol(ctx.l, ctx.basis);
  }

  static AtomicSymbol unit(const Context& ctx) {
    AtomicSymbol s(ctx.l, ctx.basis);
    s.add_atom(std::vector<std::int32_t>{}, std::vector<std::int32_t>(ctx.l, 0),
               Complex{1.0, 0.0});
    s.real_valued_ = true;
    return s;
  }

  int dim() const { return l_; }
  const std::shared_ptr<FreqBasis>& basis() const { return basis_; }
  std::size_t atom_count() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  const Map& raw() const { return atoms_; }

  bool real_valued() const { return real_valued_; }
  void set_real_valued(bool v) { real_valued_ = v; }

  const std::optional<double>& hbar_tag() const { return hbar_tag_; }
  void set_hbar_tag(std::optional<double> tag) { hbar_tag_ = std::move(tag); }

  std::size_t p_dim() const { return basis_ ? basis_->size() : 0; }

  void add_atom(std::span<const std::int32_t> p_coeffs,
                std::span<const std::int32_t> q, Complex a) {
    if (a == Complex{0.0, 0.0}) return;
    Key key(p_dim() + static_cast<std::size_t>(l_), 0);
    std::copy(p_coeffs.begin(), p_coeffs.end(), key.begin());
    std::copy(q.begin(), q.end(), key.begin() + static_cast<std::ptrdiff_t>(p_dim()));
    add_keyed(std::move(key), a);
  }

  void add_keyed(Key key, Complex a) {
    auto [it, inserted] = atoms_.try_emplace(std::move(key), a);
    if (!inserted) {
      it->second += a;
      if (std::abs(it->second) < 1e-300) atoms_.erase(it);
    }
  }

  Atom atom_at(const Map::const_iterator& it) const {
    Atom a;
    const std::size_t pd = p_dim();
    a.p_coeffs.assign(it->first.begin(), it->first.begin() + static_cast<std::ptrdiff_t>(pd));
    a.q.assign(it->first.begin() + static_cast<std::ptrdiff_t>(pd), it->first.end());
    a.amp = it->second;
    a.p = basis_ ? basis_->value(a.p_coeffs) : 0.0;
    return a;
  }

  std::vector<Atom> atoms() const {
    std::vector<Atom> out;
    out.reserve(atoms_.size());
    for (auto it = atoms_.begin(); it != atoms_.end(); ++it)
      out.push_back(atom_at(it));
    return out;
  }

  AtomicSymbol scaled(Complex c) const {
    AtomicSymbol out(l_, basis_);
    out.hbar_tag_ = hbar_tag_;
    out.real_valued_ = real_valued_ && c.imag() == 0.0;
    if (c == Complex{0.0, 0.0}) return out;
    for (const auto& [k, a] : atoms_) out.atoms_.emplace(k, a * c);
    return out;
  }

  // x-independent part (q = 0 atoms).
  AtomicSymbol mean_part() const {
    AtomicSymbol out(l_, basis_);
    out.hbar_tag_ = hbar_tag_;
    out.real_valued_ = real_valued_;
    const std::size_t pd = p_dim();
    for (const auto& [k, a] : atoms_) {
      bool qzero = std::all_of(k.begin() + static_cast<std::ptrdiff_t>(pd), k.end(),
                               [](auto v) { return v == 0; });
      if (qzero) out.atoms_.emplace(k, a);
    }
    return out;
  }

  AtomicSymbol oscillating_part() const {
    AtomicSymbol out(l_, basis_);
    out.hbar_tag_ = hbar_tag_;
    out.real_valued_ = real_valued_;
    const std::size_t pd = p_dim();
    for (const auto& [k, a] : atoms_) {
      bool qzero = std::all_of(k.begin() + static_cast<std::ptrdiff_t>(pd), k.end(),
                               [](auto v) { return v == 0; });
      if (!qzero) out.atoms_.emplace(k, a);
    }
    return out;
  }

  // Largest |q|_1 and |q|_inf over the support.
  int max_q_l1() const {
    int m = 0;
    const std::size_t pd = p_dim();
    for (const auto& [k, a] : atoms_) {
      int s = 0;
      for (std::size_t i = pd; i < k.size(); ++i) s += std::abs(k[i]);
      m = std::max(m, s);
    }
    return m;
  }
  int max_q_linf() const {
    int m = 0;
    const std::size_t pd = p_dim();
    for (const auto& [k, a] : atoms_) {
      for (std::size_t i = pd; i < k.size(); ++i)
        m = std::max(m, std::abs(static_cast<int>(k[i])));
    }
    return m;
  }

  Complex eval(double t, std::span<const double> x) const {
    Complex s{0.0, 0.0};
    for (auto it = atoms_.begin(); it != atoms_.end(); ++it) {
      Atom a = atom_at(it);
      double phase = a.p * t;
      for (int i = 0; i < l_; ++i) phase += static_cast<double>(a.q[i]) * x[i];
      s += a.amp * std::exp(kI * phase);
    }
    return s;
  }

  // Evaluation of an x-independent symbol on the flow variable t.
  Complex eval_mean(double t) const {
    std::vector<double> x(static_cast<std::size_t>(l_), 0.0);
    return mean_part().eval(t, x);
  }

  bool is_hermitian_symmetric(double tol_rel = 1e-12) const {
    double scale = 0.0;
    for (const auto& [k, a] : atoms_) scale += std::abs(a);
    if (scale == 0.0) return true;
    for (const auto& [k, a] : atoms_) {
      Key mk = k;
      for (auto& v : mk) v = -v;
      auto it = atoms_.find(mk);
      const Complex mirror = (it == atoms_.end()) ? Complex{0, 0} : it->second;
      if (std::abs(mirror - std::conj(a)) > tol_rel * scale) return false;
    }
    return true;
  }

  Map& raw_mutable() { return atoms_; }

 private:
  int l_ = 0;
  std::shared_ptr<FreqBasis> basis_;
  Map atoms_;
  std::optional<double> hbar_tag_;
  bool real_valued_ = false;
};

inline bool hbar_tags_compatible(const AtomicSymbol& a, const AtomicSymbol& b) {
  if (a.hbar_tag() && b.hbar_tag())
    return *a.hbar_tag() == *b.hbar_tag();
  return true;
}

inline std::optional<double> merged_hbar_tag(const AtomicSymbol& a,
                                             const AtomicSymbol& b) {
  return a.hbar_tag() ? a.hbar_tag() : b.hbar_tag();
}

// Keywise sum; the merged-form invariant (no duplicate keys, no zero
// amplitudes) is restored by construction.
inline AtomicSymbol merge_add(const AtomicSymbol& s1, const AtomicSymbol& s2) {
  if (!hbar_tags_compatible(s1, s2))
    fail(ErrorKind::incompatible_hbar_tag, "merge_add of symbols produced at different hbar");
  AtomicSymbol out = s1;
  out.set_hbar_tag(merged_hbar_tag(s1, s2));
  out.set_real_valued(s1.real_valued() && s2.real_valued());
  for (const auto& [k, a] : s2.raw()) out.add_keyed(k, a);
  return out;
}

inline AtomicSymbol operator+(const AtomicSymbol& a, const AtomicSymbol& b) {
  return merge_add(a, b);
}
inline AtomicSymbol operator-(const AtomicSymbol& a, const AtomicSymbol& b) {
  return merge_add(a, b.scaled(Complex{-1.0, 0.0}));
}

inline double atom_weight(const Atom& a, double rho) {
  return std::abs(a.amp) * std::exp(rho * (std::abs(a.p) + a.q_l1()));
}

// Exact finite sum  sum_atoms |a| e^{rho (|p| + |q|_1)}.
inline double weighted_norm(const AtomicSymbol& s, double rho) {
  double n = 0.0;
  for (auto it = s.raw().begin(); it != s.raw().end(); ++it)
    n += atom_weight(s.atom_at(it), rho);
  return n;
}

// mu_k weight (1 + |p omega|^2 + |q|^2)^{k/2} on an atom.
inline double mu_weight(const Atom& a, int k, const Context& ctx) {
  if (k == 0) return 1.0;
  const double t2 = a.p * a.p * ctx.omega_l2sq() + a.q_l2sq();
  return std::pow(1.0 + t2, 0.5 * static_cast<double>(k));
}

// Finite-difference diagnostic for the hbar-derivative norms: the family is
// sampled on a uniform hbar grid and each order-gamma derivative is replaced
// by gamma composed nearest-neighbour differences (central in the interior,
// one-sided at the ends). Returns the max over grid nodes of
// sum_gamma sum_atoms mu_{k-gamma} |D^gamma a| e^{rho(|p|+|q|_1)}.
inline double weighted_norm_k(
    const std::vector<std::pair<double, AtomicSymbol>>& family, double rho,
    int k, const Context& ctx) {
  const std::size_t n = family.size();
  if (n < static_cast<std::size_t>(k) + 1)
    fail(ErrorKind::insufficient_grid, "need at least k+1 hbar samples");
  if (k < 0 || k > 4)
    fail(ErrorKind::invalid_config, "hbar-derivative order k must be in [0,4]");
  double h = 0.0;
  if (n > 1) {
    h = family[1].first - family[0].first;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const double hj = family[j + 1].first - family[j].first;
      if (!(h > 0.0) || std::abs(hj - h) > 1e-9 * std::abs(h))
        fail(ErrorKind::insufficient_grid, "hbar grid must be uniform and increasing");
    }
  }

  // Union of keys across the family.
  std::map<AtomicSymbol::Key, std::vector<Complex>> series;
  for (std::size_t j = 0; j < n; ++j) {
    for (const auto& [key, amp] : family[j].second.raw()) {
      auto [it, ins] = series.try_emplace(key, std::vector<Complex>(n, Complex{0, 0}));
      it->second[j] = amp;
    }
  }

  auto diff_once = [&](const std::vector<Complex>& v) {
    std::vector<Complex> d(v.size(), Complex{0, 0});
    if (v.size() == 1) return d;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (j == 0)
        d[j] = (v[1] - v[0]) / h;
      else if (j + 1 == v.size())
        d[j] = (v[j] - v[j - 1]) / h;
      else
        d[j] = (v[j + 1] - v[j - 1]) / (2.0 * h);
    }
    return d;
  };

  const AtomicSymbol& proto = family.front().second;
  std::vector<double> node_totals(n, 0.0);
  for (const auto& [key, amps] : series) {
    AtomicSymbol tmp(proto.dim(), proto.basis());
    tmp.add_keyed(key, Complex{1.0, 0.0});
    const Atom a = tmp.atom_at(tmp.raw().begin());
    const double w = std::exp(rho * (std::abs(a.p) + a.q_l1()));
    std::vector<Complex> d = amps;
    for (int g = 0; g <= k; ++g) {
      const double mu = mu_weight(a, k - g, ctx);
      for (std::size_t j = 0; j < n; ++j) node_totals[j] += mu * std::abs(d[j]) * w;
      if (g < k) d = diff_once(d);
    }
  }
  return *std::max_element(node_totals.begin(), node_totals.end());
}

// Removes atoms with weight below tol at radius rho; the removed weighted
// norm is returned as slack.
inline std::pair<AtomicSymbol, double> prune(const AtomicSymbol& s, double rho,
                                             double tol) {
  if (tol < 0.0) fail(ErrorKind::invalid_config, "prune tolerance must be >= 0");
  AtomicSymbol out(s.dim(), s.basis());
  out.set_hbar_tag(s.hbar_tag());
  out.set_real_valued(s.real_valued());
  double slack = 0.0;
  for (auto it = s.raw().begin(); it != s.raw().end(); ++it) {
    const Atom a = s.atom_at(it);
    const double w = atom_weight(a, rho);
    if (w < tol)
      slack += w;
    else
      out.add_keyed(it->first, it->second);
  }
  // Hermitian pairs must be dropped together or the reality flag is stale.
  if (out.real_valued() && slack > 0.0 && !out.is_hermitian_symmetric())
    out.set_real_valued(false);
  return {std::move(out), slack};
}

inline AtomicSymbol apply_prune(AtomicSymbol s, const PruneOptions* opts) {
  if (!opts) return s;
  if (opts->tol > 0.0) {
    auto [p, slack] = prune(s, opts->rho, opts->tol);
    if (opts->slack) opts->slack->add(slack);
    s = std::move(p);
  }
  if (opts->atom_budget && s.atom_count() > opts->atom_budget)
    fail(ErrorKind::budget_exceeded,
         "atom count " + std::to_string(s.atom_count()) + " exceeds budget " +
             std::to_string(opts->atom_budget));
  return s;
}

}  // namespace tqnf
