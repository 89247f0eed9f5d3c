#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tqnf/context.hpp"
#include "tqnf/symbol.hpp"
#include "tqnf/weyl.hpp"

namespace tqnf {

// Fixed float formatting for byte-identical reports.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Symbol literal format: one atom per record,
//   re(a) im(a) p q_1 ... q_l
// fixed field order, decimal floats, signed integer lattice entries.
inline std::string write_symbol_literal(const AtomicSymbol& s) {
  std::ostringstream os;
  for (auto it = s.raw().begin(); it != s.raw().end(); ++it) {
    const Atom a = s.atom_at(it);
    os << fmt_g17(a.amp.real()) << ' ' << fmt_g17(a.amp.imag()) << ' '
       << fmt_g17(a.p);
    for (int i = 0; i < s.dim(); ++i) os << ' ' << a.q[static_cast<std::size_t>(i)];
    os << '\n';
  }
  return os.str();
}

struct AtomRecord {
  double re = 0.0, im = 0.0, p = 0.0;
  std::vector<int> q;
};

inline std::vector<AtomRecord> parse_atom_records(std::istream& in, int l) {
  std::vector<AtomRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    AtomRecord r;
    if (!(ls >> r.re >> r.im >> r.p))
      fail(ErrorKind::invalid_config, "malformed atom record: " + line);
    r.q.resize(static_cast<std::size_t>(l));
    for (int i = 0; i < l; ++i)
      if (!(ls >> r.q[static_cast<std::size_t>(i)]))
        fail(ErrorKind::invalid_config, "atom record needs " + std::to_string(l) +
                                            " lattice entries: " + line);
    out.push_back(std::move(r));
  }
  return out;
}

// Builds a symbol from records against the context's frequency basis
// (generators are added as needed, so call before other symbols exist).
inline AtomicSymbol symbol_from_records(const std::vector<AtomRecord>& records,
                                        const Context& ctx) {
  AtomicSymbol s = AtomicSymbol::zero(ctx);
  std::vector<std::vector<std::int32_t>> coeffs;
  coeffs.reserve(records.size());
  for (const AtomRecord& r : records)
    coeffs.push_back(ctx.basis->decompose_or_add(r.p));
  const std::size_t pd = ctx.basis->size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    coeffs[i].resize(pd, 0);
    std::vector<std::int32_t> q(records[i].q.begin(), records[i].q.end());
    s.add_atom(coeffs[i], q, Complex{records[i].re, records[i].im});
  }
  s.set_real_valued(s.is_hermitian_symmetric());
  return s;
}

inline AtomicSymbol read_symbol_literal(const std::string& text, const Context& ctx) {
  std::istringstream in(text);
  return symbol_from_records(parse_atom_records(in, ctx.l), ctx);
}

// Matrix dump: text header (l, M, hbar, ordering), then row-major re/im pairs.
inline void dump_matrix(const OperatorMatrix& a, double hbar, std::ostream& os) {
  os << "l " << a.box.l << " M " << a.box.M << " hbar " << fmt_g17(hbar)
     << " ordering lex(-M..M)\n";
  const int dim = a.box.dim();
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      if (c) os << ' ';
      os << fmt_g17(a.entries(r, c).real()) << ' ' << fmt_g17(a.entries(r, c).imag());
    }
    os << '\n';
  }
}

// Trajectory CSV: step, t, xi_1.., x_1..
template <class TrajectoryRange>
std::string trajectory_csv(const TrajectoryRange& points, int l) {
  std::ostringstream os;
  os << "step,t";
  for (int i = 1; i <= l; ++i) os << ",xi_" << i;
  for (int i = 1; i <= l; ++i) os << ",x_" << i;
  os << '\n';
  for (const auto& p : points) {
    os << p.step << ',' << fmt_g17(p.t);
    for (int i = 0; i < l; ++i) os << ',' << fmt_g17(p.z.xi[static_cast<std::size_t>(i)]);
    for (int i = 0; i < l; ++i) os << ',' << fmt_g17(p.z.x[static_cast<std::size_t>(i)]);
    os << '\n';
  }
  return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::invalid_config, "cannot open for writing: " + path);
  f << content;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::invalid_config, "cannot open for reading: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace tqnf
