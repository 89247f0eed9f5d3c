#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tqnf/tqnf.hpp"

namespace tqnf::app {

using Json = nlohmann::ordered_json;

struct Config {
  int l = 2;
  std::vector<double> omega{1.0, 1.6180339887498949};
  double tau = 1.0;
  int q_max = 1000;
  double rho = 0.5;
  std::vector<double> hbar{0.1};
  std::vector<double> epsilon{1e-3};
  int order_K = 3;
  int kam_steps = 2;
  int mode_box_M = 12;
  double tol_neumann = 1e-10;
  double tol_prune = 0.0;
  std::size_t atom_budget = 200000;
  std::vector<AtomRecord> potential;
  unsigned seed = 0;
};

inline std::vector<double> number_or_list(const Json& j, const char* key) {
  std::vector<double> out;
  if (j.at(key).is_array())
    for (const auto& v : j.at(key)) out.push_back(v.get<double>());
  else
    out.push_back(j.at(key).get<double>());
  return out;
}

inline Config parse_config(const Json& j) {
  Config c;
  try {
    if (j.contains("l")) c.l = j.at("l").get<int>();
    if (c.l >= 3) c.q_max = 200;  // exhaustive scan default shrinks with l
    if (j.contains("omega")) c.omega = j.at("omega").get<std::vector<double>>();
    if (j.contains("tau")) c.tau = j.at("tau").get<double>();
    if (j.contains("q_max")) c.q_max = j.at("q_max").get<int>();
    if (j.contains("rho")) c.rho = j.at("rho").get<double>();
    if (j.contains("hbar")) c.hbar = number_or_list(j, "hbar");
    if (j.contains("epsilon")) c.epsilon = number_or_list(j, "epsilon");
    if (j.contains("order_K")) c.order_K = j.at("order_K").get<int>();
    if (j.contains("kam_steps")) c.kam_steps = j.at("kam_steps").get<int>();
    if (j.contains("mode_box_M")) c.mode_box_M = j.at("mode_box_M").get<int>();
    if (j.contains("tol_neumann")) c.tol_neumann = j.at("tol_neumann").get<double>();
    if (j.contains("tol_prune")) c.tol_prune = j.at("tol_prune").get<double>();
    if (j.contains("atom_budget")) c.atom_budget = j.at("atom_budget").get<std::size_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<unsigned>();
    if (j.contains("potential")) {
      for (const auto& rec : j.at("potential")) {
        AtomRecord r;
        r.re = rec.at(0).get<double>();
        r.im = rec.at(1).get<double>();
        r.p = rec.at(2).get<double>();
        for (int i = 0; i < c.l; ++i)
          r.q.push_back(rec.at(static_cast<std::size_t>(3 + i)).get<int>());
        c.potential.push_back(std::move(r));
      }
    }
  } catch (const Json::exception& e) {
    fail(ErrorKind::invalid_config, std::string("config parse: ") + e.what());
  }
  return c;
}

inline void validate(const Config& c) {
  if (c.l < 2) fail(ErrorKind::invalid_config, "l must be >= 2");
  if (static_cast<int>(c.omega.size()) != c.l)
    fail(ErrorKind::invalid_config, "omega must have l entries");
  if (!(c.tau >= c.l - 1))
    fail(ErrorKind::invalid_config, "tau must be at least l - 1");
  if (c.q_max < 1) fail(ErrorKind::invalid_config, "q_max must be >= 1");
  if (!(c.rho > 0.0)) fail(ErrorKind::invalid_config, "rho must be positive");
  for (double h : c.hbar)
    if (!(h > 0.0) || h > 1.0)
      fail(ErrorKind::invalid_config, "hbar values must lie in (0,1]");
  if (c.hbar.empty() || c.epsilon.empty())
    fail(ErrorKind::invalid_config, "hbar and epsilon must be nonempty");
  if (c.order_K < 1 || c.order_K > 6)
    fail(ErrorKind::invalid_config, "order_K must be in [1,6]");
  if (c.kam_steps < 0 || c.kam_steps > 4)
    fail(ErrorKind::invalid_config, "kam_steps must be in [0,4]");
  if (c.mode_box_M < 1) fail(ErrorKind::invalid_config, "mode_box_M must be >= 1");
  if (c.l == 2 && c.mode_box_M > 16)
    fail(ErrorKind::invalid_config, "mode_box_M capped at 16 for l = 2");
  if (c.l >= 3 && c.mode_box_M > 6)
    fail(ErrorKind::invalid_config, "mode_box_M capped at 6 for l >= 3");
  if (c.potential.empty())
    fail(ErrorKind::invalid_config, "potential must list at least one atom");
}

inline Json resolved_config_json(const Config& c) {
  Json j;
  j["l"] = c.l;
  j["omega"] = c.omega;
  j["tau"] = c.tau;
  j["q_max"] = c.q_max;
  j["rho"] = c.rho;
  j["hbar"] = c.hbar;
  j["epsilon"] = c.epsilon;
  j["order_K"] = c.order_K;
  j["kam_steps"] = c.kam_steps;
  j["mode_box_M"] = c.mode_box_M;
  j["tol_neumann"] = c.tol_neumann;
  j["tol_prune"] = c.tol_prune;
  j["atom_budget"] = c.atom_budget;
  j["seed"] = c.seed;
  Json pot = Json::array();
  for (const auto& r : c.potential) {
    Json rec = Json::array({r.re, r.im, r.p});
    for (int q : r.q) rec.push_back(q);
    pot.push_back(std::move(rec));
  }
  j["potential"] = std::move(pot);
  return j;
}

struct Workload {
  Context ctx;
  AtomicSymbol v;
};

inline Workload make_workload(const Config& c, double hbar) {
  Context ctx = Context::make(c.l, c.omega, hbar, 1.0, c.tau, c.rho);
  AtomicSymbol v = symbol_from_records(c.potential, ctx);
  return {std::move(ctx), std::move(v)};
}

inline Json symbol_table_json(const AtomicSymbol& s) {
  Json rows = Json::array();
  for (const Atom& a : s.atoms()) {
    Json rec = Json::array({a.amp.real(), a.amp.imag(), a.p});
    for (auto q : a.q) rec.push_back(static_cast<int>(q));
    rows.push_back(std::move(rec));
  }
  return rows;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::invalid_config, "cannot write " + path.string());
  f << j.dump(2) << '\n';
}

// ---- commands -------------------------------------------------------------

inline void cmd_diophantine(const Config& c, const std::filesystem::path& out) {
  DiophantineCertificate cert = diophantine_certify(c.omega, c.tau, c.q_max);
  Json j;
  j["config"] = resolved_config_json(c);
  j["gamma_measured"] = cert.gamma_measured;
  j["worst_q"] = cert.worst_q;
  j["q_max"] = cert.q_max;
  write_json(out / "diophantine.json", j);
}

inline Json qnf_report_json(const Config& c, const NormalForm& nf,
                            const Context& ctx, double norm_v) {
  Json j;
  j["config"] = resolved_config_json(c);
  j["hbar"] = ctx.hbar;
  j["kind"] = nf.kind == BracketKind::moyal ? "quantum" : "classical";
  Json orders = Json::array();
  for (int s = 1; s <= nf.K; ++s) {
    const auto& o = nf.orders[static_cast<std::size_t>(s - 1)];
    Json jo;
    jo["order"] = s;
    jo["rho"] = nf.schedule.rho[static_cast<std::size_t>(s - 1)];
    jo["d"] = nf.schedule.d[static_cast<std::size_t>(s - 1)];
    jo["norm_V"] = o.norm_V;
    jo["norm_B"] = o.norm_B;
    jo["norm_W"] = o.norm_W;
    jo["B_atoms"] = symbol_table_json(o.B);
    jo["W_atoms"] = symbol_table_json(o.W);
    orders.push_back(std::move(jo));
  }
  j["orders"] = std::move(orders);
  const QnfRemainderBound rb =
      qnf_remainder_bound(nf.K, c.epsilon.front(), norm_v, ctx, nf.schedule);
  j["remainder_bound_ln"] = rb.ln_remainder;
  j["remainder_bound_log10"] = rb.ln_remainder / std::log(10.0);
  j["b_series_bound_ln"] = rb.ln_b_series;
  j["smallness_hypothesis_ok"] = rb.hypothesis_ok;
  j["mu"] = rb.mu;
  return j;
}

inline void cmd_qnf(const Config& c, const std::filesystem::path& out) {
  // The recursion reruns per hbar sample; coefficients are stored per value.
  RadiusSchedule sched = RadiusSchedule::make(c.rho, c.order_K);
  PruneOptions opts;
  opts.rho = c.rho / 2.0;
  opts.tol = c.tol_prune;
  opts.atom_budget = c.atom_budget;
  for (std::size_t i = 0; i < c.hbar.size(); ++i) {
    Workload w = make_workload(c, c.hbar[i]);
    NormalForm nf = qnf_construct(w.v, c.order_K, w.ctx, sched,
                                  BracketKind::moyal, &opts, c.tol_neumann);
    const std::string name =
        c.hbar.size() == 1 ? "qnf_report.json"
                           : "qnf_report_" + std::to_string(i) + ".json";
    write_json(out / name,
               qnf_report_json(c, nf, w.ctx, weighted_norm(w.v, c.rho)));
  }
}

inline void cmd_kam(const Config& c, const std::filesystem::path& out) {
  Workload w = make_workload(c, c.hbar.front());
  PruneOptions opts;
  opts.rho = c.rho / 2.0;
  opts.tol = c.tol_prune;
  opts.atom_budget = c.atom_budget;
  KamRun run = kam_run(w.v, c.epsilon.front(), w.ctx, c.kam_steps,
                       c.tol_neumann, &opts);
  std::ostringstream csv;
  csv << "ell,eps_ell,norm_V,norm_W,norm_N,theta,A,E,slack\n";
  for (const KamStepRecord& r : run.records) {
    csv << r.ell << ',' << fmt_g17(r.eps_ell) << ',' << fmt_g17(r.norm_V) << ','
        << fmt_g17(r.norm_W) << ',' << fmt_g17(r.norm_N) << ','
        << fmt_g17(r.theta) << ',' << fmt_g17(r.A) << ',' << fmt_g17(r.E) << ','
        << fmt_g17(r.slack) << '\n';
  }
  write_text_file((out / "kam_steps.csv").string(), csv.str());

  Json j;
  j["config"] = resolved_config_json(c);
  j["normal_part_correction_atoms"] = symbol_table_json(run.d_correction);
  j["log_eps_norm"] = run.log_eps_norm;
  j["stopped_below_machine_scale"] = run.stopped_below_machine_scale;
  j["slack_total"] = run.state.slack;
  write_json(out / "kam_report.json", j);
}

inline void cmd_spectrum(const Config& c, const std::filesystem::path& out) {
  Workload w = make_workload(c, c.hbar.front());
  const ModeBox box{c.l, c.mode_box_M};
  OperatorMatrix h = quantize_hamiltonian(w.v, c.epsilon.front(), box, w.ctx);
  LabeledSpectrum spec = label_spectrum(h, w.ctx, w.v.max_q_l1());
  std::ostringstream csv;
  csv << "index";
  for (int i = 1; i <= c.l; ++i) csv << ",m_" << i;
  csv << ",lambda\n";
  for (std::size_t k = 0; k < spec.entries.size(); ++k) {
    csv << k;
    for (int v : spec.entries[k].n) csv << ',' << v;
    csv << ',' << fmt_g17(spec.entries[k].lambda) << '\n';
  }
  write_text_file((out / "spectrum.csv").string(), csv.str());
}

inline std::string error_table_csv(const ErrorTable& t, int l) {
  std::ostringstream csv;
  for (int i = 1; i <= l; ++i) csv << "n_" << i << ',';
  csv << "lambda_matrix,lambda_formula,abs_err\n";
  for (const ErrorRow& r : t.rows) {
    for (int v : r.n) csv << v << ',';
    csv << fmt_g17(r.lambda_matrix) << ',' << fmt_g17(r.lambda_formula) << ','
        << fmt_g17(r.abs_err) << '\n';
  }
  return csv.str();
}

inline void cmd_verify(const Config& c, const std::filesystem::path& out) {
  Workload w = make_workload(c, c.hbar.front());
  RadiusSchedule sched = RadiusSchedule::make(c.rho, c.order_K);
  NormalForm nf = qnf_construct(w.v, c.order_K, w.ctx, sched);
  NormalForm nf_cl = classical_birkhoff(w.v, c.order_K, w.ctx, sched);
  const ModeBox box{c.l, c.mode_box_M};

  std::vector<double> eps_list = c.epsilon;
  std::vector<double> max_qnf, max_ebk;
  Json j;
  j["config"] = resolved_config_json(c);
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    OperatorMatrix h = quantize_hamiltonian(w.v, eps_list[i], box, w.ctx);
    LabeledSpectrum spec = label_spectrum(h, w.ctx, w.v.max_q_l1());
    ErrorTable tq = compare_qnf(spec, nf, eps_list[i], w.ctx);
    ErrorTable te = compare_ebk(spec, nf_cl, eps_list[i], w.ctx);
    write_text_file((out / ("verify_qnf_" + std::to_string(i) + ".csv")).string(),
                    error_table_csv(tq, c.l));
    write_text_file((out / ("verify_ebk_" + std::to_string(i) + ".csv")).string(),
                    error_table_csv(te, c.l));
    max_qnf.push_back(tq.max_err);
    max_ebk.push_back(te.max_err);
  }
  j["epsilon"] = eps_list;
  j["max_err_qnf"] = max_qnf;
  j["max_err_ebk"] = max_ebk;
  if (eps_list.size() >= 2) {
    j["fitted_exponent_qnf"] = fit_exponent(eps_list, max_qnf);
    j["fitted_exponent_ebk"] = fit_exponent(eps_list, max_ebk);
  }
  write_json(out / "verify_summary.json", j);
}

inline void cmd_egorov(const Config& c, const std::filesystem::path& out) {
  std::ostringstream csv;
  csv << "hbar,poisson_limit_residual,egorov_residual\n";
  Json ratios;
  std::vector<double> poisson_vals, egorov_vals;
  for (double h : c.hbar) {
    Workload w = make_workload(c, h);
    const double pr = poisson_limit_residual(w.v, w.v, w.ctx, c.rho / 2.0);
    HomologicalSolution sol =
        solve_homological(w.v, DivisorModel{}, w.ctx, c.rho, c.rho / 4.0, c.tol_neumann);
    SampleGrid grid = SampleGrid::tensor(w.ctx, 4, std::vector<double>{0.0, 0.35, 0.7});
    const double er =
        egorov_residual(w.v, sol.W, c.epsilon.front(), w.ctx, grid, c.rho,
                        c.rho / 2.0, 2000, c.tol_neumann);
    poisson_vals.push_back(pr);
    egorov_vals.push_back(er);
    csv << fmt_g17(h) << ',' << fmt_g17(pr) << ',' << fmt_g17(er) << '\n';
  }
  write_text_file((out / "egorov.csv").string(), csv.str());

  // Reference trajectory of the first-order generator's flow.
  {
    Workload w = make_workload(c, c.hbar.front());
    HomologicalSolution sol =
        solve_homological(w.v, DivisorModel{}, w.ctx, c.rho, c.rho / 4.0, c.tol_neumann);
    PhasePoint z0;
    z0.xi.assign(static_cast<std::size_t>(c.l), 0.25);
    z0.x.assign(static_cast<std::size_t>(c.l), 1.0);
    auto traj = hamiltonian_flow_trajectory(sol.W, w.ctx, z0, c.epsilon.front(), 200);
    write_text_file((out / "trajectory.csv").string(), trajectory_csv(traj, c.l));
  }

  Json j;
  j["config"] = resolved_config_json(c);
  j["hbar"] = c.hbar;
  j["poisson_limit_residual"] = poisson_vals;
  j["egorov_residual"] = egorov_vals;
  write_json(out / "egorov_summary.json", j);
}

inline void cmd_constants(const Config& c, const std::filesystem::path& out) {
  Workload w = make_workload(c, c.hbar.front());
  const double norm_v = weighted_norm(w.v, c.rho);
  std::ostringstream csv;
  csv << "k,eps_star_k_log10\n";
  for (int k = 0; k <= 4; ++k)
    csv << k << ',' << fmt_g17(epsilon_star_log(c.tau, norm_v, k).log10()) << '\n';
  write_text_file((out / "constants.csv").string(), csv.str());

  DiophantineCertificate cert =
      diophantine_certify(c.omega, c.tau, std::min(c.q_max, 400));
  Json j;
  j["config"] = resolved_config_json(c);
  j["norm_V_rho"] = norm_v;
  j["gamma_measured"] = cert.gamma_measured;
  const LogValue es = epsilon_star_log(c.tau, norm_v, 0);
  auto [mant, e10] = es.mantissa_exp10();
  j["eps_star_log10"] = es.log10();
  j["eps_star_mantissa"] = mant;
  j["eps_star_exp10"] = e10;
  j["mu_ln"] = 8.0 * (3.0 + 2.0 * c.tau);
  const double lambda0 =
      1.0 + 8.0 * cert.gamma_measured * std::pow(c.tau, c.tau) * 2.0;
  j["lambda_k0"] = lambda0;
  j["rho_exceeds_lambda_k0"] = c.rho > lambda0;
  j["h3_holds"] =
      c.rho > 1.0 + 16.0 * cert.gamma_measured * std::pow(c.tau, c.tau);
  write_json(out / "constants.json", j);
}

// Returns the process exit code: 0 success, 2 validation error, 3 numerical
// failure; failures leave a machine-readable error.json in the output dir.
inline int run(const std::string& command, const std::string& config_path,
               const std::string& out_dir, unsigned seed = 0) {
  std::filesystem::path out(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  auto record_error = [&](ErrorKind kind, const std::string& msg) {
    Json j;
    j["error"] = EngineError::kind_name(kind);
    j["message"] = msg;
    std::ofstream f(out / "error.json", std::ios::binary);
    if (f) f << j.dump(2) << '\n';
    std::cerr << "error: " << msg << '\n';
  };

  Config cfg;
  try {
    Json j = Json::parse(read_text_file(config_path));
    cfg = parse_config(j);
    cfg.seed = seed ? seed : cfg.seed;
    validate(cfg);
  } catch (const EngineError& e) {
    record_error(e.kind(), e.what());
    return 2;
  } catch (const std::exception& e) {
    record_error(ErrorKind::invalid_config, e.what());
    return 2;
  }

  try {
    if (command == "diophantine")
      cmd_diophantine(cfg, out);
    else if (command == "qnf")
      cmd_qnf(cfg, out);
    else if (command == "kam")
      cmd_kam(cfg, out);
    else if (command == "spectrum")
      cmd_spectrum(cfg, out);
    else if (command == "verify")
      cmd_verify(cfg, out);
    else if (command == "egorov")
      cmd_egorov(cfg, out);
    else if (command == "constants")
      cmd_constants(cfg, out);
    else {
      record_error(ErrorKind::invalid_config, "unknown command: " + command);
      return 2;
    }
  } catch (const EngineError& e) {
    record_error(e.kind(), e.what());
    return e.kind() == ErrorKind::invalid_config ? 2 : 3;
  } catch (const std::exception& e) {
    record_error(ErrorKind::invalid_config, e.what());
    return 3;
  }
  return 0;
}

inline int main(int argc, char** argv) {
  std::string command, config_path, out_dir = ".";
  unsigned seed = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    auto next = [&](const char* name) -> std::string {
      if (i + 1 >= argc) {
        std::cerr << "missing value for " << name << '\n';
        std::exit(2);
      }
      return argv[++i];
    };
    if (arg == "--command")
      command = next("--command");
    else if (arg == "--config")
      config_path = next("--config");
    else if (arg == "--out")
      out_dir = next("--out");
    else if (arg == "--seed")
      seed = static_cast<unsigned>(std::stoul(next("--seed")));
    else if (arg == "--help" || arg == "-h") {
      std::cout << "usage: tqnf --command NAME --config PATH [--out DIR] [--seed N]\n"
                   "commands: diophantine qnf kam spectrum verify egorov constants\n";
      return 0;
    } else {
      std::cerr << "unknown flag: " << arg << '\n';
      return 2;
    }
  }
  if (command.empty() || config_path.empty()) {
    std::cerr << "usage: tqnf --command NAME --config PATH [--out DIR] [--seed N]\n";
    return 2;
  }
  return run(command, config_path, out_dir, seed);
}

}  // namespace tqnf::app
