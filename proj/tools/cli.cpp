#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dfsq/errors.hpp"
#include "dfsq/geo_phase.hpp"
#include "dfsq/optctrl.hpp"
#include "dfsq/pert_gate.hpp"
#include "dfsq/plaquette.hpp"
#include "dfsq/version.hpp"

namespace dfsq::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Row = std::vector<std::string>;

constexpr const char* kOutputEnv = "DFSQ_OUTPUT_DIR";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  if (v == 0.0) return "0";  // no "-0"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

std::string join(const Row& cells, char sep = ',') {
  std::string s;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) s += sep;
    s += cells[i];
  }
  return s;
}

Row split(const std::string& line) {
  Row out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct Table {
  Row header;
  std::vector<Row> rows;
};

std::string to_csv(const Table& t) {
  std::string s = join(t.header) + "\n";
  for (const auto& r : t.rows) s += join(r) + "\n";
  return s;
}

json cell_json(const std::string& c) {
  char* end = nullptr;
  const double v = std::strtod(c.c_str(), &end);
  if (!c.empty() && end == c.c_str() + c.size() && std::isfinite(v)) return v;
  return c;
}

json to_json(const Table& t) {
  json arr = json::array();
  for (const auto& r : t.rows) {
    json o = json::object();
    for (size_t i = 0; i < t.header.size() && i < r.size(); ++i) o[t.header[i]] = cell_json(r[i]);
    arr.push_back(o);
  }
  return arr;
}

struct Common {
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string format = "csv";
  std::string config;
  int jobs = 1;
  bool resume = false;
};

// Flag values for every subcommand; one instance per parse.
struct Opts {
  double J = 1.0, d = 0.2;
  std::string mode = "two-step";
  double duration_scale = 1.0;
  std::optional<double> dJ;
  double dJ_min = 0.05, dJ_max = 0.95, step = 0.01;
  std::vector<double> Jp{0.1};
  double Jp_single = 0.1;
  int n = 1, m = 1;
  std::string echo = "ideal";
  std::optional<double> horizon;
  int samples = 200;
  int L = 20;
  double T = 1.0;
  int restarts = 10, max_iter = 2000, steps = 2000, max_steps = 1 << 17;
  double target_eps = 1e-6;
  int points = 20;
  double fd_step = 1e-6;
  std::string pulse;
  std::vector<double> deltas;
  double tol = 1e-9;
  std::string statistics = "both";
  OnsiteParams onsite;
  std::optional<double> bias;
  double threshold = 1e-9;
  std::optional<double> time;
  int max_particles = 2;
  std::vector<double> t_over_U{0.02, 0.05};
  double U = 1.0;
  std::string figure;
};

class Run {
 public:
  Run(std::string command, Common c, std::ostream& out, std::ostream& err)
      : command(std::move(command)), common(std::move(c)), out(out), err(err) {
    fs::create_directories(dir());
  }

  fs::path dir() const { return common.out_dir.empty() ? fs::path(".") : fs::path(common.out_dir); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir() / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir() / name).string());
    f << content;
    record(name);
  }

  void record(const std::string& name) {
    if (std::find(outputs.begin(), outputs.end(), name) == outputs.end()) outputs.push_back(name);
  }

  void emit(const std::string& stem, const Table& t) {
    if (common.format == "json")
      write(stem + ".json", to_json(t).dump(2) + "\n");
    else
      write(stem + ".csv", to_csv(t));
  }

  void warn(const std::string& w) {
    warnings.push_back(w);
    err << "warning: " << w << "\n";
  }

  std::string command;
  Common common;
  std::ostream& out;
  std::ostream& err;
  json config = json::object();
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;
  int failed_rows = 0;
  bool complete = true;

  std::string manifest_name() const { return command + ".manifest.json"; }

  json manifest() const {
    return {{"artifact", "dfsq"},          {"version", kVersion},   {"command", command},
            {"seed", common.seed},         {"format", common.format}, {"config", config},
            {"outputs", outputs},          {"warnings", warnings},  {"failed_rows", failed_rows},
            {"complete", complete}};
  }

  void write_manifest() {
    std::ofstream f(dir() / manifest_name(), std::ios::binary);
    f << manifest().dump(2) << "\n";
  }
};

// ---- sweeps ----------------------------------------------------------------

struct SweepSpec {
  std::string stem;
  Row header;  // last column is "status"
  size_t n = 0;
  size_t key_cols = 1;  // leading columns that identify a grid point
  std::function<Row(size_t)> key;
  std::function<Row(size_t)> compute;  // full row, status "ok"
};

std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

// Deterministic row order regardless of worker count. Rows are appended to the
// CSV in grid order as soon as the prefix is complete, so an interrupted run
// can be resumed with --resume.
Table run_sweep(Run& run, const SweepSpec& spec) {
  std::map<std::string, Row> done;
  const fs::path csv = run.dir() / (spec.stem + ".csv");
  if (run.common.resume) {
    std::ifstream man(run.dir() / run.manifest_name());
    if (man) {
      json old;
      try {
        man >> old;
      } catch (const std::exception&) {
        throw UsageError("cannot parse existing manifest for --resume");
      }
      if (old.value("config", json::object()) != run.config)
        throw UsageError("--resume: existing manifest was written with a different configuration");
    }
    std::ifstream in(csv);
    std::string line;
    if (in && std::getline(in, line)) {
      if (line != join(spec.header)) throw UsageError("--resume: existing " + csv.string() + " has another header");
      while (std::getline(in, line)) {
        Row r = split(line);
        if (r.size() != spec.header.size() || r.back() != "ok") continue;
        done[join(Row(r.begin(), r.begin() + static_cast<long>(spec.key_cols)))] = r;
      }
    }
  }

  run.complete = false;
  run.record(spec.stem + ".csv");
  run.write_manifest();

  std::vector<std::optional<Row>> rows(spec.n);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i = next++; i < spec.n; i = next++) {
      Row key = spec.key(i);
      Row r;
      auto it = done.find(join(key));
      if (it != done.end()) {
        r = it->second;
      } else {
        try {
          r = spec.compute(i);
        } catch (const std::exception& e) {
          r = key;
          r.resize(spec.header.size() - 1, "nan");
          r.push_back(std::string("error: ") + sanitize(e.what()));
        }
      }
      std::lock_guard<std::mutex> lk(mu);
      rows[i] = std::move(r);
      cv.notify_one();
    }
  };
  const int jobs = std::max(1, run.common.jobs);
  std::vector<std::thread> pool;
  if (jobs > 1)
    for (int k = 0; k < jobs; ++k) pool.emplace_back(work);

  std::ofstream f(csv, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + csv.string());
  f << join(spec.header) << "\n" << std::flush;
  Table t{spec.header, {}};
  if (jobs == 1) {
    work();
  }
  for (size_t i = 0; i < spec.n; ++i) {
    std::unique_lock<std::mutex> lk(mu);
    cv.wait(lk, [&] { return rows[i].has_value(); });
    const Row r = *rows[i];
    lk.unlock();
    if (r.back() != "ok") ++run.failed_rows;
    f << join(r) << "\n" << std::flush;
    t.rows.push_back(r);
  }
  for (auto& th : pool) th.join();
  run.complete = true;
  if (run.common.format == "json") run.write(spec.stem + ".json", to_json(t).dump(2) + "\n");
  if (run.failed_rows) run.warn(std::to_string(run.failed_rows) + " sweep rows failed (flagged in status column)");
  return t;
}

std::vector<double> grid(double lo, double hi, double step) {
  if (!(step > 0.0)) throw UsageError("--step must be positive");
  if (hi < lo) throw UsageError("range maximum is below its minimum");
  const auto n = static_cast<size_t>(std::llround((hi - lo) / step)) + 1;
  std::vector<double> g(n);
  for (size_t i = 0; i < n; ++i) g[i] = std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12;
  return g;
}

EchoKind echo_kind(const std::string& s) { return s == "superexchange" ? EchoKind::superexchange : EchoKind::ideal; }

std::vector<Statistics> stats_list(const std::string& s) {
  if (s == "both") return {Statistics::boson, Statistics::fermion};
  return {statistics_from_string(s)};
}

// ---- commands --------------------------------------------------------------

void cmd_spectrum(Run& run, const Opts& o) {
  Table t{{"energy", "total_spin", "degeneracy"}, {}};
  for (const auto& l : plaquette_spectrum(o.J, o.d)) {
    t.rows.push_back({num(l.energy), std::to_string(l.total_spin), std::to_string(l.degeneracy)});
    run.out << "E = " << num(l.energy) << "  S = " << l.total_spin << "  x" << l.degeneracy << "\n";
  }
  run.emit("spectrum", t);
}

void cmd_prepare_plus(Run& run, const Opts& o) {
  const auto mode = o.mode == "one-step" ? PrepareMode::one_step : PrepareMode::two_step;
  const Vec psi = prepare_plus(mode, o.duration_scale);
  const cplx ov = plus_state().dot(psi);
  const double F = std::norm(ov);
  run.out << "fidelity " << num(F) << "\n";
  json j = {{"mode", o.mode}, {"duration_scale", o.duration_scale}, {"fidelity", F},
            {"overlap", {ov.real(), ov.imag()}}, {"state", dfsq::to_json(psi)}};
  run.write("prepare_plus.json", j.dump(2) + "\n");
}

void cmd_pert_coeffs(Run& run, const Opts& o) {
  if (o.dJ) {
    const auto c = effective_coeffs(1.0, *o.dJ);
    run.out << "lambda_z " << num(c.lambda_z) << "\ngamma_z " << num(c.gamma_z) << "\ndelta_E " << num(c.delta_E)
            << "\n";
    run.emit("pert_coeffs", Table{{"dJ", "lambda_z", "gamma_z", "delta_E"},
                                  {{num(*o.dJ), num(c.lambda_z), num(c.gamma_z), num(c.delta_E)}}});
    return;
  }
  const auto g = grid(o.dJ_min, o.dJ_max, o.step);
  SweepSpec s{"pert_coeffs", {"dJ", "lambda_z", "gamma_z", "delta_E", "status"}, g.size(), 1,
              [&](size_t i) { return Row{num(g[i])}; },
              [&](size_t i) {
                const auto c = effective_coeffs(1.0, g[i]);
                return Row{num(g[i]), num(c.lambda_z), num(c.gamma_z), num(c.delta_E), "ok"};
              }};
  const auto t = run_sweep(run, s);
  run.out << t.rows.size() << " rows\n";
}

Table fidelity_sweep(Run& run, const std::string& stem, const std::vector<double>& ratios,
                     const std::vector<double>& jps, int n, double J, EchoKind echo, bool brief) {
  std::vector<std::pair<double, double>> pts;
  for (double jp : jps)
    for (double r : ratios) pts.emplace_back(jp, r);
  Row header = brief ? Row{"d_over_J", "Jp_over_J", "F", "F_cz", "in_shadow", "status"}
                     : Row{"d_over_J", "Jp_over_J", "n", "m", "t_c", "F", "leakage", "phi_T", "phi_S", "F_cz",
                           "in_shadow", "status"};
  SweepSpec s{stem, header, pts.size(), 2, [&](size_t i) { return Row{num(pts[i].second), num(pts[i].first)}; },
              [&](size_t i) {
                PertParams p;
                p.J = J;
                p.d = pts[i].second * J;
                p.Jp = pts[i].first * J;
                p.n = n;
                const auto g = gate_fidelity(p, echo);
                const std::string sh = in_shadow_region(pts[i].second) ? "1" : "0";
                const Row key{num(pts[i].second), num(pts[i].first)};
                if (brief) return Row{key[0], key[1], num(g.fidelity), num(g.fidelity_cz), sh, "ok"};
                return Row{key[0], key[1], std::to_string(n), std::to_string(p.m), num(g.t_c), num(g.fidelity),
                           num(g.leakage), num(g.phi_T), num(g.phi_S), num(g.fidelity_cz), sh, "ok"};
              }};
  return run_sweep(run, s);
}

void cmd_pert_fidelity(Run& run, const Opts& o) {
  for (double jp : o.Jp) {
    PertParams p;
    p.Jp = jp;
    for (const auto& w : p.warnings()) run.warn(w);
  }
  const auto t = fidelity_sweep(run, "pert_fidelity", grid(o.dJ_min, o.dJ_max, o.step), o.Jp, o.n, o.J,
                                echo_kind(o.echo), false);
  run.out << t.rows.size() << " rows written to " << (run.dir() / "pert_fidelity.csv").string() << "\n";
}

void cmd_pert_allowed(Run& run, const Opts& o) {
  Table t{{"n", "m", "dJ", "lambda_z", "condition_residual", "fidelity", "fidelity_cz"}, {}};
  for (double r : allowed_ratios(o.n, o.m)) {
    const double lz = lambda_z(r);
    const double shift = (2.0 * o.n - 1.0) / (16.0 * o.m);
    const double res = std::min(std::abs(lz - 0.125 - shift), std::abs(lz - 0.125 + shift));
    PertParams p;
    p.J = o.J;
    p.d = r * o.J;
    p.Jp = o.Jp_single * o.J;
    p.n = o.n;
    p.m = o.m;
    const auto g = gate_fidelity(p, echo_kind(o.echo));
    t.rows.push_back({std::to_string(o.n), std::to_string(o.m), num(r), num(lz), num(res), num(g.fidelity),
                      num(g.fidelity_cz)});
    run.out << "d/J = " << num(r) << "  F = " << num(g.fidelity) << "\n";
  }
  run.emit("pert_allowed", t);
}

void cmd_pert_validate(Run& run, const Opts& o) {
  PertParams p;
  p.J = o.J;
  p.d = o.dJ.value_or(0.3) * o.J;
  p.Jp = o.Jp_single * o.J;
  p.validate();
  const double horizon = o.horizon.value_or(gate_time(p));
  const double inf = validate_effective(p, horizon, o.samples);
  run.out << "max infidelity " << num(inf) << "\n";
  run.write("pert_validate.json",
            json{{"dJ", p.d / p.J}, {"Jp", o.Jp_single}, {"horizon", horizon}, {"samples", o.samples},
                 {"max_infidelity", inf}}
                    .dump(2) +
                "\n");
}

json pulse_json(const PulseParams& p) {
  json x = json::array();
  for (int k = 0; k < p.x.rows(); ++k) {
    json row = json::array();
    for (int l = 0; l < p.x.cols(); ++l) row.push_back(p.x(k, l));
    x.push_back(row);
  }
  return x;
}

PulseParams load_pulse(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read pulse file " + path);
  json j;
  try {
    f >> j;
    const auto& x = j.at("x");
    PulseParams p = PulseParams::zeros(static_cast<int>(x.at(0).size()), j.at("T").get<double>());
    if (static_cast<int>(x.size()) != kControls) throw UsageError("pulse file must hold 5 control rows");
    for (int k = 0; k < kControls; ++k)
      for (int l = 0; l < p.L(); ++l) p.x(k, l) = x.at(k).at(l).get<double>();
    return p;
  } catch (const json::exception& e) {
    throw UsageError("malformed pulse file " + path + ": " + e.what());
  }
}

void cmd_optctrl_optimize(Run& run, const Opts& o) {
  OptimizeOptions opts;
  opts.L = o.L;
  opts.T = o.T;
  opts.restarts = o.restarts;
  opts.max_iter = o.max_iter;
  opts.target_eps = o.target_eps;
  opts.steps = o.steps;
  const auto r = optimize(run.common.seed, opts);
  const auto conv = propagate_converged(r.x_final, o.steps, 1e-9, o.max_steps);
  const double inf_conv = std::max(0.0, 1.0 - gate_fidelity_of(conv.U));
  json amps = json::array();
  for (int k = 0; k < kControls; ++k) amps.push_back(r.x_final.max_amplitude(k));
  json j = {{"x", pulse_json(r.x_final)},
            {"T", r.x_final.T},
            {"L", r.x_final.L()},
            {"infidelity", r.infidelity},
            {"infidelity_converged", inf_conv},
            {"steps", o.steps},
            {"steps_converged", conv.steps},
            {"seed", run.common.seed},
            {"iterations", r.iterations},
            {"gradient_norm", r.gradient_norm},
            {"restarts_used", r.restarts_used},
            {"max_amplitude", amps}};
  run.write("optctrl_result.json", j.dump(2) + "\n");
  Table t{{"t", "alpha1", "alpha2", "alpha3", "alpha4", "alpha5"}, {}};
  for (int s = 0; s < 1000; ++s) {
    const double tt = r.x_final.T * s / 999.0;
    Row row{num(tt)};
    for (int k = 0; k < kControls; ++k) row.push_back(num(r.x_final.amplitude(k, tt)));
    t.rows.push_back(row);
  }
  run.write("optctrl_pulse.csv", to_csv(t));
  run.out << "infidelity " << num(r.infidelity) << " (converged propagation " << num(inf_conv) << ", "
          << conv.steps << " slices)\n";
  if (r.infidelity > o.target_eps) run.warn("target infidelity not reached");
}

void cmd_optctrl_gradcheck(Run& run, const Opts& o) {
  std::mt19937_64 rng(run.common.seed);
  Table t{{"point", "max_relative_error", "max_abs_error", "max_abs_gradient"}, {}};
  double worst = 0.0;
  for (int pt = 0; pt < o.points; ++pt) {
    const PulseParams p = random_pulse(rng(), o.L, o.T);
    const auto fg = fidelity_and_gradient(p, o.steps);
    Eigen::MatrixXd fd(kControls, o.L);
    for (int k = 0; k < kControls; ++k)
      for (int l = 0; l < o.L; ++l) {
        PulseParams a = p, b = p;
        a.x(k, l) += o.fd_step;
        b.x(k, l) -= o.fd_step;
        fd(k, l) = (fidelity(a, o.steps) - fidelity(b, o.steps)) / (2.0 * o.fd_step);
      }
    // Components far below the largest one are compared at 1e-3 of its size.
    const double scale = fd.cwiseAbs().maxCoeff();
    double rel = 0.0;
    for (int k = 0; k < kControls; ++k)
      for (int l = 0; l < o.L; ++l)
        rel = std::max(rel, std::abs(fg.grad(k, l) - fd(k, l)) / std::max(std::abs(fd(k, l)), 1e-3 * scale));
    worst = std::max(worst, rel);
    t.rows.push_back({std::to_string(pt), num(rel), num((fg.grad - fd).cwiseAbs().maxCoeff()), num(scale)});
  }
  run.out << "max relative error " << num(worst) << "\n";
  run.emit("optctrl_gradcheck", t);
}

std::vector<double> default_deltas() {
  std::vector<double> d{0.0, 1e-6, 1e-5, 1e-4};
  for (int i = 0; i < 9; ++i) d.push_back(std::pow(10.0, -2.0 + i / 8.0));
  return d;
}

void robustness_summary(Run& run, const std::vector<double>& deltas, const std::vector<double>& inf) {
  std::vector<double> x, y;
  double base = -1.0, plateau = 0.0;
  for (size_t i = 0; i < deltas.size(); ++i) {
    if (deltas[i] == 0.0) base = inf[i];
    if (deltas[i] >= 1e-2 - 1e-15 && deltas[i] <= 1e-1 + 1e-15 && inf[i] > 0.0) {
      x.push_back(deltas[i]);
      y.push_back(inf[i]);
    }
  }
  if (x.size() >= 2) run.out << "slope over [1e-2, 1e-1]: " << num(loglog_slope(x, y)) << "\n";
  if (base > 0.0) {
    for (size_t i = 0; i < deltas.size(); ++i)
      if (deltas[i] > 0.0 && deltas[i] <= 1e-4) plateau = std::max(plateau, inf[i] / base);
    run.out << "max plateau ratio (delta <= 1e-4): " << num(plateau) << "\n";
  }
}

void cmd_optctrl_robustness(Run& run, const Opts& o) {
  if (o.pulse.empty()) throw UsageError("--pulse is required (result JSON from optctrl-optimize)");
  const PulseParams p = load_pulse(o.pulse);
  const auto deltas = o.deltas.empty() ? default_deltas() : o.deltas;
  SweepSpec s{"optctrl_robustness", {"delta", "infidelity", "status"}, deltas.size(), 1,
              [&](size_t i) { return Row{num(deltas[i])}; },
              [&](size_t i) {
                const double inf = std::max(0.0, 1.0 - fidelity(p, o.steps, 1.0 - deltas[i]));
                return Row{num(deltas[i]), num(inf), "ok"};
              }};
  const auto t = run_sweep(run, s);
  std::vector<double> inf;
  for (const auto& r : t.rows) inf.push_back(std::strtod(r[1].c_str(), nullptr));
  robustness_summary(run, deltas, inf);
}

void cmd_optctrl_liedim(Run& run, const Opts& o) {
  const auto& c = control_operators();
  const LieClosure lc(std::vector<Mat>(c.ops.begin(), c.ops.end()), o.tol);
  const double member = lc.residual(c.ops[0] * c.ops[1]);
  run.out << lc.dimension() << "\n";
  run.write("optctrl_liedim.json", json{{"dimension", lc.dimension()},
                                        {"extra_round_rank", lc.extra_round_rank()},
                                        {"membership_residual", member},
                                        {"tol", o.tol}}
                                       .dump(2) +
                                       "\n");
}

OnsiteParams onsite_for(const Opts& o, Statistics s) {
  OnsiteParams p = o.onsite;
  if (o.bias)
    p.mu_L = p.mu_R + *o.bias;
  else
    p = p.at_resonant_bias(s);
  return p;
}

void cmd_geophase_table(Run& run, const Opts& o) {
  std::vector<EnergyLedgerEntry> rows;
  for (auto s : stats_list(o.statistics)) {
    const auto p = onsite_for(o, s);
    for (const auto& w : p.warnings()) run.warn(w);
    for (const auto& e : resonance_table(p, s, o.threshold)) {
      rows.push_back(e);
      if (e.resonant)
        run.out << "resonant: " << to_string(s) << " (" << e.config.n_L << "," << e.config.n_R_a << ","
                << format_rational(e.config.j_R) << ")\n";
    }
  }
  if (run.common.format == "json") {
    std::stringstream ss(ledger_csv(rows));
    std::string line;
    std::getline(ss, line);
    Table t{split(line), {}};
    while (std::getline(ss, line)) t.rows.push_back(split(line));
    run.emit("geophase_table", t);
  } else {
    run.write("geophase_table.csv", ledger_csv(rows));
  }
}

void cmd_geophase_dynamics(Run& run, const Opts& o) {
  Table t{{"statistics", "sector", "link0_n_L", "link0_n_R_a", "link1_n_L", "link1_n_R_a", "return_time", "phase",
           "link0_phase", "link1_phase", "leakage", "resonant", "min_detuning", "leakage_bound"},
          {}};
  for (auto s : stats_list(o.statistics)) {
    const auto p = onsite_for(o, s);
    for (const auto& w : p.warnings()) run.warn(w);
    for (const auto& sec : all_sectors()) {
      const auto r = tunneling_phase(sec, p, s, o.time.value_or(-1.0));
      const double bound =
          r.min_detuning > 0.0 ? kLeakageConstant * std::pow(p.t / r.min_detuning, 2) : std::nan("");
      t.rows.push_back({to_string(s), to_string(sec), std::to_string(r.links[0].n_L),
                        std::to_string(r.links[0].n_R_a), std::to_string(r.links[1].n_L),
                        std::to_string(r.links[1].n_R_a), num(r.return_time), num(r.phase), num(r.link_phase[0]),
                        num(r.link_phase[1]), num(r.leakage), r.resonant ? "1" : "0", num(r.min_detuning),
                        std::isnan(bound) ? "nan" : num(bound)});
      run.out << to_string(s) << " " << to_string(sec) << ": phase " << num(r.phase) << ", leakage "
              << num(r.leakage) << "\n";
    }
  }
  run.emit("geophase_dynamics", t);
}

void cmd_schwinger(Run& run, const Opts& o) {
  if (o.max_particles < 0 || o.max_particles > 4) throw UsageError("--max-particles must lie in 0..4");
  const auto space = FockSpace::up_to(Statistics::boson, 4, o.max_particles, std::max(1, o.max_particles));
  const double r = schwinger_identity_check(space);
  run.out << "max residual " << num(r) << "\n";
  run.write("schwinger_check.json",
            json{{"max_particles", o.max_particles}, {"dim", space.dim()}, {"max_residual", r}}.dump(2) + "\n");
}

void cmd_hubbard(Run& run, const Opts& o) {
  Table t{{"statistics", "t_over_U", "exact_gap", "perturbative_gap", "difference", "bound"}, {}};
  for (auto s : stats_list(o.statistics))
    for (double r : o.t_over_U) {
      const auto g = superexchange_hubbard_check(r * o.U, o.U, s);
      const double diff = std::abs(g.exact_gap - g.perturbative_gap);
      t.rows.push_back({to_string(s), num(r), num(g.exact_gap), num(g.perturbative_gap), num(diff),
                        num(5.0 * r * r * o.U)});
      run.out << to_string(s) << " t/U=" << num(r) << " gap " << num(g.exact_gap) << " (4t^2/U "
              << num(g.perturbative_gap) << ")\n";
    }
  run.emit("hubbard_check", t);
}

std::string gnuplot(const std::string& xlabel, const std::string& ylabel, const std::string& plot,
                    bool logscale = false) {
  std::ostringstream s;
  s << "set datafile separator ','\nset key autotitle columnhead\n";
  s << "set xlabel '" << xlabel << "'\nset ylabel '" << ylabel << "'\n";
  if (logscale) s << "set logscale xy\n";
  s << "plot " << plot << "\n";
  return s.str();
}

void cmd_report(Run& run, const Opts& o) {
  const std::string& fig = o.figure;
  if (fig == "pertfid") {
    fidelity_sweep(run, "report_pertfid", grid(0.05, 0.95, 0.01), {0.05, 0.1, 0.2}, 1, 1.0, EchoKind::ideal, true);
    run.write("report_pertfid.gp",
              gnuplot("d/J", "F",
                      "for [jp in \"0.05 0.1 0.2\"] 'report_pertfid.csv' using 1:($2==jp+0 ? $3 : 1/0) "
                      "with lines title 'J''/J='.jp"));
  } else if (fig == "pertcoeffs") {
    const auto g = grid(0.0, 1.0, 0.005);
    Table t{{"dJ", "lambda_z", "gamma_z"}, {}};
    for (double r : g) {
      try {
        t.rows.push_back({num(r), num(lambda_z(r)), num(gamma_z(r))});
      } catch (const DomainError&) {
        t.rows.push_back({num(r), "nan", "nan"});
      }
    }
    run.write("report_pertcoeffs.csv", to_csv(t));
    run.write("report_pertcoeffs.gp", gnuplot("d/J", "coefficient",
                                              "'report_pertcoeffs.csv' using 1:2 with lines, '' using 1:3 "
                                              "with lines, 0.125 title '1/8'"));
  } else if (fig == "allowed") {
    Table t{{"n", "m", "dJ", "lambda_z", "fidelity"}, {}};
    for (auto [n, m] : std::vector<std::pair<int, int>>{{1, 1}, {1, 2}, {3, 4}})
      for (double r : allowed_ratios(n, m)) {
        PertParams p;
        p.d = r;
        p.Jp = 0.1;
        p.n = n;
        p.m = m;
        t.rows.push_back({std::to_string(n), std::to_string(m), num(r), num(lambda_z(r)),
                          num(gate_fidelity(p).fidelity)});
      }
    run.write("report_allowed.csv", to_csv(t));
    run.write("report_allowed.gp",
              gnuplot("d/J", "lambda_z", "'report_allowed.csv' using 3:4 with points"));
  } else if (fig == "robustness") {
    if (o.pulse.empty()) throw UsageError("report --figure robustness needs --pulse");
    const PulseParams p = load_pulse(o.pulse);
    const auto deltas = default_deltas();
    Table t{{"delta", "infidelity"}, {}};
    std::vector<double> inf = robustness_sweep(p, deltas, o.steps);
    for (size_t i = 0; i < deltas.size(); ++i) t.rows.push_back({num(deltas[i]), num(inf[i])});
    run.write("report_robustness.csv", to_csv(t));
    run.write("report_robustness.gp", gnuplot("dJ/J", "1-F",
                                              "'report_robustness.csv' using 1:2 with linespoints", true));
    robustness_summary(run, deltas, inf);
  } else if (fig == "spectrum") {
    Table t{{"dJ", "energy", "total_spin", "degeneracy"}, {}};
    for (double r : grid(0.05, 0.95, 0.05))
      for (const auto& l : plaquette_spectrum(1.0, r))
        t.rows.push_back({num(r), num(l.energy), std::to_string(l.total_spin), std::to_string(l.degeneracy)});
    run.write("report_spectrum.csv", to_csv(t));
    run.write("report_spectrum.gp",
              gnuplot("d/J", "E/J", "'report_spectrum.csv' using 1:2 with points"));
  } else if (fig == "tables") {
    std::vector<EnergyLedgerEntry> rows;
    for (auto s : {Statistics::boson, Statistics::fermion})
      for (const auto& e : resonance_table(OnsiteParams{}.at_resonant_bias(s), s)) rows.push_back(e);
    run.write("report_tables.csv", ledger_csv(rows));
  } else {
    throw UsageError("unknown figure '" + fig + "'");
  }
  run.out << "report " << fig << " written to " << run.dir().string() << "\n";
}

// ---- parser ----------------------------------------------------------------

using Handler = std::function<void(Run&, const Opts&)>;

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out_dir, "Output directory (default $DFSQ_OUTPUT_DIR or .)");
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--format", c.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--config", c.config, "JSON file of option values (keys are long flag names)");
  sub->add_option("--jobs", c.jobs, "Worker threads for sweeps")->check(CLI::PositiveNumber);
  sub->add_flag("--resume", c.resume, "Reuse finished rows of an interrupted sweep");
}

void add_onsite(CLI::App* sub, Opts& o) {
  sub->add_option("--statistics", o.statistics)->check(CLI::IsMember({"boson", "fermion", "both"}));
  sub->add_option("--omega", o.onsite.omega, "Vibrational splitting");
  sub->add_option("--mu-R", o.onsite.mu_R);
  sub->add_option("--U-L-aa", o.onsite.U_L_aa);
  sub->add_option("--U-R-aa", o.onsite.U_R_aa);
  sub->add_option("--U-R-bb", o.onsite.U_R_bb);
  sub->add_option("--U-R-ab", o.onsite.U_R_ab);
  sub->add_option("--t", o.onsite.t, "Tunneling rate");
  sub->add_option("--bias", o.bias, "Delta = mu_L - mu_R (default: resonant bias for the statistics)");
}

std::map<std::string, Handler> build(CLI::App& app, Opts& o, Common& c) {
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::map<std::string, Handler> h;
  auto sub = [&](const std::string& name, const std::string& desc, Handler fn) {
    CLI::App* s = app.add_subcommand(name, desc);
    add_common(s, c);
    h[name] = std::move(fn);
    return s;
  };
  const auto positive = CLI::PositiveNumber;

  auto* s = sub("spectrum", "Plaquette spectrum with diagonal coupling", cmd_spectrum);
  s->add_option("--J", o.J)->check(positive);
  s->add_option("--d", o.d);

  s = sub("prepare-plus", "Prepare |+> from |0> with superexchange pulses", cmd_prepare_plus);
  s->add_option("--mode", o.mode)->check(CLI::IsMember({"two-step", "one-step"}));
  s->add_option("--duration-scale", o.duration_scale);

  s = sub("pert-coeffs", "Effective-Hamiltonian coefficients lambda_z, gamma_z", cmd_pert_coeffs);
  s->add_option("--dJ", o.dJ, "Single d/J point (otherwise a sweep)");
  s->add_option("--dJ-min", o.dJ_min);
  s->add_option("--dJ-max", o.dJ_max);
  s->add_option("--step", o.step);

  s = sub("pert-fidelity", "Perturbative gate fidelity sweep over d/J", cmd_pert_fidelity);
  s->add_option("--dJ-min", o.dJ_min);
  s->add_option("--dJ-max", o.dJ_max);
  s->add_option("--step", o.step);
  s->add_option("--Jp", o.Jp, "J'/J values")->expected(1, -1);
  s->add_option("--n", o.n)->check(positive);
  s->add_option("--J", o.J)->check(positive);
  s->add_option("--echo", o.echo)->check(CLI::IsMember({"ideal", "superexchange"}));

  s = sub("pert-allowed", "Allowed d/J points for a CZ gate", cmd_pert_allowed);
  s->add_option("--n", o.n)->check(positive);
  s->add_option("--m", o.m)->check(positive);
  s->add_option("--Jp", o.Jp_single, "J'/J");
  s->add_option("--J", o.J)->check(positive);
  s->add_option("--echo", o.echo)->check(CLI::IsMember({"ideal", "superexchange"}));

  s = sub("pert-validate", "Full vs effective evolution on the product subspace", cmd_pert_validate);
  s->add_option("--dJ", o.dJ);
  s->add_option("--Jp", o.Jp_single, "J'/J");
  s->add_option("--J", o.J)->check(positive);
  s->add_option("--horizon", o.horizon, "Evolution horizon (default: gate time)");
  s->add_option("--samples", o.samples)->check(positive);

  s = sub("optctrl-optimize", "Optimize smooth control pulses for the 4-site phase gate", cmd_optctrl_optimize);
  s->add_option("--L", o.L)->check(positive);
  s->add_option("--T", o.T)->check(positive);
  s->add_option("--restarts", o.restarts)->check(positive);
  s->add_option("--max-iter", o.max_iter)->check(positive);
  s->add_option("--target-eps", o.target_eps);
  s->add_option("--steps", o.steps)->check(positive);
  s->add_option("--max-steps", o.max_steps, "Slice cap for the converged re-propagation")->check(positive);

  s = sub("optctrl-gradcheck", "Analytic gradient vs central differences", cmd_optctrl_gradcheck);
  s->add_option("--points", o.points)->check(positive);
  s->add_option("--L", o.L)->check(positive);
  s->add_option("--T", o.T)->check(positive);
  s->add_option("--steps", o.steps)->check(positive);
  s->add_option("--fd-step", o.fd_step)->check(positive);

  s = sub("optctrl-robustness", "Infidelity under a scaled Hamiltonian", cmd_optctrl_robustness);
  s->add_option("--pulse", o.pulse, "Result JSON from optctrl-optimize");
  s->add_option("--deltas", o.deltas)->expected(1, -1);
  s->add_option("--steps", o.steps)->check(positive);

  s = sub("optctrl-liedim", "Dimension of the Lie closure of the control operators", cmd_optctrl_liedim);
  s->add_option("--tol", o.tol)->check(positive);

  s = sub("geophase-table", "Energy-difference ledger for single-particle tunneling", cmd_geophase_table);
  add_onsite(s, o);
  s->add_option("--threshold", o.threshold, "Resonance threshold in units of t");

  s = sub("geophase-dynamics", "Resonant tunneling phase per spin sector", cmd_geophase_dynamics);
  add_onsite(s, o);
  s->add_option("--time", o.time, "Evolution time (default: first resonant return)");

  s = sub("schwinger-check", "Schwinger-representation identity on a truncated Fock space", cmd_schwinger);
  s->add_option("--max-particles", o.max_particles);

  s = sub("hubbard-check", "Two-site Hubbard singlet-triplet gap vs 4t^2/U", cmd_hubbard);
  s->add_option("--t-over-U", o.t_over_U)->expected(1, -1);
  s->add_option("--U", o.U)->check(positive);
  s->add_option("--statistics", o.statistics)->check(CLI::IsMember({"boson", "fermion", "both"}));

  s = sub("report", "Regenerate a figure dataset", cmd_report);
  s->add_option("--figure", o.figure)
      ->required()
      ->check(CLI::IsMember({"pertfid", "pertcoeffs", "allowed", "robustness", "spectrum", "tables"}));
  s->add_option("--pulse", o.pulse, "Result JSON from optctrl-optimize (robustness)");
  s->add_option("--steps", o.steps)->check(positive);
  return h;
}

const std::vector<std::string> kUnrecorded{"--config", "--jobs", "--resume", "--help", "--out"};

json resolved_config(const CLI::App* sub) {
  json cfg = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = "--" + opt->get_lnames().front();
    if (std::find(kUnrecorded.begin(), kUnrecorded.end(), name) != kUnrecorded.end()) continue;
    const std::string key = opt->get_lnames().front();
    if (opt->get_type_size_max() == 0) {
      cfg[key] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& r = opt->results();
      if (opt->get_expected_max() > 1) {
        cfg[key] = r;
      } else {
        cfg[key] = r.back();
      }
    } else {
      cfg[key] = opt->get_default_str();
    }
  }
  return cfg;
}

std::vector<std::string> config_tokens(const std::string& path, const CLI::App* sub) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read config file " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw UsageError("config file is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  std::vector<std::string> toks;
  for (const auto& [key, val] : j.items()) {
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") throw UsageError("unknown config key '" + key + "'");
    if (opt->count() > 0) continue;  // the command line wins
    if (opt->get_type_size_max() == 0) {
      if (!val.is_boolean()) throw UsageError("config key '" + key + "' must be true or false");
      if (val.get<bool>()) toks.push_back("--" + key);
      continue;
    }
    toks.push_back("--" + key);
    auto scalar = [&](const json& v) {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number() || v.is_boolean()) return v.dump();
      throw UsageError("config key '" + key + "' has an unsupported value");
    };
    if (val.is_array()) {
      for (const auto& v : val) toks.push_back(scalar(v));
    } else {
      toks.push_back(scalar(val));
    }
  }
  return toks;
}

int parse(CLI::App& app, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> storage{"dfsq"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? -1 : 2;  // -1: help or version printed
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    Opts opts;
    Common common;
    CLI::App app{"Decoherence-free plaquette qubits: spectra, gates and gate-design tools", "dfsq"};
    auto handlers = build(app, opts, common);
    if (int rc = parse(app, args, out, err)) return rc < 0 ? 0 : rc;
    CLI::App* sub = app.get_subcommands().front();

    std::unique_ptr<CLI::App> app2;
    Opts opts2;
    Common common2;
    if (!common.config.empty()) {
      // Re-parse with config values inserted after the subcommand name.
      std::vector<std::string> merged{sub->get_name()};
      auto toks = config_tokens(common.config, sub);
      merged.insert(merged.end(), toks.begin(), toks.end());
      bool past = false;
      for (const auto& a : args) {
        if (past) merged.push_back(a);
        if (a == sub->get_name()) past = true;
      }
      app2 = std::make_unique<CLI::App>("dfsq", "dfsq");
      handlers = build(*app2, opts2, common2);
      if (int rc = parse(*app2, merged, out, err)) return rc < 0 ? 0 : rc;
      sub = app2->get_subcommands().front();
    }
    const Opts& o = app2 ? opts2 : opts;
    Common c = app2 ? common2 : common;
    if (c.out_dir.empty())
      if (const char* env = std::getenv(kOutputEnv)) c.out_dir = env;

    Run r(sub->get_name(), c, out, err);
    r.config = resolved_config(sub);
    handlers.at(sub->get_name())(r, o);
    r.write_manifest();
    return 0;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace dfsq::cli
