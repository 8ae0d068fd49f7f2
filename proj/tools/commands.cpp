#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "ktan/baselines.hpp"
#include "ktan/data.hpp"
#include "ktan/diagnostics.hpp"

namespace ktan::cli {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt17(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct CommonOptions {
  std::string data;
  std::optional<std::size_t> dim;
  std::uint64_t order_seed = 0;
  bool normalize = false;
  double c = 1.0;
  std::string schedule = "inv_n";
  double alpha0 = 2.0;
  double rho0 = 0.05;
  double beta = 0.75;
  double delta = 0.5;
  std::size_t m0 = 124;
  int max_backtracks = 10;
  std::string backend = "dense";
  std::uint64_t seed = 0;
  bool deterministic = false;
};

void add_data_options(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--data", o.data, "libsvm file or synth:n=...,p=...,decay=geo:0.5,noise=...,seed=...")->required();
  cmd->add_option("--dim", o.dim, "declared feature dimension for libsvm input");
  cmd->add_option("--order-seed", o.order_seed, "sample order permutation seed (0 keeps file order)");
  cmd->add_flag("--normalize", o.normalize, "scale every sample to unit norm");
  cmd->add_option("--c", o.c, "regularization constant c")->check(CLI::PositiveNumber);
  cmd->add_option("--schedule", o.schedule, "statistical accuracy schedule")
      ->check(CLI::IsMember({"inv_n", "inv_sqrt_n"}));
}

void add_solver_options(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--alpha0", o.alpha0, "sample growth factor (> 1)");
  cmd->add_option("--rho0", o.rho0, "truncation factor in [0, 1]");
  cmd->add_option("--beta", o.beta, "alpha backtracking multiplier in (0, 1)");
  cmd->add_option("--delta", o.delta, "rho backtracking multiplier in (0, 1)");
  cmd->add_option("--m0", o.m0, "initial sample size");
  cmd->add_option("--max-backtracks", o.max_backtracks, "backtracks per stage before the Newton safeguard");
  cmd->add_option("--backend", o.backend, "eigensolver backend")->check(CLI::IsMember({"dense", "randomized"}));
  cmd->add_option("--seed", o.seed, "seed for the randomized eigensolver and stochastic baselines");
  cmd->add_flag("--deterministic", o.deterministic, "sequential evaluation with fixed reduction order");
}

Dataset load_data(const CommonOptions& o) {
  Dataset data;
  if (is_synthetic_spec(o.data)) {
    data = synthesize(parse_synthetic_spec(o.data)).data;
    if (o.dim) data.set_dim(*o.dim);
  } else {
    data = load_libsvm(o.data, o.dim);
  }
  if (data.empty()) throw ValidationError("dataset has no samples");
  if (o.order_seed != 0) data = permute_prefix(data, o.order_seed);
  if (o.normalize) data = normalize_rows(data).data;
  return data;
}

RiskConfig risk_config(const CommonOptions& o) {
  RiskConfig r;
  r.c = o.c;
  r.schedule = o.schedule == "inv_sqrt_n" ? Schedule::InvSqrtN : Schedule::InvN;
  return r;
}

SolverConfig solver_config(const CommonOptions& o) {
  SolverConfig s;
  s.alpha0 = o.alpha0;
  s.rho0 = o.rho0;
  s.beta = o.beta;
  s.delta = o.delta;
  s.m0 = o.m0;
  s.max_backtracks = o.max_backtracks;
  s.backend = o.backend == "randomized" ? EigBackend::Randomized : EigBackend::Dense;
  s.seed = o.seed;
  s.eig.seed = o.seed;
  s.validate();
  return s;
}

nlohmann::json config_json(const CommonOptions& o) {
  return {{"data", o.data},
          {"dim", o.dim ? nlohmann::json(*o.dim) : nlohmann::json(nullptr)},
          {"order_seed", o.order_seed},
          {"normalize", o.normalize},
          {"c", o.c},
          {"schedule", o.schedule},
          {"alpha0", o.alpha0},
          {"rho0", o.rho0},
          {"beta", o.beta},
          {"delta", o.delta},
          {"m0", o.m0},
          {"max_backtracks", o.max_backtracks},
          {"backend", o.backend},
          {"seed", o.seed},
          {"deterministic", o.deterministic}};
}

void write_manifest(const std::string& path, const std::vector<std::string>& args, const nlohmann::json& config,
                    const Dataset& data, const std::string& started) {
  std::ostringstream fp;
  fp << std::hex << std::setw(16) << std::setfill('0') << data.fingerprint();
  std::string command_line;
  for (const auto& a : args) command_line += (command_line.empty() ? "" : " ") + a;
  const nlohmann::json manifest{{"command_line", command_line},
                                {"config", config},
                                {"dataset",
                                 {{"fingerprint", fp.str()},
                                  {"samples", data.size()},
                                  {"dim", data.dim()},
                                  {"order_seed", data.order_seed()}}},
                                {"seeds", {{"order", config.value("order_seed", 0)}, {"solver", config.value("seed", 0)}}},
                                {"started", started},
                                {"finished", iso_now()},
                                {"version", kVersion}};
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write manifest '" + path + "'");
  out << manifest.dump(2) << '\n';
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot open '" + path + "' for writing");
  return f;
}

// Lazily computed minimizers of R_n keyed by prefix size.
class OracleCache {
 public:
  OracleCache(const Dataset& data, RiskConfig risk, double tol = 1e-12) : data_(data), risk_(risk), tol_(tol) {}

  const Vector& get(std::size_t n) {
    auto it = cache_.find(n);
    if (it == cache_.end()) {
      const RiskView view(data_, n, risk_);
      it = cache_.emplace(n, newton_oracle(view, tol_).x).first;
    }
    return it->second;
  }

 private:
  const Dataset& data_;
  RiskConfig risk_;
  double tol_;
  std::map<std::size_t, Vector> cache_;
};

int cmd_solve(const CommonOptions& o, const std::string& out_path, bool with_oracle,
              const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const std::string started = iso_now();
  const Dataset data = load_data(o);
  const RiskConfig risk = risk_config(o);
  const SolverConfig cfg = solver_config(o);
  RunResult result = run(data, risk, cfg);

  if (with_oracle) {
    OracleCache oracles(data, risk);
    for (std::size_t i = 0; i < result.trace.size(); ++i) {
      const auto& att = result.attempts[i];
      const RiskView view(data, att.n, risk);
      result.trace[i].subopt = stage_subopt(view, att.x_n, oracles.get(att.n));
    }
  }

  if (out_path.empty()) {
    write_trace_csv(out, result.trace);
  } else {
    auto f = open_output(out_path);
    write_trace_csv(f, result.trace);
    auto config = config_json(o);
    config["with_oracle"] = with_oracle;
    write_manifest(out_path + ".manifest.json", args, config, data, started);
  }
  err << "stages=" << result.stages << " backtracks=" << result.backtracks << " init_iterations="
      << result.init.iterations << " final_grad_norm="
      << (result.trace.empty() ? result.init.grad_norm : result.trace.back().grad_norm) << '\n';
  return kSuccess;
}

struct CompareOptions {
  std::string solvers = "ktan,adanewton,sgd,saga";
  std::optional<std::uint64_t> budget_grads;
  std::optional<std::int64_t> budget_ms;
  double sgd_step = 0.08;
  double saga_step = 0.08;
  std::string out_dir = ".";
  bool parallel = false;
};

struct SolverTrace {
  std::string name;
  std::vector<TraceRecord> trace;
  std::vector<Vector> iterates;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void keep_within_budget(SolverTrace& t, const CompareOptions& c) {
  std::size_t keep = 0;
  while (keep < t.trace.size()) {
    const auto& r = t.trace[keep];
    if (c.budget_grads && r.samples_cum > *c.budget_grads) break;
    if (c.budget_ms && r.wall_ms > *c.budget_ms) break;
    ++keep;
  }
  t.trace.resize(keep);
  t.iterates.resize(keep);
}

SolverTrace run_one(const std::string& name, const Dataset& data, const RiskConfig& risk, const SolverConfig& scfg,
                    const CompareOptions& c) {
  SolverTrace t{name, {}, {}};
  const RiskView full(data, data.size(), risk);
  if (name == "ktan" || name == "adanewton") {
    if (c.budget_grads && *c.budget_grads == 0) return t;
    RunResult r = name == "ktan" ? run(data, risk, scfg) : adanewton_run(data, risk, scfg);
    t.trace = std::move(r.trace);
    for (const auto& a : r.attempts) t.iterates.push_back(a.x_n);
    keep_within_budget(t, c);
    return t;
  }
  BaselineConfig b;
  b.seed = scfg.seed == 0 ? 1 : scfg.seed;
  b.budget_samples = c.budget_grads;
  b.budget_ms = c.budget_ms;
  const std::uint64_t default_budget = 4 * static_cast<std::uint64_t>(data.size());
  BaselineResult r;
  if (name == "sgd" || name == "saga") {
    b.method = name == "sgd" ? Method::SGD : Method::SAGA;
    b.step_size = name == "sgd" ? c.sgd_step : c.saga_step;
    b.max_iters = c.budget_grads.value_or(default_budget);
    b.record_every = std::max<std::uint64_t>(1, data.size() / 8);
    r = name == "sgd" ? sgd_run(full, b) : saga_run(full, b);
  } else {
    b.method = Method::GD;
    b.max_iters = c.budget_grads.value_or(default_budget) / data.size();
    r = gd_run(full, b);
  }
  t.trace = std::move(r.trace);
  t.iterates = std::move(r.iterates);
  return t;
}

int cmd_compare(const CommonOptions& o, const CompareOptions& c, const std::vector<std::string>& args,
                std::ostream& out, std::ostream& err) {
  static const std::vector<std::string> known{"ktan", "adanewton", "sgd", "saga", "gd"};
  const auto names = split_list(c.solvers);
  if (names.empty()) {
    err << "error: --solvers is empty\n";
    return kUsageError;
  }
  for (const auto& n : names) {
    if (std::find(known.begin(), known.end(), n) == known.end()) {
      err << "error: unknown solver '" << n << "' (expected ktan, adanewton, sgd, saga, gd)\n";
      return kUsageError;
    }
  }
  if (!(c.sgd_step > 0.0 && c.saga_step > 0.0)) {
    err << "error: step sizes must be positive\n";
    return kUsageError;
  }

  const std::string started = iso_now();
  const Dataset data = load_data(o);
  const RiskConfig risk = risk_config(o);
  const SolverConfig scfg = solver_config(o);
  const RiskView full(data, data.size(), risk);
  const Vector xstar = newton_oracle(full).x;

  std::vector<SolverTrace> traces(names.size());
  std::vector<std::exception_ptr> failures(names.size());
  auto work = [&](std::size_t i) {
    try {
      traces[i] = run_one(names[i], data, risk, scfg, c);
      for (std::size_t r = 0; r < traces[i].trace.size(); ++r)
        traces[i].trace[r].subopt = stage_subopt(full, traces[i].iterates[r], xstar);
      auto f = open_output((std::filesystem::path(c.out_dir) / (names[i] + ".csv")).string());
      write_trace_csv(f, traces[i].trace);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };
  std::filesystem::create_directories(c.out_dir);
  if (c.parallel) {
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < names.size(); ++i) workers.emplace_back(work, i);
    for (auto& w : workers) w.join();
  } else {
    for (std::size_t i = 0; i < names.size(); ++i) work(i);
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  const auto merged_path = (std::filesystem::path(c.out_dir) / "compare.csv").string();
  auto merged = open_output(merged_path);
  for (std::size_t i = 0; i < traces.size(); ++i) write_trace_csv(merged, traces[i].trace, names[i], i == 0);

  auto config = config_json(o);
  config["solvers"] = c.solvers;
  config["budget_grads"] = c.budget_grads ? nlohmann::json(*c.budget_grads) : nlohmann::json(nullptr);
  config["budget_ms"] = c.budget_ms ? nlohmann::json(*c.budget_ms) : nlohmann::json(nullptr);
  config["sgd_step"] = c.sgd_step;
  config["saga_step"] = c.saga_step;
  write_manifest(merged_path + ".manifest.json", args, config, data, started);

  out << "solver,rows,samples_cum,subopt\n";
  for (const auto& t : traces) {
    out << t.name << ',' << t.trace.size() << ',' << (t.trace.empty() ? 0 : t.trace.back().samples_cum) << ','
        << (t.trace.empty() ? std::string() : fmt(*t.trace.back().subopt)) << '\n';
  }
  return kSuccess;
}

struct CheckOptions {
  std::optional<std::size_t> at_stage;
  bool all_stages = false;
  std::string xstar_plugin = "current";
  std::optional<double> xstar_norm;
};

int cmd_check(const CommonOptions& o, const CheckOptions& k, std::ostream& out) {
  const Dataset data = load_data(o);
  const RiskConfig risk = risk_config(o);
  const SolverConfig cfg = solver_config(o);
  const RunResult result = run(data, risk, cfg);
  OracleCache oracles(data, risk);

  std::optional<double> full_norm;
  if (k.xstar_plugin == "oracle") full_norm = oracles.get(data.size()).norm();

  std::size_t records = 0, quadratic = 0, cond1 = 0, cond2 = 0, simple1 = 0, simple2 = 0, step_subopt = 0, step_decrement = 0,
              sandwich = 0;
  for (std::size_t i = 0; i < result.attempts.size(); ++i) {
    const auto& att = result.attempts[i];
    const auto& rec = result.trace[i];
    if (att.safeguard) continue;
    if (k.at_stage && !k.all_stages && rec.stage != *k.at_stage) continue;

    const RiskView view(data, att.n, risk);
    const Vector& xstar_n = oracles.get(att.n);
    const std::optional<double> plugin = k.xstar_norm ? k.xstar_norm : full_norm;
    const DiagnosticsReport rep =
        theory_report(data, att.x_m, att.m, att.n, risk, att.rho, att.epsilon, plugin, &xstar_n);
    const double lambda_n = newton_decrement(view, att.x_n);
    const double subopt_n = stage_subopt(view, att.x_n, xstar_n);
    const bool in_region = rep.quadratic_region();
    const bool l2 = subopt_n <= rep.step_subopt_rhs;
    const bool l3 = lambda_n <= rep.step_decrement_rhs;
    const bool sw = rep.sandwich_lo - 1e-9 <= rep.subopt_m_used && rep.subopt_m_used <= rep.sandwich_hi + 1e-9;

    ++records;
    quadratic += in_region;
    cond1 += rep.cond1_holds();
    cond2 += rep.cond2_holds();
    simple1 += rep.simplified1_holds();
    simple2 += rep.simplified2_holds();
    step_subopt += in_region && l2;
    step_decrement += in_region && l3;
    sandwich += in_region && sw;

    out << "stage=" << rec.stage << " attempt=" << rec.attempt << " m=" << att.m << " n=" << att.n
        << " alpha=" << fmt(rep.alpha) << " rho=" << fmt(rep.rho) << " k=" << att.k << " epsilon=" << fmt(rep.epsilon)
        << " lambda_m=" << fmt(rep.lambda_m) << " quadratic_region=" << in_region << " K=" << fmt(rep.K)
        << " carry_bound=" << fmt(rep.carry_bound) << " cond1_lhs=" << fmt(rep.cond1_lhs)
        << " cond1_holds=" << rep.cond1_holds() << " cond2_lhs=" << fmt(rep.cond2_lhs) << " cond2_rhs=" << fmt(rep.v_n)
        << " cond2_holds=" << rep.cond2_holds() << " simplified_lhs1=" << fmt(rep.simplified_lhs1)
        << " simplified1_holds=" << rep.simplified1_holds() << " simplified_lhs2=" << fmt(rep.simplified_lhs2)
        << " simplified_rhs2=" << fmt(1.0 / rep.alpha) << " simplified2_holds=" << rep.simplified2_holds()
        << " subopt_m=" << fmt(rep.subopt_m_used) << " subopt_n=" << fmt(subopt_n)
        << " step_subopt_rhs=" << fmt(rep.step_subopt_rhs) << " step_subopt_holds=" << l2 << " lambda_n=" << fmt(lambda_n)
        << " step_decrement_rhs=" << fmt(rep.step_decrement_rhs) << " step_decrement_holds=" << l3
        << " sandwich_lo=" << fmt(rep.sandwich_lo) << " sandwich_hi=" << fmt(rep.sandwich_hi)
        << " sandwich_holds=" << sw << " xstar_norm_used=" << fmt(rep.xstar_norm_used) << '\n';
  }

  const bool converged = accuracy_check(RiskView(data, data.size(), risk), result.x).pass;
  const bool conditions_met = cond1 == records && cond2 == records && simple1 == records && simple2 == records;
  out << "summary records=" << records << " quadratic_region=" << quadratic << " cond1=" << cond1
      << " cond2=" << cond2 << " simplified1=" << simple1 << " simplified2=" << simple2 << " step_subopt=" << step_subopt
      << " step_decrement=" << step_decrement << " sandwich=" << sandwich << " converged=" << (converged ? "yes" : "no")
      << " conditions_met=" << (conditions_met ? "yes" : "no");
  if (converged && !conditions_met)
    out << " note=sufficient_conditions_violated_but_run_reached_statistical_accuracy";
  out << '\n';
  return kSuccess;
}

int cmd_oracle(const CommonOptions& o, std::size_t n, double tol, const std::string& out_path, std::ostream& out,
               std::ostream& err) {
  const Dataset data = load_data(o);
  const std::size_t prefix = n == 0 ? data.size() : n;
  if (prefix > data.size()) {
    err << "error: --n " << prefix << " exceeds the dataset size " << data.size() << '\n';
    return kUsageError;
  }
  const RiskView view(data, prefix, risk_config(o));
  const OracleResult res = newton_oracle(view, tol);

  auto emit = [&](std::ostream& s) {
    for (Index i = 0; i < res.x.size(); ++i) s << fmt17(res.x[i]) << '\n';
    s << "# grad_norm=" << fmt17(res.grad_norm) << '\n';
  };
  if (out_path.empty()) {
    emit(out);
  } else {
    auto f = open_output(out_path);
    emit(f);
  }
  err << "iterations=" << res.iterations << " grad_norm=" << res.grad_norm << '\n';
  return kSuccess;
}

// Adds `--key value` for every config-file key the command line leaves unset.
std::vector<std::string> apply_config(const std::vector<std::string>& args, CLI::App& app) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty() || args.size() < 2) return args;

  CLI::App* sub = nullptr;
  for (auto* s : app.get_subcommands({})) {
    if (s->get_name() == args[1]) sub = s;
  }
  if (!sub) return args;

  std::vector<std::string> out = args;
  for (const auto& [key, value] : read_config_file(config_path)) {
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given) continue;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (!opt) throw ValidationError("config file: unknown key '" + key + "' for command " + args[1]);
    if (opt->get_expected_max() == 0) {
      if (value == "true" || value == "1" || value == "yes") out.push_back(flag);
    } else {
      out.push_back(flag);
      out.push_back(value);
    }
  }
  return out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "config line is not 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "config line has an empty key");
    out.emplace_back(key, value);
  }
  return out;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace, const std::string& solver,
                     bool header) {
  if (header) out << (solver.empty() ? "" : "solver,") << kTraceHeader << '\n';
  for (const auto& r : trace) {
    if (!solver.empty()) out << solver << ',';
    out << r.stage << ',' << r.attempt << ',' << r.n << ',' << r.samples_cum << ',' << r.grad_evals_cum << ','
        << r.wall_ms << ',' << fmt(r.grad_norm) << ',' << r.k << ',' << fmt(r.epsilon) << ',' << fmt(r.alpha_used)
        << ',' << fmt(r.rho_used) << ',' << (r.subopt ? fmt(*r.subopt) : std::string()) << '\n';
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Truncated adaptive Newton solver for regularized logistic ERM"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOptions common;
  std::string config_path;

  auto* solve = app.add_subcommand("solve", "run the adaptive sample size solver and write its trace");
  add_data_options(solve, common);
  add_solver_options(solve, common);
  std::string out_path;
  bool with_oracle = false;
  solve->add_option("--out", out_path, "trace CSV path (stdout when omitted)");
  solve->add_flag("--with-oracle", with_oracle, "fill the subopt column with per-stage oracle solves");
  solve->add_option("--config", config_path, "key = value defaults file");

  auto* compare = app.add_subcommand("compare", "run several solvers on the same problem");
  add_data_options(compare, common);
  add_solver_options(compare, common);
  CompareOptions cmp;
  compare->add_option("--solvers", cmp.solvers, "comma-separated: ktan,adanewton,sgd,saga,gd");
  compare->add_option("--budget-grads", cmp.budget_grads, "per-sample gradient budget");
  compare->add_option("--budget-ms", cmp.budget_ms, "wall time budget in milliseconds");
  compare->add_option("--sgd-step", cmp.sgd_step, "SGD step size");
  compare->add_option("--saga-step", cmp.saga_step, "SAGA step size");
  compare->add_option("--out-dir", cmp.out_dir, "directory for the per-solver and merged CSVs");
  compare->add_flag("--parallel", cmp.parallel, "run solvers in worker threads");
  compare->add_option("--config", config_path, "key = value defaults file");

  auto* check = app.add_subcommand("check", "evaluate the convergence bounds stage by stage");
  add_data_options(check, common);
  add_solver_options(check, common);
  CheckOptions chk;
  check->add_option("--at-stage", chk.at_stage, "report a single stage");
  check->add_flag("--all-stages", chk.all_stages, "report every stage (default)");
  check->add_option("--xstar-plugin", chk.xstar_plugin, "norm used for ||x*||: current iterate or full oracle")
      ->check(CLI::IsMember({"current", "oracle"}));
  check->add_option("--xstar-norm", chk.xstar_norm, "explicit value for ||x*||");
  check->add_option("--config", config_path, "key = value defaults file");

  auto* oracle = app.add_subcommand("oracle", "solve R_n to high precision and print the minimizer");
  add_data_options(oracle, common);
  std::size_t oracle_n = 0;
  double oracle_tol = 1e-12;
  std::string oracle_out;
  oracle->add_option("--n", oracle_n, "prefix size (default: all samples)");
  oracle->add_option("--tol", oracle_tol, "gradient norm tolerance")->check(CLI::PositiveNumber);
  oracle->add_option("--out", oracle_out, "output path (stdout when omitted)");
  oracle->add_option("--config", config_path, "key = value defaults file");

  try {
    std::vector<std::string> full = apply_config(args, app);
    std::vector<char*> argv;
    for (auto& a : full) argv.push_back(a.data());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front();
    err << (sub ? sub->help() : app.help());
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (solve->parsed()) return cmd_solve(common, out_path, with_oracle, args, out, err);
    if (compare->parsed()) return cmd_compare(common, cmp, args, out, err);
    if (check->parsed()) return cmd_check(common, chk, out);
    if (oracle->parsed()) return cmd_oracle(common, oracle_n, oracle_tol, oracle_out, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace ktan::cli
