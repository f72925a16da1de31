#include <cstdlib>
#include <filesystem>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "sublevel/diagnostics.hpp"
#include "sublevel/error.hpp"
#include "sublevel/experiment.hpp"
#include "sublevel/rng.hpp"

namespace sublevel {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t problem_seed(const ExperimentConfig& cfg) {
  return cfg.problem.seed ? *cfg.problem.seed : splitmix64(cfg.seed ^ 0x1);
}

std::uint64_t start_seed(const ExperimentConfig& cfg) {
  return cfg.start.seed ? *cfg.start.seed : splitmix64(cfg.seed ^ 0x2);
}

LabelConvention labels_for(ProblemKind k) {
  switch (k) {
    case ProblemKind::Logistic:
    case ProblemKind::SvmHinge2:
      return LabelConvention::PlusMinusOne;
    case ProblemKind::NonlinearLeastSquares:
      return LabelConvention::UnitInterval;
    default:
      return LabelConvention::Raw;
  }
}

const char* mode_name(SpectrumMode m) {
  return m == SpectrumMode::Convex ? "convex" : "nonconvex";
}

json method_json(const MethodConfig& c) {
  return json{{"type", to_string(c.kind)},
              {"name", c.name},
              {"N", c.N},
              {"p", c.p},
              {"rows", c.sample_rows},
              {"mode", mode_name(c.mode)},
              {"nu", c.nu},
              {"epsilon", c.eps_exit},
              {"grad_tol", c.grad_tol},
              {"max_iters", c.max_iters},
              {"max_seconds", std::isinf(c.max_seconds) ? json(nullptr) : json(c.max_seconds)},
              {"seed", c.seed},
              {"momentum", c.momentum},
              {"lr", c.adam_lr},
              {"beta1", c.adam_beta1},
              {"beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"m0", c.cubic_M0},
              {"subspace", c.fixed_subspace ? "fixed" : "resample"},
              {"step_rule", c.step_rule == StepRule::Armijo ? "armijo" : "theoretical"},
              {"eig", c.eig_backend == EigBackend::Dense ? "dense" : "randomized"},
              {"oversample", c.oversample},
              {"power_iters", c.power_iters},
              {"alpha", c.line_search.alpha},
              {"beta", c.line_search.beta},
              {"t_init", c.line_search.t_init},
              {"max_backtracks", c.line_search.max_backtracks}};
}

json problem_json(const ExperimentConfig& cfg, const ProblemInstance& inst) {
  const ProblemConfig& p = cfg.problem;
  json j{{"kind", to_string(p.kind)}, {"data", p.data}, {"l2", p.l2},
         {"n", inst.objective->dim()}, {"description", inst.description}};
  if (p.data == "synthetic") {
    j["distribution"] = to_string(p.distribution);
    j["m"] = p.m;
    j["seed"] = problem_seed(cfg);
  } else {
    j["path"] = p.path;
  }
  j["standardize"] = p.standardize.value_or(p.data != "synthetic");
  j["start"] = cfg.start.policy == StartPolicy::Zero ? json("zero") : json("gaussian");
  if (cfg.start.policy == StartPolicy::Gaussian) j["start_seed"] = start_seed(cfg);
  return j;
}

fs::path output_dir(const ExperimentConfig& cfg, const CommandOptions& opts) {
  if (opts.out_dir) return *opts.out_dir;
  if (!cfg.output.dir.empty()) return cfg.output.dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "sublevel-out";
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, dir.string() + ": " + ec.message());
}

struct Prepared {
  ExperimentConfig cfg;
  ProblemInstance inst;
  std::vector<MethodConfig> methods;
  fs::path dir;
};

// Returns an exit code other than kExitOk when preparation failed.
int prepare(const CommandOptions& opts, std::ostream& err, Prepared& out) {
  try {
    out.cfg = load_config(opts.config_path);
    if (opts.seed) out.cfg.seed = *opts.seed;
    if (out.cfg.methods.empty())
      throw Error(ErrorCode::ConfigError, "config defines no [method.*] sections");
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  try {
    out.inst = build_problem(out.cfg);
  } catch (const Error& e) {
    err << "problem setup failed: " << e.what() << "\n";
    return e.code() == ErrorCode::ConfigError ? kExitConfigError : kExitRuntimeError;
  }
  try {
    const int n = out.inst.objective->dim();
    for (std::size_t i = 0; i < out.cfg.methods.size(); ++i)
      out.methods.push_back(resolve_method(out.cfg, out.cfg.methods[i], n, i));
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  out.dir = output_dir(out.cfg, opts);
  return kExitOk;
}

}  // namespace

ProblemInstance build_problem(const ExperimentConfig& cfg) {
  const ProblemConfig& p = cfg.problem;
  Dataset ds;
  std::string desc;
  if (p.data == "synthetic") {
    SyntheticSpec s;
    s.m = p.m;
    s.n = p.n;
    s.distribution = p.distribution;
    s.seed = problem_seed(cfg);
    s.labels_for = p.kind;
    s.b_low = p.b_low;
    s.b_high = p.b_high;
    s.key_coordinates = p.key_coordinates;
    SyntheticData data = generate_synthetic(s);
    ds.A = std::move(data.A);
    ds.b = std::move(data.b);
    ds.source = "synthetic";
    desc = fmt::format("{} on synthetic {} data, m={}, n={}", to_string(p.kind),
                       to_string(p.distribution), p.m, p.n);
  } else {
    LibsvmOptions lo;
    lo.labels = labels_for(p.kind);
    ds = load_libsvm(p.path, lo);
    desc = fmt::format("{} on {}, m={}, n={}", to_string(p.kind), p.path, ds.A.rows(), ds.A.cols());
  }
  if (p.standardize.value_or(p.data != "synthetic")) ds = standardize(ds);

  ProblemInstance inst;
  inst.objective = std::make_unique<GlmObjective>(p.kind, std::move(ds.A), std::move(ds.b), p.l2);
  inst.objective->dense_cap = p.dense_cap;
  inst.description = desc;
  const int n = inst.objective->dim();
  inst.x0 = Vec::Zero(n);
  if (cfg.start.policy == StartPolicy::Gaussian) {
    std::mt19937_64 gen(start_seed(cfg));
    std::normal_distribution<double> normal;
    for (int j = 0; j < n; ++j) inst.x0(j) = normal(gen);
  }
  return inst;
}

MethodConfig resolve_method(const ExperimentConfig& cfg, const MethodEntry& entry, int n,
                            std::size_t index) {
  MethodConfig c = entry.cfg;
  c.name = entry.name;
  const std::string where = "[method." + entry.name + "]";
  if (entry.N) c.N = entry.N->resolve(n);
  if (entry.p) c.p = entry.p->resolve(n);
  if (entry.rows) {
    const int m = cfg.problem.data == "synthetic" ? cfg.problem.m : 0;
    if (entry.rows->relative && m == 0)
      throw Error(ErrorCode::ConfigError, where + " rows: relative row counts need synthetic data");
    c.sample_rows = entry.rows->resolve(m);
  }
  if (!entry.explicit_max_iters) c.max_iters = cfg.budget.max_iters;
  c.max_seconds = cfg.budget.max_seconds > 0 ? cfg.budget.max_seconds
                                             : std::numeric_limits<double>::infinity();
  if (!entry.explicit_seed) c.seed = splitmix64(cfg.seed ^ (0x100 + index));
  c.record_time = cfg.output.timing;
  try {
    c.validate(n);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, where + " " + e.what());
  }
  return c;
}

int cmd_run(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Prepared prep;
  if (int rc = prepare(opts, err, prep); rc != kExitOk) return rc;
  const Objective& obj = *prep.inst.objective;
  std::vector<RunArtifact> artifacts;
  json listing = json::array();
  try {
    make_dir(prep.dir);
    write_text_file((prep.dir / "config.ini").string(), prep.cfg.source_text);
    const json problem = problem_json(prep.cfg, prep.inst);
    for (const MethodConfig& mc : prep.methods) {
      RunArtifact a;
      a.method = mc.name;
      a.config = json{{"master_seed", prep.cfg.seed}, {"problem", problem},
                      {"method", method_json(mc)}};
      a.trace = run(obj, prep.inst.x0, mc);
      a.summary = summarize(a.trace);
      write_trace_csv(a, (prep.dir / (mc.name + ".csv")).string());
      write_summary_json(a, (prep.dir / (mc.name + ".json")).string());
      if (opts.json) {
        listing.push_back(json{{"method", mc.name},
                               {"status", to_string(a.trace.status)},
                               {"iterations", a.summary.iterations},
                               {"final_f", a.summary.final_f},
                               {"final_grad_norm", a.summary.final_grad_norm}});
      } else {
        out << fmt::format("{:<16} {:<16} iters={:<5} f={:.10e} |g|={:.3e}", mc.name,
                           to_string(a.trace.status), a.summary.iterations, a.summary.final_f,
                           a.summary.final_grad_norm)
            << (a.trace.message.empty() ? "" : "  (" + a.trace.message + ")") << "\n";
      }
      artifacts.push_back(std::move(a));
    }

    if (prep.cfg.output.axes.y == PlotAxes::Y::FGap) {
      // f* from an exact Newton reference where the Hessian is usable, otherwise the best value seen
      double f_star = std::numeric_limits<double>::infinity();
      for (const RunArtifact& a : artifacts)
        for (const IterationRecord& r : a.trace.records) f_star = std::min(f_star, r.f);
      const bool convex = obj.kind() != ProblemKind::NonlinearLeastSquares;
      if (convex && static_cast<std::size_t>(obj.dim()) <= obj.dense_cap) {
        try {
          f_star = std::min(f_star, reference_minimum(obj, prep.inst.x0).f_star);
        } catch (const Error&) {
        }
      }
      for (RunArtifact& a : artifacts) a.f_star = f_star;
    }
    const bool any_rows = std::any_of(artifacts.begin(), artifacts.end(),
                                      [](const RunArtifact& a) { return !a.trace.records.empty(); });
    if (any_rows) {
      emit_convergence_svg(artifacts, prep.cfg.output.axes, (prep.dir / "convergence.svg").string());
      for (const RunArtifact& a : artifacts)
        if (a.f_star) write_summary_json(a, (prep.dir / (a.method + ".json")).string());
    }
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  if (opts.json) out << json{{"output", prep.dir.string()}, {"runs", listing}}.dump(2) << "\n";
  return kExitOk;
}

int cmd_escape(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Prepared prep;
  if (int rc = prepare(opts, err, prep); rc != kExitOk) return rc;
  const EscapeConfig& esc = prep.cfg.escape;
  if (!esc.present) {
    err << "config error: [escape] section is required for the escape command\n";
    return kExitConfigError;
  }
  const Objective& obj = *prep.inst.objective;
  const int n = obj.dim();
  auto find = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < prep.cfg.methods.size(); ++i)
      if (prep.cfg.methods[i].name == name) return i;
    return prep.cfg.methods.size();
  };

  // sweep variants are resolved before any computation so bad values exit early
  const std::size_t mi = find(esc.method);
  std::vector<MethodConfig> sweep;
  try {
    for (const DimensionExpr& v : esc.values) {
      MethodEntry e = prep.cfg.methods[mi];
      (esc.sweep == "N" ? e.N : e.p) = v;
      MethodConfig c = resolve_method(prep.cfg, e, n, mi);
      if (!e.explicit_max_iters) c.max_iters = esc.max_iters;
      sweep.push_back(c);
    }
  } catch (const Error& e) {
    err << "config error: [escape] values: " << e.what() << "\n";
    return kExitConfigError;
  }
  std::vector<MethodConfig> baselines;
  for (const std::string& b : esc.baselines) {
    MethodConfig c = prep.methods[find(b)];
    if (!prep.cfg.methods[find(b)].explicit_max_iters) c.max_iters = esc.max_iters;
    baselines.push_back(c);
  }

  try {
    make_dir(prep.dir);
    write_text_file((prep.dir / "config.ini").string(), prep.cfg.source_text);
    const double f0 = obj.value(prep.inst.x0);
    double f_ref = kNaN;
    double threshold = 0.0;
    if (esc.threshold) {
      threshold = *esc.threshold;
    } else {
      const ReferenceResult ref =
          reference_minimum(obj, prep.inst.x0, MethodKind::CubicNewton, esc.reference_iters, 1e-12);
      f_ref = ref.f_star;
      threshold = escape_threshold(f0, f_ref);
    }
    const std::uint64_t master = splitmix64(prep.cfg.seed ^ 0xE5CA9E);

    std::ostringstream csv;
    csv << "method,sweep_value,N,p,trials,successes,probability\n";
    json rows = json::array();
    auto emit = [&](const MethodConfig& c, const std::string& label, const EscapeOutcome& o) {
      csv << c.name << "," << label << "," << c.N << "," << c.p << "," << o.trials << ","
          << o.successes << "," << format_double(o.probability) << "\n";
      rows.push_back(json{{"method", c.name}, {"sweep_value", label}, {"N", c.N}, {"p", c.p},
                          {"trials", o.trials}, {"successes", o.successes},
                          {"probability", o.probability}});
      if (!opts.json)
        out << fmt::format("{:<12} {:>8} N={:<5} p={:<5} {:>3}/{:<3} {:6.1f}%\n", c.name, label, c.N,
                           c.p, o.successes, o.trials, 100.0 * o.probability);
    };
    for (std::size_t i = 0; i < sweep.size(); ++i) {
      const EscapeOutcome o = escape_rate(obj, prep.inst.x0, sweep[i], esc.trials, master, threshold,
                                          opts.threads);
      emit(sweep[i], esc.values[i].text, o);
    }
    for (const MethodConfig& c : baselines) {
      const EscapeOutcome o =
          escape_rate(obj, prep.inst.x0, c, esc.trials, master, threshold, opts.threads);
      emit(c, "", o);
    }
    write_text_file((prep.dir / "escape.csv").string(), csv.str());
    json summary{{"schema", kSchema},
                 {"master_seed", prep.cfg.seed},
                 {"problem", problem_json(prep.cfg, prep.inst)},
                 {"sweep", esc.sweep},
                 {"trials", esc.trials},
                 {"f_start", f0},
                 {"f_reference", std::isnan(f_ref) ? json(nullptr) : json(f_ref)},
                 {"threshold", threshold},
                 {"rows", rows}};
    write_text_file((prep.dir / "escape.json").string(), summary.dump(2) + "\n");
    if (opts.json) out << summary.dump(2) << "\n";
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitOk;
}

}  // namespace sublevel
