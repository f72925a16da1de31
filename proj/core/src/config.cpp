#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sublevel/error.hpp"
#include "sublevel/experiment.hpp"

namespace sublevel {

namespace pt = boost::property_tree;

namespace {

[[noreturn]] void config_error(const std::string& where, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, where + ": " + msg);
}

std::string field(const std::string& section, const std::string& key) {
  return "[" + section + "] " + key;
}

long long parse_integer(const std::string& where, const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    config_error(where, "expected an integer, got '" + v + "'");
  return out;
}

int parse_int(const std::string& where, const std::string& v) {
  const long long x = parse_integer(where, v);
  if (x < INT32_MIN || x > INT32_MAX) config_error(where, "integer out of range");
  return static_cast<int>(x);
}

std::uint64_t parse_seed(const std::string& where, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    config_error(where, "expected a non-negative integer seed, got '" + v + "'");
  return out;
}

double parse_real(const std::string& where, const std::string& v) {
  double out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
    config_error(where, "expected a finite number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& where, const std::string& v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  config_error(where, "expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(v);
  while (std::getline(is, cur, ',')) {
    const auto a = cur.find_first_not_of(" \t");
    const auto b = cur.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(cur.substr(a, b - a + 1));
  }
  return out;
}

void check_keys(const std::string& section, const pt::ptree& body,
                const std::set<std::string>& allowed) {
  for (const auto& [key, child] : body) {
    if (!child.empty()) config_error(field(section, key), "nested keys are not supported");
    if (!allowed.count(key)) config_error(field(section, key), "unknown field");
  }
}

DimensionExpr parse_dim(const std::string& where, const std::string& v, char base) {
  try {
    DimensionExpr d = parse_dimension(v);
    if (d.relative && d.base != base)
      config_error(where, std::string("relative sizes here must use '") + base + "'");
    return d;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(where, e.what());
  }
}

void parse_method(const std::string& section, const pt::ptree& body, MethodEntry& m) {
  check_keys(section, body,
             {"type", "N", "p", "rows", "mode", "nu", "epsilon", "grad_tol", "seed", "momentum",
              "lr", "beta1", "beta2", "adam_eps", "m0", "subspace", "step_rule", "eig",
              "oversample", "power_iters", "alpha", "beta", "t_init", "max_backtracks",
              "max_iters"});
  if (!body.count("type")) config_error(field(section, "type"), "missing");
  for (const auto& [key, child] : body) {
    const std::string v = child.data();
    const std::string w = field(section, key);
    MethodConfig& c = m.cfg;
    if (key == "type") {
      try {
        c.kind = method_kind_from_string(v);
      } catch (const Error&) {
        config_error(w, "unknown method '" + v + "'");
      }
    } else if (key == "N") m.N = parse_dim(w, v, 'n');
    else if (key == "p") m.p = parse_dim(w, v, 'n');
    else if (key == "rows") m.rows = parse_dim(w, v, 'm');
    else if (key == "mode") {
      if (v == "convex") c.mode = SpectrumMode::Convex;
      else if (v == "nonconvex") c.mode = SpectrumMode::NonConvexTruncated;
      else config_error(w, "expected convex or nonconvex");
    } else if (key == "nu") c.nu = parse_real(w, v);
    else if (key == "epsilon") c.eps_exit = parse_real(w, v);
    else if (key == "grad_tol") c.grad_tol = parse_real(w, v);
    else if (key == "seed") {
      c.seed = parse_seed(w, v);
      m.explicit_seed = true;
    } else if (key == "momentum") c.momentum = parse_real(w, v);
    else if (key == "lr") c.adam_lr = parse_real(w, v);
    else if (key == "beta1") c.adam_beta1 = parse_real(w, v);
    else if (key == "beta2") c.adam_beta2 = parse_real(w, v);
    else if (key == "adam_eps") c.adam_eps = parse_real(w, v);
    else if (key == "m0") c.cubic_M0 = parse_real(w, v);
    else if (key == "subspace") {
      if (v == "resample") c.fixed_subspace = false;
      else if (v == "fixed") c.fixed_subspace = true;
      else config_error(w, "expected resample or fixed");
    } else if (key == "step_rule") {
      if (v == "armijo") c.step_rule = StepRule::Armijo;
      else if (v == "theoretical") c.step_rule = StepRule::Theoretical;
      else config_error(w, "expected armijo or theoretical");
    } else if (key == "eig") {
      if (v == "randomized") c.eig_backend = EigBackend::Randomized;
      else if (v == "dense") c.eig_backend = EigBackend::Dense;
      else config_error(w, "expected randomized or dense");
    } else if (key == "oversample") c.oversample = parse_int(w, v);
    else if (key == "power_iters") c.power_iters = parse_int(w, v);
    else if (key == "alpha") c.line_search.alpha = parse_real(w, v);
    else if (key == "beta") c.line_search.beta = parse_real(w, v);
    else if (key == "t_init") c.line_search.t_init = parse_real(w, v);
    else if (key == "max_backtracks") c.line_search.max_backtracks = parse_int(w, v);
    else if (key == "max_iters") {
      c.max_iters = parse_int(w, v);
      m.explicit_max_iters = true;
    }
  }
  const MethodKind k = m.cfg.kind;
  const bool needs_N = k == MethodKind::LowRankNewton || k == MethodKind::Sigma ||
                       k == MethodKind::SigmaSVD;
  const bool needs_p = k == MethodKind::SigmaSVD || k == MethodKind::NewSamp;
  if (needs_N && !m.N) config_error(field(section, "N"), "required for " + std::string(to_string(k)));
  if (needs_p && !m.p) config_error(field(section, "p"), "required for " + std::string(to_string(k)));
  if (k == MethodKind::NewSamp && !m.rows)
    config_error(field(section, "rows"), "required for newsamp");
}

}  // namespace

DimensionExpr parse_dimension(const std::string& text) {
  DimensionExpr d;
  d.text = text;
  auto bad = [&] { throw Error(ErrorCode::ConfigError, "invalid size expression '" + text + "'"); };
  if (text.empty()) bad();
  const char last = text.back();
  const std::size_t minus = text.find('-');
  if ((text[0] == 'n' || text[0] == 'm') && (text.size() == 1 || minus == 1)) {
    d.relative = true;
    d.base = text[0];
    d.numerator = d.denominator = 1;
    if (text.size() > 1) {
      const std::string rest = text.substr(2);
      long long off = 0;
      const auto res = std::from_chars(rest.data(), rest.data() + rest.size(), off);
      if (rest.empty() || res.ec != std::errc() || res.ptr != rest.data() + rest.size() || off < 0) bad();
      d.offset = -off;
    }
    return d;
  }
  if (last == 'n' || last == 'm') {
    d.relative = true;
    d.base = last;
    const std::string num = text.substr(0, text.size() - 1);
    long long whole = 0, frac = 0, den = 1;
    const std::size_t dot = num.find('.');
    const std::string a = num.substr(0, dot);
    const std::string b = dot == std::string::npos ? "" : num.substr(dot + 1);
    if (a.empty() && b.empty()) bad();
    for (char c : a) {
      if (c < '0' || c > '9') bad();
      whole = whole * 10 + (c - '0');
    }
    if (b.size() > 12) bad();
    for (char c : b) {
      if (c < '0' || c > '9') bad();
      frac = frac * 10 + (c - '0');
      den *= 10;
    }
    d.numerator = whole * den + frac;
    d.denominator = den;
    return d;
  }
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || v < 0) bad();
  d.offset = v;
  return d;
}

int DimensionExpr::resolve(int size) const {
  if (!relative) return static_cast<int>(offset);
  // round(size * num / den) with ties up, in exact integer arithmetic
  const long long twice = 2 * static_cast<long long>(size) * numerator + denominator;
  return static_cast<int>(twice / (2 * denominator) + offset);
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::ConfigError,
                "line " + std::to_string(e.line()) + ": " + e.message());
  }
  ExperimentConfig cfg;
  cfg.source_text = text;
  std::set<std::string> seen_methods;
  for (const auto& [section, body] : tree) {
    if (body.empty()) config_error(section, "key outside of any section");
    if (section == "experiment") {
      check_keys(section, body, {"seed", "name"});
      for (const auto& [key, child] : body) {
        if (key == "seed") cfg.seed = parse_seed(field(section, key), child.data());
        if (key == "name") cfg.name = child.data();
      }
    } else if (section == "problem") {
      check_keys(section, body,
                 {"kind", "data", "path", "distribution", "m", "n", "seed", "l2", "standardize",
                  "b_low", "b_high", "key_coordinates", "dense_cap"});
      ProblemConfig& p = cfg.problem;
      for (const auto& [key, child] : body) {
        const std::string v = child.data();
        const std::string w = field(section, key);
        if (key == "kind") {
          if (v == "quadratic") config_error(w, "quadratic problems are not available from configs");
          try {
            p.kind = problem_kind_from_string(v);
          } catch (const Error&) {
            config_error(w, "unknown problem kind '" + v + "'");
          }
        } else if (key == "data") {
          if (v != "synthetic" && v != "libsvm") config_error(w, "expected synthetic or libsvm");
          p.data = v;
        } else if (key == "path") p.path = v;
        else if (key == "distribution") {
          try {
            p.distribution = distribution_from_string(v);
          } catch (const Error&) {
            config_error(w, "unknown distribution '" + v + "'");
          }
        } else if (key == "m") p.m = parse_int(w, v);
        else if (key == "n") p.n = parse_int(w, v);
        else if (key == "seed") p.seed = parse_seed(w, v);
        else if (key == "l2") p.l2 = parse_real(w, v);
        else if (key == "standardize") p.standardize = parse_bool(w, v);
        else if (key == "b_low") p.b_low = parse_real(w, v);
        else if (key == "b_high") p.b_high = parse_real(w, v);
        else if (key == "key_coordinates") p.key_coordinates = parse_int(w, v);
        else if (key == "dense_cap") p.dense_cap = static_cast<std::size_t>(parse_int(w, v));
      }
      if (p.data == "libsvm" && p.path.empty()) config_error(field(section, "path"), "required for libsvm data");
      if (p.data == "synthetic" && (p.m < 1 || p.n < 1)) config_error(field(section, "m"), "m and n must be positive");
      if (p.l2 < 0) config_error(field(section, "l2"), "must be non-negative");
    } else if (section == "start") {
      check_keys(section, body, {"policy", "seed"});
      for (const auto& [key, child] : body) {
        const std::string w = field(section, key);
        if (key == "policy") {
          if (child.data() == "zero") cfg.start.policy = StartPolicy::Zero;
          else if (child.data() == "gaussian") cfg.start.policy = StartPolicy::Gaussian;
          else config_error(w, "expected zero or gaussian");
        } else if (key == "seed") cfg.start.seed = parse_seed(w, child.data());
      }
    } else if (section == "budget") {
      check_keys(section, body, {"max_iters", "max_seconds"});
      for (const auto& [key, child] : body) {
        const std::string w = field(section, key);
        if (key == "max_iters") cfg.budget.max_iters = parse_int(w, child.data());
        if (key == "max_seconds") cfg.budget.max_seconds = parse_real(w, child.data());
      }
      if (cfg.budget.max_iters < 0) config_error(field(section, "max_iters"), "must be >= 0");
      if (cfg.budget.max_seconds < 0) config_error(field(section, "max_seconds"), "must be >= 0");
    } else if (section == "output") {
      check_keys(section, body, {"dir", "plot_x", "plot_y", "log_y", "timing"});
      for (const auto& [key, child] : body) {
        const std::string v = child.data();
        const std::string w = field(section, key);
        if (key == "dir") cfg.output.dir = v;
        else if (key == "plot_x") {
          if (v == "iterations") cfg.output.axes.x = PlotAxes::X::Iterations;
          else if (v == "seconds") cfg.output.axes.x = PlotAxes::X::Seconds;
          else config_error(w, "expected iterations or seconds");
        } else if (key == "plot_y") {
          if (v == "f_gap") cfg.output.axes.y = PlotAxes::Y::FGap;
          else if (v == "grad_norm") cfg.output.axes.y = PlotAxes::Y::GradNorm;
          else config_error(w, "expected f_gap or grad_norm");
        } else if (key == "log_y") cfg.output.axes.log_y = parse_bool(w, v);
        else if (key == "timing") {
          if (v == "wall") cfg.output.timing = true;
          else if (v == "off") cfg.output.timing = false;
          else config_error(w, "expected wall or off");
        }
      }
    } else if (section.rfind("method.", 0) == 0) {
      MethodEntry m;
      m.name = section.substr(7);
      if (m.name.empty()) config_error(section, "method name is empty");
      for (char c : m.name)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
          config_error(section, "method names may use letters, digits, '_' and '-'");
      m.cfg.name = m.name;
      parse_method(section, body, m);
      cfg.methods.push_back(std::move(m));
    } else if (section == "escape") {
      check_keys(section, body,
                 {"trials", "sweep", "values", "method", "baselines", "max_iters", "threshold",
                  "reference_iters"});
      EscapeConfig& e = cfg.escape;
      e.present = true;
      for (const auto& [key, child] : body) {
        const std::string v = child.data();
        const std::string w = field(section, key);
        if (key == "trials") e.trials = parse_int(w, v);
        else if (key == "sweep") {
          if (v != "N" && v != "p") config_error(w, "expected N or p");
          e.sweep = v;
        } else if (key == "values") {
          for (const std::string& item : split_list(v)) e.values.push_back(parse_dim(w, item, 'n'));
        } else if (key == "method") e.method = v;
        else if (key == "baselines") e.baselines = split_list(v);
        else if (key == "max_iters") e.max_iters = parse_int(w, v);
        else if (key == "threshold") {
          if (v != "auto") e.threshold = parse_real(w, v);
        } else if (key == "reference_iters") e.reference_iters = parse_int(w, v);
      }
      if (e.trials < 1) config_error(field(section, "trials"), "must be >= 1");
      if (e.values.empty()) config_error(field(section, "values"), "sweep needs at least one value");
      if (e.method.empty()) config_error(field(section, "method"), "required");
      if (e.max_iters < 0) config_error(field(section, "max_iters"), "must be >= 0");
    } else {
      config_error("[" + section + "]", "unknown section");
    }
  }
  std::set<std::string> names;
  for (const MethodEntry& m : cfg.methods)
    if (!names.insert(m.name).second) config_error("[method." + m.name + "]", "duplicate method");
  if (cfg.escape.present) {
    if (!names.count(cfg.escape.method))
      config_error(field("escape", "method"), "no method named '" + cfg.escape.method + "'");
    for (const std::string& b : cfg.escape.baselines)
      if (!names.count(b)) config_error(field("escape", "baselines"), "no method named '" + b + "'");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return parse_config(text);
}

}  // namespace sublevel
