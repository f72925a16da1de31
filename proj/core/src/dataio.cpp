#include "sublevel/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "sublevel/error.hpp"

namespace sublevel {

namespace {

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size() && std::isfinite(out);
}

bool parse_index(std::string_view tok, long long& out) {
  if (tok.empty() || tok.front() < '0' || tok.front() > '9') return false;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

struct Entry {
  int row;
  int col;
  double value;
};

}  // namespace

Dataset parse_libsvm(std::istream& in, const LibsvmOptions& opts, const std::string& name) {
  std::vector<double> labels;
  std::vector<Entry> entries;
  long long max_index = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    const int row = static_cast<int>(labels.size());
    std::size_t pos = 0;
    bool have_label = false;
    long long last = 0;
    while (pos < line.size()) {
      pos = line.find_first_not_of(" \t", pos);
      if (pos == std::string::npos) break;
      std::size_t end = line.find_first_of(" \t", pos);
      if (end == std::string::npos) end = line.size();
      const std::string_view tok(line.data() + pos, end - pos);
      const std::size_t column = pos + 1;
      if (!have_label) {
        double label;
        if (!parse_double(tok, label)) throw ParseError(lineno, column, "invalid label");
        labels.push_back(label);
        have_label = true;
      } else {
        const std::size_t colon = tok.find(':');
        if (colon == std::string_view::npos)
          throw ParseError(lineno, column, "expected index:value");
        long long idx;
        if (!parse_index(tok.substr(0, colon), idx) || idx < 1)
          throw ParseError(lineno, column, "index must be a positive integer");
        if (idx <= last) throw ParseError(lineno, column, "indices must be strictly increasing");
        if (opts.n_override > 0 && idx > opts.n_override)
          throw ParseError(lineno, column, "index exceeds n_override");
        if (idx > (1LL << 30)) throw ParseError(lineno, column, "index too large");
        double value;
        if (!parse_double(tok.substr(colon + 1), value))
          throw ParseError(lineno, column + colon + 1, "invalid value");
        last = idx;
        max_index = std::max(max_index, idx);
        entries.push_back({row, static_cast<int>(idx - 1), value});
      }
      pos = end;
    }
  }
  if (labels.empty()) throw Error(ErrorCode::EmptyDataset, "no data lines");
  const int n = opts.n_override > 0 ? opts.n_override : static_cast<int>(max_index);
  if (n < 1) throw Error(ErrorCode::EmptyDataset, "no feature indices");

  Dataset ds;
  ds.name = name;
  ds.A = Mat::Zero(static_cast<Eigen::Index>(labels.size()), n);
  for (const Entry& e : entries) ds.A(e.row, e.col) = e.value;
  ds.b = Eigen::Map<const Vec>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  switch (opts.labels) {
    case LabelConvention::Raw: ds.label_map = "raw"; break;
    case LabelConvention::PlusMinusOne:
      ds.label_map = "pm1";
      ds.b = ds.b.unaryExpr([](double v) { return v > 0.0 ? 1.0 : -1.0; });
      break;
    case LabelConvention::UnitInterval:
      ds.label_map = "unit";
      ds.b = ds.b.cwiseMax(0.0).cwiseMin(1.0);
      break;
  }
  return ds;
}

Dataset load_libsvm(const std::string& path, const LibsvmOptions& opts) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  Dataset ds = parse_libsvm(in, opts, path);
  ds.source = "file:" + path;
  return ds;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

void write_libsvm(const Dataset& ds, std::ostream& out) {
  for (Eigen::Index i = 0; i < ds.A.rows(); ++i) {
    out << format_double(ds.b[i]);
    for (Eigen::Index j = 0; j < ds.A.cols(); ++j)
      if (ds.A(i, j) != 0.0) out << ' ' << (j + 1) << ':' << format_double(ds.A(i, j));
    out << '\n';
  }
}

void write_libsvm(const Dataset& ds, const std::string& path) {
  std::ostringstream os;
  write_libsvm(ds, os);
  write_text_file(path, os.str());
}

Dataset standardize(const Dataset& ds) {
  Dataset out = ds;
  const double m = static_cast<double>(ds.A.rows());
  for (Eigen::Index j = 0; j < ds.A.cols(); ++j) {
    const double mean = ds.A.col(j).sum() / m;
    const Vec centered = ds.A.col(j).array() - mean;
    const double sd = std::sqrt(centered.squaredNorm() / m);
    if (sd <= 1e-14 * std::max(1.0, std::abs(mean)))
      out.A.col(j).setZero();
    else
      out.A.col(j) = centered / sd;
  }
  out.standardized = true;
  return out;
}

RunSummary summarize(const IterationTrace& trace) {
  RunSummary s;
  if (trace.records.empty()) {
    s.final_f = kNaN;
    s.final_grad_norm = kNaN;
    return s;
  }
  const IterationRecord& last = trace.records.back();
  s.final_f = last.f;
  s.final_grad_norm = last.grad_norm;
  s.iterations = last.k;
  s.total_seconds = last.elapsed_s;
  return s;
}

std::string trace_csv(const RunArtifact& artifact) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const IterationRecord& r : artifact.trace.records)
    out += fmt::format("{},{},{},{},{},{},{}\n", r.k, format_double(r.f),
                       format_double(r.grad_norm), format_double(r.decrement),
                       format_double(r.step), format_double(r.sigma_floor),
                       format_double(r.elapsed_s));
  return out;
}

void write_trace_csv(const RunArtifact& artifact, const std::string& path) {
  write_text_file(path, trace_csv(artifact));
}

namespace {

nlohmann::json num(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double num_from(const nlohmann::json& j) { return j.is_null() ? kNaN : j.get<double>(); }

}  // namespace

nlohmann::json to_json(const RunArtifact& a) {
  nlohmann::json j;
  j["schema"] = kSchema;
  j["method"] = a.method;
  j["config"] = a.config;
  j["status"] = to_string(a.trace.status);
  j["message"] = a.trace.message;
  j["summary"] = {{"final_f", num(a.summary.final_f)},
                  {"final_grad_norm", num(a.summary.final_grad_norm)},
                  {"iterations", a.summary.iterations},
                  {"total_seconds", num(a.summary.total_seconds)}};
  j["f_star"] = a.f_star ? num(*a.f_star) : nlohmann::json(nullptr);
  nlohmann::json rows = nlohmann::json::array();
  for (const IterationRecord& r : a.trace.records)
    rows.push_back({{"k", r.k},
                    {"f", num(r.f)},
                    {"grad_norm", num(r.grad_norm)},
                    {"decrement", num(r.decrement)},
                    {"step", num(r.step)},
                    {"sigma_floor", num(r.sigma_floor)},
                    {"elapsed_s", num(r.elapsed_s)}});
  j["trace"] = rows;
  return j;
}

RunArtifact artifact_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != kSchema)
      throw Error(ErrorCode::ParseError, "unsupported schema " + j.at("schema").dump());
    RunArtifact a;
    a.method = j.at("method").get<std::string>();
    a.config = j.at("config");
    a.trace.status = run_status_from_string(j.at("status").get<std::string>());
    a.trace.message = j.at("message").get<std::string>();
    const auto& s = j.at("summary");
    a.summary.final_f = num_from(s.at("final_f"));
    a.summary.final_grad_norm = num_from(s.at("final_grad_norm"));
    a.summary.iterations = s.at("iterations").get<int>();
    a.summary.total_seconds = num_from(s.at("total_seconds"));
    if (!j.at("f_star").is_null()) a.f_star = j.at("f_star").get<double>();
    for (const auto& r : j.at("trace")) {
      IterationRecord rec;
      rec.k = r.at("k").get<int>();
      rec.f = num_from(r.at("f"));
      rec.grad_norm = num_from(r.at("grad_norm"));
      rec.decrement = num_from(r.at("decrement"));
      rec.step = num_from(r.at("step"));
      rec.sigma_floor = num_from(r.at("sigma_floor"));
      rec.elapsed_s = num_from(r.at("elapsed_s"));
      a.trace.records.push_back(rec);
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed artifact: ") + e.what());
  }
}

void write_summary_json(const RunArtifact& artifact, const std::string& path) {
  write_text_file(path, to_json(artifact).dump(2) + "\n");
}

RunArtifact read_summary_json(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return artifact_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

SvgOutput convergence_svg(const std::vector<RunArtifact>& artifacts, const PlotAxes& axes) {
  if (artifacts.empty()) throw Error(ErrorCode::Precondition, "no artifacts to plot");
  constexpr double kFloor = 1e-16;
  constexpr double W = 800, H = 500, L = 80, R = 200, T = 30, B = 60;
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  SvgOutput out;
  std::vector<std::vector<std::pair<double, double>>> series;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool first = true;
  for (const RunArtifact& a : artifacts) {
    if (axes.y == PlotAxes::Y::FGap && !a.f_star)
      throw Error(ErrorCode::Precondition, "f_gap axis needs f_star for " + a.method);
    std::vector<std::pair<double, double>> pts;
    for (const IterationRecord& r : a.trace.records) {
      const double xv = axes.x == PlotAxes::X::Iterations ? r.k : r.elapsed_s;
      double yv = axes.y == PlotAxes::Y::FGap ? r.f - *a.f_star : r.grad_norm;
      if (!std::isfinite(yv)) continue;
      if (axes.log_y) {
        if (yv < kFloor) {
          yv = kFloor;
          out.clamped = true;
        }
        yv = std::log10(yv);
      }
      pts.emplace_back(xv, yv);
      if (first) {
        xmin = xmax = xv;
        ymin = ymax = yv;
        first = false;
      }
      xmin = std::min(xmin, xv);
      xmax = std::max(xmax, xv);
      ymin = std::min(ymin, yv);
      ymax = std::max(ymax, yv);
    }
    series.push_back(std::move(pts));
  }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

  std::string s;
  s += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
      W, H, W, H);
  s += fmt::format("<metadata>{{\"schema\":\"{}\",\"log_y\":{},\"clamped\":{},\"clamp_floor\":1e-16}}</metadata>\n",
                   kSchema, axes.log_y ? "true" : "false", out.clamped ? "true" : "false");
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", L, H - B, W - R, H - B);
  s += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", L, T, L, H - B);
  const char* xlabel = axes.x == PlotAxes::X::Iterations ? "iterations" : "seconds";
  std::string ylabel = axes.y == PlotAxes::Y::FGap ? "f - f*" : "||grad f||";
  if (axes.log_y) ylabel = "log10 " + ylabel;
  s += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
                   (L + W - R) / 2, H - 15, xlabel);
  s += fmt::format(
      "<text x=\"20\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 {})\">{}</text>\n",
      (T + H - B) / 2, (T + H - B) / 2, ylabel);
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    s += fmt::format("<text x=\"{:.2f}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{:.3g}</text>\n",
                     px(xv), H - B + 16, xv);
    s += fmt::format("<text x=\"{}\" y=\"{:.2f}\" font-size=\"11\" text-anchor=\"end\">{:.3g}</text>\n",
                     L - 6, py(yv) + 4, yv);
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kColors[i % 10];
    std::string pts;
    for (const auto& [x, y] : series[i]) pts += fmt::format("{:.2f},{:.2f} ", px(x), py(y));
    if (!pts.empty()) pts.pop_back();
    s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                     color, pts);
    const double ly = T + 10 + 18.0 * i;
    s += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                     W - R + 15, ly, W - R + 40, ly, color);
    s += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n", W - R + 45, ly + 4,
                     artifacts[i].method);
  }
  s += "</svg>\n";
  out.svg = std::move(s);
  return out;
}

void emit_convergence_svg(const std::vector<RunArtifact>& artifacts, const PlotAxes& axes,
                          const std::string& path) {
  write_text_file(path, convergence_svg(artifacts, axes).svg);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace sublevel
