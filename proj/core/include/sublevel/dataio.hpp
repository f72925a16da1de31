#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sublevel/optimizers.hpp"

namespace sublevel {

enum class LabelConvention { Raw, PlusMinusOne, UnitInterval };

struct LibsvmOptions {
  int n_override = 0;
  LabelConvention labels = LabelConvention::Raw;
};

struct Dataset {
  Mat A;
  Vec b;
  std::string name;
  std::string source;
  std::string label_map = "raw";
  bool standardized = false;
};

Dataset parse_libsvm(std::istream& in, const LibsvmOptions& opts, const std::string& name = "");
Dataset load_libsvm(const std::string& path, const LibsvmOptions& opts = {});
void write_libsvm(const Dataset& ds, std::ostream& out);
void write_libsvm(const Dataset& ds, const std::string& path);

// Per-column mean 0 and variance 1; constant columns become zero.
Dataset standardize(const Dataset& ds);

struct RunSummary {
  double final_f = 0.0;
  double final_grad_norm = 0.0;
  int iterations = 0;
  double total_seconds = 0.0;
};

RunSummary summarize(const IterationTrace& trace);

struct RunArtifact {
  std::string method;
  nlohmann::json config = nlohmann::json::object();
  IterationTrace trace;
  RunSummary summary;
  std::optional<double> f_star;
};

inline constexpr const char* kSchema = "sublevel/1";
inline constexpr const char* kCsvHeader = "k,f,grad_norm,decrement,step,sigma_floor,elapsed_s";

std::string format_double(double v);

std::string trace_csv(const RunArtifact& artifact);
void write_trace_csv(const RunArtifact& artifact, const std::string& path);

nlohmann::json to_json(const RunArtifact& artifact);
RunArtifact artifact_from_json(const nlohmann::json& j);
void write_summary_json(const RunArtifact& artifact, const std::string& path);
RunArtifact read_summary_json(const std::string& path);

struct PlotAxes {
  enum class X { Iterations, Seconds } x = X::Iterations;
  enum class Y { FGap, GradNorm } y = Y::GradNorm;
  bool log_y = true;
};

struct SvgOutput {
  std::string svg;
  bool clamped = false;
};

SvgOutput convergence_svg(const std::vector<RunArtifact>& artifacts, const PlotAxes& axes);
void emit_convergence_svg(const std::vector<RunArtifact>& artifacts, const PlotAxes& axes,
                          const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace sublevel
