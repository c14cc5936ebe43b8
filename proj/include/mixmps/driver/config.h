#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mixmps/evolution.h"
#include "mixmps/parser.h"

/// Declarative simulation configs (JSON). The schema is described in
/// docs/config.md.
namespace mixmps::driver {

/// Schema or DSL problem, with the JSON path of the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class MeasureKind { Expr, Sites, Pair, Trace, Trace2, Purity, Renyi2, EE, Linkdim, TraceError };

struct MeasureItem {
  MeasureKind kind = MeasureKind::Expr;
  std::string label;  // column name
  OpExpr a = OpExpr::named("Id");
  OpExpr b = OpExpr::named("Id");
  int bond = 0;  // EE only
};

/// Column layout of one data file.
enum class Shape { Scalar, Sites, Matrix };

struct MeasureFile {
  std::string filename;
  std::vector<MeasureItem> items;
  bool normalize = false;  // divide expectations by the trace
  Shape shape = Shape::Scalar;
};

struct CreateStatePhase {
  Rep rep = Rep::Mixed;
  System system{std::vector<SiteKind>{SiteKind::qubit()}};
  std::vector<std::string> names;  // product state, one per site
  std::optional<std::vector<std::pair<int, int>>> graph;
};

struct ToMixedPhase {};

struct EvolvePhase {
  double duration = 0.0;
  double time_step = 0.1;
  int order = 4;
  WVariant variant = WVariant::WII;
  std::string evolver_text;
  OpExpr evolver = OpExpr::named("Id");
  TruncationLimits limits;
  std::vector<MeasureFile> measures;
  int measure_period = 1;
};

struct GatesPhase {
  std::string name;
  std::string gates_text;
  OpExpr gates = OpExpr::named("Id");
  TruncationLimits limits;
  std::vector<MeasureFile> final_measures;
  double duration = 0.0;  // clock advance, used as the time column
};

struct PartialTracePhase {
  std::vector<int> keep;
};

using Phase = std::variant<CreateStatePhase, ToMixedPhase, EvolvePhase, GatesPhase, PartialTracePhase>;

struct SimConfig {
  std::string name;
  std::string source_text;  // verbatim file content
  std::shared_ptr<const OperatorRegistry> registry;  // env.registry points here
  Environment env;
  std::vector<Phase> phases;  // Repeat blocks are unrolled
};

/// Reads and validates a config: every DSL string is parsed, lowered against
/// the system it will act on, and measure files are checked for consistent
/// shapes. Throws ConfigError.
SimConfig load_config(const std::string& path);
SimConfig parse_config(const std::string& text);

std::string phase_name(const Phase& p);

}  // namespace mixmps::driver
