#include "mixmps/driver/config.h"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mixmps/mpo.h"
#include "mixmps/state.h"

namespace mixmps::driver {

namespace {

using Json = nlohmann::ordered_json;

struct Context {
  Environment env;
  std::shared_ptr<OperatorRegistry> registry;
  // Validation state threaded through the phases.
  std::optional<Rep> rep;
  std::optional<System> system;
  std::map<std::string, std::pair<Shape, std::vector<std::string>>> files;
};

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path, msg);
}

const Json& require(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path, "missing field '" + key + "'");
  return *it;
}

void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (allowed.count(it.key()) == 0) fail(path + "." + it.key(), "unknown field");
  }
}

std::string get_string(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

cplx scalar(const Json& j, const Context& ctx, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    try {
      return parse_scalar(j.get<std::string>(), ctx.env);
    } catch (const ExprError& e) {
      fail(path, e.what());
    }
  }
  fail(path, "expected a number or a scalar expression");
}

double get_real(const Json& j, const Context& ctx, const std::string& path) {
  const cplx v = scalar(j, ctx, path);
  if (std::abs(v.imag()) > 1e-14 * std::max(1.0, std::abs(v.real()))) fail(path, "expected a real value");
  return v.real();
}

int get_int(const Json& j, const Context& ctx, const std::string& path) {
  const double v = get_real(j, ctx, path);
  if (std::abs(v - std::round(v)) > 1e-9) fail(path, "expected an integer");
  return static_cast<int>(std::lround(v));
}

OpExpr get_expr(const Json& j, const Context& ctx, const std::string& path) {
  const std::string text = get_string(j, path);
  try {
    return parse(text, ctx.env);
  } catch (const ParseError& e) {
    fail(path, "line " + std::to_string(e.line()) + ", column " + std::to_string(e.column()) +
                   ": " + e.what());
  } catch (const ExprError& e) {
    fail(path, e.what());
  }
}

Matrix get_matrix(const Json& j, const Context& ctx, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a nonempty list of rows");
  const Index rows = static_cast<Index>(j.size());
  Matrix m(rows, rows);
  for (Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<Index>(row.size()) != rows) fail(rp, "matrix must be square");
    for (Index c = 0; c < rows; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      const std::string vp = rp + "[" + std::to_string(c) + "]";
      if (v.is_array()) {
        if (v.size() != 2) fail(vp, "complex entries are [re, im]");
        m(r, c) = cplx(get_real(v[0], ctx, vp), get_real(v[1], ctx, vp));
      } else {
        m(r, c) = scalar(v, ctx, vp);
      }
    }
  }
  return m;
}

TruncationLimits get_limits(const Json& phase, const Context& ctx, const std::string& path) {
  const Json& j = require(phase, "limits", path);
  const std::string lp = path + ".limits";
  check_keys(j, {"cutoff", "maxdim"}, lp);
  TruncationLimits lim;
  if (j.contains("cutoff")) lim.cutoff = get_real(j["cutoff"], ctx, lp + ".cutoff");
  if (j.contains("maxdim")) lim.maxdim = get_int(j["maxdim"], ctx, lp + ".maxdim");
  try {
    lim.validate();
  } catch (const std::exception& e) {
    fail(lp, e.what());
  }
  return lim;
}

void read_operators(const Json& j, Context& ctx, const std::string& path) {
  if (!j.is_array()) fail(path, "expected a list");
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string p = path + "[" + std::to_string(k) + "]";
    const Json& o = j[k];
    check_keys(o, {"name", "site", "matrix", "support", "fermionic"}, p);
    OperatorDef def;
    def.name = get_string(require(o, "name", p), p + ".name");
    SiteKind kind;
    try {
      kind = SiteKind::parse(get_string(require(o, "site", p), p + ".site"));
    } catch (const std::invalid_argument& e) {
      fail(p + ".site", e.what());
    }
    def.matrix = get_matrix(require(o, "matrix", p), ctx, p + ".matrix");
    def.support = o.contains("support") ? get_int(o["support"], ctx, p + ".support") : 1;
    def.fermionic = o.contains("fermionic") && o["fermionic"].get<bool>();
    try {
      ctx.registry->define(kind.type, def);
    } catch (const std::invalid_argument& e) {
      fail(p, e.what());
    }
  }
}

void read_definitions(const Json& j, Context& ctx, const std::string& path) {
  auto define = [&](const std::string& name, const Json& value, const std::string& p) {
    if (value.is_number()) {
      ctx.env.values[name] = cplx(value.get<double>());
      return;
    }
    const std::string text = get_string(value, p);
    try {
      ctx.env.values[name] = evaluate(text, ctx.env);
    } catch (const ParseError& e) {
      fail(p, "line " + std::to_string(e.line()) + ", column " + std::to_string(e.column()) +
                  ": " + e.what());
    } catch (const ExprError& e) {
      fail(p, e.what());
    }
  };
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) define(it.key(), it.value(), path + "." + it.key());
  } else if (j.is_array()) {
    for (std::size_t k = 0; k < j.size(); ++k) {
      const std::string p = path + "[" + std::to_string(k) + "]";
      define(get_string(require(j[k], "name", p), p + ".name"), require(j[k], "value", p), p + ".value");
    }
  } else {
    fail(path, "expected an object or a list of {name, value}");
  }
}

System read_system(const Json& phase, const Context& ctx, const std::string& path) {
  const Json& j = require(phase, "system", path);
  const std::string sp = path + ".system";
  try {
    if (j.is_array()) {
      std::vector<SiteKind> kinds;
      for (const auto& s : j) kinds.push_back(SiteKind::parse(get_string(s, sp)));
      if (kinds.empty()) fail(sp, "needs at least one site");
      return System(kinds);
    }
    const Json& site = j.is_object() ? require(j, "site", sp) : j;
    const Json& n = j.is_object() ? require(j, "n", sp) : require(phase, "n", path);
    const int count = get_int(n, ctx, sp + ".n");
    if (count < 1) fail(sp + ".n", "must be >= 1");
    return System::uniform(SiteKind::parse(get_string(site, sp + ".site")), count);
  } catch (const std::invalid_argument& e) {
    fail(sp, e.what());
  }
}

std::vector<std::pair<int, int>> read_edges(const Json& g, const Context& ctx, int n,
                                            const std::string& path) {
  if (g.is_string()) {
    if (g.get<std::string>() != "complete") fail(path, "expected \"complete\" or a list of edges");
    return complete_graph_edges(n);
  }
  if (!g.is_array()) fail(path, "expected \"complete\" or a list of edges");
  std::vector<std::pair<int, int>> edges;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const std::string p = path + "[" + std::to_string(k) + "]";
    if (!g[k].is_array() || g[k].size() != 2) fail(p, "edges are [i, j] pairs");
    const int a = get_int(g[k][0], ctx, p), b = get_int(g[k][1], ctx, p);
    if (a < 1 || b < 1 || a > n || b > n || a == b) fail(p, "invalid edge");
    edges.emplace_back(a, b);
  }
  return edges;
}

CreateStatePhase read_create(const Json& j, Context& ctx, const std::string& path) {
  check_keys(j, {"type", "rep", "system", "n", "state"}, path);
  CreateStatePhase p;
  const std::string rep = get_string(require(j, "rep", path), path + ".rep");
  if (rep == "Pure") {
    p.rep = Rep::Pure;
  } else if (rep == "Mixed") {
    p.rep = Rep::Mixed;
  } else {
    fail(path + ".rep", "expected \"Pure\" or \"Mixed\"");
  }
  p.system = read_system(j, ctx, path);
  const int n = p.system.size();
  const Json& st = require(j, "state", path);
  const std::string sp = path + ".state";
  if (st.is_string()) {
    p.names.assign(static_cast<std::size_t>(n), st.get<std::string>());
  } else if (st.is_array()) {
    for (const auto& s : st) p.names.push_back(get_string(s, sp));
    if (static_cast<int>(p.names.size()) != n) fail(sp, "needs one name per site");
  } else if (st.is_object() && st.contains("repeat")) {
    std::vector<std::string> pattern;
    for (const auto& s : st["repeat"]) pattern.push_back(get_string(s, sp + ".repeat"));
    if (pattern.empty()) fail(sp + ".repeat", "must not be empty");
    for (int k = 0; k < n; ++k) p.names.push_back(pattern[static_cast<std::size_t>(k) % pattern.size()]);
  } else if (st.is_object() && st.contains("graph")) {
    for (int k = 0; k < n; ++k) {
      if (p.system[k].type != SiteType::Qubit) fail(sp, "graph states need qubit sites");
    }
    p.graph = read_edges(st["graph"], ctx, n, sp + ".graph");
  } else {
    fail(sp, "expected a name, a list of names, {\"repeat\": [...]} or {\"graph\": ...}");
  }
  for (std::size_t k = 0; k < p.names.size(); ++k) {
    try {
      const LocalState ls = named_state(p.system[static_cast<int>(k)], p.names[k]);
      if (p.rep == Rep::Pure && !ls.vector) fail(sp, "'" + p.names[k] + "' is not a pure state");
    } catch (const std::invalid_argument& e) {
      fail(sp, e.what());
    }
  }
  ctx.rep = p.rep;
  ctx.system = p.system;
  return p;
}

void validate_observable(const OpExpr& e, const Context& ctx, const std::string& path) {
  if (contains_channel(e)) fail(path, "measured expressions cannot contain Dissipator or Gate");
  try {
    lower_observable(e, *ctx.system, *ctx.rep, *ctx.registry);
  } catch (const std::invalid_argument& ex) {
    fail(path, ex.what());
  }
}

void validate_generic(const OpExpr& e, const Context& ctx, const std::string& path,
                      bool everywhere = false) {
  if (contains_channel(e)) fail(path, "measured expressions cannot contain Dissipator or Gate");
  try {
    if (generic_support(e, *ctx.registry) != 1) fail(path, "per-site operators must act on one site");
  } catch (const std::invalid_argument& ex) {
    fail(path, ex.what());
  }
  int defined = 0;
  for (const SiteKind& kind : ctx.system->sites()) {
    try {
      local_matrix(e, {kind}, *ctx.registry);
      ++defined;
    } catch (const std::invalid_argument&) {
    }
  }
  if (defined == 0) fail(path, "'" + to_string(e) + "' is not defined on any site of the system");
  if (everywhere && defined != ctx.system->size()) {
    fail(path, "'" + to_string(e) + "' must be defined on every site for a correlation matrix");
  }
}

MeasureItem read_item(const Json& j, const Context& ctx, const std::string& path) {
  MeasureItem item;
  if (j.is_array()) {
    if (j.size() != 2) fail(path, "correlation measures are [A, B] pairs");
    item.kind = MeasureKind::Pair;
    item.a = get_expr(j[0], ctx, path + "[0]");
    item.b = get_expr(j[1], ctx, path + "[1]");
    if (!is_generic(item.a) || !is_generic(item.b)) fail(path, "correlation operators must be generic");
    validate_generic(item.a, ctx, path + "[0]", true);
    validate_generic(item.b, ctx, path + "[1]", true);
    item.label = "(" + j[0].get<std::string>() + ", " + j[1].get<std::string>() + ")";
    return item;
  }
  const std::string text = get_string(j, path);
  item.label = text;
  static const std::map<std::string, MeasureKind> functionals{
      {"Trace", MeasureKind::Trace},   {"Trace2", MeasureKind::Trace2},
      {"Purity", MeasureKind::Purity}, {"Renyi2", MeasureKind::Renyi2},
      {"Linkdim", MeasureKind::Linkdim}, {"TraceError", MeasureKind::TraceError}};
  if (auto it = functionals.find(text); it != functionals.end()) {
    item.kind = it->second;
    return item;
  }
  if (text.rfind("EE(", 0) == 0 && text.back() == ')') {
    item.kind = MeasureKind::EE;
    item.bond = get_int(Json(text.substr(3, text.size() - 4)), ctx, path);
    if (item.bond < 1 || item.bond >= ctx.system->size()) fail(path, "EE bond must be in 1..N-1");
    return item;
  }
  item.a = get_expr(j, ctx, path);
  if (is_generic(item.a)) {
    item.kind = MeasureKind::Sites;
    validate_generic(item.a, ctx, path);
  } else {
    item.kind = MeasureKind::Expr;
    validate_observable(item.a, ctx, path);
  }
  return item;
}

Shape shape_of(MeasureKind k) {
  if (k == MeasureKind::Sites) return Shape::Sites;
  if (k == MeasureKind::Pair) return Shape::Matrix;
  return Shape::Scalar;
}

std::vector<MeasureFile> read_measures(const Json& j, Context& ctx, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object mapping file names to measures");
  std::vector<MeasureFile> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string fp = path + "." + it.key();
    MeasureFile f;
    f.filename = it.key();
    if (f.filename.empty() || f.filename.find('/') != std::string::npos || f.filename == "log" ||
        f.filename == "config.copy") {
      fail(fp, "invalid file name");
    }
    const Json* items = &it.value();
    if (items->is_object()) {
      check_keys(*items, {"items", "normalize"}, fp);
      f.normalize = items->contains("normalize") && (*items)["normalize"].get<bool>();
      items = &require(*items, "items", fp);
    }
    if (items->is_string()) {
      f.items.push_back(read_item(*items, ctx, fp));
    } else if (items->is_array()) {
      for (std::size_t k = 0; k < items->size(); ++k) {
        f.items.push_back(read_item((*items)[k], ctx, fp + "[" + std::to_string(k) + "]"));
      }
    } else {
      fail(fp, "expected a measure or a list of measures");
    }
    if (f.items.empty()) fail(fp, "no measures");
    f.shape = shape_of(f.items.front().kind);
    for (const auto& item : f.items) {
      if (shape_of(item.kind) != f.shape) {
        fail(fp, "a file cannot mix scalar, per-site and matrix measures");
      }
    }
    std::vector<std::string> labels;
    for (const auto& item : f.items) labels.push_back(item.label);
    auto [pos, inserted] = ctx.files.emplace(f.filename, std::make_pair(f.shape, labels));
    if (!inserted && pos->second != std::make_pair(f.shape, labels)) {
      fail(fp, "file already used with different measures");
    }
    out.push_back(std::move(f));
  }
  return out;
}

void require_state(const Context& ctx, const std::string& path) {
  if (!ctx.rep) fail(path, "no state yet: the first phase must be CreateState");
}

EvolvePhase read_evolve(const Json& j, Context& ctx, const std::string& path) {
  check_keys(j, {"type", "duration", "time_step", "order", "variant", "evolver", "limits",
                 "measures", "measure_period"},
             path);
  require_state(ctx, path);
  EvolvePhase p;
  p.duration = get_real(require(j, "duration", path), ctx, path + ".duration");
  if (p.duration < 0.0) fail(path + ".duration", "must be >= 0");
  p.time_step = get_real(require(j, "time_step", path), ctx, path + ".time_step");
  if (!(p.time_step > 0.0)) fail(path + ".time_step", "must be > 0");
  if (j.contains("order")) p.order = get_int(j["order"], ctx, path + ".order");
  if (p.order != 1 && p.order != 2 && p.order != 4) fail(path + ".order", "supported orders are 1, 2 and 4");
  if (j.contains("variant")) {
    const std::string v = get_string(j["variant"], path + ".variant");
    if (v == "WI") {
      p.variant = WVariant::WI;
    } else if (v != "WII") {
      fail(path + ".variant", "expected \"WI\" or \"WII\"");
    }
  }
  p.evolver_text = get_string(require(j, "evolver", path), path + ".evolver");
  p.evolver = get_expr(j["evolver"], ctx, path + ".evolver");
  if (*ctx.rep == Rep::Pure && contains_kind(p.evolver, NodeKind::Dissipator)) {
    fail(path + ".evolver", "Dissipator terms need a Mixed state");
  }
  try {
    lower_evolver(p.evolver, *ctx.system, *ctx.rep, *ctx.registry);
  } catch (const std::invalid_argument& e) {
    fail(path + ".evolver", e.what());
  }
  p.limits = get_limits(j, ctx, path);
  if (j.contains("measure_period")) p.measure_period = get_int(j["measure_period"], ctx, path + ".measure_period");
  if (p.measure_period < 1) fail(path + ".measure_period", "must be >= 1");
  if (j.contains("measures")) p.measures = read_measures(j["measures"], ctx, path + ".measures");
  return p;
}

void validate_gates(const OpExpr& e, const Context& ctx, const std::string& path) {
  const OpExpr pushed = push_indices(e, *ctx.registry);
  const std::function<void(const OpExpr&)> walk = [&](const OpExpr& x) {
    if (x.kind() == NodeKind::Indexed) {
      std::vector<SiteKind> kinds;
      for (int s : x.sites()) {
        if (s < 1 || s > ctx.system->size()) fail(path, "site " + std::to_string(s) + " out of range");
        kinds.push_back((*ctx.system)[s - 1]);
      }
      local_matrix(x.child(), kinds, *ctx.registry);
      return;
    }
    if (x.kind() == NodeKind::Dissipator) fail(path, "Dissipator is not a gate");
    for (const OpExpr& c : x.children()) walk(c);
  };
  try {
    walk(pushed);
  } catch (const std::invalid_argument& ex) {
    fail(path, ex.what());
  }
}

GatesPhase read_gates(const Json& j, Context& ctx, const std::string& path) {
  check_keys(j, {"type", "name", "gates", "limits", "final_measures", "duration"}, path);
  require_state(ctx, path);
  GatesPhase p;
  if (j.contains("name")) p.name = get_string(j["name"], path + ".name");
  p.gates_text = get_string(require(j, "gates", path), path + ".gates");
  p.gates = get_expr(j["gates"], ctx, path + ".gates");
  if (*ctx.rep == Rep::Pure && contains_kind(p.gates, NodeKind::Gate)) {
    fail(path + ".gates", "channels need a Mixed state");
  }
  validate_gates(p.gates, ctx, path + ".gates");
  p.limits = get_limits(j, ctx, path);
  if (j.contains("duration")) p.duration = get_real(j["duration"], ctx, path + ".duration");
  if (j.contains("final_measures")) {
    p.final_measures = read_measures(j["final_measures"], ctx, path + ".final_measures");
  }
  return p;
}

PartialTracePhase read_partial_trace(const Json& j, Context& ctx, const std::string& path) {
  check_keys(j, {"type", "keep"}, path);
  require_state(ctx, path);
  if (*ctx.rep != Rep::Mixed) fail(path, "PartialTrace needs a Mixed state");
  PartialTracePhase p;
  const Json& keep = require(j, "keep", path);
  if (!keep.is_array() || keep.empty()) fail(path + ".keep", "expected a nonempty list of sites");
  std::set<int> seen;
  for (const auto& k : keep) {
    const int s = get_int(k, ctx, path + ".keep");
    if (s < 1 || s > ctx.system->size() || !seen.insert(s).second) fail(path + ".keep", "invalid site");
    p.keep.push_back(s);
  }
  std::vector<SiteKind> kinds;
  for (int s : seen) kinds.push_back((*ctx.system)[s - 1]);
  ctx.system = System(kinds);
  return p;
}

void read_phases(const Json& j, Context& ctx, const std::string& path, std::vector<Phase>& out) {
  if (!j.is_array()) fail(path, "expected a list of phases");
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string p = path + "[" + std::to_string(k) + "]";
    const std::string type = get_string(require(j[k], "type", p), p + ".type");
    if (type == "CreateState") {
      out.push_back(read_create(j[k], ctx, p));
    } else if (type == "ToMixed") {
      check_keys(j[k], {"type"}, p);
      require_state(ctx, p);
      if (*ctx.rep != Rep::Pure) fail(p, "ToMixed needs a Pure state");
      ctx.rep = Rep::Mixed;
      out.push_back(ToMixedPhase{});
    } else if (type == "Evolve") {
      out.push_back(read_evolve(j[k], ctx, p));
    } else if (type == "Gates") {
      out.push_back(read_gates(j[k], ctx, p));
    } else if (type == "PartialTrace") {
      out.push_back(read_partial_trace(j[k], ctx, p));
    } else if (type == "Repeat") {
      check_keys(j[k], {"type", "count", "phases"}, p);
      const int count = get_int(require(j[k], "count", p), ctx, p + ".count");
      if (count < 0) fail(p + ".count", "must be >= 0");
      for (int r = 0; r < count; ++r) read_phases(require(j[k], "phases", p), ctx, p + ".phases", out);
    } else {
      fail(p + ".type", "unknown phase type '" + type + "'");
    }
  }
}

}  // namespace

SimConfig parse_config(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) fail("$", "expected an object");
  check_keys(root, {"name", "operators", "definitions", "phases"}, "$");

  Context ctx;
  ctx.registry = std::make_shared<OperatorRegistry>();
  ctx.env.registry = ctx.registry.get();

  SimConfig cfg;
  cfg.source_text = text;
  cfg.name = get_string(require(root, "name", "$"), "$.name");
  if (cfg.name.empty() || cfg.name.find('/') != std::string::npos || cfg.name == "." || cfg.name == "..") {
    fail("$.name", "must be a nonempty directory name");
  }
  if (root.contains("operators")) read_operators(root["operators"], ctx, "$.operators");
  if (root.contains("definitions")) read_definitions(root["definitions"], ctx, "$.definitions");
  read_phases(require(root, "phases", "$"), ctx, "$.phases", cfg.phases);
  if (cfg.phases.empty()) fail("$.phases", "must not be empty");
  cfg.registry = ctx.registry;
  cfg.env = ctx.env;
  return cfg;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string phase_name(const Phase& p) {
  struct Visitor {
    std::string operator()(const CreateStatePhase&) const { return "CreateState"; }
    std::string operator()(const ToMixedPhase&) const { return "ToMixed"; }
    std::string operator()(const EvolvePhase&) const { return "Evolve"; }
    std::string operator()(const GatesPhase& g) const {
      return g.name.empty() ? "Gates" : "Gates (" + g.name + ")";
    }
    std::string operator()(const PartialTracePhase&) const { return "PartialTrace"; }
  };
  return std::visit(Visitor{}, p);
}

}  // namespace mixmps::driver
