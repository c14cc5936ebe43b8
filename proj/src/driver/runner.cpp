#include "mixmps/driver/runner.h"

#include <chrono>
#include <fstream>
#include <map>

#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mixmps/driver/data_file.h"
#include "mixmps/evolution.h"
#include "mixmps/measurement.h"

namespace mixmps::driver {

namespace {

// Graph states are built gate by gate; roundoff below this relative weight
// would otherwise inflate the bonds.
const TruncationLimits kCreateLimits{1e-28};

}  // namespace

struct MpsBackend::Impl {
  std::shared_ptr<const OperatorRegistry> registry;
  std::optional<State> state;
  const State* view = nullptr;  // state seen by measurements inside evolve()
  mutable std::optional<Measurer> measurer;
  double discarded = 0.0;

  const State& current() const {
    if (view) return *view;
    if (!state) throw std::logic_error("no state: CreateState must come first");
    return *state;
  }
  const Measurer& meas() const {
    if (!measurer) measurer.emplace(current());
    return *measurer;
  }
  void set(State s) {
    state = std::move(s);
    measurer.reset();
  }
};

MpsBackend::MpsBackend(std::shared_ptr<const OperatorRegistry> registry)
    : impl_(std::make_unique<Impl>()) {
  impl_->registry = std::move(registry);
}

MpsBackend::~MpsBackend() = default;

void MpsBackend::create(const CreateStatePhase& p) {
  if (p.graph) {
    impl_->set(graph_state(p.rep, p.system.size(), *p.graph, kCreateLimits));
  } else {
    impl_->set(product_state(p.rep, p.system, p.names));
  }
}

void MpsBackend::to_mixed() { impl_->set(mix(impl_->current())); }

void MpsBackend::partial_trace(const std::vector<int>& keep) {
  impl_->set(mixmps::partial_trace(impl_->current(), keep));
}

void MpsBackend::evolve(const EvolvePhase& p, const std::function<void(double)>& epoch) {
  const State& s = impl_->current();
  EvolutionPlan plan;
  plan.evolver = lower_evolver(p.evolver, s.system(), s.rep(), *impl_->registry);
  plan.duration = p.duration;
  plan.time_step = p.time_step;
  plan.order = p.order;
  plan.variant = p.variant;
  plan.limits = p.limits;
  plan.measure_period = p.measure_period;
  EvolutionStats stats;
  State out = mixmps::evolve(s, plan,
                             [&](const State& now, double t) {
                               impl_->view = &now;
                               impl_->measurer.reset();
                               epoch(t);
                               impl_->view = nullptr;
                               impl_->measurer.reset();
                             },
                             &stats);
  impl_->set(std::move(out));
  impl_->discarded += stats.discarded;
}

void MpsBackend::gates(const GatesPhase& p) {
  double disc = 0.0;
  impl_->set(apply_gates(impl_->current(), p.gates, p.limits, *impl_->registry, &disc));
  impl_->discarded += disc;
}

Rep MpsBackend::rep() const { return impl_->current().rep(); }
const System& MpsBackend::system() const { return impl_->current().system(); }
const State& MpsBackend::state() const { return impl_->current(); }

cplx MpsBackend::expect(const OpExpr& e) { return impl_->meas().expect(e, *impl_->registry); }

std::vector<std::optional<cplx>> MpsBackend::expect_sites(const OpExpr& op) {
  return impl_->meas().expect_sites(op, *impl_->registry);
}

Matrix MpsBackend::correlation(const OpExpr& a, const OpExpr& b) {
  return impl_->meas().correlation_matrix(a, b, *impl_->registry);
}

cplx MpsBackend::trace() {
  if (rep() == Rep::Pure) return mixmps::trace(impl_->current());
  return impl_->meas().trace();
}
cplx MpsBackend::trace2() { return mixmps::trace2(impl_->current()); }
double MpsBackend::purity() { return mixmps::purity(impl_->current()); }
double MpsBackend::renyi2() { return mixmps::renyi2(impl_->current()); }
double MpsBackend::ee(int bond) { return osee(impl_->current(), bond); }
Index MpsBackend::linkdim() { return impl_->current().max_bond_dim(); }
double MpsBackend::trace_error() { return std::abs(trace() - 1.0); }

double MpsBackend::take_discarded() {
  const double d = impl_->discarded;
  impl_->discarded = 0.0;
  return d;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

class Recorder {
 public:
  Recorder(std::filesystem::path dir, std::string run_name)
      : dir_(std::move(dir)), run_name_(std::move(run_name)) {}

  void record(const std::vector<MeasureFile>& files, Backend& b, double t) {
    for (const MeasureFile& f : files) write(f, b, t);
  }

  void flush() {
    for (auto& [name, file] : files_) file->flush();
  }

 private:
  DataFile& open(const MeasureFile& f) {
    auto it = files_.find(f.filename);
    if (it == files_.end()) {
      it = files_.emplace(f.filename, std::make_unique<DataFile>(dir_ / f.filename, f, run_name_)).first;
    }
    return *it->second;
  }

  void write(const MeasureFile& f, Backend& b, double t) {
    DataFile& out = open(f);
    const cplx norm = f.normalize ? b.trace() : cplx(1.0);
    auto push = [](std::vector<double>& row, cplx v) {
      row.push_back(v.real());
      row.push_back(v.imag());
    };
    switch (f.shape) {
      case Shape::Scalar: {
        std::vector<double> row{t};
        for (const MeasureItem& item : f.items) {
          push(row, scalar(item, b) / (item.kind == MeasureKind::Expr ? norm : 1.0));
        }
        out.write_row(row);
        break;
      }
      case Shape::Sites: {
        std::vector<std::vector<std::optional<cplx>>> cols;
        for (const MeasureItem& item : f.items) cols.push_back(b.expect_sites(item.a));
        const std::size_t n = cols.front().size();
        for (std::size_t s = 0; s < n; ++s) {
          std::vector<double> row{t, static_cast<double>(s + 1)};
          bool complete = true;
          for (const auto& c : cols) {
            if (!c[s]) {
              complete = false;
              break;
            }
            push(row, *c[s] / norm);
          }
          if (complete) out.write_row(row);
        }
        break;
      }
      case Shape::Matrix: {
        std::vector<Matrix> mats;
        for (const MeasureItem& item : f.items) mats.push_back(b.correlation(item.a, item.b));
        const Index n = mats.front().rows();
        for (Index i = 0; i < n; ++i) {
          for (Index j = 0; j < n; ++j) {
            std::vector<double> row{t, static_cast<double>(i + 1), static_cast<double>(j + 1)};
            for (const Matrix& m : mats) push(row, m(i, j) / norm);
            out.write_row(row);
          }
        }
        break;
      }
    }
  }

  static cplx scalar(const MeasureItem& item, Backend& b) {
    switch (item.kind) {
      case MeasureKind::Expr: return b.expect(item.a);
      case MeasureKind::Trace: return b.trace();
      case MeasureKind::Trace2: return b.trace2();
      case MeasureKind::Purity: return b.purity();
      case MeasureKind::Renyi2: return b.renyi2();
      case MeasureKind::EE: return b.ee(item.bond);
      case MeasureKind::Linkdim: return static_cast<double>(b.linkdim());
      case MeasureKind::TraceError: return b.trace_error();
      default: throw std::logic_error("not a scalar measure");
    }
  }

  std::filesystem::path dir_;
  std::string run_name_;
  std::map<std::string, std::unique_ptr<DataFile>> files_;
};

std::shared_ptr<spdlog::logger> make_logger(const std::filesystem::path& file, const RunOptions& opt) {
  auto file_sink = std::make_shared<spdlog::sinks::basic_file_sink_mt>(file.string(), true);
  file_sink->set_level(spdlog::level::trace);
  std::vector<spdlog::sink_ptr> sinks{file_sink};
  if (opt.console) {
    auto console = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
    console->set_level(spdlog::level::from_str(opt.log_level));
    sinks.push_back(console);
  }
  auto log = std::make_shared<spdlog::logger>("run", sinks.begin(), sinks.end());
  log->set_level(spdlog::level::trace);
  log->set_pattern("[%Y-%m-%d %H:%M:%S.%e] [%l] %v");
  log->flush_on(spdlog::level::info);
  return log;
}

void log_state(spdlog::logger& log, Backend& b, double clock, const TruncationLimits* limits) {
  const Index chi = b.linkdim();
  log.info("epoch t={:.6g} maxlinkdim={} trace_error={:.3e}", clock, chi, b.trace_error());
  if (limits && chi > limits->maxdim) {
    log.error("maxlinkdim {} exceeds maxdim {}", chi, limits->maxdim);
  }
}

}  // namespace

int run(const SimConfig& config, const RunOptions& options, Backend& backend) {
  const std::filesystem::path dir = options.out_root / config.name;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    spdlog::error("cannot create {}: {}", dir.string(), ec.message());
    return kExitRuntimeError;
  }
  {
    std::ofstream copy(dir / "config.copy", std::ios::binary);
    copy << config.source_text;
    if (!copy) {
      spdlog::error("cannot write {}", (dir / "config.copy").string());
      return kExitRuntimeError;
    }
  }
  auto log = make_logger(dir / "log", options);
  log->info("run '{}' with the {} backend, {} phases", config.name, backend.name(), config.phases.size());
  Recorder recorder(dir, config.name);
  double clock = 0.0;
  const auto run_start = Clock::now();
  std::size_t index = 0;
  try {
    for (const Phase& phase : config.phases) {
      ++index;
      const auto start = Clock::now();
      log->info("phase {}/{}: {}", index, config.phases.size(), phase_name(phase));
      if (const auto* p = std::get_if<CreateStatePhase>(&phase)) {
        backend.create(*p);
        log_state(*log, backend, clock, nullptr);
      } else if (std::holds_alternative<ToMixedPhase>(phase)) {
        backend.to_mixed();
      } else if (const auto* p = std::get_if<PartialTracePhase>(&phase)) {
        backend.partial_trace(p->keep);
        log_state(*log, backend, clock, nullptr);
      } else if (const auto* p = std::get_if<EvolvePhase>(&phase)) {
        log->debug("evolver: {}", p->evolver_text);
        log->info("duration={} time_step={} order={} variant={} cutoff={:g} maxdim={}", p->duration,
                  p->time_step, p->order, p->variant == WVariant::WI ? "WI" : "WII", p->limits.cutoff,
                  p->limits.maxdim);
        bool saturated = false;
        backend.evolve(*p, [&](double t) {
          log_state(*log, backend, clock + t, &p->limits);
          if (!saturated && backend.linkdim() >= p->limits.maxdim) {
            saturated = true;
            log->warn("bond dimension reached maxdim={} at t={:.6g}", p->limits.maxdim, clock + t);
          }
          recorder.record(p->measures, backend, clock + t);
          if (options.progress) options.progress(clock + t);
        });
        clock += p->duration;
      } else if (const auto* p = std::get_if<GatesPhase>(&phase)) {
        log->debug("gates: {}", p->gates_text);
        backend.gates(*p);
        clock += p->duration;
        log_state(*log, backend, clock, &p->limits);
        recorder.record(p->final_measures, backend, clock);
        if (options.progress) options.progress(clock);
      }
      const double disc = backend.take_discarded();
      if (disc > 0.0) log->info("discarded weight {:.3e}", disc);
      log->info("phase {} done in {:.3f} s", index, seconds_since(start));
    }
  } catch (const std::exception& e) {
    log->error("phase {} ({}) failed: {}", index, phase_name(config.phases[index - 1]), e.what());
    recorder.flush();
    log->flush();
    return kExitRuntimeError;
  }
  recorder.flush();
  log->info("finished in {:.3f} s", seconds_since(run_start));
  log->flush();
  return kExitOk;
}

int run(const SimConfig& config, const RunOptions& options) {
  MpsBackend backend(config.registry);
  return run(config, options, backend);
}

int run_file(const std::string& path, const RunOptions& options) {
  SimConfig config;
  try {
    config = load_config(path);
  } catch (const ConfigError& e) {
    spdlog::error("{}: {}", path, e.what());
    return kExitConfigError;
  }
  return run(config, options);
}

}  // namespace mixmps::driver
