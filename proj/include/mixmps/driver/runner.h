#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mixmps/driver/config.h"

namespace mixmps::driver {

/// Exit statuses of the simulate CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;

struct RunOptions {
  std::filesystem::path out_root = ".";
  std::string log_level = "info";  // console verbosity; the log file gets everything
  bool console = true;
  /// Called with the global clock after every recorded epoch and gate
  /// layer. An exception thrown here aborts the run like a phase failure.
  std::function<void(double)> progress;
};

/// State holder a run drives phase by phase. The MPS backend is the
/// simulator; the dense backend (oracle_runner.h) replays the same config
/// exactly on the full Hilbert space.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string name() const = 0;
  virtual void create(const CreateStatePhase& p) = 0;
  virtual void to_mixed() = 0;
  virtual void partial_trace(const std::vector<int>& keep) = 0;
  /// Calls `epoch(t)` with phase-local times; measurements made inside the
  /// callback see the state at that time.
  virtual void evolve(const EvolvePhase& p, const std::function<void(double)>& epoch) = 0;
  virtual void gates(const GatesPhase& p) = 0;

  virtual Rep rep() const = 0;
  virtual const System& system() const = 0;

  virtual cplx expect(const OpExpr& e) = 0;
  virtual std::vector<std::optional<cplx>> expect_sites(const OpExpr& op) = 0;
  virtual Matrix correlation(const OpExpr& a, const OpExpr& b) = 0;
  virtual cplx trace() = 0;
  virtual cplx trace2() = 0;
  virtual double purity() = 0;
  virtual double renyi2() = 0;
  virtual double ee(int bond) = 0;
  virtual Index linkdim() = 0;
  virtual double trace_error() = 0;

  /// Weight discarded by truncation since the last call.
  virtual double take_discarded() { return 0.0; }
};

class MpsBackend : public Backend {
 public:
  explicit MpsBackend(std::shared_ptr<const OperatorRegistry> registry);
  ~MpsBackend() override;

  std::string name() const override { return "mps"; }
  void create(const CreateStatePhase& p) override;
  void to_mixed() override;
  void partial_trace(const std::vector<int>& keep) override;
  void evolve(const EvolvePhase& p, const std::function<void(double)>& epoch) override;
  void gates(const GatesPhase& p) override;

  Rep rep() const override;
  const System& system() const override;

  cplx expect(const OpExpr& e) override;
  std::vector<std::optional<cplx>> expect_sites(const OpExpr& op) override;
  Matrix correlation(const OpExpr& a, const OpExpr& b) override;
  cplx trace() override;
  cplx trace2() override;
  double purity() override;
  double renyi2() override;
  double ee(int bond) override;
  Index linkdim() override;
  double trace_error() override;
  double take_discarded() override;

  const State& state() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Executes a validated config: creates out_root/name/, writes the data
/// files, `log` and `config.copy`. Returns kExitOk or kExitRuntimeError; on
/// failure the files written so far and the log are flushed.
int run(const SimConfig& config, const RunOptions& options);
int run(const SimConfig& config, const RunOptions& options, Backend& backend);

/// Loads `path` and runs it. Config errors are logged to stderr and mapped to
/// kExitConfigError.
int run_file(const std::string& path, const RunOptions& options);

}  // namespace mixmps::driver
