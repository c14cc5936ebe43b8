#pragma once

#include <chrono>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mixmps/evolution.h"
#include "mixmps/measurement.h"
#include "mixmps/oracles/covariance.h"
#include "mixmps/oracles/dense.h"
#include "mixmps/parser.h"
#include "support.h"

namespace mixmps::acceptance {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string summary;
};

/// Thrown once a criterion has used, or is projected to use, more wall
/// time than it is allowed.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wall-clock budget of one criterion. Work is split into stages covering
/// fractions [from, to) of the whole; progress inside the current stage
/// extrapolates the total runtime.
class Budget {
 public:
  Budget(double seconds, bool enforce) : seconds_(seconds), enforce_(enforce) {}

  double limit() const { return seconds_; }
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

  void stage(std::string name, double from, double to) {
    name_ = std::move(name);
    from_ = from;
    to_ = to;
    stage_start_ = elapsed();
  }

  /// Completed sub-results, reported even when a later stage is aborted.
  void note(std::string text) { notes_.push_back(std::move(text)); }
  std::string notes() const {
    std::string out;
    for (const auto& n : notes_) out += (out.empty() ? "" : "; ") + n;
    return out;
  }

  /// p in [0, 1]: completed part of the current stage.
  void check(double p) const {
    if (!enforce_) return;
    const double now = elapsed();
    if (now > seconds_) {
      throw BudgetExceeded(fmt::format("{}: budget of {:.0f} s used up at {:.0f}% of the stage",
                                       name_, seconds_, 100.0 * p));
    }
    const double spent = now - stage_start_;
    if (p < 0.02 || spent < 30.0) return;
    const double stage_total = spent / p;
    // Small stages are not representative of the ones that follow.
    const double rest = to_ - from_ >= 0.2 ? (1.0 - to_) / (to_ - from_) : 0.0;
    const double projected = stage_start_ + stage_total * (1.0 + rest);
    if (projected > seconds_) {
      throw BudgetExceeded(fmt::format(
          "{}: projected {:.0f} s (stage at {:.1f}% after {:.0f} s) exceeds the budget of {:.0f} s",
          name_, projected, 100.0 * p, spent, seconds_));
    }
  }

 private:
  Clock::time_point start_ = Clock::now();
  double seconds_;
  bool enforce_;
  std::string name_ = "run";
  double from_ = 0.0, to_ = 1.0, stage_start_ = 0.0;
  std::vector<std::string> notes_;
};

struct Context {
  std::filesystem::path out;  // scratch directory for driver runs
};

Outcome criterion1(Budget& budget, const Context& ctx);
Outcome criterion2(Budget& budget, const Context& ctx);
Outcome criterion3(Budget& budget, const Context& ctx);
Outcome criterion4(Budget& budget, const Context& ctx);
Outcome criterion5(Budget& budget, const Context& ctx);
Outcome criterion6(Budget& budget, const Context& ctx);
Outcome criterion7(Budget& budget, const Context& ctx);
Outcome criterion8(Budget& budget, const Context& ctx);
Outcome criterion9(Budget& budget, const Context& ctx);

// Shared helpers.

using testing::max_abs;

/// Least-squares slope of log(err) against log(tau).
double loglog_slope(const std::vector<double>& tau, const std::vector<double>& err);

/// Mixed state evolution observed at every epoch: callback receives the
/// state and time. Budget progress is t / duration.
State run_evolve(const State& s0, const std::string& evolver, double duration, double tau,
                 const TruncationLimits& limits, int measure_period, Budget& budget,
                 const std::function<void(const State&, double)>& observe, int order = 4,
                 WVariant variant = WVariant::WII);

/// <op(i)> / trace for i = 1..N.
std::vector<double> site_values(const State& s, const OpExpr& op);
std::vector<double> site_values(const oracles::DenseState& s, const OpExpr& op);

/// Real part of <expr> / trace.
double normalized(const State& s, const OpExpr& expr);
double normalized(const oracles::DenseState& s, const OpExpr& expr);

/// Dense trajectory sampled at observation_times(duration, tau, period).
std::vector<oracles::DenseState> dense_trajectory(const oracles::DenseState& s0, const std::string& evolver,
                                                  double duration, double tau, int measure_period,
                                                  Budget& budget, double tol = 1e-10);

std::string sci(double x);

}  // namespace mixmps::acceptance
