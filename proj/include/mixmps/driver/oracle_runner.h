#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mixmps/driver/runner.h"
#include "mixmps/oracles/covariance.h"
#include "mixmps/oracles/dense.h"

/// Reference runs behind `simulate test-oracles`. Output directories and data
/// files have the same layout as regular runs.
namespace mixmps::driver {

/// Exact backend on the full Hilbert space. EE is the entropy of the
/// Schmidt spectrum of the (vectorized) state; Linkdim is the largest
/// numerical Schmidt rank (singular values above 1e-13 of the largest).
class DenseBackend : public Backend {
 public:
  explicit DenseBackend(std::shared_ptr<const OperatorRegistry> registry);

  std::string name() const override { return "dense"; }
  void create(const CreateStatePhase& p) override;
  void to_mixed() override;
  void partial_trace(const std::vector<int>& keep) override;
  void evolve(const EvolvePhase& p, const std::function<void(double)>& epoch) override;
  void gates(const GatesPhase& p) override;

  Rep rep() const override { return state().rep; }
  const System& system() const override { return state().system; }

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

  const oracles::DenseState& state() const;

 private:
  Eigen::VectorXd schmidt_values(int bond) const;

  std::shared_ptr<const OperatorRegistry> registry_;
  std::optional<oracles::DenseState> state_;
};

int run_dense(const SimConfig& config, const RunOptions& options);

/// Quasi-free chain evolved with the covariance equations.
struct CovarianceRun {
  std::string name = "covariance";
  std::string model = "fermion-dephasing";  // fermion-source, boson-source, xx-boundary
  int n = 8;
  double gamma = 1.0;  // dephasing strength, or source rate
  int site = 1;        // source site
  double eps_l = 1.0, mu_l = 1.0, eps_r = 1.0, mu_r = -1.0;
  /// Initial occupations <a_i^+ a_i>, repeated along the chain.
  std::vector<double> occupation{0.0};
  double duration = 1.0;
  double time_step = 0.05;
  int measure_period = 1;
};

oracles::CovarianceModel covariance_model(const CovarianceRun& r);

/// Writes density.dat (t, site), total.dat (t) and, for xx-boundary,
/// magnetization.dat and current.dat (t, bond).
int run_covariance(const CovarianceRun& r, const RunOptions& options);

}  // namespace mixmps::driver
