#include "mixmps/driver/oracle_runner.h"

#include <cmath>
#include <fstream>

#include <Eigen/SVD>
#include <spdlog/spdlog.h>

#include "mixmps/driver/data_file.h"
#include "mixmps/evolution.h"

namespace mixmps::driver {

using namespace mixmps::oracles;

DenseBackend::DenseBackend(std::shared_ptr<const OperatorRegistry> registry)
    : registry_(std::move(registry)) {}

void DenseBackend::create(const CreateStatePhase& p) {
  state_ = p.graph ? dense_graph_state(p.rep, p.system.size(), *p.graph)
                   : dense_product_state(p.rep, p.system, p.names);
}

const DenseState& DenseBackend::state() const {
  if (!state_) throw std::logic_error("no state: CreateState must come first");
  return *state_;
}

void DenseBackend::to_mixed() { state_ = dense_mix(state()); }

void DenseBackend::partial_trace(const std::vector<int>& keep) {
  state_ = dense_partial_trace(state(), keep);
}

void DenseBackend::evolve(const EvolvePhase& p, const std::function<void(double)>& epoch) {
  const DenseGenerator gen = dense_generator(p.evolver, system(), rep(), *registry_);
  double now = 0.0;
  for (double t : observation_times(p.duration, p.time_step, p.measure_period)) {
    if (t > now) state_ = dense_evolve(gen, state(), t - now, std::min(p.time_step, t - now));
    now = t;
    epoch(t);
  }
}

void DenseBackend::gates(const GatesPhase& p) { state_ = dense_apply_gates(state(), p.gates, *registry_); }

cplx DenseBackend::expect(const OpExpr& e) { return dense_expect(state(), e, *registry_); }

std::vector<std::optional<cplx>> DenseBackend::expect_sites(const OpExpr& op) {
  std::vector<std::optional<cplx>> out;
  for (int k = 1; k <= state().system.size(); ++k) {
    try {
      local_matrix(op, {state().system[k - 1]}, *registry_);
    } catch (const std::invalid_argument&) {
      out.emplace_back();
      continue;
    }
    out.emplace_back(expect(OpExpr::indexed(op, {k})));
  }
  return out;
}

Matrix DenseBackend::correlation(const OpExpr& a, const OpExpr& b) {
  const int n = state().system.size();
  Matrix out(n, n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) out(i - 1, j - 1) = expect(a(i) * b(j));
  }
  return out;
}

cplx DenseBackend::trace() {
  return state().rep == Rep::Pure ? cplx(state().psi.squaredNorm()) : state().rho.trace();
}

cplx DenseBackend::trace2() {
  if (state().rep == Rep::Pure) return std::pow(state().psi.squaredNorm(), 2);
  return state().rho.squaredNorm();
}

double DenseBackend::purity() {
  if (state().rep == Rep::Pure) return 1.0;
  return trace2().real() / std::norm(trace());
}

double DenseBackend::renyi2() { return -std::log(purity()); }

Eigen::VectorXd DenseBackend::schmidt_values(int bond) const {
  const int n = state().system.size();
  if (bond < 1 || bond >= n) throw std::invalid_argument("bond must be in 1..N-1");
  Index left = 1;
  for (int k = 0; k < bond; ++k) {
    const Index d = state().system[k].dim;
    left *= state().rep == Rep::Pure ? d : d * d;
  }
  const Vector v = state().vectorized();
  const Index right = v.size() / left;
  // v[a * right + b] with a on the left block.
  const Eigen::Map<const Matrix> m(v.data(), right, left);
  return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

double DenseBackend::ee(int bond) {
  const Eigen::VectorXd s = schmidt_values(bond);
  const double total = s.squaredNorm();
  double e = 0.0;
  for (Index k = 0; k < s.size(); ++k) {
    const double p = s[k] * s[k] / total;
    if (p > 0.0) e -= p * std::log(p);
  }
  return e;
}

Index DenseBackend::linkdim() {
  Index best = 1;
  for (int bond = 1; bond < state().system.size(); ++bond) {
    const Eigen::VectorXd s = schmidt_values(bond);
    Index rank = 0;
    for (Index k = 0; k < s.size(); ++k) rank += s[k] > 1e-13 * s[0] ? 1 : 0;
    best = std::max(best, rank);
  }
  return best;
}

double DenseBackend::trace_error() { return std::abs(trace() - 1.0); }

int run_dense(const SimConfig& config, const RunOptions& options) {
  DenseBackend backend(config.registry);
  return run(config, options, backend);
}

CovarianceModel covariance_model(const CovarianceRun& r) {
  if (r.n < 2) throw std::invalid_argument("covariance runs need n >= 2");
  if (r.model == "fermion-dephasing") return CovarianceModel::fermion_dephasing(r.n, r.gamma);
  if (r.model == "fermion-source") return CovarianceModel::fermion_source(r.n, r.gamma, r.site);
  if (r.model == "boson-source") return CovarianceModel::boson_source(r.n, r.gamma, r.site);
  if (r.model == "xx-boundary") return CovarianceModel::xx_boundary(r.n, r.eps_l, r.mu_l, r.eps_r, r.mu_r);
  throw std::invalid_argument("unknown covariance model '" + r.model + "'");
}

namespace {

MeasureFile file_spec(const std::string& name, Shape shape, const std::string& label) {
  MeasureFile f;
  f.filename = name;
  f.shape = shape;
  MeasureItem item;
  item.label = label;
  f.items.push_back(item);
  return f;
}

}  // namespace

int run_covariance(const CovarianceRun& r, const RunOptions& options) {
  CovarianceModel model;
  try {
    model = covariance_model(r);
    if (r.occupation.empty()) throw std::invalid_argument("occupation list is empty");
    if (!(r.time_step > 0.0) || r.duration < 0.0 || r.measure_period < 1) {
      throw std::invalid_argument("invalid duration, time step or measure period");
    }
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return kExitConfigError;
  }
  const std::filesystem::path dir = options.out_root / r.name;
  try {
    std::filesystem::create_directories(dir);
    Matrix c = Matrix::Zero(r.n, r.n);
    for (int i = 0; i < r.n; ++i) c(i, i) = r.occupation[static_cast<std::size_t>(i) % r.occupation.size()];
    const bool xx = r.model == "xx-boundary";
    const std::string label = model.statistics == Statistics::Boson ? "dag(A)A" : "dag(C)C";
    DataFile density(dir / "density.dat", file_spec("density.dat", Shape::Sites, label), r.name);
    DataFile total(dir / "total.dat", file_spec("total.dat", Shape::Scalar, "sum " + label), r.name);
    std::optional<DataFile> mag, cur;
    if (xx) {
      mag.emplace(dir / "magnetization.dat", file_spec("magnetization.dat", Shape::Sites, "Z"), r.name);
      cur.emplace(dir / "current.dat", file_spec("current.dat", Shape::Sites, "X(i)Y(i+1) - Y(i)X(i+1)"),
                  r.name);
    }
    const auto times = observation_times(r.duration, r.time_step, r.measure_period);
    const auto cs = covariance_trajectory(model, c, times, r.time_step);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double t = times[k];
      const Matrix& ck = cs[k];
      for (int i = 0; i < r.n; ++i) density.write_row({t, double(i + 1), ck(i, i).real(), ck(i, i).imag()});
      total.write_row({t, ck.trace().real(), ck.trace().imag()});
      if (xx) {
        for (int i = 1; i <= r.n; ++i) mag->write_row({t, double(i), xx_magnetization(ck, i), 0.0});
        for (int i = 1; i < r.n; ++i) cur->write_row({t, double(i), xx_current(ck, i), 0.0});
      }
    }
  } catch (const std::exception& e) {
    spdlog::error("covariance run failed: {}", e.what());
    return kExitRuntimeError;
  }
  return kExitOk;
}

}  // namespace mixmps::driver
