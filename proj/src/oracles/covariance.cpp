#include "mixmps/oracles/covariance.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mixmps::oracles {

namespace {

Matrix chain(int n, double t) {
  Matrix h = Matrix::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) h(i, i + 1) = h(i + 1, i) = t;
  return h;
}

CovarianceModel base(std::string kind, Statistics st, int n, double hop) {
  if (n < 1) throw std::invalid_argument("covariance model: n must be >= 1");
  CovarianceModel m;
  m.kind = std::move(kind);
  m.statistics = st;
  m.n = n;
  m.h = chain(n, hop);
  m.gain = Eigen::VectorXd::Zero(n);
  m.loss = Eigen::VectorXd::Zero(n);
  return m;
}

Matrix rk4(const CovarianceModel& m, Matrix c, double t, int steps) {
  const double h = t / steps;
  for (int k = 0; k < steps; ++k) {
    const Matrix k1 = m.derivative(c);
    const Matrix k2 = m.derivative(c + 0.5 * h * k1);
    const Matrix k3 = m.derivative(c + 0.5 * h * k2);
    const Matrix k4 = m.derivative(c + h * k3);
    c += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return c;
}

}  // namespace

CovarianceModel CovarianceModel::fermion_dephasing(int n, double gamma) {
  CovarianceModel m = base("FermionDephasing", Statistics::Fermion, n, -1.0);
  m.dephasing = 4.0 * gamma;
  return m;
}

CovarianceModel CovarianceModel::boson_source(int n, double rate, int site) {
  CovarianceModel m = base("BosonSource", Statistics::Boson, n, 1.0);
  if (site < 1 || site > n) throw std::invalid_argument("covariance model: bad source site");
  m.gain[site - 1] = 2.0 * rate;
  return m;
}

CovarianceModel CovarianceModel::fermion_source(int n, double rate, int site) {
  CovarianceModel m = base("FermionSource", Statistics::Fermion, n, 1.0);
  if (site < 1 || site > n) throw std::invalid_argument("covariance model: bad source site");
  m.gain[site - 1] = 2.0 * rate;
  return m;
}

CovarianceModel CovarianceModel::xx_boundary(int n, double eps_l, double mu_l, double eps_r,
                                             double mu_r) {
  if (n < 2) throw std::invalid_argument("covariance model: XX chain needs n >= 2");
  CovarianceModel m = base("XXBoundary", Statistics::Fermion, n, 2.0);
  m.gain[0] += eps_l * (1.0 + mu_l) / 2.0;
  m.loss[0] += eps_l * (1.0 - mu_l) / 2.0;
  m.gain[n - 1] += eps_r * (1.0 + mu_r) / 2.0;
  m.loss[n - 1] += eps_r * (1.0 - mu_r) / 2.0;
  return m;
}

Matrix CovarianceModel::derivative(const Matrix& c) const {
  const cplx im(0.0, 1.0);
  const Matrix ht = h.transpose();
  Matrix d = im * (ht * c - c * ht);
  const double sign = statistics == Statistics::Boson ? 1.0 : -1.0;
  for (int s = 0; s < n; ++s) {
    const double g = gain[s], l = loss[s];
    if (g == 0.0 && l == 0.0) continue;
    const double rate =
        statistics == Statistics::Boson ? 0.5 * (g - l) : 0.5 * (g + l);
    // (P C + C P) adds row s and column s of C.
    d.row(s) += sign * rate * c.row(s);
    d.col(s) += sign * rate * c.col(s);
    d(s, s) += g;
  }
  if (dephasing != 0.0) {
    Matrix off = c;
    off.diagonal().setZero();
    d -= dephasing * off;
  }
  return d;
}

Matrix covariance_evolve(const CovarianceModel& model, const Matrix& c0, double t, double dt) {
  if (c0.rows() != model.n || c0.cols() != model.n) {
    throw std::invalid_argument("covariance_evolve: C0 has the wrong shape");
  }
  if (t == 0.0) return c0;
  int steps = std::max(1, static_cast<int>(std::ceil(t / dt - 1e-9)));
  Matrix prev = rk4(model, c0, t, steps);
  for (int round = 0; round < 16; ++round) {
    steps *= 2;
    Matrix next = rk4(model, c0, t, steps);
    const double scale = std::max(1.0, next.cwiseAbs().maxCoeff());
    if ((next - prev).cwiseAbs().maxCoeff() <= 1e-10 * scale) return next;
    prev = std::move(next);
  }
  throw std::runtime_error("covariance_evolve: RK4 did not converge");
}

std::vector<Matrix> covariance_trajectory(const CovarianceModel& model, const Matrix& c0,
                                          const std::vector<double>& times, double dt) {
  std::vector<Matrix> out;
  Matrix c = c0;
  double now = 0.0;
  for (double t : times) {
    if (t < now) throw std::invalid_argument("covariance_trajectory: times must increase");
    c = covariance_evolve(model, c, t - now, dt);
    now = t;
    out.push_back(c);
  }
  return out;
}

double xx_magnetization(const Matrix& c, int site) {
  return 2.0 * c(site - 1, site - 1).real() - 1.0;
}

double xx_current(const Matrix& c, int site) { return -4.0 * c(site - 1, site).imag(); }

}  // namespace mixmps::oracles
