#pragma once

#include <string>
#include <vector>

#include "mixmps/tensor.h"

/// Two-point function C_ij = <a_i^+ a_j> of quasi-free chains, evolved with
/// the closed linear equations
///
///   bosons:   dC/dt = i [h^T, C] + sum_s (g_s - l_s)/2 (P_s C + C P_s) + sum_s g_s P_s
///   fermions: dC/dt = i [h^T, C] - sum_s (g_s + l_s)/2 (P_s C + C P_s) + sum_s g_s P_s
///                     - kappa (C - diag C)
///
/// for H = sum h_ij a_i^+ a_j, gain jumps sqrt(g_s) a_s^+, loss jumps
/// sqrt(l_s) a_s, number dephasing sqrt(kappa) n_i on every site, and
/// P_s = e_s e_s^T.
namespace mixmps::oracles {

enum class Statistics { Boson, Fermion };

struct CovarianceModel {
  std::string kind;
  Statistics statistics = Statistics::Fermion;
  int n = 0;
  Matrix h;                    // hopping matrix, Hermitian n x n
  Eigen::VectorXd gain;        // g_s per site
  Eigen::VectorXd loss;        // l_s per site
  double dephasing = 0.0;      // kappa

  /// H = -sum (c_i^+ c_{i+1} + h.c.), L_i = sqrt(4 gamma) n_i.
  static CovarianceModel fermion_dephasing(int n, double gamma);
  /// H = sum (b_i^+ b_{i+1} + h.c.), L = sqrt(2 Gamma) b_s^+ (s 1-based).
  static CovarianceModel boson_source(int n, double rate, int site);
  /// Fermionic analog of boson_source.
  static CovarianceModel fermion_source(int n, double rate, int site);
  /// XX chain sum (X_i X_{i+1} + Y_i Y_{i+1}) with boundary Sp/Sm jumps of
  /// strengths eps (1 +- mu)/2, mapped to fermions with n = |Up><Up|.
  static CovarianceModel xx_boundary(int n, double eps_l, double mu_l, double eps_r,
                                     double mu_r);

  Matrix derivative(const Matrix& c) const;
};

/// RK4 from 0 to t with step halving until two successive results agree to
/// 1e-10 (max-abs).
Matrix covariance_evolve(const CovarianceModel& model, const Matrix& c0, double t, double dt);

/// Values at the given increasing times, each continued from the previous.
std::vector<Matrix> covariance_trajectory(const CovarianceModel& model, const Matrix& c0,
                                          const std::vector<double>& times, double dt);

/// <sigma^z_1> and the bond-1 current <X_1 Y_2 - Y_1 X_2> of the XX model.
double xx_magnetization(const Matrix& c, int site);
double xx_current(const Matrix& c, int site);

}  // namespace mixmps::oracles
