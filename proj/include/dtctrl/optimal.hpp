#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dtctrl/analysis.hpp"
#include "dtctrl/variation.hpp"

namespace dtctrl {

/// Scalar function of the state, evaluable on hyper-duals so gradients and
/// Hessians come from seeding.
using ScalarField = std::function<HyperDual(std::span<const HyperDual> x)>;
using RunningCost =
    std::function<HyperDual(std::span<const HyperDual> x, std::span<const HyperDual> u)>;

/// Meyer problem: minimize phi(x_N) over control sequences of fixed length.
struct MeyerProblem {
  DiscreteSystem sys;
  Eigen::VectorXd x0;
  ScalarField phi;
};

/// Bolza problem: Meyer plus a running cost sum_t c(x_{t-1}, u_t).
struct BolzaProblem {
  DiscreteSystem sys;
  Eigen::VectorXd x0;
  ScalarField phi;
  RunningCost cost;
};

ScalarField scalar_from_expr(ExprPtr e);
RunningCost running_cost_from_expr(ExprPtr e);

Eigen::RowVectorXd phi_gradient(const ScalarField& phi, const Eigen::VectorXd& x);
Eigen::MatrixXd phi_hessian(const ScalarField& phi, const Eigen::VectorXd& x);

/// lambda = dphi(x_N) df_{u_N}(x_{N-1}) ... df_{u_1}(x_0)  (row vector times
/// the step Jacobians, rightmost factor at x_0).
Eigen::RowVectorXd lambda_covector(const DiscreteSystem& sys, const Eigen::VectorXd& x0,
                                   const ControlSequence& ubar,
                                   const Eigen::RowVectorXd& dphi_at_xN);

/// Endpoint map F(ubar) = f_ubar(x0) and its exact derivatives by hyper-dual
/// seeding of the flat control coordinates.
Eigen::VectorXd endpoint(const DiscreteSystem& sys, const Eigen::VectorXd& x0,
                         const ControlSequence& ubar);
Eigen::MatrixXd endpoint_jacobian_ad(const DiscreteSystem& sys, const Eigen::VectorXd& x0,
                                     const ControlSequence& ubar);
Eigen::VectorXd endpoint_second_derivative(const DiscreteSystem& sys, const Eigen::VectorXd& x0,
                                           const ControlSequence& ubar, int i, int j);

double psi_value(const MeyerProblem& prob, const ControlSequence& ubar);
Eigen::VectorXd psi_gradient(const MeyerProblem& prob, const ControlSequence& ubar);
Eigen::MatrixXd psi_hessian(const MeyerProblem& prob, const ControlSequence& ubar);

struct NecessaryReport {
  Eigen::RowVectorXd lambda;
  double cond_I_residual = 0.0;  // max_{i,r} |lambda . Y^{ir}|
  Inertia cond_II;               // inertia of lambda H restricted to K
  int dim_kernel = 0;
  bool cond_I_ok = false;
  bool cond_II_ok = false;  // n_minus == 0
};

NecessaryReport check_meyer_necessary(const MeyerProblem& prob, const ControlSequence& ubar,
                                      const AnalysisOptions& opts = {});

/// Sufficiency comparison form Q on L = Im dF(ubar), built from
/// S^T Qtilde S = Btilde with Btilde_22 = -A_22 in the K + K_perp + ker A
/// decomposition; Qtilde is completed by zero off Im S.
struct QForm {
  Eigen::MatrixXd S;        // n x (Nm), dF(ubar) via df_ubar . Y columns
  Eigen::MatrixXd A;        // (Nm)x(Nm), dphi(x_N) d2F(ubar)
  Eigen::MatrixXd Btilde;   // (Nm)x(Nm)
  Eigen::MatrixXd Qtilde;   // n x n, zero off Im S
  Eigen::MatrixXd L_onb;    // n x dimL, orthonormal basis of Im S
  Eigen::MatrixXd Q_on_L;   // dimL x dimL, Qtilde in L_onb coordinates
  Eigen::MatrixXd K_basis, Kperp_basis, kerA_basis;
  double residual_SQS = 0.0;     // ||S^T Qtilde S - Btilde||_inf
  double min_eig_A_plus_B = 0.0; // smallest eigenvalue of A + Btilde
};

QForm qform_construct(const MeyerProblem& prob, const ControlSequence& ubar,
                      const AnalysisOptions& opts = {});

enum class OptimalityStatus { LocallyOptimal, NotCertified };

struct SufficientReport {
  Eigen::RowVectorXd lambda;
  double cond_I_residual = 0.0;
  Inertia cond_III;
  double cond_III_margin = 0.0;  // smallest eigenvalue of lambda H | K
  double cond_IV_margin = 0.0;   // smallest eigenvalue of d2phi|_L - Q
  double hess_psi_min_eig = 0.0; // direct autodiff cross-check of d2psi
  double grad_psi_norm = 0.0;
  OptimalityStatus verdict = OptimalityStatus::NotCertified;
  std::string reason;
  std::optional<QForm> qform;
};

SufficientReport check_meyer_sufficient(const MeyerProblem& prob, const ControlSequence& ubar,
                                        const AnalysisOptions& opts = {});

/// Bolza -> Meyer by state augmentation: x^0 integrates the running cost and
/// the final cost becomes phi(x) + x^0.
MeyerProblem bolza_reduce(const BolzaProblem& bp);

double bolza_objective(const BolzaProblem& bp, const ControlSequence& ubar);

struct AdjointTrajectory {
  std::vector<Eigen::VectorXd> xs;        // x_0..x_N
  std::vector<Eigen::RowVectorXd> ps;     // p_0..p_N
  std::vector<double> cc_residuals;       // t=1..N: ||dH/du(x_{t-1},p_t,u_t)||
  std::vector<Inertia> so_inertia;        // t=1..N: inertia of p_0 H^t | K^t
  std::vector<int> so_dim_kernel;         // t=1..N
  std::vector<int> so_codim;              // t=1..N: codim L^t
  Eigen::RowVectorXd lambda;              // = p_0
};

/// Hamiltonian adjoint recursion (Sigma*) with per-step criticality residuals
/// and second-order prefix checks.
AdjointTrajectory adjoint_chain(const MeyerProblem& prob, const ControlSequence& ubar,
                                const AnalysisOptions& opts = {});

struct PrefixIndexRow {
  int t = 0;
  int codim = 0;
  Inertia inertia;
  bool ic_ok = false;  // Ind- < codim L^t
};

struct GeometricReport {
  bool full_rank_prefix = false;  // some codim L^t == 0: not geometrically optimal
  int full_rank_t = -1;
  int k = 0;  // codim L^N
  int lambda_samples = 0;
  bool any_lambda_consistent = false;
  Eigen::RowVectorXd lambda_reported;          // a consistent lambda if found
  std::vector<PrefixIndexRow> rows_reported;   // per-t rows for lambda_reported
};

/// Geometric-optimality index check: does some sampled lambda in (L^N)^perp
/// satisfy the index condition (IC) at every prefix t? "None does" falsifies geometric
/// optimality at sample resolution.
GeometricReport check_geometric_hamiltonian(const DiscreteSystem& sys,
                                            const Eigen::VectorXd& x0,
                                            const ControlSequence& ubar,
                                            const AnalysisOptions& opts = {});

}  // namespace dtctrl
