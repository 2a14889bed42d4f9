#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "dtctrl/variation.hpp"

namespace dtctrl {

/// Orthonormal span/kernel/annihilator data of the map a -> sum a_i^r Y^{ir}(x0).
struct SpanKernel {
  Eigen::MatrixXd L_basis;      // n x rank
  Eigen::MatrixXd K_basis;      // (Nm) x dimK
  Eigen::MatrixXd Lperp_basis;  // n x codim (covectors, stored as columns)
  int rank = 0;
  int codim = 0;
  double tol_used = 0.0;
  Eigen::VectorXd singular_values;
  double spectral_gap = 0.0;  // smallest kept / largest dropped singular value
  bool rank_ambiguous = false;

  int dim_kernel() const { return static_cast<int>(K_basis.cols()); }
};

/// SVD-based decomposition. rel_tol is relative to the largest singular value.
/// Throws DegenerateInput when every Y vanishes unless allow_degenerate, in
/// which case rank 0 with full kernel/annihilator is returned.
SpanKernel span_kernel(const std::vector<Eigen::VectorXd>& Y, double rel_tol = 1e-8,
                       bool allow_degenerate = false);

struct Inertia {
  int n_plus = 0;
  int n_zero = 0;
  int n_minus = 0;
  bool operator==(const Inertia&) const = default;
};

/// lambda H restricted to a subspace: matrix[p][q] = lambda . H(basis_p, basis_q).
struct RestrictedForm {
  Eigen::RowVectorXd lambda;
  Eigen::MatrixXd matrix;
  Eigen::VectorXd eigenvalues;  // ascending
};

/// Restriction without membership check (used where lambda is not required to
/// annihilate L, e.g. adjoint SO reporting).
RestrictedForm restricted_in_basis(const HessianForm& H, const Eigen::MatrixXd& basis,
                                   const Eigen::RowVectorXd& lambda);

/// Checked variant: requires lambda in span(Lperp_basis) within in_span_tol
/// (relative), else LambdaNotInAnnihilator.
RestrictedForm restrict_form(const HessianForm& H, const SpanKernel& sk,
                             const Eigen::RowVectorXd& lambda, double in_span_tol = 1e-6);

/// Eigenvalue inertia at an absolute tolerance: (count > tol, count in
/// [-tol,tol], count < -tol). For a nondegenerate form this is
/// (Ind+, dim ker, Ind-).
Inertia index_pair(const RestrictedForm& rf, double eig_tol = 1e-9);
Inertia inertia_of(const Eigen::VectorXd& eigenvalues, double eig_tol);

enum class Controllability {
  CertifiedControllable,
  CertifiedNotControllable,
  FullRankControllable,
  Inconclusive,
};

const char* to_string(Controllability c);

struct AnalysisOptions {
  double rank_tol = 1e-8;     // relative singular value threshold
  double eig_tol = 1e-9;      // absolute eigenvalue tolerance of restricted forms
  double in_span_tol = 1e-6;  // annihilator membership tolerance
  int sphere_density = 64;    // lambda samples per sphere (k >= 2)
  double cond_I_tol = 1e-7;   // criticality residual tolerance (optimal layer)
};

struct LambdaRow {
  Eigen::RowVectorXd lambda;  // unit covector
  Inertia inertia;
  double min_eig = 0.0;
  double index_margin = 0.0;  // -(k-th smallest eigenvalue); >0 means n_minus >= k held
};

struct ControllabilityVerdict {
  Controllability status = Controllability::Inconclusive;
  SpanKernel sk;
  int lambda_samples = 0;
  double worst_index_margin = 0.0;        // min over samples (index condition)
  std::optional<Eigen::RowVectorXd> witness;  // unit covector, CertifiedNot only
  std::optional<Inertia> witness_inertia;
  double witness_margin = 0.0;  // smallest eigenvalue of the witness form
  std::vector<LambdaRow> rows;  // sampled subset for reports
  std::string notes;
};

/// Deterministic unit-sphere grid in R^k: {+e} for k=1, equal angles for k=2,
/// Fibonacci spiral for k=3, fixed-seed directions beyond. Callers pair each
/// sample with its negation.
std::vector<Eigen::VectorXd> unit_sphere_grid(int k, int density);

/// Second-order controllability verdict at (x0, ubar). Requires ubar strictly
/// interior to the control box.
ControllabilityVerdict controllability_verdict(const DiscreteSystem& sys,
                                               const Eigen::VectorXd& x0,
                                               const ControlSequence& ubar,
                                               const AnalysisOptions& opts = {});

/// Same decision logic on precomputed variation data.
ControllabilityVerdict verdict_from_data(const VariationData& vd,
                                         const AnalysisOptions& opts = {});

/// Search max over unit lambda in span(Lperp) of the smallest eigenvalue of
/// the restricted form (grid seeding + pattern refinement). Returns the best
/// covector and its smallest eigenvalue.
std::pair<Eigen::RowVectorXd, double> find_positive_definite_lambda(
    const HessianForm& H, const SpanKernel& sk, const AnalysisOptions& opts);

}  // namespace dtctrl
