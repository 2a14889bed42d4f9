#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "dtctrl/system.hpp"

namespace dtctrl {

/// Vector field evaluated with first-order transport: the inputs carry
/// (value, d1-direction) pairs and the output does too, so one evaluation
/// yields both the field value and its directional derivative. Slot 2 of the
/// hyper-duals is reserved for differentiation inside the field itself.
using VectorField =
    std::function<void(std::span<const HyperDual> x, std::span<HyperDual> out)>;

/// X^+_{u,r}(x): solves df_u(x) v = df/du^r(x,u). The first-order sensitivity
/// of the forward step to the r-th control component, transported to the
/// pre-step point.
Eigen::VectorXd x_plus(const DiscreteSystem& sys, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u, int r);

/// Finite-difference reference fields for the defining epsilon-curves
/// (central differences, eps = 1e-5, one Richardson step). Test-only paths.
/// x_minus / y_minus invert f at x, which assumes strong invertibility there;
/// no certificate is derived from them.
Eigen::VectorXd y_plus(const DiscreteSystem& sys, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u, int r);
Eigen::VectorXd x_minus(const DiscreteSystem& sys, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& u, int r);
Eigen::VectorXd y_minus(const DiscreteSystem& sys, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& u, int r);

/// (Ad_u Y)(x) = (df_u(x))^{-1} Y(f_u(x)) for a plain field callable
/// (the pullback convention used for forward trajectories).
Eigen::VectorXd ad_apply(const DiscreteSystem& sys, const Eigen::VectorXd& u,
                         const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& field,
                         const Eigen::VectorXd& x);

/// Field factories used to assemble second variations.
VectorField x_plus_field(const DiscreteSystem& sys, const Eigen::VectorXd& u, int r);
VectorField ad_pullback(const DiscreteSystem& sys, const Eigen::VectorXd& u, VectorField inner);

/// Value and Jacobian of a transported field at a real point.
void field_value_jacobian(const VectorField& field, const Eigen::VectorXd& x,
                          Eigen::VectorXd& value, Eigen::MatrixXd& jacobian);

/// Lie bracket [V,W](x) = dW(x) V(x) - dV(x) W(x).
Eigen::VectorXd bracket(const VectorField& V, const VectorField& W, const Eigen::VectorXd& x);

/// Vector-valued quadratic form H(a) = sum_{k,l} a_k a_l Z^{kl}(x0) over all
/// ordered index pairs k,l in {1..Nm}; the tensor is stored once per unordered
/// pair.
class HessianForm {
 public:
  HessianForm() = default;
  HessianForm(int state_dim, int num_indices, std::vector<Eigen::VectorXd> upper);

  int indices() const { return K_; }
  int state_dim() const { return n_; }

  const Eigen::VectorXd& z(int k, int l) const;

  Eigen::VectorXd contract(const Eigen::VectorXd& a) const;
  Eigen::VectorXd bilinear(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

  /// Scalar projection: the symmetric (Nm)x(Nm) matrix G with
  /// G_kl = lambda . Z^{kl}, so lambda H(a) = a^T G a.
  Eigen::MatrixXd scalar_matrix(const Eigen::RowVectorXd& lambda) const;

  /// Leading t*m block, shared storage: prefix sequences see exactly the same
  /// tensor entries.
  HessianForm leading(int num_indices) const;

 private:
  int n_ = 0;
  int K_ = 0;
  std::vector<Eigen::VectorXd> upper_;  // packed (k,l), k <= l
};

/// Everything the controllability and optimality layers need at (x0, ubar):
/// first variations Y^{ir}, second variations Z^{ir,js}, the composed Jacobian
/// df_ubar(x0) and the rolled-out trajectory. Index k = i*m + r flattens
/// (step, control component) pairs, steps 0-based.
struct VariationData {
  Eigen::VectorXd x0;
  ControlSequence ubar;
  int n = 0, m = 0, N = 0;
  std::vector<Eigen::VectorXd> xs;  // x_0..x_N
  std::vector<Eigen::VectorXd> Y;   // N*m vectors in R^n
  HessianForm H;
  Eigen::MatrixXd df_ubar;

  int indices() const { return N * m; }
};

std::vector<Eigen::VectorXd> first_variations(const DiscreteSystem& sys,
                                              const Eigen::VectorXd& x0,
                                              const ControlSequence& ubar);

VariationData compute_variations(const DiscreteSystem& sys, const Eigen::VectorXd& x0,
                                 const ControlSequence& ubar);

/// H assembled from precomputed variation data (trivial accessor, kept as a
/// named operation).
inline const HessianForm& assemble_hessian(const VariationData& vd) { return vd.H; }

}  // namespace dtctrl
