#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtctrl/expr.hpp"
#include "dtctrl/hyperdual.hpp"

namespace dtctrl {

using HDVec = std::vector<HyperDual>;

/// Componentwise dynamics callable on hyper-dual vectors. All derivative
/// extraction (Jacobians, mixed second derivatives) goes through seeding the
/// inputs of this one callable.
using Dynamics =
    std::function<void(std::span<const HyperDual> x, std::span<const HyperDual> u,
                       std::span<HyperDual> out)>;

/// Control sequence (u_1,...,u_N), each u_i in R^m, stored flat so the
/// endpoint map F: R^{Nm} -> R^n can seed coordinates directly.
struct ControlSequence {
  int m = 1;
  Eigen::VectorXd flat;

  ControlSequence() = default;
  ControlSequence(int control_dim, Eigen::VectorXd values)
      : m(control_dim), flat(std::move(values)) {}

  int steps() const { return m > 0 ? static_cast<int>(flat.size()) / m : 0; }
  Eigen::VectorXd at(int i) const { return flat.segment(static_cast<Eigen::Index>(i) * m, m); }
  ControlSequence prefix(int t) const {
    return ControlSequence(m, flat.head(static_cast<Eigen::Index>(t) * m));
  }
};

struct Trajectory {
  std::vector<Eigen::VectorXd> states;  // x_0 .. x_N
};

enum class InverseMode { Analytic, Newton };

/// Executable model of an invertible discrete-time system x_i = f(x_{i-1}, u_i).
/// Immutable after construction; every operation is pure.
class DiscreteSystem {
 public:
  DiscreteSystem(int n, int m, Dynamics f, Dynamics finv = nullptr,
                 std::vector<std::optional<std::pair<double, double>>> u_box = {},
                 std::string name = "");

  static DiscreteSystem from_file(const SystemFile& sf, std::string name = "");

  int n() const { return n_; }
  int m() const { return m_; }
  const std::string& name() const { return name_; }
  InverseMode inverse_mode() const {
    return finv_ ? InverseMode::Analytic : InverseMode::Newton;
  }
  const std::vector<std::optional<std::pair<double, double>>>& u_box() const { return u_box_; }

  void eval_f(std::span<const HyperDual> x, std::span<const HyperDual> u,
              std::span<HyperDual> out) const;
  void eval_finv(std::span<const HyperDual> x, std::span<const HyperDual> u,
                 std::span<HyperDual> out) const;

  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

  /// Solve f_u(x) = y for x. Analytic mode evaluates the user-supplied
  /// inverse; Newton mode iterates from x_hint (default y) until
  /// ||f_u(x) - y|| <= 1e-10, at most 50 iterations.
  Eigen::VectorXd inverse_step(const Eigen::VectorXd& y, const Eigen::VectorXd& u,
                               std::optional<Eigen::VectorXd> x_hint = std::nullopt) const;

  Eigen::MatrixXd jac_x(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
  Eigen::MatrixXd jac_u(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

  Trajectory rollout(const Eigen::VectorXd& x0, const ControlSequence& ubar) const;

  /// True iff every u_i is strictly inside the control box (vacuous for
  /// unbounded coordinates). Certification requires ubar in (int U)^N.
  bool strictly_interior(const ControlSequence& ubar) const;

 private:
  int n_, m_;
  Dynamics f_;
  Dynamics finv_;
  std::vector<std::optional<std::pair<double, double>>> u_box_;
  std::string name_;
};

/// Condition-gated linear solve: refuses (SingularJacobian) when the condition
/// number of A exceeds 1e12, so verdicts are never computed from garbage.
Eigen::VectorXd gated_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);
Eigen::PartialPivLU<Eigen::MatrixXd> gated_lu(const Eigen::MatrixXd& A);

inline constexpr double kConditionLimit = 1e12;

/// Built-in system registry ('example-r3', 'linear-generic').
DiscreteSystem builtin_system(const std::string& name);
std::vector<std::string> builtin_system_names();
const char* builtin_system_source(const std::string& name);

HDVec lift_vector(const Eigen::VectorXd& v);
Eigen::VectorXd values_of(std::span<const HyperDual> v);

}  // namespace dtctrl
