#include "dtctrl/system.hpp"

#include <cmath>
#include <map>

#include "dtctrl/errors.hpp"

namespace dtctrl {

namespace {

void check_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw NonFiniteResult(std::string(what) + " produced a non-finite value");
}

double condition_estimate(const Eigen::MatrixXd& A) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

}  // namespace

HDVec lift_vector(const Eigen::VectorXd& v) {
  HDVec out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = lift_const(v(i));
  return out;
}

Eigen::VectorXd values_of(std::span<const HyperDual> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i].v;
  return out;
}

Eigen::PartialPivLU<Eigen::MatrixXd> gated_lu(const Eigen::MatrixXd& A) {
  const double cond = condition_estimate(A);
  if (!std::isfinite(cond) || cond > kConditionLimit) {
    throw SingularJacobian("Jacobian condition number " + std::to_string(cond) +
                           " exceeds limit");
  }
  return Eigen::PartialPivLU<Eigen::MatrixXd>(A);
}

Eigen::VectorXd gated_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  return gated_lu(A).solve(b);
}

DiscreteSystem::DiscreteSystem(int n, int m, Dynamics f, Dynamics finv,
                               std::vector<std::optional<std::pair<double, double>>> u_box,
                               std::string name)
    : n_(n), m_(m), f_(std::move(f)), finv_(std::move(finv)), u_box_(std::move(u_box)),
      name_(std::move(name)) {
  if (u_box_.empty()) u_box_.assign(static_cast<std::size_t>(m_), std::nullopt);
}

DiscreteSystem DiscreteSystem::from_file(const SystemFile& sf, std::string name) {
  auto dyn = sf.dynamics;
  Dynamics f = [dyn](std::span<const HyperDual> x, std::span<const HyperDual> u,
                     std::span<HyperDual> out) {
    for (std::size_t i = 0; i < dyn.size(); ++i) out[i] = eval(*dyn[i], x, u);
  };
  Dynamics finv;
  if (!sf.inverse.empty()) {
    auto inv = sf.inverse;
    finv = [inv](std::span<const HyperDual> x, std::span<const HyperDual> u,
                 std::span<HyperDual> out) {
      for (std::size_t i = 0; i < inv.size(); ++i) out[i] = eval(*inv[i], x, u);
    };
  }
  return DiscreteSystem(sf.n, sf.m, std::move(f), std::move(finv), sf.u_box, std::move(name));
}

void DiscreteSystem::eval_f(std::span<const HyperDual> x, std::span<const HyperDual> u,
                            std::span<HyperDual> out) const {
  f_(x, u, out);
}

void DiscreteSystem::eval_finv(std::span<const HyperDual> x, std::span<const HyperDual> u,
                               std::span<HyperDual> out) const {
  if (!finv_) throw Error("system '" + name_ + "' has no analytic inverse");
  finv_(x, u, out);
}

Eigen::VectorXd DiscreteSystem::step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  if (x.size() != n_ || u.size() != m_) throw DimensionMismatch("step: bad x or u dimension");
  if (!x.allFinite() || !u.allFinite()) throw NonFiniteResult("step: non-finite input");
  HDVec xh = lift_vector(x), uh = lift_vector(u), out(static_cast<std::size_t>(n_));
  f_(xh, uh, out);
  Eigen::VectorXd y = values_of(out);
  check_finite(y, "step");
  return y;
}

Eigen::VectorXd DiscreteSystem::inverse_step(const Eigen::VectorXd& y, const Eigen::VectorXd& u,
                                             std::optional<Eigen::VectorXd> x_hint) const {
  if (finv_) {
    HDVec yh = lift_vector(y), uh = lift_vector(u), out(static_cast<std::size_t>(n_));
    finv_(yh, uh, out);
    Eigen::VectorXd x = values_of(out);
    check_finite(x, "inverse_step");
    return x;
  }
  // Newton from the hint (default: the image point, which selects the local
  // branch for mildly nonlinear maps). Once inside the contract tolerance the
  // iteration polishes down to the roundoff floor so downstream
  // finite-difference curves are not limited by the solver residual.
  Eigen::VectorXd x = x_hint.value_or(y);
  constexpr int kMaxIter = 50;
  constexpr double kTol = 1e-10;
  double res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < kMaxIter; ++it) {
    const Eigen::VectorXd r = step(x, u) - y;
    const double rn = r.norm();
    if (rn <= kTol && rn >= 0.25 * res) return x;  // at the floor
    if (rn <= 1e-15 * (1.0 + y.norm())) return x;
    res = rn;
    x -= gated_solve(jac_x(x, u), r);
  }
  res = (step(x, u) - y).norm();
  if (res <= kTol) return x;
  throw NewtonDivergence("inverse_step: no convergence after 50 iterations, residual " +
                         std::to_string(res));
}

Eigen::MatrixXd DiscreteSystem::jac_x(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  Eigen::MatrixXd J(n_, n_);
  HDVec xh = lift_vector(x), uh = lift_vector(u), out(static_cast<std::size_t>(n_));
  for (int q = 0; q < n_; ++q) {
    xh[static_cast<std::size_t>(q)].d1 = 1.0;
    f_(xh, uh, out);
    xh[static_cast<std::size_t>(q)].d1 = 0.0;
    for (int p = 0; p < n_; ++p) J(p, q) = out[static_cast<std::size_t>(p)].d1;
  }
  if (!J.allFinite()) throw NonFiniteResult("jac_x: non-finite entries");
  return J;
}

Eigen::MatrixXd DiscreteSystem::jac_u(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  Eigen::MatrixXd J(n_, m_);
  HDVec xh = lift_vector(x), uh = lift_vector(u), out(static_cast<std::size_t>(n_));
  for (int r = 0; r < m_; ++r) {
    uh[static_cast<std::size_t>(r)].d1 = 1.0;
    f_(xh, uh, out);
    uh[static_cast<std::size_t>(r)].d1 = 0.0;
    for (int p = 0; p < n_; ++p) J(p, r) = out[static_cast<std::size_t>(p)].d1;
  }
  if (!J.allFinite()) throw NonFiniteResult("jac_u: non-finite entries");
  return J;
}

Trajectory DiscreteSystem::rollout(const Eigen::VectorXd& x0, const ControlSequence& ubar) const {
  if (ubar.m != m_) throw DimensionMismatch("rollout: control dimension mismatch");
  Trajectory t;
  t.states.reserve(static_cast<std::size_t>(ubar.steps()) + 1);
  t.states.push_back(x0);
  for (int i = 0; i < ubar.steps(); ++i) t.states.push_back(step(t.states.back(), ubar.at(i)));
  return t;
}

bool DiscreteSystem::strictly_interior(const ControlSequence& ubar) const {
  for (int i = 0; i < ubar.steps(); ++i) {
    const Eigen::VectorXd u = ubar.at(i);
    for (int r = 0; r < m_; ++r) {
      const auto& box = u_box_[static_cast<std::size_t>(r)];
      if (box && (u(r) <= box->first || u(r) >= box->second)) return false;
    }
  }
  return true;
}

namespace {

const std::map<std::string, const char*>& registry() {
  // The running example on R^3 and the scalar linear system; both stored as
  // DSL source so built-ins and user files share one code path.
  static const std::map<std::string, const char*> reg = {
      {"example-r3",
       "dims 3 1\n"
       "f1 = -x1 + x3 + u1^2/2\n"
       "f2 = x1*x3 - x2\n"
       "f3 = x3 + u1^2/2\n"
       "finv1 = -x1 + x3\n"
       "finv2 = (-x1 + x3)*(x3 - u1^2/2) - x2\n"
       "finv3 = x3 - u1^2/2\n"},
      {"linear-generic",
       "dims 1 1\n"
       "f1 = 2*x1 + u1\n"
       "finv1 = (x1 - u1)/2\n"},
  };
  return reg;
}

}  // namespace

DiscreteSystem builtin_system(const std::string& name) {
  const char* src = builtin_system_source(name);
  return DiscreteSystem::from_file(parse_system_file(src), name);
}

std::vector<std::string> builtin_system_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : registry()) names.push_back(k);
  return names;
}

const char* builtin_system_source(const std::string& name) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw Error("unknown built-in system '" + name + "'");
  return it->second;
}

}  // namespace dtctrl
