#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "dtctrl/optimal.hpp"
#include "dtctrl/system.hpp"

namespace dtctrl {

/// Endpoint map F(ubar) = f_{u_N}...f_{u_1}(x0) as a plain function of the
/// flat control vector; evaluation is the rollout code path itself.
class EndpointMap {
 public:
  EndpointMap(const DiscreteSystem& sys, Eigen::VectorXd x0)
      : sys_(&sys), x0_(std::move(x0)) {}

  Eigen::VectorXd operator()(const Eigen::VectorXd& flat_controls) const {
    return sys_->rollout(x0_, ControlSequence(sys_->m(), flat_controls)).states.back();
  }

  const DiscreteSystem& sys() const { return *sys_; }
  const Eigen::VectorXd& x0() const { return x0_; }

 private:
  const DiscreteSystem* sys_;
  Eigen::VectorXd x0_;
};

/// Central differences with one Richardson step, h = 1e-5. Independent of the
/// hyper-dual path it cross-checks.
Eigen::MatrixXd fd_jacobian(const EndpointMap& F, const ControlSequence& ubar);

/// Second derivative of eps -> F(ubar + eps a) at 0 (h = 1e-4, Richardson).
/// Throws KernelViolation when the first-difference term dominates, i.e. a is
/// not in ker dF.
Eigen::VectorXd fd_hessian_on_kernel(const EndpointMap& F, const ControlSequence& ubar,
                                     const Eigen::VectorXd& a);

struct ReachProbe {
  double radius = 0.05;
  int samples = 20000;
  std::uint64_t seed = 1;
  int random_directions = 50;
  double coverage_floor = -1.0;  // < 0: use 1e-4 * radius^2
};

/// One-sided level-set check against a certified quadratic cost: reachable
/// samples must
/// satisfy lt.(F(v)-xN) + 0.5 (F(v)-xN)^T quad (F(v)-xN) >= -violation_floor.
struct LevelSet {
  Eigen::RowVectorXd lambda_tilde;
  Eigen::MatrixXd quad;
  Eigen::VectorXd xN;
  double violation_floor = 1e-6;
};

enum class ReachVerdict { InteriorLikely, BoundaryLikely, Ambiguous };

const char* to_string(ReachVerdict v);

struct ProbeReport {
  std::vector<Eigen::VectorXd> directions;
  std::vector<double> coverage;  // per direction: max over samples of d.(F(v)-F(ubar))
  double min_coverage = 0.0;
  double coverage_floor_used = 0.0;
  ReachVerdict verdict = ReachVerdict::Ambiguous;
  std::optional<double> level_min;  // min over samples of the level-set value
  std::uint64_t seed = 0;
};

/// Monte-Carlo reachable-set probe around ubar (uniform box, clipped to the
/// control box). Deterministic given the seed; never overrides analytic
/// verdicts, only cross-checks them.
ProbeReport probe_interior(const EndpointMap& F, const ControlSequence& ubar,
                           const ReachProbe& probe,
                           const std::optional<LevelSet>& level = std::nullopt);

struct MinimizeResult {
  ControlSequence ubar;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
};

/// Gradient descent with backtracking on psi = phi o F; a test oracle for the
/// necessary conditions, not part of the certified surface.
MinimizeResult minimize_psi(const MeyerProblem& prob, const ControlSequence& u_init,
                            int max_iter = 10000, double grad_tol = 1e-10);

/// Principal-angle distance ||U U^T - V V^T||_2 between subspaces given
/// orthonormal bases.
double subspace_distance(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V);

}  // namespace dtctrl
