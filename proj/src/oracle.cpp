#include "dtctrl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dtctrl/errors.hpp"

namespace dtctrl {

const char* to_string(ReachVerdict v) {
  switch (v) {
    case ReachVerdict::InteriorLikely:
      return "InteriorLikely";
    case ReachVerdict::BoundaryLikely:
      return "BoundaryLikely";
    case ReachVerdict::Ambiguous:
      return "Ambiguous";
  }
  return "?";
}

Eigen::MatrixXd fd_jacobian(const EndpointMap& F, const ControlSequence& ubar) {
  const int K = static_cast<int>(ubar.flat.size());
  const int n = F.sys().n();
  const double h = 1e-5;
  Eigen::MatrixXd J(n, K);
  for (int i = 0; i < K; ++i) {
    auto central = [&](double hh) {
      Eigen::VectorXd up = ubar.flat, um = ubar.flat;
      up(i) += hh;
      um(i) -= hh;
      return ((F(up) - F(um)) / (2.0 * hh)).eval();
    };
    J.col(i) = (4.0 * central(h / 2.0) - central(h)) / 3.0;
  }
  return J;
}

Eigen::VectorXd fd_hessian_on_kernel(const EndpointMap& F, const ControlSequence& ubar,
                                     const Eigen::VectorXd& a) {
  const double h = 1e-4;
  const Eigen::VectorXd f0 = F(ubar.flat);
  auto g = [&](double eps) { return F(ubar.flat + eps * a); };

  // A direction off the kernel shows up as an O(1) first difference where a
  // kernel direction leaves only O(h^2) residue.
  const Eigen::VectorXd first = (g(h) - g(-h)) / (2.0 * h);
  if (first.norm() > 1e-3 * a.norm() * (1.0 + f0.norm())) {
    throw KernelViolation("fd_hessian_on_kernel: direction is not in ker dF (first difference " +
                          std::to_string(first.norm()) + ")");
  }

  auto second = [&](double hh) { return ((g(hh) - 2.0 * f0 + g(-hh)) / (hh * hh)).eval(); };
  return (4.0 * second(h / 2.0) - second(h)) / 3.0;
}

namespace {

class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed) : state_(seed ? seed : 0x9E3779B97F4A7C15ull) {}

  // xorshift64*; portable and byte-stable across platforms
  double uniform() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    const std::uint64_t z = state_ * 0x2545F4914F6CDD1Dull;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
  }

  double gaussian() {
    const double u1 = std::max(uniform(), 1e-16);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace

ProbeReport probe_interior(const EndpointMap& F, const ControlSequence& ubar,
                           const ReachProbe& probe, const std::optional<LevelSet>& level) {
  const int K = static_cast<int>(ubar.flat.size());
  const int n = F.sys().n();
  const int m = F.sys().m();

  ProbeReport rep;
  rep.seed = probe.seed;
  rep.coverage_floor_used =
      probe.coverage_floor >= 0.0 ? probe.coverage_floor : 1e-4 * probe.radius * probe.radius;

  DeterministicRng rng(probe.seed);

  // Directions first (fixed draw order keeps reports byte-stable): +-e_i plus
  // random units and their negations.
  for (int i = 0; i < n; ++i) {
    rep.directions.push_back(Eigen::VectorXd::Unit(n, i));
    rep.directions.push_back(-Eigen::VectorXd::Unit(n, i));
  }
  for (int j = 0; j < probe.random_directions; ++j) {
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = rng.gaussian();
    if (d.norm() < 1e-12) d = Eigen::VectorXd::Unit(n, 0);
    d.normalize();
    rep.directions.push_back(d);
    rep.directions.push_back(-d);
  }
  rep.coverage.assign(rep.directions.size(), -std::numeric_limits<double>::infinity());

  // Per-coordinate sampling interval: ubar +- radius intersected with u_box.
  Eigen::VectorXd lo(K), hi(K);
  const auto& box = F.sys().u_box();
  for (int i = 0; i < K; ++i) {
    lo(i) = ubar.flat(i) - probe.radius;
    hi(i) = ubar.flat(i) + probe.radius;
    const auto& b = box[static_cast<std::size_t>(i % m)];
    if (b) {
      lo(i) = std::max(lo(i), b->first);
      hi(i) = std::min(hi(i), b->second);
    }
  }

  const Eigen::VectorXd f0 = F(ubar.flat);
  double level_min = std::numeric_limits<double>::infinity();

  Eigen::VectorXd v(K);
  for (int s = 0; s < probe.samples; ++s) {
    for (int i = 0; i < K; ++i) v(i) = lo(i) + rng.uniform() * (hi(i) - lo(i));
    const Eigen::VectorXd delta = F(v) - f0;
    for (std::size_t d = 0; d < rep.directions.size(); ++d) {
      rep.coverage[d] = std::max(rep.coverage[d], rep.directions[d].dot(delta));
    }
    if (level) {
      const Eigen::VectorXd dxN = F(v) - level->xN;
      const double val = level->lambda_tilde.dot(dxN) + 0.5 * dxN.dot(level->quad * dxN);
      level_min = std::min(level_min, val);
    }
  }

  rep.min_coverage = *std::min_element(rep.coverage.begin(), rep.coverage.end());
  if (level) rep.level_min = level_min;

  const bool all_covered = rep.min_coverage >= rep.coverage_floor_used;
  if (level && level_min >= -level->violation_floor) {
    rep.verdict = ReachVerdict::BoundaryLikely;
  } else if (all_covered) {
    rep.verdict = ReachVerdict::InteriorLikely;
  } else {
    // directions come in +-(pairs); the opposite of index d is d^1
    bool one_sided = false;
    for (std::size_t d = 0; d < rep.directions.size(); ++d) {
      const std::size_t opp = d ^ 1ull;
      if (rep.coverage[d] < rep.coverage_floor_used &&
          rep.coverage[opp] >= rep.coverage_floor_used) {
        one_sided = true;
        break;
      }
    }
    rep.verdict = one_sided ? ReachVerdict::BoundaryLikely : ReachVerdict::Ambiguous;
  }
  return rep;
}

MinimizeResult minimize_psi(const MeyerProblem& prob, const ControlSequence& u_init,
                            int max_iter, double grad_tol) {
  MinimizeResult res;
  res.ubar = u_init;
  double step = 1.0;
  double value = psi_value(prob, res.ubar);
  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    const Eigen::VectorXd g = psi_gradient(prob, res.ubar);
    res.grad_norm = g.norm();
    if (res.grad_norm <= grad_tol) {
      res.converged = true;
      return res;
    }
    // Armijo backtracking
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Eigen::VectorXd trial = res.ubar.flat - step * g;
      const double tv = psi_value(prob, ControlSequence(res.ubar.m, trial));
      if (tv <= value - 1e-4 * step * g.squaredNorm()) {
        res.ubar.flat = trial;
        value = tv;
        accepted = true;
        step = std::min(step * 1.5, 1e6);
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.grad_norm = psi_gradient(prob, res.ubar).norm();
      res.converged = res.grad_norm <= grad_tol;
      return res;
    }
  }
  res.grad_norm = psi_gradient(prob, res.ubar).norm();
  res.converged = res.grad_norm <= grad_tol;
  return res;
}

double subspace_distance(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V) {
  const Eigen::MatrixXd D = U * U.transpose() - V * V.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(D);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

}  // namespace dtctrl
