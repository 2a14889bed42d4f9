#include "dtctrl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dtctrl/errors.hpp"

namespace dtctrl {

const char* to_string(Controllability c) {
  switch (c) {
    case Controllability::CertifiedControllable:
      return "CertifiedControllable";
    case Controllability::CertifiedNotControllable:
      return "CertifiedNotControllable";
    case Controllability::FullRankControllable:
      return "FullRankControllable";
    case Controllability::Inconclusive:
      return "Inconclusive";
  }
  return "?";
}

SpanKernel span_kernel(const std::vector<Eigen::VectorXd>& Y, double rel_tol,
                       bool allow_degenerate) {
  if (Y.empty()) throw DimensionMismatch("span_kernel: no variation vectors");
  const int n = static_cast<int>(Y.front().size());
  const int K = static_cast<int>(Y.size());
  Eigen::MatrixXd M(n, K);
  for (int k = 0; k < K; ++k) M.col(k) = Y[static_cast<std::size_t>(k)];

  SpanKernel sk;
  sk.tol_used = rel_tol;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  sk.singular_values = svd.singularValues();
  const double smax = sk.singular_values.size() > 0 ? sk.singular_values(0) : 0.0;

  if (smax <= 0.0) {
    if (!allow_degenerate) {
      throw DegenerateInput("span_kernel: all variation vectors vanish");
    }
    sk.rank = 0;
    sk.codim = n;
    sk.L_basis = Eigen::MatrixXd(n, 0);
    sk.Lperp_basis = Eigen::MatrixXd::Identity(n, n);
    sk.K_basis = Eigen::MatrixXd::Identity(K, K);
    sk.spectral_gap = std::numeric_limits<double>::infinity();
    return sk;
  }

  const double cut = rel_tol * smax;
  int rank = 0;
  for (Eigen::Index i = 0; i < sk.singular_values.size(); ++i) {
    if (sk.singular_values(i) > cut) ++rank;
  }
  sk.rank = rank;
  sk.codim = n - rank;
  sk.L_basis = svd.matrixU().leftCols(rank);
  sk.Lperp_basis = svd.matrixU().rightCols(n - rank);
  sk.K_basis = svd.matrixV().rightCols(K - rank);

  const double kept = rank > 0 ? sk.singular_values(rank - 1) : 0.0;
  const double dropped =
      rank < sk.singular_values.size() ? sk.singular_values(rank) : 0.0;
  sk.spectral_gap =
      dropped > 0.0 ? kept / dropped : std::numeric_limits<double>::infinity();
  // Rank decisions within 3 decades of the threshold are surfaced, not trusted.
  sk.rank_ambiguous = (dropped > cut / 1e3) || (kept < smax * rel_tol * 1e3);
  return sk;
}

RestrictedForm restricted_in_basis(const HessianForm& H, const Eigen::MatrixXd& basis,
                                   const Eigen::RowVectorXd& lambda) {
  RestrictedForm rf;
  rf.lambda = lambda;
  const Eigen::MatrixXd G = H.scalar_matrix(lambda);
  rf.matrix = basis.transpose() * G * basis;
  rf.matrix = 0.5 * (rf.matrix + rf.matrix.transpose().eval());
  if (rf.matrix.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rf.matrix);
    rf.eigenvalues = es.eigenvalues();
  } else {
    rf.eigenvalues = Eigen::VectorXd(0);
  }
  return rf;
}

RestrictedForm restrict_form(const HessianForm& H, const SpanKernel& sk,
                             const Eigen::RowVectorXd& lambda, double in_span_tol) {
  const Eigen::VectorXd lt = lambda.transpose();
  const Eigen::VectorXd proj = sk.Lperp_basis * (sk.Lperp_basis.transpose() * lt);
  const double residual = (lt - proj).norm();
  if (residual > in_span_tol * std::max(1.0, lt.norm())) {
    throw LambdaNotInAnnihilator("lambda is not in the annihilator of L (residual " +
                                 std::to_string(residual) + ")");
  }
  return restricted_in_basis(H, sk.K_basis, lambda);
}

Inertia inertia_of(const Eigen::VectorXd& eigenvalues, double eig_tol) {
  Inertia in;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues(i) > eig_tol) {
      ++in.n_plus;
    } else if (eigenvalues(i) < -eig_tol) {
      ++in.n_minus;
    } else {
      ++in.n_zero;
    }
  }
  return in;
}

Inertia index_pair(const RestrictedForm& rf, double eig_tol) {
  return inertia_of(rf.eigenvalues, eig_tol);
}

std::vector<Eigen::VectorXd> unit_sphere_grid(int k, int density) {
  std::vector<Eigen::VectorXd> pts;
  if (k <= 0) return pts;
  if (k == 1) {
    pts.push_back(Eigen::VectorXd::Ones(1));
    return pts;
  }
  if (k == 2) {
    pts.reserve(static_cast<std::size_t>(density));
    for (int j = 0; j < density; ++j) {
      const double th = 2.0 * std::numbers::pi * j / density;
      Eigen::VectorXd p(2);
      p << std::cos(th), std::sin(th);
      pts.push_back(p);
    }
    return pts;
  }
  if (k == 3) {
    pts.reserve(static_cast<std::size_t>(density));
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int j = 0; j < density; ++j) {
      const double z = 1.0 - 2.0 * (j + 0.5) / density;
      const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double th = golden * j;
      Eigen::VectorXd p(3);
      p << rad * std::cos(th), rad * std::sin(th), z;
      pts.push_back(p);
    }
    return pts;
  }
  // k >= 4: deterministic pseudo-random directions (fixed seed).
  std::uint64_t state = 0xD7C7A15EED5EEDull + static_cast<std::uint64_t>(k);
  auto next = [&]() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return static_cast<double>(state >> 11) * 0x1.0p-53;
  };
  pts.reserve(static_cast<std::size_t>(density));
  while (static_cast<int>(pts.size()) < density) {
    Eigen::VectorXd p(k);
    for (int i = 0; i < k; ++i) {
      // Box-Muller
      const double u1 = std::max(next(), 1e-16);
      const double u2 = next();
      p(i) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    const double nrm = p.norm();
    if (nrm > 1e-8) pts.push_back(p / nrm);
  }
  return pts;
}

namespace {

double min_eig_for_coeff(const Eigen::MatrixXd& Lperp, const Eigen::VectorXd& c,
                         const HessianForm& H, const Eigen::MatrixXd& K_basis) {
  const Eigen::RowVectorXd lambda = (Lperp * c).transpose();
  const RestrictedForm rf = restricted_in_basis(H, K_basis, lambda);
  return rf.eigenvalues.size() > 0 ? rf.eigenvalues(0) : 0.0;
}

}  // namespace

std::pair<Eigen::RowVectorXd, double> find_positive_definite_lambda(
    const HessianForm& H, const SpanKernel& sk, const AnalysisOptions& opts) {
  const int k = sk.codim;
  Eigen::VectorXd best_c;
  double best = -std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& base : unit_sphere_grid(k, opts.sphere_density)) {
    for (const double sign : {1.0, -1.0}) {
      const Eigen::VectorXd c = sign * base;
      const double v = min_eig_for_coeff(sk.Lperp_basis, c, H, sk.K_basis);
      if (v > best) {
        best = v;
        best_c = c;
      }
    }
  }
  // Pattern refinement on the coefficient sphere.
  double h = 0.25;
  while (h > 1e-5) {
    bool improved = false;
    for (int i = 0; i < k; ++i) {
      for (const double sgn : {1.0, -1.0}) {
        Eigen::VectorXd c = best_c + sgn * h * Eigen::VectorXd::Unit(k, i);
        c.normalize();
        const double v = min_eig_for_coeff(sk.Lperp_basis, c, H, sk.K_basis);
        if (v > best) {
          best = v;
          best_c = c;
          improved = true;
        }
      }
    }
    if (!improved) h *= 0.5;
  }
  return {(sk.Lperp_basis * best_c).transpose(), best};
}

ControllabilityVerdict verdict_from_data(const VariationData& vd,
                                         const AnalysisOptions& opts) {
  ControllabilityVerdict out;
  out.sk = span_kernel(vd.Y, opts.rank_tol);
  const SpanKernel& sk = out.sk;
  const int n = vd.n;
  const int k = sk.codim;

  if (sk.rank_ambiguous) {
    out.status = Controllability::Inconclusive;
    out.notes = "rank decision ambiguous (spectral gap " +
                std::to_string(sk.spectral_gap) + "); certification refused";
    return out;
  }
  if (sk.rank == n) {
    out.status = Controllability::FullRankControllable;
    out.notes = "first variations span the tangent space";
    return out;
  }

  const int d = sk.dim_kernel();
  if (d == 0) {
    // Ind- = 0 < k: the index condition cannot hold; nothing is certified.
    out.status = Controllability::Inconclusive;
    out.notes = "kernel is trivial while codim L = " + std::to_string(k) +
                "; index condition unsatisfiable";
    return out;
  }

  const auto grid = unit_sphere_grid(k, k == 1 ? 1 : opts.sphere_density);
  double worst_margin = std::numeric_limits<double>::infinity();
  bool all_hold = true;
  for (const Eigen::VectorXd& c : grid) {
    for (const double sign : {1.0, -1.0}) {
      const Eigen::RowVectorXd lambda = (sign * (sk.Lperp_basis * c)).transpose();
      const RestrictedForm rf = restricted_in_basis(vd.H, sk.K_basis, lambda);
      const Inertia in = inertia_of(rf.eigenvalues, opts.eig_tol);
      LambdaRow row;
      row.lambda = lambda;
      row.inertia = in;
      row.min_eig = rf.eigenvalues(0);
      // n_minus >= k iff the k-th smallest eigenvalue clears -eig_tol.
      row.index_margin = d >= k ? -rf.eigenvalues(k - 1) : -1.0;
      if (static_cast<int>(out.rows.size()) < 16) out.rows.push_back(row);
      ++out.lambda_samples;
      worst_margin = std::min(worst_margin, row.index_margin);
      if (in.n_minus < k) all_hold = false;
    }
  }
  out.worst_index_margin = worst_margin;

  if (all_hold && worst_margin > opts.eig_tol) {
    out.status = Controllability::CertifiedControllable;
    out.notes = k == 1 ? "index condition holds for the unique +-lambda"
                       : "index condition held at every sampled lambda (numerical "
                         "support, not a proof, for k >= 2)";
    return out;
  }

  const auto [witness, margin] = find_positive_definite_lambda(vd.H, sk, opts);
  if (margin > opts.eig_tol) {
    out.status = Controllability::CertifiedNotControllable;
    out.witness = witness;
    out.witness_margin = margin;
    const RestrictedForm rf = restricted_in_basis(vd.H, sk.K_basis, witness);
    out.witness_inertia = inertia_of(rf.eigenvalues, opts.eig_tol);
    out.notes = "a positive definite lambda H on the kernel certifies non-controllability";
    return out;
  }

  out.status = Controllability::Inconclusive;
  out.notes = "index condition failed at some lambda and no positive definite "
              "witness was found (failure to find one is not nonexistence)";
  return out;
}

ControllabilityVerdict controllability_verdict(const DiscreteSystem& sys,
                                               const Eigen::VectorXd& x0,
                                               const ControlSequence& ubar,
                                               const AnalysisOptions& opts) {
  if (!sys.strictly_interior(ubar)) {
    throw Error("control sequence is not strictly interior to the control box");
  }
  const VariationData vd = compute_variations(sys, x0, ubar);
  return verdict_from_data(vd, opts);
}

}  // namespace dtctrl
