#include "dtctrl/optimal.hpp"

#include <cmath>

#include "dtctrl/errors.hpp"

namespace dtctrl {

ScalarField scalar_from_expr(ExprPtr e) {
  return [e = std::move(e)](std::span<const HyperDual> x) {
    return eval(*e, x, std::span<const HyperDual>{});
  };
}

RunningCost running_cost_from_expr(ExprPtr e) {
  return [e = std::move(e)](std::span<const HyperDual> x, std::span<const HyperDual> u) {
    return eval(*e, x, u);
  };
}

Eigen::RowVectorXd phi_gradient(const ScalarField& phi, const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  HDVec xin = lift_vector(x);
  Eigen::RowVectorXd g(n);
  for (int q = 0; q < n; ++q) {
    xin[static_cast<std::size_t>(q)].d1 = 1.0;
    g(q) = phi(xin).d1;
    xin[static_cast<std::size_t>(q)].d1 = 0.0;
  }
  return g;
}

Eigen::MatrixXd phi_hessian(const ScalarField& phi, const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  HDVec xin = lift_vector(x);
  Eigen::MatrixXd Hm(n, n);
  for (int p = 0; p < n; ++p) {
    for (int q = p; q < n; ++q) {
      xin[static_cast<std::size_t>(p)].d1 = 1.0;
      xin[static_cast<std::size_t>(q)].d2 = 1.0;
      const double h = phi(xin).d12;
      xin[static_cast<std::size_t>(p)].d1 = 0.0;
      xin[static_cast<std::size_t>(q)].d2 = 0.0;
      Hm(p, q) = h;
      Hm(q, p) = h;
    }
  }
  return Hm;
}

Eigen::RowVectorXd lambda_covector(const DiscreteSystem& sys, const Eigen::VectorXd& x0,
                                   const ControlSequence& ubar,
                                   const Eigen::RowVectorXd& dphi_at_xN) {
  const Trajectory traj = sys.rollout(x0, ubar);
  Eigen::RowVectorXd lam = dphi_at_xN;
  for (int t = ubar.steps() - 1; t >= 0; --t) {
    lam = lam * sys.jac_x(traj.states[static_cast<std::size_t>(t)], ubar.at(t));
  }
  return lam;
}

namespace {

HDVec rollout_endpoint_hd(const DiscreteSystem& sys, const Eigen::VectorXd& x0,
                          const HDVec& flat_controls, int m) {
  HDVec x = lift_vector(x0);
  const int N = static_cast<int>(flat_controls.size()) / m;
  HDVec next(static_cast<std::size_t>(sys.n()));
  for (int i = 0; i < N; ++i) {
    const std::span<const HyperDual> u(flat_controls.data() + static_cast<std::size_t>(i) * m,
                                       static_cast<std::size_t>(m));
    sys.eval_f(x, u, next);
    x = next;
  }
  return x;
}

}  // namespace

Eigen::VectorXd endpoint(const DiscreteSystem& sys, const Eigen::VectorXd& x0,
                         const ControlSequence& ubar) {
  return sys.rollout(x0, ubar).states.back();
}

Eigen::MatrixXd endpoint_jacobian_ad(const DiscreteSystem& sys, const Eigen::VectorXd& x0,
                                     const ControlSequence& ubar) {
  const int K = static_cast<int>(ubar.flat.size());
  Eigen::MatrixXd J(sys.n(), K);
  HDVec flat = lift_vector(ubar.flat);
  for (int i = 0; i < K; ++i) {
    flat[static_cast<std::size_t>(i)].d1 = 1.0;
    const HDVec xN = rollout_endpoint_hd(sys, x0, flat, ubar.m);
    flat[static_cast<std::size_t>(i)].d1 = 0.0;
    for (int p = 0; p < sys.n(); ++p) J(p, i) = xN[static_cast<std::size_t>(p)].d1;
  }
  return J;
}

Eigen::VectorXd endpoint_second_derivative(const DiscreteSystem& sys, const Eigen::VectorXd& x0,
                                           const ControlSequence& ubar, int i, int j) {
  HDVec flat = lift_vector(ubar.flat);
  flat[static_cast<std::size_t>(i)].d1 = 1.0;
  flat[static_cast<std::size_t>(j)].d2 = 1.0;
  const HDVec xN = rollout_endpoint_hd(sys, x0, flat, ubar.m);
  Eigen::VectorXd out(sys.n());
  for (int p = 0; p < sys.n(); ++p) out(p) = xN[static_cast<std::size_t>(p)].d12;
  return out;
}

double psi_value(const MeyerProblem& prob, const ControlSequence& ubar) {
  const HDVec flat = lift_vector(ubar.flat);
  return prob.phi(rollout_endpoint_hd(prob.sys, prob.x0, flat, ubar.m)).v;
}

Eigen::VectorXd psi_gradient(const MeyerProblem& prob, const ControlSequence& ubar) {
  const int K = static_cast<int>(ubar.flat.size());
  Eigen::VectorXd g(K);
  HDVec flat = lift_vector(ubar.flat);
  for (int i = 0; i < K; ++i) {
    flat[static_cast<std::size_t>(i)].d1 = 1.0;
    g(i) = prob.phi(rollout_endpoint_hd(prob.sys, prob.x0, flat, ubar.m)).d1;
    flat[static_cast<std::size_t>(i)].d1 = 0.0;
  }
  return g;
}

Eigen::MatrixXd psi_hessian(const MeyerProblem& prob, const ControlSequence& ubar) {
  const int K = static_cast<int>(ubar.flat.size());
  Eigen::MatrixXd Hp(K, K);
  HDVec flat = lift_vector(ubar.flat);
  for (int i = 0; i < K; ++i) {
    for (int j = i; j < K; ++j) {
      flat[static_cast<std::size_t>(i)].d1 = 1.0;
      flat[static_cast<std::size_t>(j)].d2 = 1.0;
      const double h = prob.phi(rollout_endpoint_hd(prob.sys, prob.x0, flat, ubar.m)).d12;
      flat[static_cast<std::size_t>(i)].d1 = 0.0;
      flat[static_cast<std::size_t>(j)].d2 = 0.0;
      Hp(i, j) = h;
      Hp(j, i) = h;
    }
  }
  return Hp;
}

namespace {

double criticality_residual(const VariationData& vd, const Eigen::RowVectorXd& lambda) {
  double res = 0.0;
  for (const Eigen::VectorXd& y : vd.Y) res = std::max(res, std::abs(lambda * y));
  return res;
}

}  // namespace

NecessaryReport check_meyer_necessary(const MeyerProblem& prob, const ControlSequence& ubar,
                                      const AnalysisOptions& opts) {
  if (!prob.sys.strictly_interior(ubar)) {
    throw Error("control sequence is not strictly interior to the control box");
  }
  const VariationData vd = compute_variations(prob.sys, prob.x0, ubar);
  const Eigen::RowVectorXd dphi = phi_gradient(prob.phi, vd.xs.back());

  NecessaryReport rep;
  rep.lambda = dphi * vd.df_ubar;
  rep.cond_I_residual = criticality_residual(vd, rep.lambda);
  rep.cond_I_ok = rep.cond_I_residual <= opts.cond_I_tol;

  const SpanKernel sk = span_kernel(vd.Y, opts.rank_tol, /*allow_degenerate=*/true);
  rep.dim_kernel = sk.dim_kernel();
  const RestrictedForm rf = restricted_in_basis(vd.H, sk.K_basis, rep.lambda);
  rep.cond_II = inertia_of(rf.eigenvalues, opts.eig_tol);
  rep.cond_II_ok = rep.cond_II.n_minus == 0;
  return rep;
}

QForm qform_construct(const MeyerProblem& prob, const ControlSequence& ubar,
                      const AnalysisOptions& opts) {
  const VariationData vd = compute_variations(prob.sys, prob.x0, ubar);
  const SpanKernel sk = span_kernel(vd.Y, opts.rank_tol, /*allow_degenerate=*/true);
  const Eigen::RowVectorXd dphi = phi_gradient(prob.phi, vd.xs.back());
  const Eigen::RowVectorXd lambda = dphi * vd.df_ubar;

  const double resid_I = criticality_residual(vd, lambda);
  if (resid_I > opts.cond_I_tol) {
    throw Error("qform_construct: condition (I) fails, residual " + std::to_string(resid_I));
  }
  const RestrictedForm rfK = restricted_in_basis(vd.H, sk.K_basis, lambda);
  const int d = sk.dim_kernel();
  if (d > 0 && rfK.eigenvalues(0) <= opts.eig_tol) {
    const Inertia in = inertia_of(rfK.eigenvalues, opts.eig_tol);
    throw ConditionIIIFails("qform_construct: lambda H on the kernel is not positive definite "
                            "(inertia " + std::to_string(in.n_plus) + "/" +
                            std::to_string(in.n_zero) + "/" + std::to_string(in.n_minus) + ")");
  }

  const int K = vd.indices();
  const int n = vd.n;

  QForm qf;
  qf.S.resize(n, K);
  for (int k = 0; k < K; ++k) qf.S.col(k) = vd.df_ubar * vd.Y[static_cast<std::size_t>(k)];

  qf.A.resize(K, K);
  for (int i = 0; i < K; ++i) {
    for (int j = i; j < K; ++j) {
      const double a = dphi * endpoint_second_derivative(prob.sys, prob.x0, ubar, i, j);
      qf.A(i, j) = a;
      qf.A(j, i) = a;
    }
  }

  // ker A at an absolute tolerance tied to the spectrum scale.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esA(qf.A);
  const double amax = esA.eigenvalues().cwiseAbs().maxCoeff();
  const double ker_tol = std::max(1e-12, 1e-10 * amax);
  std::vector<int> ker_idx;
  for (int i = 0; i < K; ++i) {
    if (std::abs(esA.eigenvalues()(i)) <= ker_tol) ker_idx.push_back(i);
  }
  qf.kerA_basis.resize(K, static_cast<Eigen::Index>(ker_idx.size()));
  for (std::size_t c = 0; c < ker_idx.size(); ++c) {
    qf.kerA_basis.col(static_cast<Eigen::Index>(c)) = esA.eigenvectors().col(ker_idx[c]);
  }

  qf.K_basis = sk.K_basis;

  // Complement E of ker A containing K: E = K + (ker A + K)^perp (Euclidean).
  Eigen::MatrixXd combined(K, qf.kerA_basis.cols() + qf.K_basis.cols());
  combined << qf.kerA_basis, qf.K_basis;
  Eigen::MatrixXd W(K, 0);
  if (combined.cols() > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(combined, Eigen::ComputeFullU);
    int r = 0;
    const auto& sv = svd.singularValues();
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > 1e-10 * sv(0)) ++r;
    }
    W = svd.matrixU().rightCols(K - r);
  } else {
    W = Eigen::MatrixXd::Identity(K, K);
  }
  Eigen::MatrixXd E(K, qf.K_basis.cols() + W.cols());
  E << qf.K_basis, W;

  // A-orthogonal complement of K inside E.
  if (d > 0 && E.cols() > 0) {
    const Eigen::MatrixXd C = qf.K_basis.transpose() * qf.A * E;  // d x e
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullV);
    int r = 0;
    const auto& sv = svd.singularValues();
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > 1e-10 * std::max(sv(0), 1e-300)) ++r;
    }
    Eigen::MatrixXd null_coeff = svd.matrixV().rightCols(E.cols() - r);
    qf.Kperp_basis = E * null_coeff;
    // orthonormalize columns for conditioning
    if (qf.Kperp_basis.cols() > 0) {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(qf.Kperp_basis);
      qf.Kperp_basis = Eigen::MatrixXd(qr.householderQ()).leftCols(qf.Kperp_basis.cols());
    }
  } else {
    qf.Kperp_basis = E;
  }

  // Assemble T = [K | Kperp | kerA] and the block form Btilde_22 = -A_22.
  Eigen::MatrixXd T(K, qf.K_basis.cols() + qf.Kperp_basis.cols() + qf.kerA_basis.cols());
  T << qf.K_basis, qf.Kperp_basis, qf.kerA_basis;
  if (T.cols() != K) {
    throw Error("qform_construct: decomposition dimensions do not add up (K=" +
                std::to_string(K) + ", got " + std::to_string(T.cols()) + ")");
  }
  const Eigen::MatrixXd A22 =
      qf.Kperp_basis.transpose() * qf.A * qf.Kperp_basis;
  Eigen::MatrixXd Bblock = Eigen::MatrixXd::Zero(K, K);
  Bblock.block(qf.K_basis.cols(), qf.K_basis.cols(), A22.rows(), A22.cols()) = -A22;
  const Eigen::MatrixXd Tinv = T.inverse();
  qf.Btilde = Tinv.transpose() * Bblock * Tinv;
  qf.Btilde = 0.5 * (qf.Btilde + qf.Btilde.transpose().eval());

  // Minimum-norm symmetric solution of S^T Qtilde S = Btilde supported on Im S.
  Eigen::JacobiSVD<Eigen::MatrixXd> svdS(qf.S, Eigen::ComputeFullU);
  int rho = 0;
  if (svdS.singularValues().size() > 0 && svdS.singularValues()(0) > 0.0) {
    for (Eigen::Index i = 0; i < svdS.singularValues().size(); ++i) {
      if (svdS.singularValues()(i) > opts.rank_tol * svdS.singularValues()(0)) ++rho;
    }
  }
  qf.L_onb = svdS.matrixU().leftCols(rho);
  if (rho > 0) {
    const Eigen::MatrixXd Shat = qf.L_onb.transpose() * qf.S;  // rho x K
    const Eigen::MatrixXd M = Shat * Shat.transpose();
    const Eigen::MatrixXd P = M.ldlt().solve(Shat);  // rho x K, = (S S^T)^{-1} S
    qf.Q_on_L = P * qf.Btilde * P.transpose();
    qf.Q_on_L = 0.5 * (qf.Q_on_L + qf.Q_on_L.transpose().eval());
    qf.Qtilde = qf.L_onb * qf.Q_on_L * qf.L_onb.transpose();
  } else {
    qf.Q_on_L = Eigen::MatrixXd(0, 0);
    qf.Qtilde = Eigen::MatrixXd::Zero(n, n);
  }

  qf.residual_SQS =
      (qf.S.transpose() * qf.Qtilde * qf.S - qf.Btilde).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esAB(qf.A + qf.Btilde);
  qf.min_eig_A_plus_B = esAB.eigenvalues()(0);
  return qf;
}

SufficientReport check_meyer_sufficient(const MeyerProblem& prob, const ControlSequence& ubar,
                                        const AnalysisOptions& opts) {
  if (!prob.sys.strictly_interior(ubar)) {
    throw Error("control sequence is not strictly interior to the control box");
  }
  const VariationData vd = compute_variations(prob.sys, prob.x0, ubar);
  const SpanKernel sk = span_kernel(vd.Y, opts.rank_tol, /*allow_degenerate=*/true);
  const Eigen::RowVectorXd dphi = phi_gradient(prob.phi, vd.xs.back());

  SufficientReport rep;
  rep.lambda = dphi * vd.df_ubar;
  rep.cond_I_residual = criticality_residual(vd, rep.lambda);
  rep.grad_psi_norm = psi_gradient(prob, ubar).norm();

  if (rep.cond_I_residual > opts.cond_I_tol) {
    rep.reason = "(I) fails: criticality residual " + std::to_string(rep.cond_I_residual);
    return rep;
  }

  const RestrictedForm rfK = restricted_in_basis(vd.H, sk.K_basis, rep.lambda);
  rep.cond_III = inertia_of(rfK.eigenvalues, opts.eig_tol);
  const int d = sk.dim_kernel();
  rep.cond_III_margin =
      d > 0 ? rfK.eigenvalues(0) : std::numeric_limits<double>::infinity();

  if (d > 0 && rep.cond_III_margin <= opts.eig_tol) {
    rep.reason = rep.cond_III.n_minus > 0
                     ? "(III) fails: form indefinite"
                     : "(III) fails: form not positive definite";
    return rep;
  }

  rep.qform = qform_construct(prob, ubar, opts);
  const Eigen::MatrixXd d2phi = phi_hessian(prob.phi, vd.xs.back());
  const Eigen::MatrixXd d2phi_L =
      rep.qform->L_onb.transpose() * d2phi * rep.qform->L_onb;
  if (d2phi_L.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d2phi_L - rep.qform->Q_on_L);
    rep.cond_IV_margin = es.eigenvalues()(0);
  } else {
    rep.cond_IV_margin = std::numeric_limits<double>::infinity();
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esPsi(psi_hessian(prob, ubar));
  rep.hess_psi_min_eig = esPsi.eigenvalues()(0);

  if (rep.cond_IV_margin > opts.eig_tol) {
    rep.verdict = OptimalityStatus::LocallyOptimal;
    rep.reason = "conditions (I), (III), (IV) hold";
  } else {
    rep.reason = "(IV) fails: d2phi|_L - Q has smallest eigenvalue " +
                 std::to_string(rep.cond_IV_margin);
  }
  return rep;
}

MeyerProblem bolza_reduce(const BolzaProblem& bp) {
  const int n = bp.sys.n();
  const DiscreteSystem base = bp.sys;
  const RunningCost cost = bp.cost;

  Dynamics f_aug = [base, cost, n](std::span<const HyperDual> xh, std::span<const HyperDual> u,
                                   std::span<HyperDual> out) {
    const std::span<const HyperDual> x = xh.subspan(1);
    base.eval_f(x, u, out.subspan(1));
    out[0] = xh[0] + cost(x, u);
  };

  Dynamics finv_aug;
  if (base.inverse_mode() == InverseMode::Analytic) {
    finv_aug = [base, cost, n](std::span<const HyperDual> Xh, std::span<const HyperDual> u,
                               std::span<HyperDual> out) {
      base.eval_finv(Xh.subspan(1), u, out.subspan(1));
      out[0] = Xh[0] - cost(out.subspan(1), u);
    };
  }

  const ScalarField phi = bp.phi;
  ScalarField phi_aug = [phi](std::span<const HyperDual> xh) {
    return phi(xh.subspan(1)) + xh[0];
  };

  MeyerProblem mp{
      DiscreteSystem(n + 1, base.m(), std::move(f_aug), std::move(finv_aug), base.u_box(),
                     base.name().empty() ? "bolza-augmented" : base.name() + "+bolza"),
      Eigen::VectorXd(n + 1), std::move(phi_aug)};
  mp.x0(0) = 0.0;
  mp.x0.tail(n) = bp.x0;
  return mp;
}

double bolza_objective(const BolzaProblem& bp, const ControlSequence& ubar) {
  const Trajectory traj = bp.sys.rollout(bp.x0, ubar);
  HDVec xN = lift_vector(traj.states.back());
  double total = bp.phi(xN).v;
  for (int t = 0; t < ubar.steps(); ++t) {
    const HDVec x = lift_vector(traj.states[static_cast<std::size_t>(t)]);
    const HDVec u = lift_vector(ubar.at(t));
    total += bp.cost(x, u).v;
  }
  return total;
}

AdjointTrajectory adjoint_chain(const MeyerProblem& prob, const ControlSequence& ubar,
                                const AnalysisOptions& opts) {
  const VariationData vd = compute_variations(prob.sys, prob.x0, ubar);
  const int N = vd.N;

  AdjointTrajectory at;
  at.xs = vd.xs;
  at.ps.assign(static_cast<std::size_t>(N) + 1, Eigen::RowVectorXd());
  at.ps[static_cast<std::size_t>(N)] = phi_gradient(prob.phi, vd.xs.back());
  for (int t = N; t >= 1; --t) {
    at.ps[static_cast<std::size_t>(t - 1)] =
        at.ps[static_cast<std::size_t>(t)] *
        prob.sys.jac_x(vd.xs[static_cast<std::size_t>(t - 1)], ubar.at(t - 1));
  }
  at.lambda = at.ps[0];

  at.cc_residuals.resize(static_cast<std::size_t>(N));
  at.so_inertia.resize(static_cast<std::size_t>(N));
  at.so_dim_kernel.resize(static_cast<std::size_t>(N));
  at.so_codim.resize(static_cast<std::size_t>(N));
  for (int t = 1; t <= N; ++t) {
    const Eigen::RowVectorXd dHdu =
        at.ps[static_cast<std::size_t>(t)] *
        prob.sys.jac_u(vd.xs[static_cast<std::size_t>(t - 1)], ubar.at(t - 1));
    at.cc_residuals[static_cast<std::size_t>(t - 1)] = dHdu.norm();

    const std::vector<Eigen::VectorXd> Yt(vd.Y.begin(),
                                          vd.Y.begin() + static_cast<long>(t) * vd.m);
    const SpanKernel skt = span_kernel(Yt, opts.rank_tol, /*allow_degenerate=*/true);
    const HessianForm Ht = vd.H.leading(t * vd.m);
    const RestrictedForm rf = restricted_in_basis(Ht, skt.K_basis, at.lambda);
    at.so_inertia[static_cast<std::size_t>(t - 1)] = inertia_of(rf.eigenvalues, opts.eig_tol);
    at.so_dim_kernel[static_cast<std::size_t>(t - 1)] = skt.dim_kernel();
    at.so_codim[static_cast<std::size_t>(t - 1)] = skt.codim;
  }
  return at;
}

GeometricReport check_geometric_hamiltonian(const DiscreteSystem& sys,
                                            const Eigen::VectorXd& x0,
                                            const ControlSequence& ubar,
                                            const AnalysisOptions& opts) {
  if (!sys.strictly_interior(ubar)) {
    throw Error("control sequence is not strictly interior to the control box");
  }
  const VariationData vd = compute_variations(sys, x0, ubar);
  const int N = vd.N;

  GeometricReport rep;

  std::vector<SpanKernel> prefix_sk;
  prefix_sk.reserve(static_cast<std::size_t>(N));
  for (int t = 1; t <= N; ++t) {
    const std::vector<Eigen::VectorXd> Yt(vd.Y.begin(),
                                          vd.Y.begin() + static_cast<long>(t) * vd.m);
    prefix_sk.push_back(span_kernel(Yt, opts.rank_tol, /*allow_degenerate=*/true));
    if (prefix_sk.back().codim == 0 && !rep.full_rank_prefix) {
      rep.full_rank_prefix = true;
      rep.full_rank_t = t;
    }
  }
  if (rep.full_rank_prefix) return rep;  // not geometrically optimal, no lambda needed

  const SpanKernel& skN = prefix_sk.back();
  rep.k = skN.codim;

  const auto grid = unit_sphere_grid(rep.k, rep.k == 1 ? 1 : opts.sphere_density);
  bool captured_first = false;
  for (const Eigen::VectorXd& c : grid) {
    for (const double sign : {1.0, -1.0}) {
      const Eigen::RowVectorXd lambda = (sign * (skN.Lperp_basis * c)).transpose();
      ++rep.lambda_samples;
      std::vector<PrefixIndexRow> rows;
      bool all_ok = true;
      for (int t = 1; t <= N; ++t) {
        const SpanKernel& skt = prefix_sk[static_cast<std::size_t>(t - 1)];
        const HessianForm Ht = vd.H.leading(t * vd.m);
        const RestrictedForm rf = restricted_in_basis(Ht, skt.K_basis, lambda);
        PrefixIndexRow row;
        row.t = t;
        row.codim = skt.codim;
        row.inertia = inertia_of(rf.eigenvalues, opts.eig_tol);
        row.ic_ok = row.inertia.n_minus < row.codim;
        all_ok = all_ok && row.ic_ok;
        rows.push_back(row);
      }
      if (!captured_first) {
        rep.lambda_reported = lambda;
        rep.rows_reported = rows;
        captured_first = true;
      }
      if (all_ok && !rep.any_lambda_consistent) {
        rep.any_lambda_consistent = true;
        rep.lambda_reported = lambda;
        rep.rows_reported = rows;
      }
    }
  }
  return rep;
}

}  // namespace dtctrl
