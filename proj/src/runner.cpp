#include "dtctrl/runner.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include "dtctrl/analysis.hpp"
#include "dtctrl/errors.hpp"
#include "dtctrl/optimal.hpp"
#include "dtctrl/oracle.hpp"
#include "dtctrl/report.hpp"

namespace dtctrl {

namespace {

struct LoadedSystem {
  DiscreteSystem sys;
  SystemFile sf;
};

LoadedSystem load_system(const std::string& source) {
  for (const std::string& name : builtin_system_names()) {
    if (name == source) {
      SystemFile sf = parse_system_file(builtin_system_source(source));
      return {DiscreteSystem::from_file(sf, source), std::move(sf)};
    }
  }
  std::ifstream in(source);
  if (!in) throw Error("cannot open system file '" + source + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  SystemFile sf = parse_system_file(ss.str());
  return {DiscreteSystem::from_file(sf, source), std::move(sf)};
}

void validate_inputs(const RunConfig& cfg, const DiscreteSystem& sys) {
  if (cfg.x0.size() != sys.n()) {
    throw DimensionMismatch("x0 has dimension " + std::to_string(cfg.x0.size()) +
                            ", system expects " + std::to_string(sys.n()));
  }
  if (cfg.controls.m != sys.m()) {
    throw DimensionMismatch("control dimension mismatch");
  }
  if (cfg.controls.steps() < 1 ||
      cfg.controls.flat.size() != static_cast<Eigen::Index>(cfg.controls.steps()) * sys.m()) {
    throw DimensionMismatch("control sequence must contain N*m values, N >= 1");
  }
}

void put_header(Report& r, const char* kind, const RunConfig& cfg, const DiscreteSystem& sys) {
  r.put("report.kind", kind);
  r.put("system.source", cfg.system);
  r.put("system.n", sys.n());
  r.put("system.m", sys.m());
  r.put("input.x0", cfg.x0);
  r.put("input.steps", cfg.controls.steps());
  r.put("input.u", cfg.controls.flat);
  r.put("tol.rank", cfg.rank_tol);
  r.put("tol.eig", cfg.eig_tol);
}

void put_span(Report& r, const SpanKernel& sk) {
  r.section("span");
  r.put("span.rank", sk.rank);
  r.put("span.codim", sk.codim);
  r.put("span.dim_kernel", sk.dim_kernel());
  r.put("span.singular_values", sk.singular_values);
  r.put("span.spectral_gap", sk.spectral_gap);
  for (Eigen::Index j = 0; j < sk.Lperp_basis.cols(); ++j) {
    r.put("span.lperp." + std::to_string(j), Eigen::VectorXd(sk.Lperp_basis.col(j)));
  }
}

std::string inertia_str(const Inertia& in) {
  return std::to_string(in.n_plus) + " " + std::to_string(in.n_zero) + " " +
         std::to_string(in.n_minus);
}

void emit(const Report& r, const RunConfig& cfg, std::ostream& os, const std::string& title) {
  if (cfg.format == "structured") {
    os << r.structured();
  } else {
    os << r.text(title);
  }
}

Eigen::RowVectorXd pullback_covector(const DiscreteSystem& sys, const Eigen::VectorXd& x0,
                                     const ControlSequence& ubar,
                                     const Eigen::RowVectorXd& lambda) {
  // lambda_tilde = lambda (df_{u_1}(x_0))^{-1} ... (df_{u_N}(x_{N-1}))^{-1}
  const Trajectory traj = sys.rollout(x0, ubar);
  Eigen::VectorXd v = lambda.transpose();
  for (int t = 0; t < ubar.steps(); ++t) {
    const Eigen::MatrixXd J = sys.jac_x(traj.states[static_cast<std::size_t>(t)], ubar.at(t));
    v = gated_lu(J.transpose()).solve(v);
  }
  return v.transpose();
}

}  // namespace

int cmd_analyze(const RunConfig& cfg, std::ostream& os) {
  const LoadedSystem ls = load_system(cfg.system);
  validate_inputs(cfg, ls.sys);

  AnalysisOptions opts;
  opts.rank_tol = cfg.rank_tol;
  opts.eig_tol = cfg.eig_tol;

  const ControllabilityVerdict v = controllability_verdict(ls.sys, cfg.x0, cfg.controls, opts);

  Report r;
  put_header(r, "analyze", cfg, ls.sys);
  put_span(r, v.sk);

  r.section("lambda sweep");
  r.put("lambda.samples", v.lambda_samples);
  for (std::size_t i = 0; i < v.rows.size(); ++i) {
    const std::string p = "lambda." + std::to_string(i);
    r.put(p + ".covector", v.rows[i].lambda);
    r.put(p + ".inertia", inertia_str(v.rows[i].inertia));
    r.put(p + ".min_eig", v.rows[i].min_eig);
    r.put(p + ".index_margin", v.rows[i].index_margin);
  }

  r.section("verdict");
  r.put("verdict.status", to_string(v.status));
  r.put("verdict.worst_index_margin", v.worst_index_margin);
  if (v.witness) {
    r.put("verdict.witness", *v.witness);
    r.put("verdict.witness_inertia", inertia_str(*v.witness_inertia));
    r.put("verdict.witness_margin", v.witness_margin);
  }
  r.put("verdict.notes", v.notes);
  emit(r, cfg, os, "dtctrl analyze");

  switch (v.status) {
    case Controllability::CertifiedControllable:
    case Controllability::FullRankControllable:
      return kExitControllable;
    case Controllability::CertifiedNotControllable:
      return kExitNotControllable;
    case Controllability::Inconclusive:
      return kExitInconclusive;
  }
  return kExitError;
}

int cmd_optimal(const RunConfig& cfg, std::ostream& os) {
  const LoadedSystem ls = load_system(cfg.system);
  validate_inputs(cfg, ls.sys);
  if (!ls.sf.phi) throw Error("problem file has no 'phi = <expr>' line");

  AnalysisOptions opts;
  opts.rank_tol = cfg.rank_tol;
  opts.eig_tol = cfg.eig_tol;

  MeyerProblem prob{ls.sys, cfg.x0, scalar_from_expr(ls.sf.phi)};
  const bool bolza = static_cast<bool>(ls.sf.cost);
  if (bolza) {
    BolzaProblem bp{ls.sys, cfg.x0, scalar_from_expr(ls.sf.phi),
                    running_cost_from_expr(ls.sf.cost)};
    prob = bolza_reduce(bp);
  }

  const NecessaryReport nec = check_meyer_necessary(prob, cfg.controls, opts);
  const SufficientReport suf = check_meyer_sufficient(prob, cfg.controls, opts);
  const AdjointTrajectory adj = adjoint_chain(prob, cfg.controls, opts);

  Report r;
  put_header(r, "optimal", cfg, ls.sys);
  r.put("problem.bolza_reduced", bolza ? "yes" : "no");
  r.put("problem.state_dim", prob.sys.n());

  r.section("conditions");
  r.put("lambda", nec.lambda);
  r.put("cond.I.residual", nec.cond_I_residual);
  r.put("cond.I.ok", nec.cond_I_ok ? "yes" : "no");
  r.put("cond.II.inertia", inertia_str(nec.cond_II));
  r.put("cond.II.ok", nec.cond_II_ok ? "yes" : "no");
  r.put("cond.III.inertia", inertia_str(suf.cond_III));
  r.put("cond.III.margin", suf.cond_III_margin);
  r.put("cond.IV.margin", suf.cond_IV_margin);
  r.put("crosscheck.grad_psi_norm", suf.grad_psi_norm);
  r.put("crosscheck.hess_psi_min_eig", suf.hess_psi_min_eig);
  if (suf.qform) {
    r.put("qform.residual_SQS", suf.qform->residual_SQS);
    r.put("qform.min_eig_A_plus_B", suf.qform->min_eig_A_plus_B);
    r.put("qform.completion", "zero-off-im-S");
  }

  r.section("adjoint");
  for (std::size_t t = 0; t < adj.cc_residuals.size(); ++t) {
    const std::string p = "adjoint.t" + std::to_string(t + 1);
    r.put(p + ".x", adj.xs[t + 1]);
    r.put(p + ".p", adj.ps[t + 1]);
    r.put(p + ".cc_residual", adj.cc_residuals[t]);
    r.put(p + ".so_inertia", inertia_str(adj.so_inertia[t]));
    const bool ic = adj.so_inertia[t].n_minus < adj.so_codim[t];
    r.put(p + ".ic", ic ? "ok" : "violated");
  }

  r.section("verdict");
  const bool necessary_violated = !nec.cond_I_ok || nec.cond_II.n_minus > 0;
  const char* status = suf.verdict == OptimalityStatus::LocallyOptimal ? "LocallyOptimal"
                       : necessary_violated                            ? "NecessaryViolated"
                                                                       : "NotCertified";
  r.put("verdict.status", status);
  r.put("verdict.reason", suf.reason);
  emit(r, cfg, os, "dtctrl optimal");

  if (suf.verdict == OptimalityStatus::LocallyOptimal) return kExitControllable;
  if (necessary_violated) return kExitNotControllable;
  return kExitInconclusive;
}

int cmd_oracle(const RunConfig& cfg, std::ostream& os) {
  const LoadedSystem ls = load_system(cfg.system);
  validate_inputs(cfg, ls.sys);

  AnalysisOptions opts;
  opts.rank_tol = cfg.rank_tol;
  opts.eig_tol = cfg.eig_tol;

  const VariationData vd = compute_variations(ls.sys, cfg.x0, cfg.controls);
  const ControllabilityVerdict v = verdict_from_data(vd, opts);
  const SpanKernel& sk = v.sk;

  Report r;
  put_header(r, "oracle", cfg, ls.sys);
  r.put("oracle.seed", cfg.seed);
  r.put("oracle.radius", cfg.radius);
  r.put("oracle.samples", cfg.samples);
  r.put("analytic.verdict", to_string(v.status));

  const EndpointMap F(ls.sys, cfg.x0);
  const int K = vd.indices();

  // Cross-check: columns of dF against df_ubar Y^{ir}.
  r.section("dF cross-check");
  const Eigen::MatrixXd fdJ = fd_jacobian(F, cfg.controls);
  Eigen::MatrixXd S(vd.n, K);
  for (int k = 0; k < K; ++k) S.col(k) = vd.df_ubar * vd.Y[static_cast<std::size_t>(k)];
  double worst_col = 0.0;
  for (int k = 0; k < K; ++k) {
    const double rel = (fdJ.col(k) - S.col(k)).norm() / (1.0 + S.col(k).norm());
    worst_col = std::max(worst_col, rel);
  }
  const bool jac_ok = worst_col <= 1e-6;
  r.put("check.jacobian.max_rel_err", worst_col);
  r.put("check.jacobian.ok", jac_ok ? "yes" : "no");

  // Cross-check: ker dF against K via subspace distance.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(fdJ, Eigen::ComputeFullV);
  int fd_rank = 0;
  if (svd.singularValues().size() > 0 && svd.singularValues()(0) > 0.0) {
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
      if (svd.singularValues()(i) > 1e-7 * svd.singularValues()(0)) ++fd_rank;
    }
  }
  const Eigen::MatrixXd fd_kernel = svd.matrixV().rightCols(K - fd_rank);
  bool kernel_ok = fd_kernel.cols() == sk.K_basis.cols();
  double kdist = 0.0;
  if (kernel_ok && fd_kernel.cols() > 0) {
    kdist = subspace_distance(fd_kernel, sk.K_basis);
    kernel_ok = kdist <= 1e-5;
  }
  r.put("check.kernel.dim_fd", static_cast<int>(fd_kernel.cols()));
  r.put("check.kernel.dim_analytic", sk.dim_kernel());
  r.put("check.kernel.distance", kdist);
  r.put("check.kernel.ok", kernel_ok ? "yes" : "no");

  // Cross-check: d2F on the kernel against df_ubar H(a).
  bool hess_ok = true;
  double worst_hess = 0.0;
  int hess_checked = 0;
  if (sk.dim_kernel() > 0) {
    std::vector<Eigen::VectorXd> dirs;
    for (Eigen::Index c = 0; c < sk.K_basis.cols() && c < 4; ++c) {
      dirs.push_back(sk.K_basis.col(c));
    }
    if (sk.K_basis.cols() > 1) {
      Eigen::VectorXd mix = sk.K_basis.rowwise().sum();
      mix.normalize();
      dirs.push_back(mix);
    }
    for (const Eigen::VectorXd& a : dirs) {
      const Eigen::VectorXd fd2 = fd_hessian_on_kernel(F, cfg.controls, a);
      const Eigen::VectorXd exact = vd.df_ubar * vd.H.contract(a);
      const double rel = (fd2 - exact).norm() / (1.0 + exact.norm());
      worst_hess = std::max(worst_hess, rel);
      ++hess_checked;
    }
    hess_ok = worst_hess <= 1e-4;
  }
  r.put("check.hessian.directions", hess_checked);
  r.put("check.hessian.max_rel_err", worst_hess);
  r.put("check.hessian.ok", hess_ok ? "yes" : "no");

  // Reachable-set probe; certified-not verdicts get the level-set one-sidedness
  // test built from the certified quadratic cost.
  r.section("reachability probe");
  ReachProbe probe;
  probe.radius = cfg.radius;
  probe.samples = cfg.samples;
  probe.seed = cfg.seed;

  std::optional<LevelSet> level;
  if (v.status == Controllability::CertifiedNotControllable && v.witness) {
    const Eigen::RowVectorXd lt = pullback_covector(ls.sys, cfg.x0, cfg.controls, *v.witness);
    ScalarField phi_lin = [lt](std::span<const HyperDual> x) {
      HyperDual acc(0.0);
      for (Eigen::Index i = 0; i < lt.size(); ++i) {
        acc += lift_const(lt(i)) * x[static_cast<std::size_t>(i)];
      }
      return acc;
    };
    const MeyerProblem lin_prob{ls.sys, cfg.x0, phi_lin};
    const QForm qf = qform_construct(lin_prob, cfg.controls, opts);
    LevelSet lv;
    lv.lambda_tilde = lt;
    lv.quad = qf.Qtilde + Eigen::MatrixXd::Identity(vd.n, vd.n);
    lv.xN = vd.xs.back();
    level = std::move(lv);
    r.put("levelset.lambda_tilde", lt);
  }

  const ProbeReport pr = probe_interior(F, cfg.controls, probe, level);
  r.put("probe.directions", static_cast<int>(pr.directions.size()));
  r.put("probe.coverage_floor", pr.coverage_floor_used);
  r.put("probe.min_coverage", pr.min_coverage);
  if (pr.level_min) r.put("probe.level_min", *pr.level_min);
  r.put("probe.verdict", to_string(pr.verdict));

  const bool analytic_controllable = v.status == Controllability::CertifiedControllable ||
                                     v.status == Controllability::FullRankControllable;
  bool probe_ok = true;
  if (analytic_controllable && pr.verdict == ReachVerdict::BoundaryLikely) probe_ok = false;
  if (v.status == Controllability::CertifiedNotControllable &&
      pr.verdict == ReachVerdict::InteriorLikely) {
    probe_ok = false;
  }
  r.put("probe.consistent", probe_ok ? "yes" : "no");

  r.section("verdict");
  const bool all_ok = jac_ok && kernel_ok && hess_ok && probe_ok;
  r.put("oracle.status", all_ok ? "all cross-checks pass" : "discrepancy found");
  emit(r, cfg, os, "dtctrl oracle");
  return all_ok ? kExitControllable : kExitDiscrepancy;
}

int cmd_list_systems(std::ostream& os) {
  for (const std::string& name : builtin_system_names()) {
    const SystemFile sf = parse_system_file(builtin_system_source(name));
    os << name << "  (n=" << sf.n << ", m=" << sf.m << ")\n";
  }
  return 0;
}

int system_control_dim(const std::string& source) { return load_system(source).sf.m; }

}  // namespace dtctrl
