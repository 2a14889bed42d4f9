#include <CLI11.hpp>
#include <iostream>
#include <vector>

#include "dtctrl/errors.hpp"
#include "dtctrl/runner.hpp"

namespace {

dtctrl::RunConfig build_config(const std::string& system, const std::vector<double>& x0,
                               const std::vector<double>& u, int steps, double rank_tol,
                               double eig_tol, std::uint64_t seed, double radius, int samples,
                               const std::string& format, int m) {
  dtctrl::RunConfig cfg;
  cfg.system = system;
  cfg.x0 = Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Eigen::Index>(x0.size()));
  Eigen::VectorXd flat =
      Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
  if (steps > 0 && static_cast<int>(u.size()) == m) {
    // one control vector replicated over the horizon
    Eigen::VectorXd rep(static_cast<Eigen::Index>(steps) * m);
    for (int i = 0; i < steps; ++i) rep.segment(static_cast<Eigen::Index>(i) * m, m) = flat;
    flat = rep;
  } else if (steps > 0 && static_cast<int>(u.size()) != steps * m) {
    throw dtctrl::DimensionMismatch("--u must list m values (replicated) or N*m values");
  }
  cfg.controls = dtctrl::ControlSequence(m, flat);
  cfg.rank_tol = rank_tol;
  cfg.eig_tol = eig_tol;
  cfg.seed = seed;
  cfg.radius = radius;
  cfg.samples = samples;
  cfg.format = format;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"second-order controllability and optimality analysis of invertible "
               "discrete-time systems"};
  app.require_subcommand(1);

  std::string system, format = "text";
  std::vector<double> x0, u;
  int steps = 0, samples = 20000;
  double rank_tol = 1e-8, eig_tol = 1e-9, radius = 0.05;
  std::uint64_t seed = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--system", system, "built-in system name or system file path")->required();
    sub->add_option("--x0", x0, "initial state (n values)")->required()->expected(-1);
    sub->add_option("--u", u, "control sequence (N*m values, or m values with --steps)")
        ->required()
        ->expected(-1);
    sub->add_option("--steps", steps, "horizon length when --u gives a single control");
    sub->add_option("--rank-tol", rank_tol, "relative singular value threshold");
    sub->add_option("--eig-tol", eig_tol, "absolute eigenvalue tolerance");
    sub->add_option("--format", format, "report format: text | structured")
        ->check(CLI::IsMember({"text", "structured"}));
    sub->add_option("--seed", seed, "probe RNG seed")->envname("DTCTRL_SEED");
    sub->add_option("--radius", radius, "control perturbation box half-width");
    sub->add_option("--samples", samples, "Monte-Carlo sample count");
  };

  add_common(app.add_subcommand("analyze", "controllability verdict at (x0, ubar)"));
  add_common(
      app.add_subcommand("optimal", "optimality conditions for a problem file with phi"));
  add_common(
      app.add_subcommand("oracle", "finite-difference and reachable-set cross-checks"));
  app.add_subcommand("list-systems", "print the built-in system registry");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("list-systems")) return dtctrl::cmd_list_systems(std::cout);

    const int m = dtctrl::system_control_dim(system);
    const dtctrl::RunConfig cfg = build_config(system, x0, u, steps, rank_tol, eig_tol, seed,
                                               radius, samples, format, m);
    if (app.got_subcommand("analyze")) return dtctrl::cmd_analyze(cfg, std::cout);
    if (app.got_subcommand("optimal")) return dtctrl::cmd_optimal(cfg, std::cout);
    if (app.got_subcommand("oracle")) return dtctrl::cmd_oracle(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dtctrl::kExitError;
  }
  return dtctrl::kExitError;
}
