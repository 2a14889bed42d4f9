#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "dtctrl/system.hpp"

namespace dtctrl {

/// Exit-code contract shared by the CLI and the acceptance suite:
/// analyze: 0 controllable (certified or full-rank), 10 certified-not,
///          20 inconclusive. optimal: 0 locally optimal, 10 necessary
///          conditions violated, 20 inconclusive. oracle: 0 cross-checks pass,
///          30 discrepancy. Any error: 1.
inline constexpr int kExitControllable = 0;
inline constexpr int kExitNotControllable = 10;
inline constexpr int kExitInconclusive = 20;
inline constexpr int kExitDiscrepancy = 30;
inline constexpr int kExitError = 1;

struct RunConfig {
  std::string system;  // built-in name or file path
  Eigen::VectorXd x0;
  ControlSequence controls;
  double rank_tol = 1e-8;
  double eig_tol = 1e-9;
  std::uint64_t seed = 1;
  double radius = 0.05;
  int samples = 20000;
  std::string format = "text";  // or "structured"
};

int cmd_analyze(const RunConfig& cfg, std::ostream& os);
int cmd_optimal(const RunConfig& cfg, std::ostream& os);
int cmd_oracle(const RunConfig& cfg, std::ostream& os);
int cmd_list_systems(std::ostream& os);

/// Control dimension of a built-in name or system file (for CLI flag shaping).
int system_control_dim(const std::string& source);

}  // namespace dtctrl
