#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

namespace rmplate {

struct MinimizeOptions {
  int max_iters = 500;
  double grad_tol = 1e-8;       // relative to the initial gradient max-norm
  double grad_tol_abs = 1e-10;  // absolute floor; covers FD noise of the density derivatives
  int memory = 10;              // stored curvature pairs
  double armijo_c = 1e-4;
  double shrink = 0.5;
  std::uint64_t seed = 0;       // reserved for randomized restarts (none by default)
};

// `stalled` marks iterates whose energy stopped decreasing at floating-point
// resolution before the gradient test was met; the iterate is stationary to
// machine precision.
enum class MinimizeStatus { converged, stalled, max_iters, line_search_failed };

struct TracePoint {
  int iter = 0;
  double energy = 0.0;
  double grad_norm = 0.0;  // max-norm of the masked gradient
  double step = 0.0;       // accepted step length (0 at iterate 0)
};

struct MinimizeResult {
  Eigen::VectorXd x;
  std::vector<TracePoint> trace;
  MinimizeStatus status = MinimizeStatus::converged;
  double energy = 0.0;
  double grad_norm = 0.0;
  int iters = 0;
};

using EnergyFn = std::function<double(const Eigen::VectorXd&)>;
using GradFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Limited-memory quasi-Newton descent with Armijo backtracking. Masked
// coordinates never move and their gradient entries are ignored. Fully
// deterministic; the energy trace is nonincreasing at every accepted step.
// Throws std::invalid_argument if the energy at x0 is not finite.
MinimizeResult minimize(const EnergyFn& energy, const GradFn& gradient,
                        const Eigen::VectorXd& x0, const std::vector<std::uint8_t>& mask,
                        const MinimizeOptions& opts);

// Central-difference directional derivatives along `count` seeded random unit
// directions against the analytic gradient; returns the worst relative error.
// Directions whose probes hit the +inf sentinel are skipped.
double fd_gradient_check(const EnergyFn& energy, const GradFn& gradient,
                         const Eigen::VectorXd& x, int count, double step, std::uint64_t seed);

void write_trace_csv(const std::string& path, const std::vector<TracePoint>& trace,
                     const std::string& trailer = "");

}  // namespace rmplate
