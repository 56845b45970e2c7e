// pmon/tpbvp.hpp -- discretized optimal-control baseline over free headings.
//
// Agents move at unit speed with piecewise-constant headings theta_n(t) on
// the integrator grid.  A forward pass integrates the same uncertainty
// dynamics as the ellipse simulator; a backward pass integrates the costates
//
//   d lambda_i/dt = -1 on interior arcs, lambda_i = 0 on boundary arcs,
//   d mu_n/dt     = -dH/ds_n  (summing over points in range with R_i > 0),
//
// from lambda(T) = 0, mu(T) = 0.  The heading gradient of the Hamiltonian,
// dH/d theta_n = -mu_n^x sin theta_n + mu_n^y cos theta_n, drives a
// backtracking gradient descent on the schedule; at a stationary schedule
// tan(theta_n*) = mu_n^y / mu_n^x.
#pragma once

#include <cstdint>
#include <vector>

#include "pmon/geometry.hpp"
#include "pmon/model.hpp"
#include "pmon/simulator.hpp"
#include "pmon/trajectory.hpp"

namespace pmon {
namespace tpbvp {

struct ControlSchedule {
  double dt = 0.01;
  std::vector<Vec2> start;  // initial position per agent
  // theta[n][j]: heading of agent n over [j*dt, (j+1)*dt).
  std::vector<std::vector<double>> theta;

  std::size_t agent_count() const { return theta.size(); }
  std::size_t step_count() const { return theta.empty() ? 0 : theta[0].size(); }
};

struct ForwardResult {
  double J = 0.0;
  // Per agent, positions at the K+1 grid times.
  std::vector<std::vector<Vec2>> pos;
  // Flattened M x (K+1) snapshots at grid times.
  std::vector<std::uint8_t> on_boundary;
  std::vector<std::uint8_t> r_positive;
  std::vector<EventRecord> events;
  std::size_t steps = 0;
};

struct CostateField {
  // lambda[i*(K+1)+j], mu[n][j]; terminal entries are zero.
  std::vector<double> lambda;
  std::vector<std::vector<Vec2>> mu;
};

struct TpbvpSettings {
  double eta0 = 1.0;
  double epsilon = 1e-3;  // stop on ||dJ/dtheta||_inf
  std::size_t max_iters = 200;
  double shrink = 0.5;
  double expand = 2.0;
  std::size_t max_halvings = 30;
};

enum class TpbvpStatus { kConverged, kIterationCap };

struct TpbvpResult {
  ControlSchedule schedule;
  double J = 0.0;
  TpbvpStatus status = TpbvpStatus::kConverged;
  std::vector<double> J_history;  // nonincreasing under backtracking
};

// Number of schedule steps covering [0, T].
std::size_t schedule_steps(double T, double dt);

// Builds the schedule that retraces an ellipse run: chord headings between
// consecutive integrator positions of each agent.
ControlSchedule ellipse_schedule(const MissionConfig& config,
                                 const std::vector<EllipseParams>& agents,
                                 double dt);

// Integrates positions and uncertainties under the schedule. Agents are
// clamped to the mission rectangle. Growth overrides in `options` apply.
ForwardResult forward_pass(const MissionConfig& config,
                           const ControlSchedule& schedule,
                           const SimOptions& options);

// Costate integration backward from lambda(T) = 0, mu(T) = 0 along the
// stored forward trajectory.
CostateField backward_pass(const MissionConfig& config,
                           const ControlSchedule& schedule,
                           const ForwardResult& fwd);

// dH/dtheta per agent per step (without the dt quadrature weight).
std::vector<std::vector<double>> heading_gradient(
    const ControlSchedule& schedule, const CostateField& costates);

// Gradient descent on the heading schedule with backtracking line search.
TpbvpResult solve(const MissionConfig& config, const ControlSchedule& init,
                  const TpbvpSettings& settings, const SimOptions& options);

}  // namespace tpbvp
}  // namespace pmon
