// pmon/model.hpp -- mission space, linear sensing model, uncertainty dynamics.
//
// A rectangular mission space [0,L1]x[0,L2] carries M static sample points.
// Each point i has an uncertainty state R_i(t) >= 0 that grows at rate A_i
// and is driven down at rate B by the joint detection probability of the
// agent team:
//
//   dR_i/dt = 0                      if R_i = 0 and A_i <= B * P_i
//           = A_i - B * P_i          otherwise
//
// with P_i = 1 - prod_n (1 - p(D_in)) and the per-agent detection
// probability p falling linearly from 1/C at distance 0 to 0 at range r.
// The standing assumption B > A_i > 0 makes every point controllable.
#pragma once

#include <cstdint>
#include <vector>

#include "pmon/errors.hpp"
#include "pmon/geometry.hpp"

namespace pmon {

// Instantaneous per-point uncertainty growth rates. Implementations must be
// immutable after construction; per-simulation query state lives in the
// caller-owned cursor so one realization can back many concurrent runs.
class GrowthProcess {
 public:
  virtual ~GrowthProcess() = default;
  virtual std::size_t point_count() const = 0;
  // Value of A_i at absolute time t. `cursor` is an opaque per-point hint
  // that must start at 0 and be reused only for nondecreasing t queries.
  virtual double value(std::size_t point, double t,
                       std::uint32_t& cursor) const = 0;
};

struct MissionConfig {
  double L1 = 20.0;  // mission-space width
  double L2 = 10.0;  // mission-space height
  std::vector<Vec2> points;    // sample point locations, inside the rectangle
  std::vector<double> A;       // per-point growth rates, 0 < A_i < B
  double B = 6.0;              // sensing decay rate
  std::vector<double> R0;      // initial uncertainty, R0_i >= 0
  double r = 4.0;              // sensing range
  double C = 1.0;              // sensing normalization, p(0) = 1/C
  double T = 200.0;            // horizon
  std::size_t agent_count = 1;

  std::size_t point_count() const { return points.size(); }

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Integer-lattice sample grid: (floor(L1)+1) * (floor(L2)+1) points at unit
// spacing, corners included.
std::vector<Vec2> lattice_grid(double L1, double L2);

// Convenience builder: lattice grid with uniform A and R0.
MissionConfig make_lattice_mission(double L1, double L2, double A, double B,
                                   double R0, double r, double T,
                                   std::size_t agent_count);

// Linear sensing probability of one agent at distance D from a point.
inline double detection_prob(double D, double r, double C) {
  if (D > r) return 0.0;
  return (1.0 - D / r) / C;
}

inline double detection_prob(Vec2 agent, Vec2 point, double r, double C) {
  return detection_prob(distance(agent, point), r, C);
}

// Joint detection probability 1 - prod(1 - p_n) of independent sensors.
double joint_detection_prob(const std::vector<double>& per_agent);

// Right-hand side of the uncertainty dynamics. The boundary branch engages
// only at R exactly 0 (the integrator clamps R to 0 at crossing events).
inline double uncertainty_rate(double R, double A, double B, double P) {
  if (R == 0.0 && A <= B * P) return 0.0;
  return A - B * P;
}

}  // namespace pmon
