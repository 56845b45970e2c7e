#include "pmon/model.hpp"

#include <cmath>
#include <string>

namespace pmon {

void MissionConfig::validate() const {
  if (L1 <= 0.0) throw ConfigError("mission.L1 must be positive");
  if (L2 <= 0.0) throw ConfigError("mission.L2 must be positive");
  if (r <= 0.0) throw ConfigError("mission.r must be positive");
  if (C <= 0.0) throw ConfigError("mission.C must be positive");
  if (T <= 0.0) throw ConfigError("mission.T must be positive");
  if (B <= 0.0) throw ConfigError("mission.B must be positive");
  if (points.empty()) throw ConfigError("mission.points must be nonempty");
  if (A.size() != points.size())
    throw ConfigError("mission.A size must match mission.points");
  if (R0.size() != points.size())
    throw ConfigError("mission.R0 size must match mission.points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec2& w = points[i];
    if (w.x < 0.0 || w.x > L1 || w.y < 0.0 || w.y > L2)
      throw ConfigError("mission.points[" + std::to_string(i) +
                        "] lies outside the mission space");
    if (!(A[i] > 0.0) || !(A[i] < B))
      throw ConfigError("mission.A[" + std::to_string(i) +
                        "] must satisfy 0 < A < B");
    if (R0[i] < 0.0)
      throw ConfigError("mission.R0[" + std::to_string(i) +
                        "] must be nonnegative");
  }
}

std::vector<Vec2> lattice_grid(double L1, double L2) {
  const auto nx = static_cast<std::size_t>(std::floor(L1)) + 1;
  const auto ny = static_cast<std::size_t>(std::floor(L2)) + 1;
  std::vector<Vec2> pts;
  pts.reserve(nx * ny);
  for (std::size_t ix = 0; ix < nx; ++ix)
    for (std::size_t iy = 0; iy < ny; ++iy)
      pts.push_back({static_cast<double>(ix), static_cast<double>(iy)});
  return pts;
}

MissionConfig make_lattice_mission(double L1, double L2, double A, double B,
                                   double R0, double r, double T,
                                   std::size_t agent_count) {
  MissionConfig cfg;
  cfg.L1 = L1;
  cfg.L2 = L2;
  cfg.points = lattice_grid(L1, L2);
  cfg.A.assign(cfg.points.size(), A);
  cfg.B = B;
  cfg.R0.assign(cfg.points.size(), R0);
  cfg.r = r;
  cfg.T = T;
  cfg.agent_count = agent_count;
  return cfg;
}

double joint_detection_prob(const std::vector<double>& per_agent) {
  double miss = 1.0;
  for (double p : per_agent) miss *= (1.0 - p);
  return 1.0 - miss;
}

}  // namespace pmon
