#include "handkin/head_model.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace handkin {

std::vector<Vec3> fibonacci_cap(std::size_t n, double z_min) {
  std::vector<Vec3> pts;
  pts.reserve(n);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - (1.0 - z_min) * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    pts.emplace_back(rho * std::cos(phi), rho * std::sin(phi), z);
  }
  return pts;
}

std::vector<std::string> default_channel_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string num = std::to_string(i + 1);
    names.push_back("E" + std::string(num.size() < 2 ? 2 - num.size() : 0, '0') + num);
  }
  return names;
}

HeadModel default_head_model(const HeadModelConfig& cfg) {
  if (cfg.n_sources < cfg.n_regions) throw Error("head model: fewer sources than regions");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> jitter(0.0, cfg.cluster_spread_frac * cfg.head_radius);

  const auto sensors = fibonacci_cap(cfg.n_sensors, -0.2);
  const auto centres = fibonacci_cap(cfg.n_regions, 0.0);
  HeadModel hm;
  hm.atlas = contiguous_atlas(cfg.n_sources, cfg.n_regions);
  std::vector<Dipole> dipoles;
  dipoles.reserve(cfg.n_sources);
  const double max_r = 0.9 * cfg.head_radius;
  for (std::size_t r = 0; r < cfg.n_regions; ++r) {
    const Vec3 centre = centres[r] * cfg.cortex_radius_frac * cfg.head_radius;
    for (std::size_t m = 0; m < hm.atlas.membership[r].size(); ++m) {
      Vec3 p = centre + Vec3(jitter(rng), jitter(rng), jitter(rng));
      if (p.norm() > max_r) p *= max_r / p.norm();
      dipoles.push_back(Dipole{p, p.normalized()});
    }
  }
  hm.lead_field = spherical_lead_field(sensors, dipoles, cfg.head_radius);
  hm.channel_names = default_channel_names(cfg.n_sensors);
  return hm;
}

}  // namespace handkin
