#pragma once

#include "handkin/atlas.hpp"
#include "handkin/lead_field.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace handkin {

// Built-in single-sphere geometry used for synthetic sessions. Sources are
// clustered around n_regions centres on a cortical shell and indexed
// contiguously per cluster, so contiguous_atlas() yields spatially compact scouts.
struct HeadModelConfig {
  std::size_t n_sensors = 32;
  std::size_t n_sources = 500;
  std::size_t n_regions = kDefaultScoutCount;
  double head_radius = 0.09;         // m
  double cortex_radius_frac = 0.75;  // cluster centres at this fraction of the radius
  double cluster_spread_frac = 0.04; // std of source jitter around a centre
  std::uint64_t seed = 1;
};

struct HeadModel {
  LeadField lead_field;
  ScoutAtlas atlas;
  std::vector<std::string> channel_names;
};

HeadModel default_head_model(const HeadModelConfig& cfg = {});

// n quasi-uniform unit vectors with z >= z_min (golden-angle spiral).
std::vector<Vec3> fibonacci_cap(std::size_t n, double z_min);

std::vector<std::string> default_channel_names(std::size_t n);

}  // namespace handkin
