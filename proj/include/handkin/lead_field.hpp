#pragma once

#include "handkin/common.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace handkin {

using Vec3 = Eigen::Vector3d;

// Fixed-orientation current dipole.
struct Dipole {
  Vec3 position;
  Vec3 orientation;  // unit vector
};

// Sensors x sources gain matrix. Units: microvolts per nA*m.
struct LeadField {
  Matrix gain;
  std::vector<Vec3> sensor_positions;  // unit vectors (scaled by head_radius on the scalp)
  std::vector<Vec3> source_positions;
  std::vector<Vec3> source_orientations;
  double head_radius = 0.0;

  std::size_t sensors() const { return static_cast<std::size_t>(gain.rows()); }
  std::size_t sources() const { return static_cast<std::size_t>(gain.cols()); }
};

// Every source visible to some sensor, fewer sensors than sources, geometry sizes consistent.
void validate(const LeadField& lf);

constexpr double kScalpConductivity = 0.33;  // S/m

// Potential (V) at scalp point `sensor` (|sensor| == radius) of a dipole with
// moment `moment` (A*m) at `position` inside a homogeneous conducting sphere.
double sphere_dipole_potential(const Vec3& sensor, const Vec3& position, const Vec3& moment, double radius,
                               double conductivity = kScalpConductivity);

LeadField spherical_lead_field(std::span<const Vec3> sensor_directions, std::span<const Dipole> sources,
                               double head_radius, double conductivity = kScalpConductivity);

// Applies the average-reference projector to the gain (matches re-referenced EEG).
Matrix average_reference_gain(const Matrix& gain);

void save_lead_field(const LeadField& lf, const std::filesystem::path& path);
LeadField load_lead_field(const std::filesystem::path& path);

}  // namespace handkin
