#include "handkin/lead_field.hpp"

#include "handkin/binary_io.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace handkin {
namespace {
constexpr std::string_view kMagic = "HKLFLD";
constexpr std::uint8_t kVersion = 1;
// V per A*m  ->  uV per nA*m
constexpr double kGainScale = 1e6 * 1e-9;
}  // namespace

void validate(const LeadField& lf) {
  const auto I = lf.sensors();
  const auto K = lf.sources();
  if (I == 0 || K == 0) throw Error("lead field is empty");
  if (I >= K) {
    throw Error("lead field must be under-determined (" + std::to_string(I) + " sensors, " + std::to_string(K) +
                " sources)");
  }
  if (lf.sensor_positions.size() != I || lf.source_positions.size() != K || lf.source_orientations.size() != K) {
    throw Error("lead field geometry does not match gain dimensions");
  }
  if (!lf.gain.allFinite()) throw Error("lead field has non-finite entries");
  for (std::size_t k = 0; k < K; ++k) {
    if (lf.gain.col(static_cast<Eigen::Index>(k)).cwiseAbs().maxCoeff() == 0.0) {
      throw Error("lead field column " + std::to_string(k) + " is all zero (source invisible to every sensor)");
    }
  }
}

double sphere_dipole_potential(const Vec3& sensor, const Vec3& position, const Vec3& moment, double radius,
                               double conductivity) {
  const Vec3 d = sensor - position;
  const double dn = d.norm();
  const double rn = radius;
  if (std::abs(sensor.norm() - radius) > 1e-9 * radius) {
    throw Error("sphere_dipole_potential: sensor must lie on the sphere surface");
  }
  // Gradient (w.r.t. source position) of the insulated-sphere monopole
  // potential 2/d + (1/R) ln(2R^2 / (R^2 - r0.r + R d)).
  const double F = rn * dn + rn * rn - position.dot(sensor);
  const Vec3 field = 2.0 * d / (dn * dn * dn) + (sensor + rn * d / dn) / (rn * F);
  return moment.dot(field) / (4.0 * std::numbers::pi * conductivity);
}

LeadField spherical_lead_field(std::span<const Vec3> sensor_directions, std::span<const Dipole> sources,
                               double head_radius, double conductivity) {
  if (!(head_radius > 0.0)) throw Error("spherical_lead_field: head radius must be positive");
  LeadField lf;
  lf.head_radius = head_radius;
  lf.gain.resize(static_cast<Eigen::Index>(sensor_directions.size()), static_cast<Eigen::Index>(sources.size()));
  for (const auto& s : sensor_directions) lf.sensor_positions.push_back(s.normalized());
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const auto& dip = sources[k];
    if (!(dip.position.norm() < head_radius)) {
      throw Error("spherical_lead_field: source " + std::to_string(k) + " lies on or outside the sphere");
    }
    const Vec3 q = dip.orientation.normalized();
    lf.source_positions.push_back(dip.position);
    lf.source_orientations.push_back(q);
    for (std::size_t i = 0; i < sensor_directions.size(); ++i) {
      const Vec3 r = lf.sensor_positions[i] * head_radius;
      lf.gain(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          kGainScale * sphere_dipole_potential(r, dip.position, q, head_radius, conductivity);
    }
  }
  return lf;
}

Matrix average_reference_gain(const Matrix& gain) {
  const Eigen::RowVectorXd mean = gain.colwise().mean();
  return gain.rowwise() - mean;
}

void save_lead_field(const LeadField& lf, const std::filesystem::path& path) {
  if (lf.sensor_positions.size() != lf.sensors() || lf.source_positions.size() != lf.sources() ||
      lf.source_orientations.size() != lf.sources()) {
    throw Error("save_lead_field: geometry does not match gain dimensions");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os.write(kMagic.data(), kMagic.size());
  bin::write<std::uint8_t>(os, kVersion);
  bin::write<std::uint32_t>(os, static_cast<std::uint32_t>(lf.sensors()));
  bin::write<std::uint32_t>(os, static_cast<std::uint32_t>(lf.sources()));
  bin::write<double>(os, lf.head_radius);
  bin::write_matrix(os, lf.gain);
  auto write_points = [&](const std::vector<Vec3>& pts) {
    for (const auto& p : pts) {
      for (int c = 0; c < 3; ++c) bin::write<double>(os, p[c]);
    }
  };
  write_points(lf.sensor_positions);
  write_points(lf.source_positions);
  write_points(lf.source_orientations);
  if (!os) throw Error("write failed for " + path.string());
}

LeadField load_lead_field(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  bin::expect_magic(is, kMagic, "lead field");
  const auto version = bin::read<std::uint8_t>(is, "version");
  if (version != kVersion) throw Error("unsupported lead field version " + std::to_string(version));
  const auto I = bin::read<std::uint32_t>(is, "sensor count");
  const auto K = bin::read<std::uint32_t>(is, "source count");
  if (I == 0 || K == 0 || I > 100000 || K > 10000000) throw Error("malformed lead field header");
  LeadField lf;
  lf.head_radius = bin::read<double>(is, "head radius");
  lf.gain = bin::read_matrix(is, I, K, "gain");
  auto read_points = [&](std::size_t n, std::vector<Vec3>& out) {
    out.resize(n);
    for (auto& p : out) {
      for (int c = 0; c < 3; ++c) p[c] = bin::read<double>(is, "geometry");
    }
  };
  read_points(I, lf.sensor_positions);
  read_points(K, lf.source_positions);
  read_points(K, lf.source_orientations);
  validate(lf);
  return lf;
}

}  // namespace handkin
