#include "handkin/atlas.hpp"

#include "handkin/text_util.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace handkin {

void validate(const ScoutAtlas& atlas, std::optional<std::size_t> n_sources) {
  if (atlas.labels.size() != atlas.membership.size()) throw Error("atlas: label/membership count mismatch");
  if (atlas.labels.empty()) throw Error("atlas: no regions");
  std::set<std::size_t> seen;
  for (std::size_t r = 0; r < atlas.size(); ++r) {
    if (atlas.membership[r].empty()) throw Error("atlas: region '" + atlas.labels[r] + "' is empty");
    for (auto idx : atlas.membership[r]) {
      if (n_sources && idx >= *n_sources) {
        throw Error("atlas: region '" + atlas.labels[r] + "' references source " + std::to_string(idx) +
                    " but the lead field has " + std::to_string(*n_sources) + " sources");
      }
      if (!seen.insert(idx).second) {
        throw Error("atlas: source " + std::to_string(idx) + " belongs to more than one region");
      }
    }
  }
}

ScoutAtlas parse_atlas(std::istream& is) {
  ScoutAtlas atlas;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto colon = line.rfind(':');
    if (colon == std::string::npos) throw Error("atlas line " + std::to_string(lineno) + ": expected 'name: idx,...'");
    std::string name = trim(std::string_view(line).substr(0, colon));
    if (name.empty()) throw Error("atlas line " + std::to_string(lineno) + ": empty region name");
    std::vector<std::size_t> members;
    for (const auto& field : split(std::string_view(line).substr(colon + 1), ',')) {
      const std::string f = trim(field);
      if (f.empty()) continue;
      std::size_t v = 0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc{} || res.ptr != f.data() + f.size()) {
        throw Error("atlas line " + std::to_string(lineno) + ": bad source index '" + f + "'");
      }
      members.push_back(v);
    }
    atlas.labels.push_back(std::move(name));
    atlas.membership.push_back(std::move(members));
  }
  validate(atlas);
  return atlas;
}

ScoutAtlas load_atlas(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  return parse_atlas(is);
}

void save_atlas(const ScoutAtlas& atlas, const std::filesystem::path& path) {
  validate(atlas);
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  for (std::size_t r = 0; r < atlas.size(); ++r) {
    os << atlas.labels[r] << ':';
    for (std::size_t i = 0; i < atlas.membership[r].size(); ++i) os << (i ? "," : " ") << atlas.membership[r][i];
    os << '\n';
  }
  if (!os) throw Error("write failed for " + path.string());
}

ScoutAtlas contiguous_atlas(std::size_t n_sources, std::size_t n_regions) {
  if (n_regions == 0 || n_sources < n_regions) throw Error("contiguous_atlas: need at least one source per region");
  ScoutAtlas atlas;
  const std::size_t base = n_sources / n_regions;
  const std::size_t extra = n_sources % n_regions;
  std::size_t next = 0;
  for (std::size_t r = 0; r < n_regions; ++r) {
    char name[32];
    std::snprintf(name, sizeof name, "region_%02zu", r + 1);
    atlas.labels.emplace_back(name);
    const std::size_t count = base + (r < extra ? 1 : 0);
    std::vector<std::size_t> members(count);
    for (auto& m : members) m = next++;
    atlas.membership.push_back(std::move(members));
  }
  return atlas;
}

ScoutSeries scout_means(const SourceEstimate& se, const ScoutAtlas& atlas) {
  validate(atlas, static_cast<std::size_t>(se.activations.rows()));
  ScoutSeries out;
  out.fs = se.fs;
  out.labels = atlas.labels;
  out.activations.setZero(static_cast<Eigen::Index>(atlas.size()), se.activations.cols());
  for (std::size_t r = 0; r < atlas.size(); ++r) {
    auto row = out.activations.row(static_cast<Eigen::Index>(r));
    for (auto idx : atlas.membership[r]) row += se.activations.row(static_cast<Eigen::Index>(idx));
    row /= static_cast<double>(atlas.membership[r].size());
  }
  return out;
}

}  // namespace handkin
