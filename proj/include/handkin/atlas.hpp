#pragma once

#include "handkin/common.hpp"
#include "handkin/inverse.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace handkin {

constexpr std::size_t kDefaultScoutCount = 62;

struct ScoutAtlas {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> membership;  // source indices per region

  std::size_t size() const { return labels.size(); }
};

// Regions non-empty and disjoint; indices < n_sources when given.
void validate(const ScoutAtlas& atlas, std::optional<std::size_t> n_sources = {});

// Text format: one `region_name: idx,idx,...` per line; '#' starts a comment.
ScoutAtlas parse_atlas(std::istream& is);
ScoutAtlas load_atlas(const std::filesystem::path& path);
void save_atlas(const ScoutAtlas& atlas, const std::filesystem::path& path);

// Splits sources 0..K-1 into n_regions contiguous index ranges (sizes differ by at most one).
ScoutAtlas contiguous_atlas(std::size_t n_sources, std::size_t n_regions = kDefaultScoutCount);

struct ScoutSeries {
  Matrix activations;  // regions x samples
  double fs = 0.0;
  std::vector<std::string> labels;
};

// Signed arithmetic mean of member source rows.
ScoutSeries scout_means(const SourceEstimate& se, const ScoutAtlas& atlas);

}  // namespace handkin
