// SPDX-License-Identifier: Apache-2.0
#include "earthforge/fusion.hpp"

namespace earthforge {

std::vector<BandTriple> group_channels(Index band_count) {
  if (band_count < 1) throw Error(ErrorKind::InvalidArgument, "band_count must be >= 1");
  std::vector<BandTriple> groups;
  for (Index start = 0; start < band_count; start += 3) {
    BandTriple g{};
    for (Index k = 0; k < 3; ++k) g[k] = std::min(start + k, band_count - 1);
    groups.push_back(g);
  }
  return groups;
}

std::vector<LayoutSegment> run_length(std::span<const Provenance> layout) {
  std::vector<LayoutSegment> segments;
  for (const auto& p : layout) {
    if (!segments.empty() && segments.back().provenance == p)
      ++segments.back().count;
    else
      segments.push_back({p, 1});
  }
  return segments;
}

std::vector<LayoutSegment> predict_layout(const TilePlan& plan, Index band_count, int timesteps,
                                          const FusionConfig& config) {
  if (band_count < 1) throw Error(ErrorKind::InvalidArgument, "band_count must be >= 1");
  if (timesteps < 1) throw Error(ErrorKind::InvalidArgument, "timesteps must be >= 1");
  if (timesteps > config.max_timesteps)
    throw Error(ErrorKind::TooManyTimesteps, std::to_string(timesteps) +
                                                 " timesteps exceed the limit of " +
                                                 std::to_string(config.max_timesteps));
  if (config.reduced_rows < 1 || config.reduced_cols < 1 || config.tokens_per_tile < 1)
    throw Error(ErrorKind::InvalidArgument, "fusion sizes must be >= 1");

  std::vector<LayoutSegment> segments;
  for (int t = 0; t < timesteps; ++t) {
    if (band_count == 3) {
      for (int tile = 0; tile < plan.image_count(); ++tile)
        segments.push_back({{tile, 0, t}, config.tokens_per_tile});
      continue;
    }
    const Index per_group = config.reduced_rows * config.reduced_cols;
    if (config.aggregate == Aggregate::Mean) {
      segments.push_back({{0, 0, t}, per_group});
      continue;
    }
    const auto groups = static_cast<int>(group_channels(band_count).size());
    for (int g = 0; g < groups; ++g) segments.push_back({{0, g, t}, per_group});
  }
  return segments;
}

Index token_budget(const TilePlan& plan, Index band_count, int timesteps,
                   const FusionConfig& config) {
  Index total = 0;
  for (const auto& s : predict_layout(plan, band_count, timesteps, config)) total += s.count;
  return total;
}

}  // namespace earthforge
