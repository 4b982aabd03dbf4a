// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <span>
#include <string>
#include <vector>

#include "earthforge/error.hpp"
#include "earthforge/resample.hpp"
#include "earthforge/tiler.hpp"

namespace earthforge {

/// Where a token came from. All indices are non-negative.
struct Provenance {
  int tile_index = 0;
  int group_index = 0;
  int time_index = 0;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

template <typename Scalar>
using TokenMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// rows x cols feature vectors of length dim. `values` holds one token per
/// matrix row, tokens ordered row-major over the grid.
template <typename Scalar>
struct TokenGrid {
  Index rows = 0;
  Index cols = 0;
  TokenMatrix<Scalar> values;
  Provenance provenance;

  TokenGrid(Index rows_, Index cols_, TokenMatrix<Scalar> values_, Provenance provenance_ = {})
      : rows(rows_), cols(cols_), values(std::move(values_)), provenance(provenance_) {
    if (rows < 1 || cols < 1 || values.cols() < 1)
      throw Error(ErrorKind::ShapeMismatch, "token grid dimensions must be >= 1");
    if (values.rows() != rows * cols)
      throw Error(ErrorKind::ShapeMismatch, "token grid holds " + std::to_string(values.rows()) +
                                                " tokens, expected " +
                                                std::to_string(rows * cols));
    if (!values.allFinite()) throw Error(ErrorKind::InvalidArgument, "token grid has non-finite values");
  }

  static TokenGrid constant(Index rows, Index cols, Index dim, Scalar value, Provenance p = {}) {
    return TokenGrid(rows, cols, TokenMatrix<Scalar>::Constant(rows * cols, dim, value), p);
  }

  Index dim() const noexcept { return values.cols(); }
  auto token(Index r, Index c) const { return values.row(r * cols + c); }
};

/// Ordered tokens (one per matrix row) with a provenance record per token.
template <typename Scalar>
struct TokenSequence {
  TokenMatrix<Scalar> tokens;
  std::vector<Provenance> layout;

  Index size() const noexcept { return tokens.rows(); }
  Index dim() const noexcept { return tokens.cols(); }
};

enum class ReduceStrategy { Bilinear, Average };
enum class Aggregate { Concat, Mean };

struct FusionConfig {
  ReduceStrategy reduce_strategy = ReduceStrategy::Bilinear;
  Index reduced_rows = 4;
  Index reduced_cols = 4;
  Aggregate aggregate = Aggregate::Concat;
  Index tokens_per_tile = 256;
  int max_timesteps = 4;
};

using BandTriple = std::array<Index, 3>;

/// Consecutive triples; a short final group repeats its last band.
std::vector<BandTriple> group_channels(Index band_count);

template <typename Scalar>
TokenGrid<Scalar> bilinear_reduce(const TokenGrid<Scalar>& grid, Index out_rows, Index out_cols) {
  if (out_rows < 1 || out_cols < 1 || out_rows > grid.rows || out_cols > grid.cols)
    throw Error(ErrorKind::InvalidTarget, "bilinear target " + std::to_string(out_rows) + "x" +
                                              std::to_string(out_cols) + " not within " +
                                              std::to_string(grid.rows) + "x" +
                                              std::to_string(grid.cols));
  const auto ytaps = bilinear_taps(grid.rows, out_rows);
  const auto xtaps = bilinear_taps(grid.cols, out_cols);
  const Eigen::MatrixXd in = grid.values.template cast<double>();
  const auto at = [&](Index r, Index c) { return in.row(r * grid.cols + c); };
  // Same lerp form as the raster resampler so constants survive bit-exact.
  const auto lerp = [](const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b, double f) {
    return Eigen::RowVectorXd(a + f * (b - a));
  };

  TokenMatrix<Scalar> out(out_rows * out_cols, grid.dim());
  for (Index r = 0; r < out_rows; ++r) {
    const auto& ty = ytaps[static_cast<std::size_t>(r)];
    for (Index c = 0; c < out_cols; ++c) {
      const auto& tx = xtaps[static_cast<std::size_t>(c)];
      const Eigen::RowVectorXd top = lerp(at(ty.lo, tx.lo), at(ty.lo, tx.hi), tx.frac);
      const Eigen::RowVectorXd bottom = lerp(at(ty.hi, tx.lo), at(ty.hi, tx.hi), tx.frac);
      out.row(r * out_cols + c) = lerp(top, bottom, ty.frac).template cast<Scalar>();
    }
  }
  return TokenGrid<Scalar>(out_rows, out_cols, std::move(out), grid.provenance);
}

/// Non-overlapping block means.
template <typename Scalar>
TokenGrid<Scalar> average_reduce(const TokenGrid<Scalar>& grid, Index out_rows, Index out_cols) {
  if (out_rows < 1 || out_cols < 1 || grid.rows % out_rows != 0 || grid.cols % out_cols != 0)
    throw Error(ErrorKind::NonDivisible, std::to_string(grid.rows) + "x" +
                                             std::to_string(grid.cols) + " is not divisible into " +
                                             std::to_string(out_rows) + "x" +
                                             std::to_string(out_cols) + " blocks");
  const Index bh = grid.rows / out_rows;
  const Index bw = grid.cols / out_cols;
  const double count = static_cast<double>(bh * bw);
  TokenMatrix<Scalar> out(out_rows * out_cols, grid.dim());
  for (Index r = 0; r < out_rows; ++r)
    for (Index c = 0; c < out_cols; ++c) {
      // Shifted mean: exact for constant blocks.
      const Eigen::RowVectorXd anchor = grid.token(r * bh, c * bw).template cast<double>();
      Eigen::RowVectorXd offset = Eigen::RowVectorXd::Zero(grid.dim());
      for (Index y = 0; y < bh; ++y)
        for (Index x = 0; x < bw; ++x)
          offset += grid.token(r * bh + y, c * bw + x).template cast<double>() - anchor;
      out.row(r * out_cols + c) = (anchor + offset / count).template cast<Scalar>();
    }
  return TokenGrid<Scalar>(out_rows, out_cols, std::move(out), grid.provenance);
}

template <typename Scalar>
TokenGrid<Scalar> reduce(const TokenGrid<Scalar>& grid, const FusionConfig& config) {
  return config.reduce_strategy == ReduceStrategy::Bilinear
             ? bilinear_reduce(grid, config.reduced_rows, config.reduced_cols)
             : average_reduce(grid, config.reduced_rows, config.reduced_cols);
}

/// Reduces every channel-group grid and aggregates them into one sequence.
/// Concat keeps group order and tags each token with its group; mean
/// averages element-wise and is exactly invariant to group order.
template <typename Scalar>
TokenSequence<Scalar> fuse_spectral(std::span<const TokenGrid<Scalar>> groups,
                                    const FusionConfig& config) {
  if (groups.empty()) throw Error(ErrorKind::ShapeMismatch, "no channel groups to fuse");
  const auto& first = groups.front();
  for (const auto& g : groups)
    if (g.rows != first.rows || g.cols != first.cols || g.dim() != first.dim())
      throw Error(ErrorKind::ShapeMismatch, "channel-group grids differ in shape");

  std::vector<TokenGrid<Scalar>> reduced;
  reduced.reserve(groups.size());
  for (const auto& g : groups) reduced.push_back(reduce(g, config));
  const Index per_group = config.reduced_rows * config.reduced_cols;
  const Index dim = first.dim();

  TokenSequence<Scalar> seq;
  if (config.aggregate == Aggregate::Concat) {
    seq.tokens.resize(per_group * static_cast<Index>(reduced.size()), dim);
    seq.layout.reserve(static_cast<std::size_t>(seq.tokens.rows()));
    for (std::size_t g = 0; g < reduced.size(); ++g) {
      seq.tokens.middleRows(static_cast<Index>(g) * per_group, per_group) = reduced[g].values;
      const Provenance p{reduced[g].provenance.tile_index, static_cast<int>(g),
                         reduced[g].provenance.time_index};
      seq.layout.insert(seq.layout.end(), static_cast<std::size_t>(per_group), p);
    }
    return seq;
  }

  seq.tokens.resize(per_group, dim);
  std::vector<double> column(reduced.size());
  for (Index i = 0; i < per_group; ++i)
    for (Index d = 0; d < dim; ++d) {
      for (std::size_t g = 0; g < reduced.size(); ++g)
        column[g] = static_cast<double>(reduced[g].values(i, d));
      std::sort(column.begin(), column.end());
      double sum = 0.0;
      for (double v : column) sum += v;
      seq.tokens(i, d) = static_cast<Scalar>(sum / static_cast<double>(column.size()));
    }
  seq.layout.assign(static_cast<std::size_t>(per_group),
                    Provenance{first.provenance.tile_index, 0, first.provenance.time_index});
  return seq;
}

template <typename Scalar>
TokenSequence<Scalar> fuse_spectral(const std::vector<TokenGrid<Scalar>>& groups,
                                    const FusionConfig& config) {
  return fuse_spectral(std::span<const TokenGrid<Scalar>>(groups), config);
}

/// Concatenates timesteps in order and stamps each token's time_index.
template <typename Scalar>
TokenSequence<Scalar> stack_temporal(std::span<const TokenSequence<Scalar>> per_timestep,
                                     const FusionConfig& config) {
  if (per_timestep.empty())
    throw Error(ErrorKind::InvalidArgument, "temporal stack needs at least one timestep");
  if (static_cast<int>(per_timestep.size()) > config.max_timesteps)
    throw Error(ErrorKind::TooManyTimesteps,
                std::to_string(per_timestep.size()) + " timesteps exceed the limit of " +
                    std::to_string(config.max_timesteps));
  Index total = 0;
  Index dim = -1;
  for (const auto& s : per_timestep) {
    if (s.size() == 0) continue;
    if (dim >= 0 && s.dim() != dim)
      throw Error(ErrorKind::ShapeMismatch, "timesteps differ in token dimension");
    dim = s.dim();
    total += s.size();
  }
  TokenSequence<Scalar> out;
  out.tokens.resize(total, std::max<Index>(dim, 0));
  out.layout.reserve(static_cast<std::size_t>(total));
  Index offset = 0;
  for (std::size_t t = 0; t < per_timestep.size(); ++t) {
    const auto& s = per_timestep[t];
    if (s.size() == 0) continue;
    out.tokens.middleRows(offset, s.size()) = s.tokens;
    for (Provenance p : s.layout) {
      p.time_index = static_cast<int>(t);
      out.layout.push_back(p);
    }
    offset += s.size();
  }
  return out;
}

template <typename Scalar>
TokenSequence<Scalar> stack_temporal(const std::vector<TokenSequence<Scalar>>& per_timestep,
                                     const FusionConfig& config) {
  return stack_temporal(std::span<const TokenSequence<Scalar>>(per_timestep), config);
}

/// The tokens of one timestep, in order, with their provenance.
template <typename Scalar>
TokenSequence<Scalar> restrict_to_time(const TokenSequence<Scalar>& seq, int time_index) {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < seq.layout.size(); ++i)
    if (seq.layout[i].time_index == time_index) rows.push_back(static_cast<Index>(i));
  TokenSequence<Scalar> out;
  out.tokens.resize(static_cast<Index>(rows.size()), seq.dim());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.tokens.row(static_cast<Index>(k)) = seq.tokens.row(rows[k]);
    out.layout.push_back(seq.layout[static_cast<std::size_t>(rows[k])]);
  }
  return out;
}

/// A run of consecutive tokens sharing one provenance.
struct LayoutSegment {
  Provenance provenance;
  Index count = 0;
  friend bool operator==(const LayoutSegment&, const LayoutSegment&) = default;
};

std::vector<LayoutSegment> run_length(std::span<const Provenance> layout);

/// Sequence length the encoding pipeline produces. Three-band input goes
/// through the tiler (tiles plus thumbnail, tokens_per_tile each); any other
/// band count goes through channel grouping and reduction.
Index token_budget(const TilePlan& plan, Index band_count, int timesteps,
                   const FusionConfig& config);

/// The layout `token_budget` counts, as run-length segments.
std::vector<LayoutSegment> predict_layout(const TilePlan& plan, Index band_count, int timesteps,
                                          const FusionConfig& config);

}  // namespace earthforge
