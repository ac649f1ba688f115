#pragma once

// Cluster analysis of bit configurations on a torus: connected components of
// one bit value, wraparound detection and size statistics across scales.

#include "mixlab/algebraic.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace mixlab {

struct ClusterReport {
  std::size_t width = 0;
  std::size_t height = 0;
  int connectivity = 4;
  std::uint8_t target = 0;
  std::size_t cluster_count = 0;
  std::map<std::size_t, std::size_t> size_histogram;  // cluster size -> number of clusters
  std::size_t largest = 0;
  std::size_t target_cells = 0;
  bool wraps_horizontal = false;
  bool wraps_vertical = false;
  std::uint64_t seed = 0;
  /// Cluster index per cell (row-major), -1 for cells of the other bit.
  /// Clusters are numbered in row-major order of their first cell.
  std::vector<std::int64_t> labels;

  bool wraps() const { return wraps_horizontal || wraps_vertical; }
  std::vector<std::size_t> cluster_sizes() const;
};

/// Union-find over same-bit neighbors with torus wraparound. Each node keeps
/// its displacement to the parent in the unwound plane; a cluster wraps
/// horizontally (vertically) when closing an edge inside it yields a cycle
/// with nonzero horizontal (vertical) winding.
ClusterReport clusters(const Grid& grid, int connectivity, std::uint8_t target, std::uint64_t seed = 0);

struct SweepRow {
  std::size_t size = 0;
  std::uint8_t bit = 0;
  double wrap_fraction = 0.0;
  double largest_fraction_mean = 0.0;
  double stderr_ = 0.0;  // standard error of largest_fraction_mean
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

struct SweepOptions {
  std::vector<std::size_t> sizes;
  std::size_t samples = 32;
  int connectivity = 4;
  std::uint64_t seed = 1;
  unsigned workers = 0;
};

/// For each size s, samples uniform configurations of the s x s torus kernel
/// and reports, per bit value, the fraction with a wrapping cluster and the
/// mean largest-cluster fraction (relative to s^2). Samples use substreams of
/// the seed, so the output depends only on the options. Throws
/// std::invalid_argument for sizes < 8 and std::logic_error if a sample
/// violates the relations.
std::vector<SweepRow> percolation_sweep(const AlgebraicSystem& sys, const SweepOptions& options);

/// Header size,bit,wrap_fraction,largest_fraction_mean,stderr,samples,seed;
/// the comment lines are written first, each prefixed with "# ".
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, const std::string& header_comment = {});

struct RenderOptions {
  std::size_t cell_px = 8;
  bool color_clusters = false;  // color the clusters of `target` instead of plain light/dark
  std::uint8_t target = 1;
  int connectivity = 4;
  std::string title;
};

/// SVG with bit 0 dark and bit 1 light; rows are drawn as runs of equal color.
void write_grid_svg(std::ostream& out, const Grid& grid, const RenderOptions& options);

/// Plain PBM (P1). Black pixels are the dark cells, i.e. bit 0 is written as 1.
void write_pbm(std::ostream& out, const Grid& grid);
Grid read_pbm(std::istream& in);

}  // namespace mixlab
