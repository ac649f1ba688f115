#include "mixlab/percolation.hpp"

#include "mixlab/correlations.hpp"
#include "mixlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mixlab {

std::vector<std::size_t> ClusterReport::cluster_sizes() const {
  std::vector<std::size_t> sizes(cluster_count, 0);
  for (auto l : labels)
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
  return sizes;
}

namespace {

struct Offset {
  std::int64_t dx = 0, dy = 0;
};

// Union-find where offset[i] is the unwound displacement from parent[i] to i.
class OffsetUnionFind {
 public:
  explicit OffsetUnionFind(std::size_t n) : parent_(n), offset_(n) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
  }

  // Root of i, with offset_[i] rewritten relative to that root.
  std::size_t find(std::size_t i) {
    std::size_t root = i;
    while (parent_[root] != root) root = parent_[root];
    // Second pass: accumulate displacements along the path, then compress.
    std::vector<std::size_t> path;
    for (std::size_t j = i; parent_[j] != j; j = parent_[j]) path.push_back(j);
    for (std::size_t k = path.size(); k-- > 0;) {
      const std::size_t j = path[k];
      const std::size_t p = parent_[j];
      if (p != root) {
        offset_[j].dx += offset_[p].dx;
        offset_[j].dy += offset_[p].dy;
      }
      parent_[j] = root;
    }
    return root;
  }

  // Joins u and v where v sits at displacement d from u in the unwound plane.
  // Returns the winding of the closed cycle when both are already joined.
  Offset unite(std::size_t u, std::size_t v, Offset d) {
    const std::size_t ru = find(u), rv = find(v);
    const Offset ou = ru == u ? Offset{} : offset_[u];
    const Offset ov = rv == v ? Offset{} : offset_[v];
    if (ru == rv) return {ou.dx + d.dx - ov.dx, ou.dy + d.dy - ov.dy};
    parent_[rv] = ru;
    offset_[rv] = {ou.dx + d.dx - ov.dx, ou.dy + d.dy - ov.dy};
    return {};
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<Offset> offset_;
};

}  // namespace

ClusterReport clusters(const Grid& grid, int connectivity, std::uint8_t target, std::uint64_t seed) {
  if (connectivity != 4 && connectivity != 8) throw std::invalid_argument("connectivity must be 4 or 8");
  const std::size_t w = grid.width, h = grid.height;
  ClusterReport report;
  report.width = w;
  report.height = h;
  report.connectivity = connectivity;
  report.target = target;
  report.seed = seed;
  if (w == 0 || h == 0) return report;

  std::vector<Offset> steps{{1, 0}, {0, 1}};
  if (connectivity == 8) {
    steps.push_back({1, 1});
    steps.push_back({1, -1});
  }
  OffsetUnionFind uf(w * h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      if (grid.at(x, y) != target) continue;
      for (const Offset& d : steps) {
        const std::size_t nx = static_cast<std::size_t>(static_cast<std::int64_t>(x + w) + d.dx) % w;
        const std::size_t ny = static_cast<std::size_t>(static_cast<std::int64_t>(y + h) + d.dy) % h;
        if (grid.at(nx, ny) != target) continue;
        const Offset cycle = uf.unite(y * w + x, ny * w + nx, d);
        if (cycle.dx != 0) report.wraps_horizontal = true;
        if (cycle.dy != 0) report.wraps_vertical = true;
      }
    }

  report.labels.assign(w * h, -1);
  std::vector<std::int64_t> root_label(w * h, -1);
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < w * h; ++i) {
    if (grid.cells[i] != target) continue;
    const std::size_t r = uf.find(i);
    if (root_label[r] < 0) {
      root_label[r] = static_cast<std::int64_t>(sizes.size());
      sizes.push_back(0);
    }
    report.labels[i] = root_label[r];
    ++sizes[static_cast<std::size_t>(root_label[r])];
    ++report.target_cells;
  }
  report.cluster_count = sizes.size();
  for (auto s : sizes) {
    ++report.size_histogram[s];
    report.largest = std::max(report.largest, s);
  }
  return report;
}

std::vector<SweepRow> percolation_sweep(const AlgebraicSystem& sys, const SweepOptions& options) {
  if (options.samples == 0) throw std::invalid_argument("percolation_sweep: samples must be positive");
  for (auto s : options.sizes)
    if (s < 8) throw std::invalid_argument("percolation_sweep: lattice sizes must be >= 8");

  std::vector<SweepRow> rows;
  for (std::size_t si = 0; si < options.sizes.size(); ++si) {
    const std::size_t size = options.sizes[si];
    const TorusKernel kernel = torus_kernel(sys, size, size);
    struct Sample {
      bool wraps[2] = {false, false};
      double largest[2] = {0, 0};
    };
    std::vector<Sample> results(options.samples);
    parallel_for(options.samples, options.workers, [&](std::size_t i) {
      const Grid grid = sample_configuration(kernel, substream_seed(options.seed, (si << 32) | i));
      if (!satisfies_relations(sys.pattern, grid))
        throw std::logic_error("percolation_sweep: sampled configuration violates the relations");
      std::size_t ones = 0;
      for (auto c : grid.cells) ones += c;
      for (std::uint8_t bit = 0; bit < 2; ++bit) {
        const ClusterReport r = clusters(grid, options.connectivity, bit);
        std::size_t total = 0;
        for (const auto& [s, n] : r.size_histogram) total += s * n;
        if (total != (bit ? ones : grid.cells.size() - ones))
          throw std::logic_error("percolation_sweep: cluster sizes do not add up to the target cells");
        results[i].wraps[bit] = r.wraps();
        results[i].largest[bit] = static_cast<double>(r.largest) / static_cast<double>(grid.cells.size());
      }
    });
    for (std::uint8_t bit = 0; bit < 2; ++bit) {
      SweepRow row;
      row.size = size;
      row.bit = bit;
      row.samples = options.samples;
      row.seed = options.seed;
      double wraps = 0, sum = 0, sum_sq = 0;
      for (const Sample& s : results) {
        wraps += s.wraps[bit];
        sum += s.largest[bit];
        sum_sq += s.largest[bit] * s.largest[bit];
      }
      const double n = static_cast<double>(options.samples);
      row.wrap_fraction = wraps / n;
      row.largest_fraction_mean = sum / n;
      if (options.samples > 1) {
        const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1));
        row.stderr_ = std::sqrt(var / n);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, const std::string& header_comment) {
  std::istringstream lines(header_comment);
  for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
  out << "size,bit,wrap_fraction,largest_fraction_mean,stderr,samples,seed\n";
  for (const auto& r : rows)
    out << r.size << ',' << static_cast<int>(r.bit) << ',' << format_double(r.wrap_fraction) << ','
        << format_double(r.largest_fraction_mean) << ',' << format_double(r.stderr_) << ',' << r.samples << ','
        << r.seed << '\n';
}

namespace {

constexpr const char* kDark = "#1a1a1a";
constexpr const char* kLight = "#ececec";

// Distinct hues by golden-angle rotation; cluster 0 is the first color.
std::string cluster_color(std::size_t rank) {
  const double hue = std::fmod(static_cast<double>(rank) * 137.508, 360.0);
  std::ostringstream s;
  s << "hsl(" << static_cast<int>(hue) << ",70%,50%)";
  return s.str();
}

}  // namespace

void write_grid_svg(std::ostream& out, const Grid& grid, const RenderOptions& options) {
  const std::size_t px = std::max<std::size_t>(1, options.cell_px);
  std::vector<std::string> palette;
  ClusterReport report;
  if (options.color_clusters) {
    report = clusters(grid, options.connectivity, options.target);
    // Larger clusters get earlier colors; ties keep label order.
    const auto sizes = report.cluster_sizes();
    std::vector<std::size_t> order(sizes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return sizes[a] > sizes[b]; });
    palette.resize(sizes.size());
    for (std::size_t r = 0; r < order.size(); ++r) palette[order[r]] = cluster_color(r);
  }
  auto color_of = [&](std::size_t x, std::size_t y) -> std::string {
    if (options.color_clusters) {
      const auto l = report.labels[y * grid.width + x];
      if (l >= 0) return palette[static_cast<std::size_t>(l)];
    }
    return grid.at(x, y) ? kLight : kDark;
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << grid.width * px << "\" height=\"" << grid.height * px
      << "\" shape-rendering=\"crispEdges\">\n";
  if (!options.title.empty()) out << "<desc>" << xml_escape(options.title) << "</desc>\n";
  for (std::size_t y = 0; y < grid.height; ++y) {
    for (std::size_t x = 0; x < grid.width;) {
      const std::string color = color_of(x, y);
      std::size_t end = x + 1;
      while (end < grid.width && color_of(end, y) == color) ++end;
      out << "<rect x=\"" << x * px << "\" y=\"" << y * px << "\" width=\"" << (end - x) * px << "\" height=\"" << px
          << "\" fill=\"" << color << "\" data-bit=\"" << static_cast<int>(grid.at(x, y)) << "\"/>\n";
      x = end;
    }
  }
  out << "</svg>\n";
}

void write_pbm(std::ostream& out, const Grid& grid) {
  out << "P1\n" << grid.width << ' ' << grid.height << '\n';
  for (std::size_t y = 0; y < grid.height; ++y) {
    for (std::size_t x = 0; x < grid.width; ++x) out << (x ? " " : "") << (grid.at(x, y) ? '0' : '1');
    out << '\n';
  }
}

Grid read_pbm(std::istream& in) {
  // Tokens with '#' comments stripped.
  auto next = [&in]() -> std::string {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
    throw std::invalid_argument("PBM: unexpected end of input");
  };
  if (next() != "P1") throw std::invalid_argument("PBM: only plain P1 files are supported");
  const std::size_t w = std::stoul(next()), h = std::stoul(next());
  Grid grid(w, h);
  std::size_t i = 0;
  while (i < w * h) {
    for (char ch : next()) {
      if (ch != '0' && ch != '1') throw std::invalid_argument("PBM: bad pixel character");
      if (i == w * h) throw std::invalid_argument("PBM: too many pixels");
      grid.cells[i++] = ch == '0' ? 1 : 0;
    }
  }
  return grid;
}

}  // namespace mixlab
