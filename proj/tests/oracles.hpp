#pragma once

// Test-only oracles. They deliberately avoid the library's own algorithms
// (beyond basic GF(2) elimination) so they can check them independently.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <vector>

#include "mixlab/algebraic.hpp"
#include "mixlab/gf2.hpp"
#include "mixlab/rational.hpp"

namespace mixlab::testing {

/// Every configuration of a w x h box whose fully contained pattern
/// translates all sum to zero, found by enumerating all 2^(w*h) fillings.
class BoxEnumeration {
 public:
  BoxEnumeration(const RelationPattern& pattern, Site origin, std::size_t w, std::size_t h)
      : origin_(origin), w_(w), h_(h) {
    std::vector<std::uint64_t> translate_masks;
    for (std::int64_t ty = -pattern.min_y(); ty + pattern.max_y() < static_cast<std::int64_t>(h); ++ty)
      for (std::int64_t tx = -pattern.min_x(); tx + pattern.max_x() < static_cast<std::int64_t>(w); ++tx) {
        std::uint64_t m = 0;
        for (const Site& o : pattern.support()) m ^= 1ULL << ((ty + o.y) * static_cast<std::int64_t>(w) + tx + o.x);
        translate_masks.push_back(m);
      }
    for (std::uint64_t cfg = 0; cfg < (1ULL << (w * h)); ++cfg) {
      bool ok = true;
      for (std::uint64_t m : translate_masks)
        if (__builtin_popcountll(cfg & m) & 1) {
          ok = false;
          break;
        }
      if (ok) valid_.push_back(cfg);
    }
  }

  std::size_t count() const { return valid_.size(); }
  /// Valid fillings as bit masks, cell (x, y) at bit y * w + x.
  const std::vector<std::uint64_t>& configurations() const { return valid_; }

  Rational measure(const CylinderConstraint& c) const {
    std::uint64_t care = 0, want = 0;
    for (const SiteBit& r : c.requirements()) {
      const Site d = r.site - origin_;
      const auto bit = 1ULL << (d.y * static_cast<std::int64_t>(w_) + d.x);
      care |= bit;
      if (r.bit) want |= bit;
    }
    const auto hits = std::count_if(valid_.begin(), valid_.end(), [&](std::uint64_t v) { return (v & care) == want; });
    return Rational(hits, static_cast<std::int64_t>(valid_.size()));
  }

 private:
  Site origin_;
  std::size_t w_, h_;
  std::vector<std::uint64_t> valid_;
};

/// Relations among the functionals at `sites`, computed literally as the
/// span of pattern translates inside the dilated bounding box intersected
/// with vectors supported on `sites`. Columns outside `sites` come first, so
/// echelon rows whose pivot lies among the site columns vanish elsewhere.
inline std::vector<gf2::BitVector> translate_span_relations(const RelationPattern& pattern,
                                                            const std::vector<Site>& sites) {
  const std::int64_t r = pattern.radius();
  std::int64_t x0 = sites[0].x, x1 = sites[0].x, y0 = sites[0].y, y1 = sites[0].y;
  for (const Site& s : sites) {
    x0 = std::min(x0, s.x);
    x1 = std::max(x1, s.x);
    y0 = std::min(y0, s.y);
    y1 = std::max(y1, s.y);
  }
  x0 -= r, y0 -= r, x1 += r, y1 += r;
  const std::int64_t w = x1 - x0 + 1, h = y1 - y0 + 1;
  const auto cells = static_cast<std::size_t>(w * h);

  std::vector<std::size_t> column(cells);
  std::vector<char> in_s(cells, 0);
  for (std::size_t i = 0; i < sites.size(); ++i) in_s[(sites[i].y - y0) * w + (sites[i].x - x0)] = 1;
  std::size_t next = 0;
  for (std::size_t c = 0; c < cells; ++c)
    if (!in_s[c]) column[c] = next++;
  const std::size_t outside = next;
  for (std::size_t i = 0; i < sites.size(); ++i)
    column[(sites[i].y - y0) * w + (sites[i].x - x0)] = outside + i;

  gf2::Echelon e(cells);
  for (std::int64_t ty = y0 - pattern.min_y(); ty + pattern.max_y() <= y1; ++ty)
    for (std::int64_t tx = x0 - pattern.min_x(); tx + pattern.max_x() <= x1; ++tx) {
      gf2::BitVector row(cells);
      for (const Site& o : pattern.support()) row.flip(column[(ty + o.y - y0) * w + (tx + o.x - x0)]);
      e.insert(row);
    }
  std::vector<gf2::BitVector> out;
  for (std::size_t i = 0; i < e.rank(); ++i) {
    if (e.pivots()[i] < outside) continue;
    gf2::BitVector rel(sites.size());
    for (std::size_t s = 0; s < sites.size(); ++s) rel.set(s, e.rows()[i].get(outside + s));
    out.push_back(rel);
  }
  return out;
}

struct BfsResult {
  std::vector<std::int64_t> labels;
  bool horizontal = false;
  bool vertical = false;
};

// Oracle: breadth-first search in the universal cover. Each cell gets the
// unwound coordinates of its first visit; reaching it again at a different
// lift closes a cycle whose winding is the lift difference.
inline BfsResult bfs_clusters(const Grid& g, int connectivity, std::uint8_t target) {
  const auto w = static_cast<std::int64_t>(g.width), h = static_cast<std::int64_t>(g.height);
  std::vector<std::pair<std::int64_t, std::int64_t>> steps{{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  if (connectivity == 8) steps.insert(steps.end(), {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}});
  BfsResult out;
  out.labels.assign(g.cells.size(), -1);
  std::vector<std::pair<std::int64_t, std::int64_t>> lift(g.cells.size());
  std::int64_t next_label = 0;
  for (std::int64_t start = 0; start < w * h; ++start) {
    if (g.cells[start] != target || out.labels[start] >= 0) continue;
    out.labels[start] = next_label;
    lift[start] = {start % w, start / w};
    std::deque<std::int64_t> queue{start};
    while (!queue.empty()) {
      const auto cur = queue.front();
      queue.pop_front();
      const auto [lx, ly] = lift[cur];
      for (auto [dx, dy] : steps) {
        const std::int64_t ux = lx + dx, uy = ly + dy;
        const std::int64_t cell = ((uy % h + h) % h) * w + ((ux % w + w) % w);
        if (g.cells[cell] != target) continue;
        if (out.labels[cell] < 0) {
          out.labels[cell] = next_label;
          lift[cell] = {ux, uy};
          queue.push_back(cell);
        } else {
          if (lift[cell].first != ux) out.horizontal = true;
          if (lift[cell].second != uy) out.vertical = true;
        }
      }
    }
    ++next_label;
  }
  return out;
}

}  // namespace mixlab::testing
