#pragma once

#include <array>
#include <set>
#include <vector>

#include "playclone/playdata.hpp"

namespace oracle {

// Independent binning of the 11 environment dimensions against a reference:
// 0 below the reference minimum, 9 above the maximum, 8 equal-width inner bins
// with the maximum itself in the last inner bin. A constant dimension maps to 1.
struct BruteCoverage {
  std::array<double, 11> lo{}, hi{};

  explicit BruteCoverage(const playclone::data::Dataset& ref) {
    lo.fill(1e300);
    hi.fill(-1e300);
    for (const auto& e : ref.episodes) {
      for (const auto& f : e.frames) {
        for (int d = 0; d < 11; ++d) {
          lo[d] = std::min(lo[d], f.obs[8 + d]);
          hi[d] = std::max(hi[d], f.obs[8 + d]);
        }
      }
    }
  }

  std::vector<int> bins(const playclone::sim::Obs& o) const {
    std::vector<int> t(11);
    for (int d = 0; d < 11; ++d) {
      const double v = o[8 + d];
      if (v < lo[d]) {
        t[d] = 0;
      } else if (v > hi[d]) {
        t[d] = 9;
      } else if (hi[d] == lo[d]) {
        t[d] = 1;
      } else {
        int b = 1;
        // Walk the edges explicitly rather than dividing.
        for (int i = 1; i < 8; ++i) {
          if (v >= lo[d] + (hi[d] - lo[d]) * i / 8) b = i + 1;
        }
        t[d] = b;
      }
    }
    return t;
  }

  // Cumulative unique count after each frame of the concatenated datasets.
  std::vector<std::size_t> curve(const std::vector<const playclone::data::Dataset*>& parts) const {
    std::set<std::vector<int>> seen;
    std::vector<std::size_t> out;
    for (const auto* d : parts) {
      for (const auto& e : d->episodes) {
        for (const auto& f : e.frames) {
          seen.insert(bins(f.obs));
          out.push_back(seen.size());
        }
      }
    }
    return out;
  }
};

}  // namespace oracle
