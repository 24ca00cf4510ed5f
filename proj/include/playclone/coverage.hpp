#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "playclone/playdata.hpp"
#include "playclone/sim.hpp"

namespace playclone::coverage {

constexpr int kDims = sim::kEnvDim;  // block pose, drawer, slider, buttons
constexpr int kBins = 10;            // bin 0 below min, 1..8 inner, 9 above max
constexpr int kInnerBins = 8;

using BinTuple = std::array<std::uint8_t, kDims>;

struct CoverageGrid {
  std::array<double, kDims> min{};
  std::array<double, kDims> max{};

  std::vector<int> degenerate_dims() const;
  static double cardinality() { return 1e11; }
};

// Throws InvalidArgument on an empty reference.
CoverageGrid build_grid(const data::Dataset& reference);

int bin_index(const CoverageGrid& g, int dim, double v);
BinTuple quantize_env_state(const sim::EnvState& s, const CoverageGrid& g);
BinTuple quantize_obs(const sim::Obs& o, const CoverageGrid& g);
// 4 bits per dimension.
std::uint64_t pack(const BinTuple& t);

class UniqueCounter {
 public:
  explicit UniqueCounter(const CoverageGrid& g) : grid_(g) {}
  // True if the frame's bin tuple had not been seen before.
  bool add(const sim::Obs& o) { return seen_.insert(pack(quantize_obs(o, grid_))).second; }
  std::size_t unique() const { return seen_.size(); }

 private:
  CoverageGrid grid_;
  std::unordered_set<std::uint64_t> seen_;
};

struct Segment {
  std::string tag;
  const data::Dataset* data = nullptr;
};

struct CurvePoint {
  std::size_t frames = 0;
  std::size_t unique = 0;
  std::size_t segment = 0;
};

struct SegmentSummary {
  std::string tag;
  std::size_t first_frame = 0;  // cumulative frames before the segment
  std::size_t last_frame = 0;
  std::size_t unique_before = 0;
  std::size_t unique_after = 0;
};

struct CoverageCurve {
  int hz = kControlHz;
  std::vector<CurvePoint> points;
  std::vector<SegmentSummary> segments;

  std::size_t final_unique() const { return points.empty() ? 0 : points.back().unique; }
};

// Streams segments in order. A point is emitted every `stride` frames and at
// the end of each segment.
CoverageCurve coverage_curve(std::span<const Segment> segments, const CoverageGrid& g, std::size_t stride = 1000,
                             int hz = kControlHz);

// New unique bins per hour within a segment. Throws InvalidArgument for a
// zero-duration segment or an unknown tag.
double coverage_rate(const CoverageCurve& c, std::size_t segment);
double coverage_rate(const CoverageCurve& c, const std::string& tag);

// frames,hours,cumulative_unique,segment_tag
std::string format_curve_csv(const CoverageCurve& c);

}  // namespace playclone::coverage
