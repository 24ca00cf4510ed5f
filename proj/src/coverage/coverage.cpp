#include <algorithm>
#include <cmath>
#include <sstream>

#include "playclone/coverage.hpp"

namespace playclone::coverage {

std::vector<int> CoverageGrid::degenerate_dims() const {
  std::vector<int> out;
  for (int d = 0; d < kDims; ++d) {
    if (!(max[d] > min[d])) out.push_back(d);
  }
  return out;
}

CoverageGrid build_grid(const data::Dataset& reference) {
  if (reference.total_frames() == 0) throw Error(ErrorKind::InvalidArgument, "coverage grid needs a non-empty reference");
  CoverageGrid g;
  g.min.fill(std::numeric_limits<double>::infinity());
  g.max.fill(-std::numeric_limits<double>::infinity());
  for (const auto& e : reference.episodes) {
    for (const auto& f : e.frames) {
      for (int d = 0; d < kDims; ++d) {
        const double v = f.obs[sim::idx::kFirstEnv + d];
        g.min[d] = std::min(g.min[d], v);
        g.max[d] = std::max(g.max[d], v);
      }
    }
  }
  for (int d : g.degenerate_dims()) {
    log_info("coverage: environment dim " + std::to_string(d) + " is constant in the reference; inner bins collapse");
  }
  return g;
}

int bin_index(const CoverageGrid& g, int dim, double v) {
  const double lo = g.min[dim];
  const double hi = g.max[dim];
  if (v < lo) return 0;
  if (v > hi) return kBins - 1;
  if (!(hi > lo)) return 1;
  // Bins are half-open [edge_i, edge_i+1) with edge_i = lo + (hi - lo) * i / 8; the
  // division only gives a first guess that can land one off at an edge.
  const auto edge = [&](int i) { return lo + (hi - lo) * i / kInnerBins; };
  int inner = std::min(static_cast<int>(std::floor((v - lo) / (hi - lo) * kInnerBins)), kInnerBins - 1);
  if (inner > 0 && v < edge(inner)) --inner;
  if (inner < kInnerBins - 1 && v >= edge(inner + 1)) ++inner;
  return 1 + inner;
}

BinTuple quantize_obs(const sim::Obs& o, const CoverageGrid& g) {
  BinTuple t{};
  for (int d = 0; d < kDims; ++d) t[d] = static_cast<std::uint8_t>(bin_index(g, d, o[sim::idx::kFirstEnv + d]));
  return t;
}

BinTuple quantize_env_state(const sim::EnvState& s, const CoverageGrid& g) { return quantize_obs(s.flat(), g); }

std::uint64_t pack(const BinTuple& t) {
  std::uint64_t key = 0;
  for (int d = 0; d < kDims; ++d) key |= static_cast<std::uint64_t>(t[d]) << (4 * d);
  return key;
}

CoverageCurve coverage_curve(std::span<const Segment> segments, const CoverageGrid& g, std::size_t stride, int hz) {
  if (segments.empty()) throw Error(ErrorKind::InvalidArgument, "coverage curve needs at least one segment");
  if (segments.front().data == nullptr || segments.front().data->total_frames() == 0) {
    throw Error(ErrorKind::InvalidArgument, "the first (reference) coverage segment is empty");
  }
  if (stride == 0) throw Error(ErrorKind::InvalidArgument, "coverage stride must be >= 1");
  if (hz <= 0) throw Error(ErrorKind::InvalidArgument, "coverage hz must be > 0");
  CoverageCurve c;
  c.hz = hz;
  UniqueCounter counter(g);
  std::size_t frames = 0;
  for (std::size_t si = 0; si < segments.size(); ++si) {
    const Segment& seg = segments[si];
    if (seg.data == nullptr) throw Error(ErrorKind::InvalidArgument, "coverage segment '" + seg.tag + "' has no data");
    SegmentSummary sum{seg.tag, frames, frames, counter.unique(), counter.unique()};
    for (const auto& e : seg.data->episodes) {
      for (const auto& f : e.frames) {
        counter.add(f.obs);
        ++frames;
        if (frames % stride == 0) c.points.push_back({frames, counter.unique(), si});
      }
    }
    if (c.points.empty() || c.points.back().frames != frames) c.points.push_back({frames, counter.unique(), si});
    sum.last_frame = frames;
    sum.unique_after = counter.unique();
    c.segments.push_back(std::move(sum));
  }
  return c;
}

double coverage_rate(const CoverageCurve& c, std::size_t segment) {
  if (segment >= c.segments.size()) throw Error(ErrorKind::InvalidArgument, "coverage segment index out of range");
  const SegmentSummary& s = c.segments[segment];
  const std::size_t n = s.last_frame - s.first_frame;
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "coverage segment '" + s.tag + "' has zero duration");
  const double hours = static_cast<double>(n) / (static_cast<double>(c.hz) * 3600.0);
  return static_cast<double>(s.unique_after - s.unique_before) / hours;
}

double coverage_rate(const CoverageCurve& c, const std::string& tag) {
  for (std::size_t i = 0; i < c.segments.size(); ++i) {
    if (c.segments[i].tag == tag) return coverage_rate(c, i);
  }
  throw Error(ErrorKind::InvalidArgument, "no coverage segment tagged '" + tag + "'");
}

std::string format_curve_csv(const CoverageCurve& c) {
  std::ostringstream os;
  os << "frames,hours,cumulative_unique,segment_tag\n";
  os.precision(8);
  for (const CurvePoint& p : c.points) {
    os << p.frames << ',' << static_cast<double>(p.frames) / (c.hz * 3600.0) << ',' << p.unique << ','
       << c.segments[p.segment].tag << '\n';
  }
  return os.str();
}

}  // namespace playclone::coverage
