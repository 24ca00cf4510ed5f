#include <doctest.h>

#include <algorithm>
#include <set>

#include "../oracles/coverage_oracle.hpp"
#include "playclone/agents.hpp"
#include "playclone/coverage.hpp"

using namespace playclone;
using namespace playclone::coverage;

namespace {

data::Dataset play(double minutes, std::uint64_t seed, agents::PlayPolicy policy = agents::PlayPolicy::Oracle) {
  agents::CollectConfig cc;
  cc.minutes = minutes;
  cc.episode_minutes = 0.5;
  cc.seed = seed;
  cc.policy = policy;
  if (policy == agents::PlayPolicy::Random) {
    for (int d = 0; d < sim::kActDim; ++d) {
      cc.random.mean[d] = 0.0;
      cc.random.std[d] = 0.02;
      cc.random.clip_low[d] = -0.03;
      cc.random.clip_high[d] = 0.03;
    }
  }
  return agents::collect_play(sim::SceneConfig{}, cc).dataset;
}

}  // namespace

TEST_SUITE("coverage") {
  TEST_CASE("bin edges") {
    CoverageGrid g;
    g.min.fill(0.0);
    g.max.fill(1.0);
    g.max[3] = 0.0;  // degenerate
    CHECK(bin_index(g, 0, -0.01) == 0);
    CHECK(bin_index(g, 0, 0.0) == 1);
    CHECK(bin_index(g, 0, 0.124) == 1);
    CHECK(bin_index(g, 0, 0.125) == 2);
    CHECK(bin_index(g, 0, 0.99) == 8);
    CHECK(bin_index(g, 0, 1.0) == 8);
    CHECK(bin_index(g, 0, 1.01) == 9);
    CHECK(bin_index(g, 3, 0.0) == 1);
    CHECK(bin_index(g, 3, -1.0) == 0);
    CHECK(bin_index(g, 3, 1.0) == 9);
    CHECK(g.degenerate_dims() == std::vector<int>{3});
  }

  TEST_CASE("packing is injective on bin tuples") {
    std::set<std::uint64_t> keys;
    BinTuple t{};
    for (int d = 0; d < kDims; ++d) {
      for (int b = 0; b < kBins; ++b) {
        t.fill(0);
        t[d] = static_cast<std::uint8_t>(b);
        keys.insert(pack(t));
      }
    }
    // The all-zero tuple appears once per dimension.
    CHECK(keys.size() == static_cast<std::size_t>(kDims * (kBins - 1) + 1));
  }

  TEST_CASE("the grid spans the reference and every reference frame is inner") {
    const data::Dataset ref = play(1.0, 2);
    const CoverageGrid g = build_grid(ref);
    for (const auto& e : ref.episodes) {
      for (const auto& f : e.frames) {
        for (int b : quantize_obs(f.obs, g)) {
          CHECK(b >= 1);
          CHECK(b <= 8);
        }
      }
    }
    CHECK_THROWS_AS(build_grid(data::Dataset{}), Error);
  }

  TEST_CASE("streaming curve equals the brute-force set") {
    const data::Dataset ref = play(1.0, 5);
    const data::Dataset extra = play(1.0, 6, agents::PlayPolicy::Random);
    const CoverageGrid g = build_grid(ref);
    const Segment segs[] = {{"reference", &ref}, {"random", &extra}};
    const CoverageCurve c = coverage_curve(segs, g, 1);
    const oracle::BruteCoverage brute(ref);
    const auto expect = brute.curve({&ref, &extra});
    REQUIRE(c.points.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(c.points[i].unique == expect[i]);
      CHECK(c.points[i].frames == i + 1);
    }
  }

  TEST_CASE("curve points, segment summaries and rates") {
    const data::Dataset ref = play(0.5, 7);
    const data::Dataset more = play(0.5, 8);
    const CoverageGrid g = build_grid(ref);
    const Segment segs[] = {{"human", &ref}, {"cloned", &more}};
    const CoverageCurve c = coverage_curve(segs, g, 400);
    // 900 frames per segment: points at 400, 800, 900, 1200, 1600, 1800.
    std::vector<std::size_t> frames;
    for (const auto& p : c.points) frames.push_back(p.frames);
    CHECK(frames == std::vector<std::size_t>{400, 800, 900, 1200, 1600, 1800});
    for (std::size_t i = 1; i < c.points.size(); ++i) CHECK(c.points[i].unique >= c.points[i - 1].unique);
    CHECK(c.segments[1].first_frame == 900);
    CHECK(c.segments[1].unique_before == c.segments[0].unique_after);
    const double hours = 900.0 / (30 * 3600.0);
    CHECK(coverage_rate(c, "human") == doctest::Approx(c.segments[0].unique_after / hours));
    CHECK_THROWS_AS(coverage_rate(c, "nope"), Error);

    const data::Dataset empty;
    const Segment with_empty[] = {{"human", &ref}, {"none", &empty}};
    const CoverageCurve c2 = coverage_curve(with_empty, g, 400);
    CHECK_THROWS_AS(coverage_rate(c2, "none"), Error);
    const Segment empty_first[] = {{"none", &empty}};
    CHECK_THROWS_AS(coverage_curve(empty_first, g), Error);

    const std::string csv = format_curve_csv(c);
    CHECK(csv.rfind("frames,hours,cumulative_unique,segment_tag\n", 0) == 0);
    CHECK(csv.find("1800,") != std::string::npos);
    CHECK(csv.find(",cloned\n") != std::string::npos);
  }

  TEST_CASE("final count is invariant to frame order") {
    data::Dataset ref = play(1.0, 9);
    const CoverageGrid g = build_grid(ref);
    UniqueCounter a(g), b(g);
    for (const auto& e : ref.episodes) {
      for (const auto& f : e.frames) a.add(f.obs);
    }
    std::reverse(ref.episodes.begin(), ref.episodes.end());
    for (auto& e : ref.episodes) {
      std::reverse(e.frames.begin(), e.frames.end());
      for (const auto& f : e.frames) b.add(f.obs);
    }
    CHECK(a.unique() == b.unique());
  }
}
