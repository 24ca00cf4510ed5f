#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "playclone/playdata.hpp"

namespace playclone::data {

namespace {

std::array<double, kStatDims> frame_values(const Frame& f) {
  std::array<double, kStatDims> v{};
  std::copy(f.obs.begin(), f.obs.end(), v.begin());
  std::copy(f.act.begin(), f.act.end(), v.begin() + sim::kObsDim);
  return v;
}

void require_frames(std::size_t n) {
  if (n < 2) {
    throw Error(ErrorKind::InvalidArgument, "norm stats need at least 2 frames, got " + std::to_string(n));
  }
}

void init_extrema(NormStats& s) {
  s.min.fill(std::numeric_limits<double>::infinity());
  s.max.fill(-std::numeric_limits<double>::infinity());
}

void update_extrema(NormStats& s, const std::array<double, kStatDims>& v) {
  for (int i = 0; i < kStatDims; ++i) {
    s.min[i] = std::min(s.min[i], v[i]);
    s.max[i] = std::max(s.max[i], v[i]);
  }
}

// Rounding can leave the mean a hair outside [min, max] for constant columns.
void finish(NormStats& s) {
  for (int i = 0; i < kStatDims; ++i) s.mean[i] = std::clamp(s.mean[i], s.min[i], s.max[i]);
}

}  // namespace

// Single pass (Welford).
NormStats compute_norm_stats(const Dataset& d) {
  require_frames(d.total_frames());
  NormStats s;
  init_extrema(s);
  std::array<double, kStatDims> m2{};
  std::size_t n = 0;
  for (const Episode& e : d.episodes) {
    for (const Frame& f : e.frames) {
      const auto v = frame_values(f);
      ++n;
      for (int i = 0; i < kStatDims; ++i) {
        const double delta = v[i] - s.mean[i];
        s.mean[i] += delta / static_cast<double>(n);
        m2[i] += delta * (v[i] - s.mean[i]);
      }
      update_extrema(s, v);
    }
  }
  for (int i = 0; i < kStatDims; ++i) s.std[i] = std::sqrt(std::max(0.0, m2[i] / static_cast<double>(n)));
  s.frames = n;
  finish(s);
  return s;
}

NormStats compute_norm_stats(const DatasetReader& reader) {
  require_frames(reader.manifest().total_frames());
  NormStats s;
  init_extrema(s);
  std::array<double, kStatDims> sum{};
  std::size_t n = 0;
  for (std::size_t i = 0; i < reader.size(); ++i) {
    const Episode e = reader.load(i);
    for (const Frame& f : e.frames) {
      const auto v = frame_values(f);
      for (int k = 0; k < kStatDims; ++k) sum[k] += v[k];
      update_extrema(s, v);
      ++n;
    }
  }
  require_frames(n);
  for (int k = 0; k < kStatDims; ++k) s.mean[k] = sum[k] / static_cast<double>(n);
  std::array<double, kStatDims> sq{};
  for (std::size_t i = 0; i < reader.size(); ++i) {
    const Episode e = reader.load(i);
    for (const Frame& f : e.frames) {
      const auto v = frame_values(f);
      for (int k = 0; k < kStatDims; ++k) sq[k] += (v[k] - s.mean[k]) * (v[k] - s.mean[k]);
    }
  }
  for (int k = 0; k < kStatDims; ++k) s.std[k] = std::sqrt(sq[k] / static_cast<double>(n));
  s.frames = n;
  finish(s);
  return s;
}

namespace {

void put_row(std::ostringstream& os, const char* key, const std::array<double, kStatDims>& v) {
  os << key << '=';
  char buf[32];
  for (int i = 0; i < kStatDims; ++i) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v[i]);
    if (i) os << ',';
    os.write(buf, ptr - buf);
  }
  os << '\n';
}

void get_row(const std::string& value, std::array<double, kStatDims>& out, const std::string& key) {
  std::size_t pos = 0;
  for (int i = 0; i < kStatDims; ++i) {
    const std::size_t end = std::min(value.find(',', pos), value.size());
    auto [ptr, ec] = std::from_chars(value.data() + pos, value.data() + end, out[i]);
    if (ec != std::errc() || ptr != value.data() + end) {
      throw Error(ErrorKind::Schema, "norm stats: bad value in '" + key + "'");
    }
    if (i + 1 < kStatDims && end == value.size()) {
      throw Error(ErrorKind::Schema, "norm stats: '" + key + "' has fewer than 27 values");
    }
    pos = end + 1;
  }
  if (pos < value.size()) throw Error(ErrorKind::Schema, "norm stats: '" + key + "' has more than 27 values");
}

}  // namespace

std::string format_norm_stats(const NormStats& s) {
  std::ostringstream os;
  os << "norm.frames=" << s.frames << '\n';
  put_row(os, "norm.mean", s.mean);
  put_row(os, "norm.std", s.std);
  put_row(os, "norm.min", s.min);
  put_row(os, "norm.max", s.max);
  return os.str();
}

NormStats parse_norm_stats(const std::string& text) {
  NormStats s;
  int found = 0;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "norm.frames") {
      s.frames = std::stoull(value);
      found |= 1;
    } else if (key == "norm.mean") {
      get_row(value, s.mean, key);
      found |= 2;
    } else if (key == "norm.std") {
      get_row(value, s.std, key);
      found |= 4;
    } else if (key == "norm.min") {
      get_row(value, s.min, key);
      found |= 8;
    } else if (key == "norm.max") {
      get_row(value, s.max, key);
      found |= 16;
    }
  }
  if (found != 31) throw Error(ErrorKind::Schema, "norm stats incomplete");
  return s;
}

// ---- quantization ----------------------------------------------------------

ActionQuantizer::ActionQuantizer(const NormStats& stats) {
  for (int d = 0; d < sim::kActDim; ++d) {
    lo_[d] = stats.min[sim::kObsDim + d];
    hi_[d] = stats.max[sim::kObsDim + d];
    if (!(hi_[d] > lo_[d])) {
      degenerate_.push_back(d);
      log_warn("action dimension " + std::to_string(d) + " has min == max; it quantizes to bin 128");
    }
  }
}

double ActionQuantizer::normalize(int d, double v) const {
  if (!(hi_[d] > lo_[d])) return 0.0;
  const double x = 2.0 * (v - lo_[d]) / (hi_[d] - lo_[d]) - 1.0;
  return std::clamp(x, -1.0, 1.0);
}

Bins ActionQuantizer::quantize(const ActVec& a) const {
  Bins b{};
  for (int d = 0; d < sim::kActDim; ++d) {
    if (!(hi_[d] > lo_[d])) {
      b[d] = kActionBins / 2;
      continue;
    }
    const double x = normalize(d, a[d]);
    const int bin = static_cast<int>(std::floor((x + 1.0) * 0.5 * kActionBins));
    b[d] = std::clamp(bin, 0, kActionBins - 1);
  }
  return b;
}

ActVec ActionQuantizer::dequantize(const Bins& b) const {
  ActVec a{};
  for (int d = 0; d < sim::kActDim; ++d) {
    if (!(hi_[d] > lo_[d])) {
      a[d] = lo_[d];
      continue;
    }
    const double c = -1.0 + (std::clamp(b[d], 0, kActionBins - 1) + 0.5) * (2.0 / kActionBins);
    a[d] = lo_[d] + (c + 1.0) * 0.5 * (hi_[d] - lo_[d]);
  }
  return a;
}

ObsNormalizer::ObsNormalizer(const NormStats& stats) {
  for (int i = 0; i < sim::kObsDim; ++i) {
    center_[i] = 0.5 * (stats.min[i] + stats.max[i]);
    const double span = stats.max[i] - stats.min[i];
    inv_half_[i] = span > 0.0 ? 2.0 / span : 0.0;
  }
}

void ObsNormalizer::apply(const Obs& o, double* out) const {
  for (int i = 0; i < sim::kObsDim; ++i) out[i] = (o[i] - center_[i]) * inv_half_[i];
}

// ---- windows -----------------------------------------------------------------

namespace {

std::size_t starts_for(std::size_t n) { return n >= kMinWindow ? n - kMinWindow + 1 : 0; }

std::vector<std::size_t> all_ids(const Dataset& d) {
  std::vector<std::size_t> ids(d.episodes.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return ids;
}

}  // namespace

WindowSampler::WindowSampler(const Dataset& d) : WindowSampler(d, all_ids(d)) {}

WindowSampler::WindowSampler(const Dataset& d, std::vector<std::size_t> episodes)
    : data_(&d), ids_(std::move(episodes)) {
  cumulative_.reserve(ids_.size());
  for (std::size_t i : ids_) {
    total_ += starts_for(d.episodes.at(i).frames.size());
    cumulative_.push_back(total_);
  }
}

std::size_t WindowSampler::eligible_starts(std::size_t episode) const {
  if (std::find(ids_.begin(), ids_.end(), episode) == ids_.end()) return 0;
  return starts_for(data_->episodes.at(episode).frames.size());
}

Window WindowSampler::sample(Rng& rng) const {
  if (total_ == 0) {
    throw Error(ErrorKind::NoEligible, "no episode has at least " + std::to_string(kMinWindow) + " frames");
  }
  const std::size_t g = std::uniform_int_distribution<std::size_t>(0, total_ - 1)(rng);
  const auto pos =
      static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), g) - cumulative_.begin());
  const std::size_t ep = ids_[pos];
  const std::size_t before = pos == 0 ? 0 : cumulative_[pos - 1];
  const std::size_t start = g - before;
  const auto& frames = data_->episodes[ep].frames;
  const std::size_t want = std::uniform_int_distribution<std::size_t>(kMinWindow, kMaxWindow)(rng);
  const std::size_t len = std::min(want, frames.size() - start);
  Window w;
  w.episode = ep;
  w.start = start;
  w.frames = std::span<const Frame>(frames.data() + start, len);
  w.goal = w.frames.back().obs;
  return w;
}

Window sample_window(const Dataset& d, Rng& rng) { return WindowSampler(d).sample(rng); }

}  // namespace playclone::data
