#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "playclone/common.hpp"
#include "playclone/sim.hpp"

namespace playclone::data {

using sim::ActVec;
using sim::Obs;

enum class Source { Human, Oracle, Cloned, Random };

std::string_view source_name(Source s);
// Throws Error(Schema) on an unknown tag.
Source parse_source(std::string_view name);

constexpr int kFormatVersion = 1;
constexpr int kMinWindow = 32;
constexpr int kMaxWindow = 64;
constexpr int kActionBins = 256;

struct EpisodeHeader {
  int version = kFormatVersion;
  int hz = kControlHz;
  int obs_dim = sim::kObsDim;
  int act_dim = sim::kActDim;
  Source source = Source::Oracle;
  std::uint64_t seed = 0;
  std::string created = "1970-01-01T00:00:00Z";
  std::string flags = "none";  // e.g. "disconnected" for an interrupted teleop recording

  bool operator==(const EpisodeHeader&) const = default;
};

struct Frame {
  std::int64_t tick = 0;
  Obs obs{};
  ActVec act{};
  bool operator==(const Frame&) const = default;
};

struct Episode {
  EpisodeHeader header;
  std::vector<Frame> frames;
  bool operator==(const Episode&) const = default;
};

// Equality ignoring the creation timestamp.
bool same_content(const Episode& a, const Episode& b);

// Throws Error(Schema) describing the first violation.
void validate_episode(const Episode& e);

std::string now_timestamp();

// ---- persistence ------------------------------------------------------------

void save_episode(const std::filesystem::path& path, const Episode& e);
// Distinct error kinds: VersionMismatch, Truncated, Checksum, Schema, MissingArtifact.
Episode load_episode(const std::filesystem::path& path);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  std::size_t frames = 0;
  Source source = Source::Oracle;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::size_t total_frames() const;
  std::map<Source, std::size_t> frames_by_source() const;
};

constexpr const char* kManifestName = "manifest.txt";

void save_manifest(const std::filesystem::path& dir, const Manifest& m);
Manifest load_manifest(const std::filesystem::path& dir);

// In-memory dataset: episodes in manifest order.
struct Dataset {
  std::vector<Episode> episodes;

  std::size_t total_frames() const;
  std::map<Source, std::size_t> frames_by_source() const;
  bool empty() const { return episodes.empty(); }
};

bool same_content(const Dataset& a, const Dataset& b);

// Writes episodes as ep_00000.play, ... plus manifest.txt into dir.
Manifest save_dataset(const std::filesystem::path& dir, const Dataset& d);
Dataset load_dataset(const std::filesystem::path& dir);
// Writes the episode under the first free ep_NNNNN.play name in dir and adds it
// to dir's manifest (created if absent). Returns the episode path.
std::filesystem::path append_episode(const std::filesystem::path& dir, const Episode& e);

// Checks every episode and that manifest frame counts match file contents.
void validate_dataset(const std::filesystem::path& dir);

// Lazy access to a dataset on disk.
class DatasetReader {
 public:
  explicit DatasetReader(std::filesystem::path dir);
  const Manifest& manifest() const { return manifest_; }
  std::size_t size() const { return manifest_.entries.size(); }
  Episode load(std::size_t i) const;

 private:
  std::filesystem::path dir_;
  Manifest manifest_;
};

struct MergeReport {
  Manifest manifest;
  std::map<Source, std::size_t> frames_by_source;
};

// Concatenates manifests into out_dir/manifest.txt; episode files are referenced, not copied.
// Throws InvalidArgument if the same episode file appears twice.
MergeReport merge_datasets(std::span<const std::filesystem::path> inputs, const std::filesystem::path& out_dir);
Dataset merge_in_memory(std::span<const Dataset* const> parts);

// ---- statistics & quantization -----------------------------------------------

constexpr int kStatDims = sim::kObsDim + sim::kActDim;

struct NormStats {
  std::array<double, kStatDims> mean{}, std{}, min{}, max{};
  std::size_t frames = 0;

  bool operator==(const NormStats&) const = default;
};

// Precondition: >= 2 frames (throws InvalidArgument otherwise).
NormStats compute_norm_stats(const Dataset& d);
// Two-pass over episodes loaded one at a time.
NormStats compute_norm_stats(const DatasetReader& reader);

std::string format_norm_stats(const NormStats& s);
NormStats parse_norm_stats(const std::string& text);

using Bins = std::array<int, sim::kActDim>;

class ActionQuantizer {
 public:
  explicit ActionQuantizer(const NormStats& stats);
  Bins quantize(const ActVec& a) const;
  ActVec dequantize(const Bins& b) const;
  // Normalized value in [-1, 1] of action coordinate d (clamped).
  double normalize(int d, double v) const;
  double bin_width(int d) const { return (hi_[d] - lo_[d]) / kActionBins; }
  const std::vector<int>& degenerate_dims() const { return degenerate_; }

 private:
  std::array<double, sim::kActDim> lo_{}, hi_{};
  std::vector<int> degenerate_;
};

// Affine map of observations onto [-1, 1] using min/max; degenerate dims map to 0.
class ObsNormalizer {
 public:
  explicit ObsNormalizer(const NormStats& stats);
  void apply(const Obs& o, double* out) const;

 private:
  std::array<double, sim::kObsDim> center_{}, inv_half_{};
};

// ---- hindsight windows -----------------------------------------------------

struct Window {
  std::size_t episode = 0;
  std::size_t start = 0;
  std::span<const Frame> frames;  // tau
  Obs goal{};                     // s_g, the last observation of tau
  std::size_t length() const { return frames.size(); }
};

// Uniform draw over all eligible (episode, start) pairs, then L ~ U{32..64}
// truncated to the episode remainder. Episodes shorter than 32 frames are never drawn.
class WindowSampler {
 public:
  explicit WindowSampler(const Dataset& d);
  // Restricted to the listed episodes.
  WindowSampler(const Dataset& d, std::vector<std::size_t> episodes);
  std::size_t eligible_starts() const { return total_; }
  std::size_t eligible_starts(std::size_t episode) const;
  // Throws Error(NoEligible) when nothing can be drawn.
  Window sample(Rng& rng) const;

 private:
  const Dataset* data_;
  std::vector<std::size_t> ids_;
  std::vector<std::size_t> cumulative_;  // cumulative eligible starts per episode
  std::size_t total_ = 0;
};

Window sample_window(const Dataset& d, Rng& rng);

}  // namespace playclone::data
