#include <charconv>
#include <cmath>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "playclone/playdata.hpp"

namespace playclone::data {

namespace fs = std::filesystem;

std::string_view source_name(Source s) {
  switch (s) {
    case Source::Human: return "human";
    case Source::Oracle: return "oracle";
    case Source::Cloned: return "cloned";
    case Source::Random: return "random";
  }
  return "unknown";
}

Source parse_source(std::string_view name) {
  for (Source s : {Source::Human, Source::Oracle, Source::Cloned, Source::Random}) {
    if (source_name(s) == name) return s;
  }
  throw Error(ErrorKind::Schema, "unknown source tag '" + std::string(name) + "'");
}

std::string now_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool same_content(const Episode& a, const Episode& b) {
  EpisodeHeader ha = a.header;
  ha.created = b.header.created;
  return ha == b.header && a.frames == b.frames;
}

void validate_episode(const Episode& e) {
  const EpisodeHeader& h = e.header;
  if (h.version != kFormatVersion) {
    throw Error(ErrorKind::VersionMismatch, "episode format version " + std::to_string(h.version));
  }
  if (h.hz <= 0) throw Error(ErrorKind::Schema, "episode hz must be positive");
  if (h.obs_dim != sim::kObsDim || h.act_dim != sim::kActDim) {
    throw Error(ErrorKind::Schema, "episode widths " + std::to_string(h.obs_dim) + "/" +
                                       std::to_string(h.act_dim) + ", expected 19/8");
  }
  for (std::size_t i = 0; i < e.frames.size(); ++i) {
    const Frame& f = e.frames[i];
    if (f.tick != static_cast<std::int64_t>(i)) {
      throw Error(ErrorKind::Schema, "frame " + std::to_string(i) + " has tick " + std::to_string(f.tick));
    }
    for (double v : f.obs) {
      if (!std::isfinite(v)) throw Error(ErrorKind::Schema, "non-finite observation at frame " + std::to_string(i));
    }
    for (double v : f.act) {
      if (!std::isfinite(v)) throw Error(ErrorKind::Schema, "non-finite action at frame " + std::to_string(i));
    }
  }
}

namespace {

constexpr std::string_view kMagic = "PLAY";
constexpr std::string_view kTrailer = "END";

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}
constexpr std::uint64_t kFnvBasis = 0xcbf29ce484222325ULL;

void append_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

std::string frame_line(const Frame& f) {
  std::string line = std::to_string(f.tick);
  for (double v : f.obs) {
    line.push_back(' ');
    append_double(line, v);
  }
  for (double v : f.act) {
    line.push_back(' ');
    append_double(line, v);
  }
  return line;
}

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    const std::size_t j = s.find(' ', i);
    const std::size_t end = j == std::string_view::npos ? s.size() : j;
    if (end > i) out.push_back(s.substr(i, end - i));
    i = end;
  }
  return out;
}

template <typename T>
bool parse_num(std::string_view tok, T& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

// key=value lookup among header tokens.
std::string_view field(const std::vector<std::string_view>& toks, std::string_view key, const std::string& where) {
  for (auto t : toks) {
    if (t.size() > key.size() && t.substr(0, key.size()) == key && t[key.size()] == '=') {
      return t.substr(key.size() + 1);
    }
  }
  throw Error(ErrorKind::Schema, where + ": header lacks '" + std::string(key) + "'");
}

int int_field(const std::vector<std::string_view>& toks, std::string_view key, const std::string& where) {
  int v = 0;
  if (!parse_num(field(toks, key, where), v)) {
    throw Error(ErrorKind::Schema, where + ": bad header value for '" + std::string(key) + "'");
  }
  return v;
}

}  // namespace

void save_episode(const fs::path& path, const Episode& e) {
  validate_episode(e);
  if (e.header.created.find(' ') != std::string::npos || e.header.flags.find(' ') != std::string::npos ||
      e.header.flags.empty()) {
    throw Error(ErrorKind::Schema, "header fields must be non-empty and contain no spaces");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::Io, "cannot write episode " + path.string());
  const EpisodeHeader& h = e.header;
  os << kMagic << ' ' << h.version << " hz=" << h.hz << " obs_dim=" << h.obs_dim << " act_dim=" << h.act_dim
     << " source=" << source_name(h.source) << " seed=" << h.seed << " created=" << h.created
     << " flags=" << h.flags << '\n';
  std::uint64_t sum = kFnvBasis;
  for (const Frame& f : e.frames) {
    std::string line = frame_line(f);
    line.push_back('\n');
    sum = fnv1a(sum, line);
    os << line;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(sum));
  os << kTrailer << " frames=" << e.frames.size() << " fnv1a64=" << hex << '\n';
  if (!os) throw Error(ErrorKind::Io, "failed writing episode " + path.string());
}

Episode load_episode(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::MissingArtifact, "cannot open episode " + path.string());
  const std::string where = path.string();
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::Truncated, where + ": empty file");
  auto head = split(line);
  if (head.size() < 2 || head[0] != kMagic) throw Error(ErrorKind::Schema, where + ": not an episode file");
  Episode e;
  EpisodeHeader& h = e.header;
  if (!parse_num(head[1], h.version)) throw Error(ErrorKind::Schema, where + ": bad version field");
  if (h.version != kFormatVersion) {
    throw Error(ErrorKind::VersionMismatch,
                where + ": format version " + std::to_string(h.version) + ", expected " + std::to_string(kFormatVersion));
  }
  h.hz = int_field(head, "hz", where);
  h.obs_dim = int_field(head, "obs_dim", where);
  h.act_dim = int_field(head, "act_dim", where);
  h.source = parse_source(field(head, "source", where));
  if (!parse_num(field(head, "seed", where), h.seed)) throw Error(ErrorKind::Schema, where + ": bad seed");
  h.created = std::string(field(head, "created", where));
  h.flags = std::string(field(head, "flags", where));
  if (h.obs_dim != sim::kObsDim || h.act_dim != sim::kActDim) {
    throw Error(ErrorKind::Schema, where + ": unsupported widths");
  }

  std::uint64_t sum = kFnvBasis;
  bool trailer = false;
  std::size_t declared = 0;
  std::uint64_t declared_sum = 0;
  while (std::getline(is, line)) {
    if (line.rfind(kTrailer, 0) == 0) {
      auto toks = split(line);
      if (!parse_num(field(toks, "frames", where), declared)) throw Error(ErrorKind::Schema, where + ": bad trailer");
      auto hex = field(toks, "fnv1a64", where);
      auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), declared_sum, 16);
      if (ec != std::errc() || ptr != hex.data() + hex.size()) throw Error(ErrorKind::Schema, where + ": bad checksum field");
      trailer = true;
      break;
    }
    sum = fnv1a(sum, line);
    sum = fnv1a(sum, "\n");
    auto toks = split(line);
    if (toks.size() != 1 + sim::kObsDim + sim::kActDim) {
      throw Error(ErrorKind::Schema, where + ": frame " + std::to_string(e.frames.size()) + " has " +
                                         std::to_string(toks.size()) + " fields, expected 28");
    }
    Frame f;
    bool ok = parse_num(toks[0], f.tick);
    for (int i = 0; i < sim::kObsDim; ++i) ok = ok && parse_num(toks[1 + i], f.obs[i]);
    for (int i = 0; i < sim::kActDim; ++i) ok = ok && parse_num(toks[1 + sim::kObsDim + i], f.act[i]);
    if (!ok) throw Error(ErrorKind::Schema, where + ": unparsable frame " + std::to_string(e.frames.size()));
    e.frames.push_back(f);
  }
  if (!trailer) throw Error(ErrorKind::Truncated, where + ": missing trailer after " + std::to_string(e.frames.size()) + " frames");
  if (declared != e.frames.size()) {
    throw Error(ErrorKind::Truncated, where + ": trailer declares " + std::to_string(declared) + " frames, found " +
                                          std::to_string(e.frames.size()));
  }
  if (declared_sum != sum) throw Error(ErrorKind::Checksum, where + ": checksum mismatch");
  if (std::getline(is, line) && !line.empty()) throw Error(ErrorKind::Schema, where + ": data after trailer");
  validate_episode(e);
  return e;
}

// ---- manifests & datasets ---------------------------------------------------

std::size_t Manifest::total_frames() const {
  std::size_t n = 0;
  for (const auto& m : entries) n += m.frames;
  return n;
}

std::map<Source, std::size_t> Manifest::frames_by_source() const {
  std::map<Source, std::size_t> out;
  for (const auto& m : entries) out[m.source] += m.frames;
  return out;
}

std::size_t Dataset::total_frames() const {
  std::size_t n = 0;
  for (const auto& e : episodes) n += e.frames.size();
  return n;
}

std::map<Source, std::size_t> Dataset::frames_by_source() const {
  std::map<Source, std::size_t> out;
  for (const auto& e : episodes) out[e.header.source] += e.frames.size();
  return out;
}

bool same_content(const Dataset& a, const Dataset& b) {
  if (a.episodes.size() != b.episodes.size()) return false;
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    if (!same_content(a.episodes[i], b.episodes[i])) return false;
  }
  return true;
}

void save_manifest(const fs::path& dir, const Manifest& m) {
  fs::create_directories(dir);
  std::ofstream os(dir / kManifestName, std::ios::trunc);
  if (!os) throw Error(ErrorKind::Io, "cannot write manifest in " + dir.string());
  os << "# path frames source\n";
  for (const auto& e : m.entries) {
    if (e.path.find(' ') != std::string::npos) throw Error(ErrorKind::Schema, "episode path contains a space: " + e.path);
    os << e.path << ' ' << e.frames << ' ' << source_name(e.source) << '\n';
  }
  if (!os) throw Error(ErrorKind::Io, "failed writing manifest in " + dir.string());
}

Manifest load_manifest(const fs::path& dir) {
  const fs::path p = dir / kManifestName;
  std::ifstream is(p);
  if (!is) throw Error(ErrorKind::MissingArtifact, "no manifest at " + p.string());
  Manifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto toks = split(line);
    ManifestEntry e;
    if (toks.size() != 3 || !parse_num(toks[1], e.frames)) {
      throw Error(ErrorKind::Schema, p.string() + ":" + std::to_string(lineno) + ": expected 'path frames source'");
    }
    e.path = std::string(toks[0]);
    e.source = parse_source(toks[2]);
    m.entries.push_back(std::move(e));
  }
  return m;
}

Manifest save_dataset(const fs::path& dir, const Dataset& d) {
  fs::create_directories(dir);
  Manifest m;
  char name[32];
  for (std::size_t i = 0; i < d.episodes.size(); ++i) {
    std::snprintf(name, sizeof(name), "ep_%05zu.play", i);
    save_episode(dir / name, d.episodes[i]);
    m.entries.push_back({name, d.episodes[i].frames.size(), d.episodes[i].header.source});
  }
  save_manifest(dir, m);
  return m;
}

fs::path append_episode(const fs::path& dir, const Episode& e) {
  fs::create_directories(dir);
  Manifest m;
  if (fs::exists(dir / kManifestName)) m = load_manifest(dir);
  char name[32];
  for (std::size_t i = m.entries.size();; ++i) {
    std::snprintf(name, sizeof(name), "ep_%05zu.play", i);
    if (!fs::exists(dir / name)) break;
  }
  save_episode(dir / name, e);
  m.entries.push_back({name, e.frames.size(), e.header.source});
  save_manifest(dir, m);
  return dir / name;
}

DatasetReader::DatasetReader(fs::path dir) : dir_(std::move(dir)), manifest_(load_manifest(dir_)) {}

Episode DatasetReader::load(std::size_t i) const {
  if (i >= manifest_.entries.size()) throw Error(ErrorKind::InvalidArgument, "episode index out of range");
  const ManifestEntry& m = manifest_.entries[i];
  Episode e = load_episode(dir_ / m.path);
  if (e.frames.size() != m.frames) {
    throw Error(ErrorKind::Schema, m.path + ": manifest lists " + std::to_string(m.frames) + " frames, file has " +
                                       std::to_string(e.frames.size()));
  }
  if (e.header.source != m.source) throw Error(ErrorKind::Schema, m.path + ": source tag differs from manifest");
  return e;
}

Dataset load_dataset(const fs::path& dir) {
  DatasetReader r(dir);
  Dataset d;
  d.episodes.reserve(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) d.episodes.push_back(r.load(i));
  return d;
}

void validate_dataset(const fs::path& dir) {
  DatasetReader r(dir);
  for (std::size_t i = 0; i < r.size(); ++i) (void)r.load(i);
}

MergeReport merge_datasets(std::span<const fs::path> inputs, const fs::path& out_dir) {
  if (inputs.empty()) throw Error(ErrorKind::InvalidArgument, "merge needs at least one input dataset");
  fs::create_directories(out_dir);
  const fs::path out_abs = fs::weakly_canonical(out_dir);
  MergeReport rep;
  std::set<fs::path> seen;
  for (const fs::path& in : inputs) {
    const Manifest m = load_manifest(in);
    const fs::path in_abs = fs::weakly_canonical(in);
    for (const ManifestEntry& e : m.entries) {
      const fs::path target = fs::weakly_canonical(in_abs / e.path);
      if (!seen.insert(target).second) {
        throw Error(ErrorKind::InvalidArgument, "episode " + target.string() + " appears in more than one input");
      }
      ManifestEntry out = e;
      out.path = fs::relative(target, out_abs).generic_string();
      rep.manifest.entries.push_back(out);
    }
  }
  rep.frames_by_source = rep.manifest.frames_by_source();
  save_manifest(out_dir, rep.manifest);
  return rep;
}

Dataset merge_in_memory(std::span<const Dataset* const> parts) {
  Dataset out;
  for (const Dataset* p : parts) {
    out.episodes.insert(out.episodes.end(), p->episodes.begin(), p->episodes.end());
  }
  return out;
}

}  // namespace playclone::data
