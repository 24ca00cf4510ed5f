#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "playclone/seqnet.hpp"

namespace playclone::seqnet {

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state) {
  if (params.size() != grad.size()) {
    throw Error(ErrorKind::WidthMismatch, "adam_step: parameter and gradient lengths differ");
  }
  if (state.m.size() != params.size()) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
    state.step = 0;
  }
  const AdamConfig& c = state.cfg;
  state.step += 1;
  state.m = c.beta1 * state.m + (1.0 - c.beta1) * grad;
  state.v = c.beta2 * state.v + (1.0 - c.beta2) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  params.array() -= c.lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + c.eps);
}

double clip_grad_norm(Eigen::VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm && norm > 0.0) grad *= max_norm / norm;
  return norm;
}

namespace {

constexpr char kMagic[8] = {'P', 'C', 'L', 'N', 'N', 'E', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_uint(std::istream& is, int bytes, const std::filesystem::path& path) {
  unsigned char b[8] = {};
  if (!is.read(reinterpret_cast<char*>(b), bytes)) {
    throw Error(ErrorKind::Truncated, "checkpoint truncated: " + path.string());
  }
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_params(const std::filesystem::path& path, const PolicyParams& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::Io, "cannot write checkpoint " + path.string());
  const NetSpec& s = params.spec();
  os.write(kMagic, sizeof(kMagic));
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(s.input_width));
  put_u32(os, static_cast<std::uint32_t>(s.layers));
  put_u32(os, static_cast<std::uint32_t>(s.width));
  put_u32(os, static_cast<std::uint32_t>(s.mixtures));
  put_u32(os, static_cast<std::uint32_t>(s.action_dims));
  put_u32(os, static_cast<std::uint32_t>(s.bins));
  put_f64(os, s.log_scale_floor);
  put_u64(os, static_cast<std::uint64_t>(params.values().size()));
  for (Eigen::Index i = 0; i < params.values().size(); ++i) put_f64(os, params.values()[i]);
  if (!os) throw Error(ErrorKind::Io, "failed writing checkpoint " + path.string());
}

PolicyParams load_params(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::MissingArtifact, "cannot open checkpoint " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof(magic))) throw Error(ErrorKind::Truncated, "checkpoint truncated: " + path.string());
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::Schema, "not a checkpoint file: " + path.string());
  }
  const auto version = static_cast<std::uint32_t>(get_uint(is, 4, path));
  if (version != kVersion) {
    throw Error(ErrorKind::VersionMismatch, "checkpoint version " + std::to_string(version) + " unsupported");
  }
  NetSpec s;
  s.input_width = static_cast<int>(get_uint(is, 4, path));
  s.layers = static_cast<int>(get_uint(is, 4, path));
  s.width = static_cast<int>(get_uint(is, 4, path));
  s.mixtures = static_cast<int>(get_uint(is, 4, path));
  s.action_dims = static_cast<int>(get_uint(is, 4, path));
  s.bins = static_cast<int>(get_uint(is, 4, path));
  s.log_scale_floor = std::bit_cast<double>(get_uint(is, 8, path));
  const std::uint64_t n = get_uint(is, 8, path);
  PolicyParams params(s);
  if (n != static_cast<std::uint64_t>(params.values().size())) {
    throw Error(ErrorKind::Schema, "checkpoint parameter count does not match its NetSpec");
  }
  for (std::uint64_t i = 0; i < n; ++i) {
    params.values()[static_cast<Eigen::Index>(i)] = std::bit_cast<double>(get_uint(is, 8, path));
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorKind::Schema, "trailing bytes in checkpoint " + path.string());
  }
  return params;
}

}  // namespace playclone::seqnet
