#include <algorithm>
#include <cmath>
#include <string>

#include "modl_math.hpp"
#include "playclone/seqnet.hpp"

namespace playclone::seqnet {

ModlHead::ModlHead(int dims, int mixtures, int bins, double log_scale_floor, Eigen::VectorXd raw)
    : dims_(dims), k_(mixtures), bins_(bins), floor_(log_scale_floor), raw_(std::move(raw)) {
  if (raw_.size() != static_cast<Eigen::Index>(dims * 3 * mixtures)) {
    throw Error(ErrorKind::WidthMismatch, "MoDL head: expected " + std::to_string(dims * 3 * mixtures) +
                                              " raw values, got " + std::to_string(raw_.size()));
  }
}

double ModlHead::log_scale(int d, int k) const {
  return std::max(raw_[d * 3 * k_ + 2 * k_ + k], floor_);
}

std::vector<double> ModlHead::weights(int d) const {
  std::vector<double> w(k_);
  double mx = logit(d, 0);
  for (int k = 1; k < k_; ++k) mx = std::max(mx, logit(d, k));
  double sum = 0.0;
  for (int k = 0; k < k_; ++k) {
    w[k] = std::exp(logit(d, k) - mx);
    sum += w[k];
  }
  for (double& x : w) x /= sum;
  return w;
}

ModlHead make_head(const NetSpec& spec, Eigen::VectorXd raw) {
  return ModlHead(spec.action_dims, spec.mixtures, spec.bins, spec.log_scale_floor, std::move(raw));
}

double bin_center(int bin, int bins) { return -1.0 + (bin + 0.5) * bin_width(bins); }

double modl_dim_logprob(const ModlHead& head, int d, int bin) {
  if (bin < 0 || bin >= head.bins()) {
    throw Error(ErrorKind::InvalidArgument,
                "bin index " + std::to_string(bin) + " outside [0, " + std::to_string(head.bins() - 1) + "]");
  }
  if (d < 0 || d >= head.dims()) throw Error(ErrorKind::InvalidArgument, "dimension out of range");
  return detail::dim_logprob_grad(head.raw().data() + d * 3 * head.mixtures(), head.mixtures(),
                                  head.bins(), head.log_scale_floor(), bin, nullptr);
}

double modl_bin_logprob(const ModlHead& head, std::span<const int> bins) {
  if (bins.size() != static_cast<std::size_t>(head.dims())) {
    throw Error(ErrorKind::WidthMismatch, "expected " + std::to_string(head.dims()) +
                                              " bin indices, got " + std::to_string(bins.size()));
  }
  double total = 0.0;
  for (int d = 0; d < head.dims(); ++d) total += modl_dim_logprob(head, d, bins[d]);
  return total;
}

namespace {

int quantize_unit(double x, int bins) {
  const double pos = std::floor((x + 1.0) * 0.5 * bins);
  if (!(pos >= 0.0)) return 0;  // also catches NaN
  if (pos >= bins - 1) return bins - 1;
  return static_cast<int>(pos);
}

}  // namespace

std::vector<int> modl_sample(const ModlHead& head, Rng& rng, double temperature) {
  if (!(temperature > 0.0)) throw Error(ErrorKind::InvalidArgument, "temperature must be > 0");
  const int K = head.mixtures();
  std::vector<int> out(head.dims());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> p(K);
  for (int d = 0; d < head.dims(); ++d) {
    double mx = head.logit(d, 0) / temperature;
    for (int k = 1; k < K; ++k) mx = std::max(mx, head.logit(d, k) / temperature);
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
      p[k] = std::exp(head.logit(d, k) / temperature - mx);
      sum += p[k];
    }
    double u = unit(rng) * sum;
    int comp = K - 1;
    for (int k = 0; k < K; ++k) {
      if (u < p[k]) {
        comp = k;
        break;
      }
      u -= p[k];
    }
    double v = unit(rng);
    v = std::clamp(v, 1e-12, 1.0 - 1e-12);
    const double s = std::exp(head.log_scale(d, comp));
    const double x = head.mean(d, comp) + temperature * s * (std::log(v) - std::log1p(-v));
    out[d] = quantize_unit(x, head.bins());
  }
  return out;
}

std::vector<int> modl_greedy(const ModlHead& head) {
  std::vector<int> out(head.dims());
  for (int d = 0; d < head.dims(); ++d) {
    int best = 0;
    for (int k = 1; k < head.mixtures(); ++k) {
      if (head.logit(d, k) > head.logit(d, best)) best = k;
    }
    out[d] = quantize_unit(head.mean(d, best), head.bins());
  }
  return out;
}

}  // namespace playclone::seqnet
