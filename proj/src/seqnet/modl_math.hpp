#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace playclone::seqnet::detail {

inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double log_sigmoid(double x) { return -softplus(-x); }
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// sigma(x) * sigma(-x)
inline double sigmoid_slope(double x) {
  const double e = std::exp(-std::abs(x));
  return e / ((1.0 + e) * (1.0 + e));
}

constexpr int kMaxMixtures = 64;

// log of sigma(a) - sigma(c) for a > c, without cancellation.
inline double log_sigmoid_diff(double a, double c) {
  if (a + c > 0.0) {
    const double a2 = -c;
    c = -a;
    a = a2;
  }
  const double la = log_sigmoid(a);
  const double lc = log_sigmoid(c);
  return la + std::log(-std::expm1(lc - la));
}

// log P(bin) for one action dimension of a MoDL head.
// raw = [logits(K) | means(K) | log_scales(K)]. If grad is non-null it receives
// d(-log P)/d(raw) for the same 3K block (overwritten, not accumulated).
inline double dim_logprob_grad(const double* raw, int K, int bins, double floor, int bin, double* grad) {
  const double delta = 2.0 / bins;
  const double x = -1.0 + (bin + 0.5) * delta;
  const double* logits = raw;
  const double* means = raw + K;
  const double* raw_ls = raw + 2 * K;

  std::array<double, kMaxMixtures> w{}, logp{}, g_mu{}, g_ls{};
  double lmax = logits[0];
  for (int k = 1; k < K; ++k) lmax = std::max(lmax, logits[k]);
  double lsum = 0.0;
  for (int k = 0; k < K; ++k) lsum += (w[k] = std::exp(logits[k] - lmax));
  for (int k = 0; k < K; ++k) w[k] /= lsum;
  const double lse_logits = lmax + std::log(lsum);

  // Component probabilities are kept in linear space (in logp) until one is
  // too small for that, then everything switches to log space.
  bool linear = true;
  for (int k = 0; k < K; ++k) {
    const double ls = std::max(raw_ls[k], floor);
    const double inv_s = std::exp(-ls);
    const double centered = x - means[k];
    const double plus = inv_s * (centered + 0.5 * delta);
    const double minus = inv_s * (centered - 0.5 * delta);
    double p = 0.0;
    double ga = 0.0;  // d log p / d plus
    double gc = 0.0;  // d log p / d minus
    if (bin == 0) {
      p = sigmoid(plus);
      ga = sigmoid(-plus);
    } else if (bin == bins - 1) {
      p = sigmoid(-minus);
      gc = -sigmoid(minus);
    } else {
      p = sigmoid(plus) - sigmoid(minus);
      if (p > 1e-5) {
        ga = sigmoid_slope(plus) / p;
        gc = -sigmoid_slope(minus) / p;
      }
    }
    if (p > 1e-5) {
      logp[k] = linear ? p : std::log(p);
    } else {
      if (linear) {
        for (int j = 0; j < k; ++j) logp[j] = std::log(logp[j]);
        linear = false;
      }
      if (bin == 0) {
        logp[k] = log_sigmoid(plus);
      } else if (bin == bins - 1) {
        logp[k] = log_sigmoid(-minus);
      } else {
        logp[k] = log_sigmoid_diff(plus, minus);
        ga = std::exp(log_sigmoid(plus) + log_sigmoid(-plus) - logp[k]);
        gc = -std::exp(log_sigmoid(minus) + log_sigmoid(-minus) - logp[k]);
      }
    }
    g_mu[k] = -inv_s * (ga + gc);
    g_ls[k] = raw_ls[k] >= floor ? -(ga * plus + gc * minus) : 0.0;
  }

  double log_total = 0.0;
  std::array<double, kMaxMixtures> gamma{};
  if (linear) {
    double total = 0.0;
    for (int k = 0; k < K; ++k) total += (gamma[k] = w[k] * logp[k]);
    for (int k = 0; k < K; ++k) gamma[k] /= total;
    log_total = std::log(total);
  } else {
    double m = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) m = std::max(m, logits[k] - lse_logits + logp[k]);
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += (gamma[k] = std::exp(logits[k] - lse_logits + logp[k] - m));
    for (int k = 0; k < K; ++k) gamma[k] /= s;
    log_total = m + std::log(s);
  }

  if (grad != nullptr) {
    for (int k = 0; k < K; ++k) {
      grad[k] = w[k] - gamma[k];
      grad[K + k] = -gamma[k] * g_mu[k];
      grad[2 * K + k] = -gamma[k] * g_ls[k];
    }
  }
  return log_total;
}

}  // namespace playclone::seqnet::detail
