#include <doctest.h>

#include <cmath>
#include <fstream>

#include "../oracles/gradcheck.hpp"
#include "../oracles/modl_oracle.hpp"
#include "helpers.hpp"
#include "playclone/seqnet.hpp"

using namespace playclone;
using namespace playclone::seqnet;

namespace {

NetSpec small_spec() {
  NetSpec s;
  s.input_width = 3;
  s.layers = 2;
  s.width = 5;
  s.mixtures = 2;
  s.action_dims = 2;
  s.bins = 16;
  return s;
}

ModlHead random_head(Rng& rng, int dims, int K, double mean_span, double ls_lo, double ls_hi) {
  Eigen::VectorXd raw(dims * 3 * K);
  for (int d = 0; d < dims; ++d) {
    for (int k = 0; k < K; ++k) {
      raw[d * 3 * K + k] = uniform(rng, -5, 5);
      raw[d * 3 * K + K + k] = uniform(rng, -mean_span, mean_span);
      raw[d * 3 * K + 2 * K + k] = uniform(rng, ls_lo, ls_hi);
    }
  }
  return ModlHead(dims, K, 256, -10.0, raw);
}

}  // namespace

TEST_SUITE("seqnet") {
  TEST_CASE("bin centres") {
    CHECK(bin_center(0, 256) == doctest::Approx(-1.0 + 1.0 / 256));
    CHECK(bin_center(255, 256) == doctest::Approx(1.0 - 1.0 / 256));
    CHECK(bin_width(256) == doctest::Approx(2.0 / 256));
  }

  TEST_CASE("MoDL log-probabilities match the direct CDF computation") {
    Rng rng(5);
    for (int i = 0; i < 40; ++i) {
      const ModlHead h = random_head(rng, 2, 3, 1.2, -4.0, 0.0);
      for (int d = 0; d < 2; ++d) {
        const auto p = oracle::modl_bin_probs(h, d);
        for (int b = 0; b < 256; b += 5) {
          if (p[b] < 1e-200L) continue;
          CHECK(modl_dim_logprob(h, d, b) == doctest::Approx(static_cast<double>(std::log(p[b]))).epsilon(1e-8));
        }
      }
    }
  }

  TEST_CASE("MoDL bin probabilities sum to one, including extreme heads") {
    Rng rng(9);
    for (int i = 0; i < 100; ++i) {
      const double span = i % 3 == 0 ? 50.0 : 1.5;
      const ModlHead h = i % 2 == 0 ? random_head(rng, 2, 4, span, -14.0, 6.0) : random_head(rng, 2, 4, span, -3, 1);
      for (int d = 0; d < 2; ++d) {
        double sum = 0.0;
        for (int b = 0; b < 256; ++b) sum += std::exp(modl_dim_logprob(h, d, b));
        CHECK(std::abs(sum - 1.0) <= 1e-6);
      }
    }
  }

  TEST_CASE("out-of-range bins and wrong head widths are rejected") {
    Rng rng(1);
    const ModlHead h = random_head(rng, 2, 2, 1, -2, 0);
    CHECK_THROWS_AS(modl_dim_logprob(h, 0, 256), Error);
    CHECK_THROWS_AS(modl_dim_logprob(h, 0, -1), Error);
    try {
      ModlHead(2, 2, 256, -10, Eigen::VectorXd::Zero(5));
      FAIL("expected WidthMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::WidthMismatch);
    }
  }

  TEST_CASE("log-scales below the floor are clamped") {
    Eigen::VectorXd raw = Eigen::VectorXd::Zero(3);
    raw[2] = -40.0;
    const ModlHead h(1, 1, 256, -10.0, raw);
    CHECK(h.log_scale(0, 0) == -10.0);
    CHECK(std::isfinite(modl_dim_logprob(h, 0, 0)));
  }

  TEST_CASE("sampling at temperature one follows the bin distribution") {
    Eigen::VectorXd raw(6);
    raw << 0.3, -0.3, -0.5, 0.4, std::log(0.1), std::log(0.05);
    const ModlHead h(1, 2, 256, -10.0, raw);
    const auto p = oracle::modl_bin_probs(h, 0);
    // Compare on 16 coarse groups of 16 bins.
    std::vector<double> expect(16, 0.0), got(16, 0.0);
    for (int b = 0; b < 256; ++b) expect[b / 16] += static_cast<double>(p[b]);
    Rng rng(17);
    const int n = 40000;
    for (int i = 0; i < n; ++i) got[modl_sample(h, rng, 1.0)[0] / 16] += 1.0 / n;
    for (int g = 0; g < 16; ++g) {
      const double se = std::sqrt(expect[g] * (1 - expect[g]) / n);
      CHECK(std::abs(got[g] - expect[g]) <= 5 * se + 1e-4);
    }
  }

  TEST_CASE("low temperature concentrates samples at the dominant mean") {
    Eigen::VectorXd raw(6);
    raw << 4.0, -4.0, 0.25, -0.6, std::log(0.2), std::log(0.2);
    const ModlHead h(1, 2, 256, -10.0, raw);
    const int target = static_cast<int>(std::floor((0.25 + 1.0) * 128));
    CHECK(modl_greedy(h)[0] == target);
    Rng rng(2);
    int near = 0;
    for (int i = 0; i < 2000; ++i) near += std::abs(modl_sample(h, rng, 0.01)[0] - target) <= 1 ? 1 : 0;
    CHECK(near > 1900);
    CHECK_THROWS_AS(modl_sample(h, rng, 0.0), Error);
  }

  TEST_CASE("analytic gradient matches finite differences") {
    for (int c = 0; c < 3; ++c) {
      Rng rng(mix_seed(1234, c));
      NetSpec s = small_spec();
      s.layers = 1 + c;
      const auto p = PolicyParams::random(s, rng);
      const auto batch = oracle::random_batch(s, rng, 3, 1, 5);
      const auto r = oracle::gradient_check(p, batch);
      CHECK(r.checked == static_cast<long>(s.param_count()));
      CHECK(r.max_rel <= 1e-4);
    }
  }

  TEST_CASE("single-precision recurrence gives nearly the same loss and gradient") {
    Rng rng(8);
    NetSpec s;
    s.input_width = 19;
    s.width = 32;
    const auto p = PolicyParams::random(s, rng);
    const auto batch = oracle::random_batch(s, rng, 4, 10, 20);
    const auto d = loss_and_grad(p, batch, Precision::Double);
    const auto f = loss_and_grad(p, batch, Precision::Single);
    CHECK(f.loss == doctest::Approx(d.loss).epsilon(1e-4));
    CHECK((f.grad - d.grad).norm() <= 1e-3 * d.grad.norm());
    CHECK(loss_only(p, batch) == doctest::Approx(d.loss).epsilon(1e-12));
    CHECK(d.timesteps > 0);
  }

  TEST_CASE("stepwise recurrence equals the full forward pass") {
    Rng rng(4);
    const NetSpec s = small_spec();
    const auto p = PolicyParams::random(s, rng);
    std::vector<Eigen::VectorXd> xs;
    for (int t = 0; t < 6; ++t) xs.push_back(Eigen::VectorXd::Random(s.input_width));
    const auto fr = rnn_forward(p, xs, zero_hidden(s));
    Hidden h = zero_hidden(s);
    for (int t = 0; t < 6; ++t) {
      const Eigen::MatrixXd out = rnn_step(p, xs[t], h);
      CHECK((out.col(0) - fr.heads[t].raw()).norm() < 1e-12);
    }
    for (int l = 0; l < s.layers; ++l) CHECK((h[l] - fr.final_hidden[l]).norm() < 1e-12);
    std::vector<Eigen::VectorXd> wrong{Eigen::VectorXd::Zero(s.input_width + 1)};
    try {
      rnn_forward(p, wrong, zero_hidden(s));
      FAIL("expected WidthMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::WidthMismatch);
    }
  }

  TEST_CASE("Adam matches the textbook update") {
    AdamConfig cfg;
    cfg.lr = 0.01;
    Eigen::VectorXd x(3), g(3);
    x << 1.0, -2.0, 0.5;
    AdamState st(cfg, 3);
    // Independent recomputation of two steps.
    Eigen::VectorXd m = Eigen::VectorXd::Zero(3), v = Eigen::VectorXd::Zero(3), ref = x;
    for (int t = 1; t <= 2; ++t) {
      g << 0.3 * t, -0.1, 2.0 / t;
      m = cfg.beta1 * m + (1 - cfg.beta1) * g;
      v = cfg.beta2 * v + (1 - cfg.beta2) * g.cwiseProduct(g);
      const Eigen::VectorXd mh = m / (1 - std::pow(cfg.beta1, t));
      const Eigen::VectorXd vh = v / (1 - std::pow(cfg.beta2, t));
      ref -= cfg.lr * mh.cwiseQuotient((vh.cwiseSqrt().array() + cfg.eps).matrix());
      adam_step(x, g, st);
    }
    CHECK((x - ref).norm() < 1e-14);
    CHECK(st.step == 2);
  }

  TEST_CASE("gradient clipping") {
    Eigen::VectorXd g(2);
    g << 3.0, 4.0;
    CHECK(clip_grad_norm(g, 10.0) == doctest::Approx(5.0));
    CHECK(g.norm() == doctest::Approx(5.0));
    CHECK(clip_grad_norm(g, 1.0) == doctest::Approx(5.0));
    CHECK(g.norm() == doctest::Approx(1.0));
  }

  TEST_CASE("parameter files round trip and reject corruption") {
    testutil::TempDir dir("seqnet");
    Rng rng(6);
    const auto p = PolicyParams::random(small_spec(), rng);
    save_params(dir / "a.ckpt", p);
    const auto q = load_params(dir / "a.ckpt");
    CHECK(q.spec() == p.spec());
    CHECK(q.values() == p.values());

    CHECK_THROWS_AS(load_params(dir / "missing.ckpt"), Error);
    {
      std::fstream f(dir / "a.ckpt", std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(0);
      f.put('X');  // magic
    }
    CHECK_THROWS_AS(load_params(dir / "a.ckpt"), Error);
    std::filesystem::resize_file(dir / "a.ckpt", 20);
    CHECK_THROWS_AS(load_params(dir / "a.ckpt"), Error);
  }

  TEST_CASE("invalid specs are rejected") {
    NetSpec s = small_spec();
    s.width = 0;
    CHECK_THROWS_AS(s.validate(), Error);
    s = small_spec();
    s.bins = 1;
    CHECK_THROWS_AS(s.validate(), Error);
  }
}
