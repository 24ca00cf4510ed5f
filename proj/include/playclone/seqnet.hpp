#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "playclone/common.hpp"

// Recurrent mixture-density policies: a stack of GRU layers feeding a
// mixture-of-discretized-logistics (MoDL) head per action dimension, with
// exact BPTT gradients and an Adam optimizer. Parameters are stored in double.
namespace playclone::seqnet {

struct NetSpec {
  int input_width = 19;
  int layers = 2;
  int width = 128;
  int mixtures = 5;
  int action_dims = 8;
  int bins = 256;
  double log_scale_floor = -10.0;

  int head_width() const { return action_dims * 3 * mixtures; }
  std::size_t param_count() const;
  // Throws Error(InvalidArgument).
  void validate() const;
  bool operator==(const NetSpec&) const = default;
};

class PolicyParams {
 public:
  explicit PolicyParams(NetSpec spec);  // all zeros
  // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
  static PolicyParams random(NetSpec spec, Rng& rng);

  const NetSpec& spec() const { return spec_; }
  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }
  bool all_finite() const { return values_.allFinite(); }

 private:
  NetSpec spec_;
  Eigen::VectorXd values_;
};

// MoDL parameters for one timestep. Per dimension d the raw block is
// [logits(K) | means(K) | log_scales(K)], means in normalized action units [-1, 1].
class ModlHead {
 public:
  ModlHead(int dims, int mixtures, int bins, double log_scale_floor, Eigen::VectorXd raw);

  int dims() const { return dims_; }
  int mixtures() const { return k_; }
  int bins() const { return bins_; }
  double logit(int d, int k) const { return raw_[d * 3 * k_ + k]; }
  double mean(int d, int k) const { return raw_[d * 3 * k_ + k_ + k]; }
  // Clamped to the floor.
  double log_scale(int d, int k) const;
  double log_scale_floor() const { return floor_; }
  std::vector<double> weights(int d) const;  // softmax of logits
  const Eigen::VectorXd& raw() const { return raw_; }
  Eigen::VectorXd& raw() { return raw_; }

 private:
  int dims_;
  int k_;
  int bins_;
  double floor_;
  Eigen::VectorXd raw_;
};

ModlHead make_head(const NetSpec& spec, Eigen::VectorXd raw);

// Bin centre in [-1, 1] and bin width for a given bin count.
double bin_center(int bin, int bins);
inline double bin_width(int bins) { return 2.0 / bins; }

// log P_d(bin) for one dimension. Throws InvalidArgument for an out-of-range bin.
double modl_dim_logprob(const ModlHead& head, int d, int bin);
// Sum over dimensions of log P_d(bins[d]).
double modl_bin_logprob(const ModlHead& head, std::span<const int> bins);
// Tempered sampling: component from softmax(logits / T), logistic variate with scale T*s.
std::vector<int> modl_sample(const ModlHead& head, Rng& rng, double temperature);
// Most likely component's mean, quantized.
std::vector<int> modl_greedy(const ModlHead& head);

// Recurrent state: one (width x batch) matrix per layer.
using Hidden = std::vector<Eigen::MatrixXd>;
Hidden zero_hidden(const NetSpec& spec, int batch = 1);

// One batched timestep; x is input_width x batch. Returns raw head outputs (head_width x batch).
Eigen::MatrixXd rnn_step(const PolicyParams& params, const Eigen::MatrixXd& x, Hidden& h);

struct ForwardResult {
  std::vector<ModlHead> heads;
  Hidden final_hidden;
};

// Throws Error(WidthMismatch) naming expected vs got.
ForwardResult rnn_forward(const PolicyParams& params, std::span<const Eigen::VectorXd> inputs,
                          const Hidden& initial);

// A training sequence: inputs (input_width x T) and target bins (action_dims x T).
struct Sequence {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXi targets;
};

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
  long timesteps = 0;
};

// Mean over all batch timesteps of -sum_d log P_d(target). Exact BPTT gradient.
// Single runs the recurrence in float; parameters, head likelihood and the
// returned gradient stay double.
enum class Precision { Double, Single };
LossGrad loss_and_grad(const PolicyParams& params, std::span<const Sequence> batch,
                       Precision precision = Precision::Double);
double loss_only(const PolicyParams& params, std::span<const Sequence> batch);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;

  AdamState() = default;
  AdamState(AdamConfig c, Eigen::Index n) : cfg(c), m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state);
// Rescales grad in place if its norm exceeds max_norm; returns the pre-clip norm.
double clip_grad_norm(Eigen::VectorXd& grad, double max_norm);

// Versioned little-endian binary checkpoint.
void save_params(const std::filesystem::path& path, const PolicyParams& params);
PolicyParams load_params(const std::filesystem::path& path);

}  // namespace playclone::seqnet
