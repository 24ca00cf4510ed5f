#include <cmath>
#include <string>

#include "modl_math.hpp"
#include "playclone/seqnet.hpp"

namespace playclone::seqnet {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using ConstMapT = Eigen::Map<const Mat<S>>;
template <class S>
using MapT = Eigen::Map<Mat<S>>;
template <class S>
using ConstVecMapT = Eigen::Map<const Vec<S>>;
template <class S>
using VecMapT = Eigen::Map<Vec<S>>;
using ConstMap = ConstMapT<double>;
using ConstVecMap = ConstVecMapT<double>;

// Offsets of every parameter block inside the flat vector.
struct Layout {
  struct Layer {
    Index in = 0;
    Index w = 0, u = 0, bw = 0, bu = 0;
  };
  std::vector<Layer> layers;
  Index head_w = 0, head_b = 0;
  Index total = 0;

  explicit Layout(const NetSpec& spec) {
    const Index h = spec.width;
    Index off = 0;
    for (int l = 0; l < spec.layers; ++l) {
      Layer L;
      L.in = l == 0 ? spec.input_width : h;
      L.w = off;
      off += 3 * h * L.in;
      L.u = off;
      off += 3 * h * h;
      L.bw = off;
      off += 3 * h;
      L.bu = off;
      off += 3 * h;
      layers.push_back(L);
    }
    head_w = off;
    off += static_cast<Index>(spec.head_width()) * h;
    head_b = off;
    off += spec.head_width();
    total = off;
  }
};

template <class Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return (S(1) + (-x.array()).exp()).inverse().matrix();
}

// Forward state of one batched pass, kept for backpropagation.
template <class S>
struct LayerCache {
  Mat<S> input;  // in x TB
  Mat<S> hprev;  // H x TB
  Mat<S> z, r, n, cn;
  Mat<S> out;  // H x TB
};

template <class S>
struct Pass {
  Index T = 0, B = 0;
  std::vector<LayerCache<S>> layers;
  Mat<S> head;  // head_width x TB
};

void check_widths(const NetSpec& spec, std::span<const Sequence> batch) {
  if (batch.empty()) throw Error(ErrorKind::InvalidArgument, "loss_and_grad: empty batch");
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Sequence& s = batch[i];
    if (s.inputs.rows() != spec.input_width) {
      throw Error(ErrorKind::WidthMismatch, "input width: expected " + std::to_string(spec.input_width) +
                                                ", got " + std::to_string(s.inputs.rows()));
    }
    if (s.inputs.cols() < 1) throw Error(ErrorKind::InvalidArgument, "sequence length must be >= 1");
    if (s.targets.rows() != spec.action_dims || s.targets.cols() != s.inputs.cols()) {
      throw Error(ErrorKind::WidthMismatch, "target shape does not match inputs for sequence " +
                                                std::to_string(i));
    }
  }
}

template <class M>
void throw_non_finite(const M& m, Index B, const std::string& where) {
  for (Index c = 0; c < m.cols(); ++c) {
    if (!m.col(c).allFinite()) {
      throw Error(ErrorKind::NonFinite, "non-finite value in " + where + " at timestep " +
                                            std::to_string(c / B) + ", sequence " + std::to_string(c % B));
    }
  }
}

template <class S>
Pass<S> forward_pass(const NetSpec& spec, const S* p, std::span<const Sequence> batch) {
  const Layout layout(spec);
  const Index H = spec.width;
  Pass<S> pass;
  pass.B = static_cast<Index>(batch.size());
  for (const Sequence& s : batch) pass.T = std::max(pass.T, s.inputs.cols());
  const Index T = pass.T, B = pass.B, TB = T * B;

  Mat<S> x = Mat<S>::Zero(spec.input_width, TB);
  for (Index i = 0; i < B; ++i) {
    for (Index t = 0; t < batch[i].inputs.cols(); ++t) x.col(t * B + i) = batch[i].inputs.col(t).template cast<S>();
  }

  pass.layers.resize(spec.layers);
  for (int l = 0; l < spec.layers; ++l) {
    const auto& L = layout.layers[l];
    ConstMapT<S> W(p + L.w, 3 * H, L.in);
    ConstMapT<S> U(p + L.u, 3 * H, H);
    ConstVecMapT<S> bw(p + L.bw, 3 * H);
    ConstVecMapT<S> bu(p + L.bu, 3 * H);
    LayerCache<S>& c = pass.layers[l];
    c.input = l == 0 ? std::move(x) : pass.layers[l - 1].out;
    Mat<S> a = W * c.input;
    a.colwise() += bw;
    c.hprev.resize(H, TB);
    c.z.resize(H, TB);
    c.r.resize(H, TB);
    c.n.resize(H, TB);
    c.cn.resize(H, TB);
    c.out.resize(H, TB);
    Mat<S> h = Mat<S>::Zero(H, B);
    Mat<S> cu(3 * H, B), z(H, B), r(H, B), n(H, B);
    for (Index t = 0; t < T; ++t) {
      cu.noalias() = U * h;
      cu.colwise() += bu;
      const auto at = a.middleCols(t * B, B);
      z = sigmoid(at.topRows(H) + cu.topRows(H));
      r = sigmoid(at.middleRows(H, H) + cu.middleRows(H, H));
      n = (at.bottomRows(H).array() + r.array() * cu.bottomRows(H).array()).tanh().matrix();
      c.hprev.middleCols(t * B, B) = h;
      h = ((S(1) - z.array()) * n.array() + z.array() * h.array()).matrix();
      c.z.middleCols(t * B, B) = z;
      c.r.middleCols(t * B, B) = r;
      c.n.middleCols(t * B, B) = n;
      c.cn.middleCols(t * B, B) = cu.bottomRows(H);
      c.out.middleCols(t * B, B) = h;
    }
    if (!c.out.allFinite()) throw_non_finite(c.out, B, "layer " + std::to_string(l));
  }

  ConstMapT<S> Wo(p + layout.head_w, spec.head_width(), H);
  ConstVecMapT<S> bo(p + layout.head_b, spec.head_width());
  pass.head = Wo * pass.layers.back().out;
  pass.head.colwise() += bo;
  if (!pass.head.allFinite()) throw_non_finite(pass.head, B, "output head");
  return pass;
}

// Loss over valid timesteps; fills dhead (scaled by 1/N) when requested.
template <class S>
double head_loss(const NetSpec& spec, const Pass<S>& pass, std::span<const Sequence> batch, long& count,
                 Mat<S>* dhead) {
  const Index B = pass.B;
  const int K = spec.mixtures;
  count = 0;
  for (const Sequence& s : batch) count += s.inputs.cols();
  if (dhead != nullptr) dhead->setZero(spec.head_width(), pass.head.cols());
  double total = 0.0;
  Eigen::VectorXd raw_col(spec.head_width()), g_col(spec.head_width());
  for (Index i = 0; i < B; ++i) {
    const Sequence& s = batch[i];
    for (Index t = 0; t < s.inputs.cols(); ++t) {
      const Index col = t * B + i;
      raw_col = pass.head.col(col).template cast<double>();
      const double* raw = raw_col.data();
      double* g = dhead != nullptr ? g_col.data() : nullptr;
      for (int d = 0; d < spec.action_dims; ++d) {
        const int bin = s.targets(d, t);
        if (bin < 0 || bin >= spec.bins) {
          throw Error(ErrorKind::InvalidArgument, "target bin " + std::to_string(bin) + " out of range");
        }
        const double lp = detail::dim_logprob_grad(raw + d * 3 * K, K, spec.bins, spec.log_scale_floor, bin,
                                                   g != nullptr ? g + d * 3 * K : nullptr);
        total -= lp;
      }
      if (dhead != nullptr) dhead->col(col) = g_col.cast<S>();
    }
  }
  const double loss = total / static_cast<double>(count);
  if (!std::isfinite(loss)) throw Error(ErrorKind::NonFinite, "non-finite loss");
  if (dhead != nullptr) *dhead /= static_cast<S>(count);
  return loss;
}

}  // namespace

std::size_t NetSpec::param_count() const { return static_cast<std::size_t>(Layout(*this).total); }

void NetSpec::validate() const {
  if (input_width < 1 || layers < 1 || width < 1 || mixtures < 1 || action_dims < 1 || bins < 2) {
    throw Error(ErrorKind::InvalidArgument, "NetSpec: widths, layers, mixtures, dims must be >= 1, bins >= 2");
  }
  if (mixtures > detail::kMaxMixtures) {
    throw Error(ErrorKind::InvalidArgument, "NetSpec: at most 64 mixture components");
  }
  if (!std::isfinite(log_scale_floor)) throw Error(ErrorKind::InvalidArgument, "NetSpec: non-finite floor");
}

PolicyParams::PolicyParams(NetSpec spec) : spec_(spec) {
  spec_.validate();
  values_ = Eigen::VectorXd::Zero(static_cast<Index>(spec_.param_count()));
}

PolicyParams PolicyParams::random(NetSpec spec, Rng& rng) {
  PolicyParams params(spec);
  const Layout layout(spec);
  auto fill = [&](Index off, Index len, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index i = 0; i < len; ++i) params.values_[off + i] = dist(rng);
  };
  const Index H = spec.width;
  for (const auto& L : layout.layers) {
    fill(L.w, 3 * H * L.in, static_cast<double>(L.in));
    fill(L.u, 3 * H * H, static_cast<double>(H));
    fill(L.bw, 3 * H, static_cast<double>(L.in));
    fill(L.bu, 3 * H, static_cast<double>(H));
  }
  fill(layout.head_w, static_cast<Index>(spec.head_width()) * H, static_cast<double>(H));
  fill(layout.head_b, spec.head_width(), static_cast<double>(H));
  return params;
}

Hidden zero_hidden(const NetSpec& spec, int batch) {
  return Hidden(spec.layers, MatrixXd::Zero(spec.width, batch));
}

MatrixXd rnn_step(const PolicyParams& params, const MatrixXd& x, Hidden& h) {
  const NetSpec& spec = params.spec();
  if (x.rows() != spec.input_width) {
    throw Error(ErrorKind::WidthMismatch, "input width: expected " + std::to_string(spec.input_width) +
                                              ", got " + std::to_string(x.rows()));
  }
  if (h.size() != static_cast<std::size_t>(spec.layers)) {
    throw Error(ErrorKind::WidthMismatch, "hidden state has wrong layer count");
  }
  const Layout layout(spec);
  const double* p = params.values().data();
  const Index H = spec.width;
  MatrixXd in = x;
  for (int l = 0; l < spec.layers; ++l) {
    const auto& L = layout.layers[l];
    if (h[l].rows() != H || h[l].cols() != x.cols()) {
      throw Error(ErrorKind::WidthMismatch, "hidden state shape does not match batch");
    }
    ConstMap W(p + L.w, 3 * H, L.in);
    ConstMap U(p + L.u, 3 * H, H);
    ConstVecMap bw(p + L.bw, 3 * H);
    ConstVecMap bu(p + L.bu, 3 * H);
    MatrixXd a = W * in;
    a.colwise() += bw;
    MatrixXd cu = U * h[l];
    cu.colwise() += bu;
    const MatrixXd z = sigmoid(a.topRows(H) + cu.topRows(H));
    const MatrixXd r = sigmoid(a.middleRows(H, H) + cu.middleRows(H, H));
    const MatrixXd n = (a.bottomRows(H).array() + r.array() * cu.bottomRows(H).array()).tanh().matrix();
    h[l] = ((1.0 - z.array()) * n.array() + z.array() * h[l].array()).matrix();
    in = h[l];
  }
  ConstMap Wo(p + layout.head_w, spec.head_width(), H);
  ConstVecMap bo(p + layout.head_b, spec.head_width());
  MatrixXd out = Wo * in;
  out.colwise() += bo;
  return out;
}

ForwardResult rnn_forward(const PolicyParams& params, std::span<const Eigen::VectorXd> inputs,
                          const Hidden& initial) {
  if (inputs.empty()) throw Error(ErrorKind::InvalidArgument, "rnn_forward: empty input sequence");
  ForwardResult result;
  result.final_hidden = initial;
  for (const Eigen::VectorXd& x : inputs) {
    MatrixXd raw = rnn_step(params, x, result.final_hidden);
    result.heads.push_back(make_head(params.spec(), raw.col(0)));
  }
  return result;
}

namespace {

template <class S>
LossGrad loss_and_grad_impl(const NetSpec& spec, const S* p, std::span<const Sequence> batch) {
  Pass<S> pass = forward_pass(spec, p, batch);
  LossGrad out;
  Mat<S> dhead;
  out.loss = head_loss(spec, pass, batch, out.timesteps, &dhead);

  const Layout layout(spec);
  Vec<S> grad = Vec<S>::Zero(layout.total);
  S* g = grad.data();
  const Index H = spec.width, B = pass.B, T = pass.T, TB = T * B;

  ConstMapT<S> Wo(p + layout.head_w, spec.head_width(), H);
  MapT<S>(g + layout.head_w, spec.head_width(), H).noalias() = dhead * pass.layers.back().out.transpose();
  VecMapT<S>(g + layout.head_b, spec.head_width()) = dhead.rowwise().sum();
  Mat<S> dout = Wo.transpose() * dhead;  // gradient w.r.t. the current layer's outputs

  using Arr = Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic>;
  Arr dh(H, B), dan(H, B), daz(H, B), dar(H, B);
  for (int l = spec.layers - 1; l >= 0; --l) {
    const auto& L = layout.layers[l];
    const LayerCache<S>& c = pass.layers[l];
    ConstMapT<S> W(p + L.w, 3 * H, L.in);
    ConstMapT<S> U(p + L.u, 3 * H, H);
    Mat<S> da(3 * H, TB), dc(3 * H, TB);
    Mat<S> carry = Mat<S>::Zero(H, B);
    for (Index t = T - 1; t >= 0; --t) {
      const Index c0 = t * B;
      const auto z = c.z.middleCols(c0, B).array();
      const auto r = c.r.middleCols(c0, B).array();
      const auto n = c.n.middleCols(c0, B).array();
      const auto cn = c.cn.middleCols(c0, B).array();
      const auto hp = c.hprev.middleCols(c0, B).array();
      dh = dout.middleCols(c0, B).array() + carry.array();
      dan = dh * (S(1) - z) * (S(1) - n * n);
      daz = dh * (hp - n) * z * (S(1) - z);
      dar = dan * cn * r * (S(1) - r);
      da.block(0, c0, H, B) = daz.matrix();
      da.block(H, c0, H, B) = dar.matrix();
      da.block(2 * H, c0, H, B) = dan.matrix();
      dc.block(0, c0, H, B) = daz.matrix();
      dc.block(H, c0, H, B) = dar.matrix();
      dc.block(2 * H, c0, H, B) = (dan * r).matrix();
      carry = (dh * z).matrix();
      carry.noalias() += U.transpose() * dc.middleCols(c0, B);
    }
    MapT<S>(g + L.w, 3 * H, L.in).noalias() = da * c.input.transpose();
    MapT<S>(g + L.u, 3 * H, H).noalias() = dc * c.hprev.transpose();
    VecMapT<S>(g + L.bw, 3 * H) = da.rowwise().sum();
    VecMapT<S>(g + L.bu, 3 * H) = dc.rowwise().sum();
    if (l > 0) dout = W.transpose() * da;
  }
  out.grad = grad.template cast<double>();
  return out;
}

}  // namespace

double loss_only(const PolicyParams& params, std::span<const Sequence> batch) {
  check_widths(params.spec(), batch);
  const Pass<double> pass = forward_pass(params.spec(), params.values().data(), batch);
  long count = 0;
  return head_loss<double>(params.spec(), pass, batch, count, nullptr);
}

LossGrad loss_and_grad(const PolicyParams& params, std::span<const Sequence> batch, Precision precision) {
  check_widths(params.spec(), batch);
  if (precision == Precision::Single) {
    const Eigen::VectorXf p = params.values().cast<float>();
    return loss_and_grad_impl<float>(params.spec(), p.data(), batch);
  }
  return loss_and_grad_impl<double>(params.spec(), params.values().data(), batch);
}

}  // namespace playclone::seqnet
