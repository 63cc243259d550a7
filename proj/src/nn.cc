/*!
 * \file sketchgen/nn.cc
 */
#include "sketchgen/nn.h"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sketchgen::nn {

// ------------------------------------------------------------------------------ params

Param* ParamStore::Add(const std::string& name, int rows, int cols, Init init,
                       std::mt19937_64* rng, double stddev) {
  if (Find(name) != nullptr) throw std::logic_error("duplicate parameter " + name);
  auto p = std::make_unique<Param>();
  p->name = name;
  switch (init) {
    case Init::kZeros:
      p->value = Mat::Zero(rows, cols);
      break;
    case Init::kOnes:
      p->value = Mat::Ones(rows, cols);
      break;
    case Init::kNormal: {
      p->value.resize(rows, cols);
      std::normal_distribution<double> normal(0.0, stddev);
      for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = normal(*rng);
      break;
    }
  }
  p->grad = Mat::Zero(rows, cols);
  p->adam_m = Mat::Zero(rows, cols);
  p->adam_v = Mat::Zero(rows, cols);
  params_.push_back(std::move(p));
  return params_.back().get();
}

Param* ParamStore::Find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

void ParamStore::ZeroGrad() {
  for (auto& p : params_) p->grad.setZero();
}

double ParamStore::GradNorm() const {
  double sq = 0.0;
  for (const auto& p : params_) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

void ParamStore::ScaleGrad(double factor) {
  for (auto& p : params_) p->grad *= factor;
}

void ParamStore::SetAll(double value) {
  for (auto& p : params_) p->value.setConstant(value);
}

size_t ParamStore::NumScalars() const {
  size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void Adam::Step(ParamStore& store, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& p : store.all()) {
    p->adam_m = beta1_ * p->adam_m + (1.0 - beta1_) * p->grad;
    p->adam_v = beta2_ * p->adam_v + (1.0 - beta2_) * p->grad.cwiseAbs2();
    p->value.array() -=
        lr * (p->adam_m.array() / c1) / ((p->adam_v.array() / c2).sqrt() + eps_);
  }
}

Mat DropoutMask(int rows, int cols, double p, std::mt19937_64* rng) {
  if (p <= 0.0 || rng == nullptr) return Mat();
  Mat mask(rows, cols);
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*rng) ? scale : 0.0;
  return mask;
}

namespace {

Mat ApplyMask(const Mat& x, const Mat& mask) {
  if (mask.size() == 0) return x;
  return x.cwiseProduct(mask);
}

}  // namespace

// ------------------------------------------------------------------------------ linear

void Linear::Init(ParamStore& store, const std::string& name, int in, int out,
                  std::mt19937_64* rng) {
  w = store.Add(name + ".w", in, out, Init::kNormal, rng);
  b = store.Add(name + ".b", 1, out, Init::kZeros, rng);
}

Mat Linear::Forward(const Mat& x) const {
  Mat y = x * w->value;
  y.rowwise() += b->value.row(0);
  return y;
}

Mat Linear::Backward(const Mat& x, const Mat& dy) const {
  w->grad.noalias() += x.transpose() * dy;
  b->grad.row(0) += dy.colwise().sum();
  return dy * w->value.transpose();
}

// --------------------------------------------------------------------------- layernorm

void LayerNorm::Init(ParamStore& store, const std::string& name, int dim, std::mt19937_64* rng) {
  gain = store.Add(name + ".gain", 1, dim, Init::kOnes, rng);
  bias = store.Add(name + ".bias", 1, dim, Init::kZeros, rng);
}

Mat LayerNorm::Forward(const Mat& x, Cache* cache) const {
  const Eigen::Index n = x.rows();
  const double d = static_cast<double>(x.cols());
  cache->xhat.resize(n, x.cols());
  cache->inv_std.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = x.row(i).sum() / d;
    const double var = (x.row(i).array() - mean).square().sum() / d;
    const double inv = 1.0 / std::sqrt(var + kEps);
    cache->inv_std(i) = inv;
    cache->xhat.row(i) = (x.row(i).array() - mean) * inv;
  }
  Mat y = cache->xhat.array().rowwise() * gain->value.row(0).array();
  y.rowwise() += bias->value.row(0);
  return y;
}

Mat LayerNorm::Backward(const Mat& dy, const Cache& cache) const {
  gain->grad.row(0) += dy.cwiseProduct(cache.xhat).colwise().sum();
  bias->grad.row(0) += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * gain->value.row(0).array();
  const double d = static_cast<double>(dy.cols());
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double mean_d = dxhat.row(i).sum() / d;
    const double mean_dx = dxhat.row(i).dot(cache.xhat.row(i)) / d;
    dx.row(i) = cache.inv_std(i) *
                (dxhat.row(i).array() - mean_d - cache.xhat.row(i).array() * mean_dx);
  }
  return dx;
}

// -------------------------------------------------------------------------------- gelu

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Mat Gelu(const Mat& x) {
  return x.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
  });
}

Mat GeluBackward(const Mat& x, const Mat& dy) {
  Mat d = x.unaryExpr([](double v) {
    const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
    return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
  });
  return d.cwiseProduct(dy);
}

// --------------------------------------------------------------------------- attention

void Attention::Init(ParamStore& store, const std::string& name, int dim, int num_heads,
                     std::mt19937_64* rng) {
  if (dim % num_heads != 0) throw std::invalid_argument("width must be divisible by heads");
  heads = num_heads;
  q.Init(store, name + ".q", dim, dim, rng);
  k.Init(store, name + ".k", dim, dim, rng);
  v.Init(store, name + ".v", dim, dim, rng);
  o.Init(store, name + ".o", dim, dim, rng);
}

Mat Attention::Forward(const Mat& xq, const Mat& xkv, const std::vector<AttentionSpan>& spans,
                       Cache* cache) const {
  cache->xq = xq;
  cache->xkv = xkv;
  cache->qm = q.Forward(xq);
  cache->km = k.Forward(xkv);
  cache->vm = v.Forward(xkv);
  const int dim = static_cast<int>(xq.cols());
  const int dh = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  cache->concat = Mat::Zero(xq.rows(), dim);
  cache->probs.clear();
  cache->probs.reserve(spans.size() * heads);
  for (const AttentionSpan& s : spans) {
    const int lq = s.q_end - s.q_begin;
    const int lk = s.k_end - s.k_begin;
    for (int h = 0; h < heads; ++h) {
      const auto qh = cache->qm.block(s.q_begin, h * dh, lq, dh);
      const auto kh = cache->km.block(s.k_begin, h * dh, lk, dh);
      Mat p = (qh * kh.transpose()) * scale;
      for (int r = 0; r < lq; ++r) {
        const int valid = s.causal ? std::min(lk, r + 1) : lk;
        auto row = p.row(r);
        const double mx = row.head(valid).maxCoeff();
        row.head(valid) = (row.head(valid).array() - mx).exp();
        row.head(valid) /= row.head(valid).sum();
        if (valid < lk) row.tail(lk - valid).setZero();
      }
      cache->concat.block(s.q_begin, h * dh, lq, dh) =
          p * cache->vm.block(s.k_begin, h * dh, lk, dh);
      cache->probs.push_back(std::move(p));
    }
  }
  return o.Forward(cache->concat);
}

Mat Attention::Backward(const Mat& dy, const std::vector<AttentionSpan>& spans, const Cache& cache,
                        Mat* dxkv) const {
  const Mat dconcat = o.Backward(cache.concat, dy);
  const int dim = static_cast<int>(dy.cols());
  const int dh = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat dq = Mat::Zero(cache.qm.rows(), dim);
  Mat dk = Mat::Zero(cache.km.rows(), dim);
  Mat dv = Mat::Zero(cache.vm.rows(), dim);
  size_t idx = 0;
  for (const AttentionSpan& s : spans) {
    const int lq = s.q_end - s.q_begin;
    const int lk = s.k_end - s.k_begin;
    for (int h = 0; h < heads; ++h, ++idx) {
      const Mat& p = cache.probs[idx];
      const auto doh = dconcat.block(s.q_begin, h * dh, lq, dh);
      const auto vh = cache.vm.block(s.k_begin, h * dh, lk, dh);
      dv.block(s.k_begin, h * dh, lk, dh).noalias() += p.transpose() * doh;
      const Mat dp = doh * vh.transpose();
      const Eigen::VectorXd inner = p.cwiseProduct(dp).rowwise().sum();
      Mat ds = p.cwiseProduct(dp.colwise() - inner) * scale;
      dq.block(s.q_begin, h * dh, lq, dh).noalias() +=
          ds * cache.km.block(s.k_begin, h * dh, lk, dh);
      dk.block(s.k_begin, h * dh, lk, dh).noalias() +=
          ds.transpose() * cache.qm.block(s.q_begin, h * dh, lq, dh);
    }
  }
  *dxkv += k.Backward(cache.xkv, dk);
  *dxkv += v.Backward(cache.xkv, dv);
  return q.Backward(cache.xq, dq);
}

// --------------------------------------------------------------------------------- mlp

void Mlp::Init(ParamStore& store, const std::string& name, int dim, std::mt19937_64* rng) {
  fc1.Init(store, name + ".fc1", dim, 4 * dim, rng);
  fc2.Init(store, name + ".fc2", 4 * dim, dim, rng);
}

Mat Mlp::Forward(const Mat& x, Cache* cache) const {
  cache->x = x;
  cache->pre = fc1.Forward(x);
  cache->act = Gelu(cache->pre);
  return fc2.Forward(cache->act);
}

Mat Mlp::Backward(const Mat& dy, const Cache& cache) const {
  const Mat dact = fc2.Backward(cache.act, dy);
  return fc1.Backward(cache.x, GeluBackward(cache.pre, dact));
}

// ------------------------------------------------------------------------------- block

void Block::Init(ParamStore& store, const std::string& name, int dim, int heads, bool cross,
                 std::mt19937_64* rng) {
  has_cross = cross;
  ln1.Init(store, name + ".ln1", dim, rng);
  self_attn.Init(store, name + ".self_attn", dim, heads, rng);
  if (cross) {
    ln_cross.Init(store, name + ".ln_cross", dim, rng);
    cross_attn.Init(store, name + ".cross_attn", dim, heads, rng);
  }
  ln2.Init(store, name + ".ln2", dim, rng);
  mlp.Init(store, name + ".mlp", dim, rng);
}

Mat Block::Forward(const Mat& x, const std::vector<AttentionSpan>& self_spans, const Mat* memory,
                   const std::vector<AttentionSpan>& cross_spans, double dropout,
                   std::mt19937_64* rng, Cache* cache) const {
  const int rows = static_cast<int>(x.rows());
  const int cols = static_cast<int>(x.cols());
  cache->a1 = ln1.Forward(x, &cache->ln1);
  cache->drop1 = DropoutMask(rows, cols, dropout, rng);
  Mat h = x + ApplyMask(self_attn.Forward(cache->a1, cache->a1, self_spans, &cache->self_attn),
                        cache->drop1);
  if (has_cross) {
    cache->a_cross = ln_cross.Forward(h, &cache->ln_cross);
    cache->drop_cross = DropoutMask(rows, cols, dropout, rng);
    h += ApplyMask(cross_attn.Forward(cache->a_cross, *memory, cross_spans, &cache->cross_attn),
                   cache->drop_cross);
  }
  cache->a2 = ln2.Forward(h, &cache->ln2);
  cache->drop2 = DropoutMask(rows, cols, dropout, rng);
  h += ApplyMask(mlp.Forward(cache->a2, &cache->mlp), cache->drop2);
  return h;
}

Mat Block::Backward(const Mat& dy, const std::vector<AttentionSpan>& self_spans,
                    const std::vector<AttentionSpan>& cross_spans, const Cache& cache,
                    Mat* dmemory) const {
  Mat dx = dy + ln2.Backward(mlp.Backward(ApplyMask(dy, cache.drop2), cache.mlp), cache.ln2);
  if (has_cross) {
    const Mat da = cross_attn.Backward(ApplyMask(dx, cache.drop_cross), cross_spans,
                                       cache.cross_attn, dmemory);
    dx += ln_cross.Backward(da, cache.ln_cross);
  }
  Mat dkv = Mat::Zero(dy.rows(), dy.cols());
  Mat da1 = self_attn.Backward(ApplyMask(dx, cache.drop1), self_spans, cache.self_attn, &dkv);
  da1 += dkv;
  dx += ln1.Backward(da1, cache.ln1);
  return dx;
}

double LogSumExp(const RowVec& logits, const std::vector<char>& allowed) {
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (allowed[i]) mx = std::max(mx, logits(i));
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (allowed[i]) s += std::exp(logits(i) - mx);
  }
  return mx + std::log(s);
}

}  // namespace sketchgen::nn
