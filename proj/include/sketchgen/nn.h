/*!
 * \file sketchgen/nn.h
 * \brief Small dense layers with explicit backward passes: parameters, linear, layer norm,
 * multi-head attention over contiguous key ranges, GELU MLP, pre-LN transformer blocks, Adam.
 *
 * Activations are row-major (positions x features). Backward functions accumulate into
 * Param::grad and return/accumulate the input gradient.
 */
#ifndef SKETCHGEN_NN_H_
#define SKETCHGEN_NN_H_

#include <Eigen/Dense>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace sketchgen::nn {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

struct Param {
  std::string name;
  Mat value;
  Mat grad;
  Mat adam_m;
  Mat adam_v;
};

enum class Init { kZeros, kOnes, kNormal };

class ParamStore {
 public:
  Param* Add(const std::string& name, int rows, int cols, Init init, std::mt19937_64* rng,
             double stddev = 0.02);
  Param* Find(const std::string& name) const;
  const std::vector<std::unique_ptr<Param>>& all() const { return params_; }
  void ZeroGrad();
  double GradNorm() const;
  void ScaleGrad(double factor);
  void SetAll(double value);
  size_t NumScalars() const;

 private:
  std::vector<std::unique_ptr<Param>> params_;
};

class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void Step(ParamStore& store, double lr);
  int64_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

/*! Inverted dropout mask (entries 0 or 1/(1-p)); empty when p == 0 or not training. */
Mat DropoutMask(int rows, int cols, double p, std::mt19937_64* rng);

struct Linear {
  Param* w = nullptr;  // in x out
  Param* b = nullptr;  // 1 x out

  void Init(ParamStore& store, const std::string& name, int in, int out, std::mt19937_64* rng);
  Mat Forward(const Mat& x) const;
  /*! Accumulates parameter grads; returns dX. */
  Mat Backward(const Mat& x, const Mat& dy) const;
};

struct LayerNorm {
  Param* gain = nullptr;
  Param* bias = nullptr;
  static constexpr double kEps = 1e-5;

  struct Cache {
    Mat xhat;
    Eigen::VectorXd inv_std;
  };
  void Init(ParamStore& store, const std::string& name, int dim, std::mt19937_64* rng);
  Mat Forward(const Mat& x, Cache* cache) const;
  Mat Backward(const Mat& dy, const Cache& cache) const;
};

Mat Gelu(const Mat& x);
Mat GeluBackward(const Mat& x, const Mat& dy);

/*!
 * One attention block: queries [q_begin, q_end) attend to keys [k_begin, k_end). With `causal`,
 * query row q_begin + r sees keys up to k_begin + r (self-attention over the same range).
 */
struct AttentionSpan {
  int q_begin = 0;
  int q_end = 0;
  int k_begin = 0;
  int k_end = 0;
  bool causal = false;
};

struct Attention {
  Linear q, k, v, o;
  int heads = 1;

  struct Cache {
    Mat xq, xkv, qm, km, vm, concat;
    std::vector<Mat> probs;  // per span, per head
  };
  void Init(ParamStore& store, const std::string& name, int dim, int heads, std::mt19937_64* rng);
  Mat Forward(const Mat& xq, const Mat& xkv, const std::vector<AttentionSpan>& spans,
              Cache* cache) const;
  /*! Returns dXq; adds dXkv into *dxkv (same shape as xkv). */
  Mat Backward(const Mat& dy, const std::vector<AttentionSpan>& spans, const Cache& cache,
               Mat* dxkv) const;
};

struct Mlp {
  Linear fc1, fc2;
  struct Cache {
    Mat x, pre, act;
  };
  void Init(ParamStore& store, const std::string& name, int dim, std::mt19937_64* rng);
  Mat Forward(const Mat& x, Cache* cache) const;
  Mat Backward(const Mat& dy, const Cache& cache) const;
};

/*! Pre-LN transformer block: self-attention, optional cross-attention, MLP. */
struct Block {
  LayerNorm ln1, ln_cross, ln2;
  Attention self_attn, cross_attn;
  Mlp mlp;
  bool has_cross = false;

  struct Cache {
    LayerNorm::Cache ln1, ln_cross, ln2;
    Mat a1, a_cross, a2;
    Attention::Cache self_attn, cross_attn;
    Mlp::Cache mlp;
    Mat drop1, drop_cross, drop2;
  };
  void Init(ParamStore& store, const std::string& name, int dim, int heads, bool cross,
            std::mt19937_64* rng);
  Mat Forward(const Mat& x, const std::vector<AttentionSpan>& self_spans, const Mat* memory,
              const std::vector<AttentionSpan>& cross_spans, double dropout,
              std::mt19937_64* rng, Cache* cache) const;
  /*! Returns dX; adds the memory gradient into *dmemory when cross-attending. */
  Mat Backward(const Mat& dy, const std::vector<AttentionSpan>& self_spans,
               const std::vector<AttentionSpan>& cross_spans, const Cache& cache,
               Mat* dmemory) const;
};

/*! log-sum-exp of the entries of `logits` selected by `allowed`. */
double LogSumExp(const RowVec& logits, const std::vector<char>& allowed);

}  // namespace sketchgen::nn

#endif  // SKETCHGEN_NN_H_
