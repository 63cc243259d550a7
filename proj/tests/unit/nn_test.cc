#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "sketchgen/nn.h"

namespace sketchgen::nn {

namespace {

double MaxRelError(ParamStore& store, const std::function<double()>& loss) {
  double worst = 0.0;
  const double h = 1e-4;
  for (const auto& p : store.all()) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double keep = p->value.data()[i];
      p->value.data()[i] = keep + h;
      const double up = loss();
      p->value.data()[i] = keep - h;
      const double down = loss();
      p->value.data()[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p->grad.data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("block with cross attention: analytic gradients match finite differences") {
  std::mt19937_64 rng(3);
  ParamStore store;
  Block block;
  block.Init(store, "b", 8, 2, true, &rng);
  for (const auto& p : store.all()) {
    std::normal_distribution<double> n(0.0, 0.3);
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] += n(rng);
  }
  Mat x = Mat::Random(5, 8);
  Mat mem = Mat::Random(3, 8);
  Mat weight = Mat::Random(5, 8);
  const std::vector<AttentionSpan> self = {{0, 3, 0, 3, true}, {3, 5, 3, 5, true}};
  const std::vector<AttentionSpan> cross = {{0, 3, 0, 2, false}, {3, 5, 2, 3, false}};
  auto loss = [&] {
    Block::Cache c;
    return block.Forward(x, self, &mem, cross, 0.0, nullptr, &c).cwiseProduct(weight).sum();
  };
  store.ZeroGrad();
  Block::Cache cache;
  block.Forward(x, self, &mem, cross, 0.0, nullptr, &cache);
  Mat dmem = Mat::Zero(3, 8);
  const Mat dx = block.Backward(weight, self, cross, cache, &dmem);
  CHECK(MaxRelError(store, loss) < 1e-5);

  const double h = 1e-5;
  for (int i = 0; i < 5; ++i) {
    const double keep = mem.data()[i];
    mem.data()[i] = keep + h;
    const double up = loss();
    mem.data()[i] = keep - h;
    const double down = loss();
    mem.data()[i] = keep;
    CHECK(dmem.data()[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6));
    const double kx = x.data()[i];
    x.data()[i] = kx + h;
    const double ux = loss();
    x.data()[i] = kx - h;
    const double dxn = loss();
    x.data()[i] = kx;
    CHECK(dx.data()[i] == doctest::Approx((ux - dxn) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("causal spans isolate segments") {
  std::mt19937_64 rng(1);
  ParamStore store;
  Attention attn;
  attn.Init(store, "a", 4, 2, &rng);
  Mat x = Mat::Random(4, 4);
  const std::vector<AttentionSpan> spans = {{0, 2, 0, 2, true}, {2, 4, 2, 4, true}};
  Attention::Cache c1, c2;
  const Mat y1 = attn.Forward(x, x, spans, &c1);
  Mat x2 = x;
  x2.row(3).setRandom();
  x2.row(1).setConstant(0.5);
  const Mat y2 = attn.Forward(x2, x2, spans, &c2);
  CHECK((y1.row(0) - y2.row(0)).norm() == doctest::Approx(0.0));
  CHECK((y1.row(2) - y2.row(2)).norm() == doctest::Approx(0.0));
}

TEST_CASE("dropout mask is inverted and empty at inference") {
  std::mt19937_64 rng(5);
  CHECK(DropoutMask(3, 3, 0.1, nullptr).size() == 0);
  CHECK(DropoutMask(3, 3, 0.0, &rng).size() == 0);
  const Mat m = DropoutMask(200, 200, 0.25, &rng);
  CHECK(m.mean() == doctest::Approx(1.0).epsilon(0.02));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    CHECK((v == 0.0 || std::abs(v - 4.0 / 3.0) < 1e-12));
  }
}

TEST_CASE("adam with zero learning rate leaves parameters unchanged") {
  std::mt19937_64 rng(2);
  ParamStore store;
  Linear lin;
  lin.Init(store, "l", 3, 2, &rng);
  const Mat before = lin.w->value;
  lin.w->grad.setOnes();
  Adam adam;
  adam.Step(store, 0.0);
  CHECK(lin.w->value == before);
}

}  // namespace sketchgen::nn
