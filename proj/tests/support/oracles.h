/*!
 * \file tests/support/oracles.h
 * \brief Independent reference computations shared by the unit tests and the acceptance binary.
 */
#ifndef SKETCHGEN_TESTS_ORACLES_H_
#define SKETCHGEN_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <vector>

#include "sketchgen/model.h"

namespace sketchgen::testing {

/*! |a - n| / max(|a|, |n|, floor). */
inline double RelativeError(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

/*!
 * Central finite differences on the mean NLL (nats per predicted token) of `lane`. Checks every
 * parameter scalar, or with `per_tensor` > 0 that many evenly spaced scalars of each tensor.
 * `fourth_order` uses the five-point stencil instead of the three-point one.
 * Returns the largest relative error against the analytic gradient.
 */
inline double GradientCheckMaxRelError(Model& model, const std::vector<const Example*>& lane,
                                       double step = 1e-4, int per_tensor = 0,
                                       bool fourth_order = false) {
  int predicted = 0;
  for (const Example* e : lane) predicted += e->num_predicted();
  Model::RunOptions backward;
  backward.backward = true;
  backward.grad_scale = 1.0 / predicted;
  model.params().ZeroGrad();
  model.Run(lane, backward);
  auto loss = [&] { return model.Run(lane, {}) / predicted; };
  double worst = 0.0;
  for (const auto& p : model.params().all()) {
    const Eigen::Index size = p->value.size();
    const Eigen::Index stride = per_tensor > 0 ? std::max<Eigen::Index>(1, size / per_tensor) : 1;
    for (Eigen::Index i = 0; i < size; i += stride) {
      double& w = p->value.data()[i];
      const double keep = w;
      w = keep + step;
      const double up = loss();
      w = keep - step;
      const double down = loss();
      double numeric = (up - down) / (2 * step);
      if (fourth_order) {
        w = keep + 2 * step;
        const double up2 = loss();
        w = keep - 2 * step;
        const double down2 = loss();
        numeric = (8 * (up - down) - (up2 - down2)) / (12 * step);
      }
      w = keep;
      worst = std::max(worst, RelativeError(p->grad.data()[i], numeric));
    }
  }
  return worst;
}

/*! Pearson chi-square statistic of observed counts against expected probabilities. */
inline double ChiSquare(const std::vector<int>& observed, const std::vector<double>& probs) {
  double total = 0.0;
  for (int o : observed) total += o;
  double chi = 0.0;
  for (size_t k = 0; k < observed.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    const double expected = total * probs[k];
    chi += (observed[k] - expected) * (observed[k] - expected) / expected;
  }
  return chi;
}

/*! Upper-tail probability of a chi-square variable with `dof` degrees of freedom. */
inline double ChiSquarePValue(double chi, int dof) {
  // Regularized upper incomplete gamma Q(dof/2, chi/2) by series / continued fraction.
  const double a = dof / 2.0;
  const double x = chi / 2.0;
  if (x <= 0.0) return 1.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double sum = 1.0 / a, term = sum;
    for (int n = 1; n < 1000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - lg);
  }
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - lg) * h;
}

}  // namespace sketchgen::testing

#endif  // SKETCHGEN_TESTS_ORACLES_H_
