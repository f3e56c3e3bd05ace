#include "bloom3d/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace bloom3d {

void ClassWeights::validate() const {
  if (!(w_background > 0.0 && w_near > 0.0 && w_distant > 0.0)) {
    throw std::invalid_argument("ClassWeights: weights must be positive");
  }
}

void PixelProbs::validate() const {
  for (const double p : {p_background, p_near, p_distant}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("PixelProbs: probabilities must be in [0,1]");
    }
  }
  if (std::abs(p_background + p_near + p_distant - 1.0) > 1e-6) {
    throw std::invalid_argument("PixelProbs: probabilities must sum to 1");
  }
}

double custom_sigmoid(double x) {
  return 1.0 / (1.0 + std::exp(-(x - 5.0) / 2.0));
}

ValueGrad custom_sigmoid_with_grad(double x) {
  const double s = custom_sigmoid(x);
  return ValueGrad{s, s * (1.0 - s) / 2.0};
}

double inverse_custom_sigmoid(double y) {
  if (!(y > 0.0 && y < 1.0)) {
    throw std::domain_error("inverse_custom_sigmoid: y must be in (0,1)");
  }
  return -2.0 * std::log(1.0 / y - 1.0) + 5.0;
}

CceResult cce_loss(const PixelProbs& probs, PixelClass target,
                   const ClassWeights& weights) {
  weights.validate();
  probs.validate();
  const double p_t = probs.of(target);
  if (!(p_t > 0.0)) {
    throw std::domain_error("cce_loss: target probability must be > 0");
  }
  const double w_t = weights.of(target);
  CceResult r;
  r.loss = -w_t * std::log(p_t);
  r.grad[static_cast<int>(target)] = -w_t / p_t;
  return r;
}

ValueGrad smoothed_l1(double x) {
  if (std::abs(x) < 1.0) {
    return ValueGrad{0.5 * x * x, x};
  }
  return ValueGrad{std::abs(x) - 0.5, x > 0.0 ? 1.0 : -1.0};
}

double depth_loss(const std::vector<double>& pred_depths,
                  const std::vector<double>& gt_depths,
                  const std::vector<bool>& mask) {
  if (pred_depths.size() != gt_depths.size() ||
      pred_depths.size() != mask.size()) {
    throw std::invalid_argument("depth_loss: input lengths differ");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    sum += smoothed_l1(pred_depths[i] - gt_depths[i]).value;
    ++n;
  }
  if (n == 0) {
    throw std::invalid_argument("depth_loss: empty mask, loss undefined");
  }
  return sum / static_cast<double>(n);
}

double total_loss_mono(double cce, double depth) {
  if (!std::isfinite(cce) || !std::isfinite(depth)) {
    throw std::invalid_argument("total_loss_mono: components must be finite");
  }
  return cce + depth;
}

double total_loss_stereo(double cce_left, double cce_right, double depth) {
  if (!std::isfinite(cce_left) || !std::isfinite(cce_right) ||
      !std::isfinite(depth)) {
    throw std::invalid_argument("total_loss_stereo: components must be finite");
  }
  return cce_left + cce_right + depth;
}

double finite_diff_check(const std::function<ValueGrad(double)>& f, double x0,
                         double h) {
  const double fd = (f(x0 + h).value - f(x0 - h).value) / (2.0 * h);
  const double g = f(x0).grad;
  const double scale = std::max({1e-12, std::abs(fd), std::abs(g)});
  return std::abs(fd - g) / scale;
}

}  // namespace bloom3d
