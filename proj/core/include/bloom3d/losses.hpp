#pragma once

#include <array>
#include <functional>
#include <vector>

namespace bloom3d {

/// Pixel classes of the three-channel heatmap head.
enum class PixelClass { background = 0, near_flower = 1, distant_flower = 2 };

/// Per-class weights of the classification loss; near flowers weigh most,
/// background least.
struct ClassWeights {
  double w_background = 1.0;
  double w_near = 5.0;
  double w_distant = 3.0;

  double of(PixelClass c) const {
    switch (c) {
      case PixelClass::background: return w_background;
      case PixelClass::near_flower: return w_near;
      default: return w_distant;
    }
  }
  void validate() const;  // all positive
};

/// One pixel's predicted class distribution.
struct PixelProbs {
  double p_background = 0.0;
  double p_near = 0.0;
  double p_distant = 0.0;

  double of(PixelClass c) const {
    switch (c) {
      case PixelClass::background: return p_background;
      case PixelClass::near_flower: return p_near;
      default: return p_distant;
    }
  }
  /// Each in [0,1], sum within 1e-6 of 1.
  void validate() const;
};

struct ValueGrad {
  double value = 0.0;
  double grad = 0.0;
};

struct CceResult {
  double loss = 0.0;
  std::array<double, 3> grad{};  // d loss / d p_i, indexed by PixelClass
};

/// Depth-head activation: sigma((x - 5) / 2), strictly increasing into (0,1).
double custom_sigmoid(double x);
ValueGrad custom_sigmoid_with_grad(double x);

/// Exact inverse of custom_sigmoid: -2 ln(1/y - 1) + 5 for y in (0,1).
/// Throws std::domain_error outside the open interval.
double inverse_custom_sigmoid(double y);

/// Weighted cross-entropy at one pixel: -w_t ln(p_t) for the target class,
/// with the gradient w.r.t. each probability.
/// Throws std::domain_error when the target probability is <= 0.
CceResult cce_loss(const PixelProbs& probs, PixelClass target,
                   const ClassWeights& weights);

/// x^2/2 inside |x|<1, |x|-0.5 outside; C1 at the seam.
ValueGrad smoothed_l1(double x);

/// Mean smoothed-L1 over mask-true entries only (supervision is restricted
/// to flower-center pixels). Throws std::invalid_argument on length
/// mismatch or when no entry is masked in.
double depth_loss(const std::vector<double>& pred_depths,
                  const std::vector<double>& gt_depths,
                  const std::vector<bool>& mask);

/// Totals for the single-image and stereo heads (unit weights).
double total_loss_mono(double cce, double depth);
double total_loss_stereo(double cce_left, double cce_right, double depth);

/// Central-difference check of an analytic gradient at x0. Returns the
/// relative error between (f(x0+h)-f(x0-h))/(2h) and f(x0).grad.
double finite_diff_check(const std::function<ValueGrad(double)>& f, double x0,
                         double h);

}  // namespace bloom3d
