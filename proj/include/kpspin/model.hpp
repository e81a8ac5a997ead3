#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace kpspin {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// x^n for integer n >= 0 by repeated multiplication; 0^0 == 1.
inline double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

inline double wrap_angle_0_2pi(double a) {
  double r = std::fmod(a, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r = 0.0;
  return r;
}

// Interaction order p, kick strength k and precession angle alpha.
// alpha is stored normalized to [0, 2pi); its sine and cosine are cached
// since every map step needs them.
class ModelParams {
 public:
  ModelParams(int p, double k, double alpha) : p_(p), k_(k), alpha_(wrap_angle_0_2pi(alpha)) {
    if (p < 2) throw std::invalid_argument("interaction order p must be >= 2, got " + std::to_string(p));
    if (!(k >= 0.0) || !std::isfinite(k)) throw std::invalid_argument("kick strength k must be finite and >= 0");
    if (!std::isfinite(alpha)) throw std::invalid_argument("precession angle alpha must be finite");
    cos_a_ = std::cos(alpha_);
    sin_a_ = std::sin(alpha_);
  }

  int p() const { return p_; }
  double k() const { return k_; }
  double alpha() const { return alpha_; }
  double cos_alpha() const { return cos_a_; }
  double sin_alpha() const { return sin_a_; }
  bool even_p() const { return p_ % 2 == 0; }

  ModelParams with_k(double k) const { return {p_, k, alpha_}; }
  ModelParams with_alpha(double alpha) const { return {p_, k_, alpha}; }

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.p_ == b.p_ && a.k_ == b.k_ && a.alpha_ == b.alpha_;
  }

 private:
  int p_;
  double k_;
  double alpha_;
  double cos_a_ = 1.0;
  double sin_a_ = 0.0;
};

// Classical unit spin X = <J>/J. Construction renormalizes.
class PhasePoint {
 public:
  PhasePoint() : v_(0.0, 1.0, 0.0) {}
  PhasePoint(double x, double y, double z) : PhasePoint(Vec3(x, y, z)) {}
  explicit PhasePoint(const Vec3& v) : v_(v) {
    const double n = v_.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("phase point must be a nonzero finite vector");
    v_ /= n;
  }

  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }
  const Vec3& vec() const { return v_; }

  double distance(const PhasePoint& o) const { return (v_ - o.v_).norm(); }

 private:
  Vec3 v_;
};

}  // namespace kpspin
