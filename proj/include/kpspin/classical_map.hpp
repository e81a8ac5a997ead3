#pragma once

// Classical stroboscopic map of the kicked p-spin on the unit sphere:
// a rotation by alpha about y followed by a twist about z whose angle is
// k * Z'^(p-1), Z' being the post-rotation z component.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kpspin/model.hpp"

namespace kpspin {

namespace detail {

struct RotatedTwist {
  double a;      // x component after the y-rotation
  double u;      // z component after the y-rotation (= Z_{m+1})
  double cos_t;  // twist angle cosine
  double sin_t;
};

inline RotatedTwist rotate_and_twist_angle(const Vec3& v, const ModelParams& prm) {
  const double c = prm.cos_alpha(), s = prm.sin_alpha();
  RotatedTwist r{};
  r.a = c * v.x() + s * v.z();
  r.u = c * v.z() - s * v.x();
  const double theta = prm.k() * ipow(r.u, prm.p() - 1);
  r.cos_t = std::cos(theta);
  r.sin_t = std::sin(theta);
  return r;
}

}  // namespace detail

// One application of the forward map without renormalization. Exactly
// norm preserving in exact arithmetic.
inline Vec3 step_raw(const Vec3& v, const ModelParams& prm) {
  const auto r = detail::rotate_and_twist_angle(v, prm);
  return {r.cos_t * r.a - r.sin_t * v.y(), r.sin_t * r.a + r.cos_t * v.y(), r.u};
}

inline Vec3 inverse_step_raw(const Vec3& v, const ModelParams& prm) {
  const double c = prm.cos_alpha(), s = prm.sin_alpha();
  const double theta = prm.k() * ipow(v.z(), prm.p() - 1);
  const double ct = std::cos(theta), st = std::sin(theta);
  // undo the twist, then undo the rotation
  const double a = ct * v.x() + st * v.y();
  const double y = -st * v.x() + ct * v.y();
  return {c * a - s * v.z(), y, s * a + c * v.z()};
}

inline PhasePoint step(const PhasePoint& x, const ModelParams& prm) { return PhasePoint(step_raw(x.vec(), prm)); }

inline PhasePoint inverse_step(const PhasePoint& x, const ModelParams& prm) {
  return PhasePoint(inverse_step_raw(x.vec(), prm));
}

// Jacobian dX_{m+1}/dX_m of the forward map, evaluated at v.
//
// Writing F = G o A with A the y-rotation and G the twist,
//   DG = [[cos t, -sin t, -C Y'], [sin t, cos t, C X'], [0, 0, 1]]
// where C = (p-1) k u^(p-2) is the derivative of the twist angle and
// (X', Y') are the outgoing components.
inline Mat3 tangent_map_raw(const Vec3& v, const ModelParams& prm) {
  const double c = prm.cos_alpha(), s = prm.sin_alpha();
  const auto r = detail::rotate_and_twist_angle(v, prm);
  const double xo = r.cos_t * r.a - r.sin_t * v.y();
  const double yo = r.sin_t * r.a + r.cos_t * v.y();
  const double dtheta = (prm.p() - 1) * prm.k() * ipow(r.u, prm.p() - 2);

  Mat3 dg;
  dg << r.cos_t, -r.sin_t, -dtheta * yo,
        r.sin_t, r.cos_t, dtheta * xo,
        0.0, 0.0, 1.0;
  Mat3 rot;
  rot << c, 0.0, s,
         0.0, 1.0, 0.0,
         -s, 0.0, c;
  return dg * rot;
}

inline Mat3 tangent_map(const PhasePoint& x, const ModelParams& prm) { return tangent_map_raw(x.vec(), prm); }

struct Trajectory {
  ModelParams params;
  std::vector<PhasePoint> points;  // points[0] is the initial condition

  std::size_t length() const { return points.empty() ? 0 : points.size() - 1; }
};

inline Trajectory iterate(const PhasePoint& x0, const ModelParams& prm, std::size_t n_steps) {
  Trajectory t{prm, {}};
  t.points.reserve(n_steps + 1);
  t.points.push_back(x0);
  for (std::size_t i = 0; i < n_steps; ++i) t.points.push_back(step(t.points.back(), prm));
  return t;
}

// Time-reversal involutions. Both satisfy T o F o T = F^-1; the second
// one only for even p.
inline PhasePoint involution_T(const PhasePoint& x, const ModelParams& prm) {
  const double c = prm.cos_alpha(), s = prm.sin_alpha();
  return PhasePoint(-c * x.x() - s * x.z(), x.y(), -s * x.x() + c * x.z());
}

inline PhasePoint involution_Ttilde(const PhasePoint& x, const ModelParams& prm) {
  const double c = prm.cos_alpha(), s = prm.sin_alpha();
  return PhasePoint(c * x.x() + s * x.z(), x.y(), s * x.x() - c * x.z());
}

inline PhasePoint rotation_y_pi(const PhasePoint& x) { return PhasePoint(-x.x(), x.y(), -x.z()); }
inline PhasePoint rotation_x_pi(const PhasePoint& x) { return PhasePoint(x.x(), -x.y(), -x.z()); }

// Great circle {cx * X + cz * Z = 0}; always contains the y axis.
struct GreatCircle {
  double cx = 0.0;
  double cz = 0.0;
  bool degenerate = false;  // coefficients vanish, the equation is 0 = 0

  // Unit point on the circle at angle phi measured from (0, 1, 0).
  PhasePoint point_at(double phi) const {
    if (degenerate) throw std::logic_error("degenerate great circle has no parametrization");
    const double n = std::hypot(cx, cz);
    const Vec3 w(cz / n, 0.0, -cx / n);
    return PhasePoint(std::cos(phi) * Vec3::UnitY() + std::sin(phi) * w);
  }
};

struct SymmetryCurves {
  GreatCircle t_invariant;
  GreatCircle ttilde_invariant;
};

inline SymmetryCurves symmetry_curves(const ModelParams& prm) {
  const double c = prm.cos_alpha(), s = prm.sin_alpha();
  constexpr double eps = 1e-12;
  auto make = [&](double cx, double cz) {
    GreatCircle g{cx, cz, std::hypot(cx, cz) < eps};
    if (!g.degenerate) {
      const double n = std::hypot(cx, cz);
      g.cx /= n;
      g.cz /= n;
    }
    return g;
  };
  return {make(s, -(c - 1.0)), make(s, -(c + 1.0))};
}

}  // namespace kpspin
