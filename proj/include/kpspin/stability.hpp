#pragma once

// Fixed points, linear stability and local bifurcation analysis of the
// classical map.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "kpspin/classical_map.hpp"
#include "kpspin/model.hpp"

namespace kpspin {

using cplx = std::complex<double>;

enum class StabilityKind { Elliptic, Hyperbolic, InversionHyperbolic, Parabolic };

inline const char* to_string(StabilityKind k) {
  switch (k) {
    case StabilityKind::Elliptic: return "elliptic";
    case StabilityKind::Hyperbolic: return "hyperbolic";
    case StabilityKind::InversionHyperbolic: return "inversion-hyperbolic";
    case StabilityKind::Parabolic: return "parabolic";
  }
  return "unknown";
}

struct StabilityClass {
  StabilityKind kind = StabilityKind::Elliptic;
  std::optional<int> resonance;  // l when the eigenvalue is an l-th root of unity
  double trace = 0.0;            // trace of the on-sphere 2x2 block
  double e_eff = 0.0;            // |trace| / 2
  std::pair<cplx, cplx> eigenvalues;
};

struct StabilityTolerances {
  double parabolic = 1e-9;
  double resonance_phase = 1e-6;
  int max_resonance_order = 12;
};

// Eigenvalues of a 2x2 block given its trace and determinant, ordered so
// that the first has the nonnegative imaginary part (or larger modulus).
inline std::pair<cplx, cplx> block_eigenvalues(double trace, double det) {
  const cplx disc = std::sqrt(cplx(trace * trace / 4.0 - det, 0.0));
  const cplx l1 = trace / 2.0 + disc;
  const cplx l2 = trace / 2.0 - disc;
  return {l1, l2};
}

inline std::optional<int> detect_resonance(double phase, const StabilityTolerances& tol) {
  for (int l = 3; l <= tol.max_resonance_order; ++l) {
    for (int q = 1; q < l; ++q) {
      if (std::gcd(q, l) != 1) continue;
      if (std::abs(phase - two_pi * q / l) < tol.resonance_phase) return l;
    }
  }
  return std::nullopt;
}

inline StabilityClass classify_block(double trace, double det, const StabilityTolerances& tol = {}) {
  StabilityClass sc;
  sc.trace = trace;
  sc.e_eff = std::abs(trace) / 2.0;
  sc.eigenvalues = block_eigenvalues(trace, det);
  if (std::abs(std::abs(trace) - 2.0) <= tol.parabolic) {
    sc.kind = StabilityKind::Parabolic;
  } else if (std::abs(trace) < 2.0) {
    sc.kind = StabilityKind::Elliptic;
    const double phase = std::abs(std::arg(sc.eigenvalues.first));
    sc.resonance = detect_resonance(phase, tol);
  } else {
    sc.kind = trace > 0.0 ? StabilityKind::Hyperbolic : StabilityKind::InversionHyperbolic;
  }
  return sc;
}

// Orthonormal basis of the tangent plane at a unit vector.
inline Eigen::Matrix<double, 3, 2> tangent_basis(const Vec3& x) {
  const Vec3 helper = std::abs(x.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 t1 = (helper - helper.dot(x) * x).normalized();
  Vec3 t2 = x.cross(t1);
  Eigen::Matrix<double, 3, 2> b;
  b.col(0) = t1;
  b.col(1) = t2;
  return b;
}

// On-sphere 2x2 block of a linear map that takes the tangent plane at x to
// itself (tangent map of a fixed point or a periodic-orbit product).
inline Eigen::Matrix2d tangent_block(const Mat3& m, const Vec3& x) {
  const auto b = tangent_basis(x);
  return b.transpose() * m * b;
}

inline double fixed_point_residual(const PhasePoint& x, const ModelParams& prm) {
  return (step_raw(x.vec(), prm) - x.vec()).norm();
}

inline StabilityClass classify_fixed_point(const PhasePoint& x, const ModelParams& prm,
                                           double fixed_tol = 1e-9, const StabilityTolerances& tol = {}) {
  const double res = fixed_point_residual(x, prm);
  if (!(res < fixed_tol)) {
    throw std::invalid_argument("classify_fixed_point: point is not a fixed point (|F(x)-x| = " + std::to_string(res) +
                                ")");
  }
  const Eigen::Matrix2d blk = tangent_block(tangent_map(x, prm), x.vec());
  return classify_block(blk.trace(), blk.determinant(), tol);
}

// Closed-form stability of the poles (0, +-1, 0): block trace
// 2 cos(alpha) +- k sin(alpha) for p = 2 and 2 cos(alpha) for p > 2.
inline double pole_block_trace(const ModelParams& prm, int pole_sign) {
  const double c = prm.cos_alpha(), s = prm.sin_alpha();
  if (prm.p() == 2) return 2.0 * c + pole_sign * prm.k() * s;
  return 2.0 * c;
}

struct FixedPointRecord {
  PhasePoint point;
  StabilityClass cls;
  double residual = 0.0;
};

struct RejectedRoot {
  double z = 0.0;
  double norm_error = 0.0;
  double residual = 0.0;
};

struct FixedPointSearch {
  std::vector<FixedPointRecord> fixed_points;  // poles first
  std::vector<RejectedRoot> rejected;
  bool degenerate_alpha = false;  // alpha ~ 0: the map is a pure twist with continua of fixed points
};

// Nontrivial fixed points have Z' = Z, hence X = -tan(alpha/2) Z and
// Y = tan(alpha/2) Z cot(theta/2) with theta = k Z^(p-1). Unit norm then
// reduces to zero of
//   f(Z) = Z^2 - s / (tan^2(alpha/2) + s),  s = sin^2(theta/2).
inline double fixed_point_function(double z, const ModelParams& prm) {
  const double t = std::tan(prm.alpha() / 2.0);
  const double sh = std::sin(prm.k() * ipow(z, prm.p() - 1) / 2.0);
  const double s = sh * sh;
  const double den = t * t + s;
  if (den == 0.0) return z * z;
  return z * z - s / den;
}

inline Vec3 fixed_point_from_z(double z, const ModelParams& prm) {
  const double t = std::tan(prm.alpha() / 2.0);
  const double half = prm.k() * ipow(z, prm.p() - 1) / 2.0;
  return {-t * z, t * z * std::cos(half) / std::sin(half), z};
}

namespace detail {

inline bool alpha_degenerate(const ModelParams& prm) {
  return std::abs(prm.sin_alpha()) < 1e-12 && prm.cos_alpha() > 0.0;
}

template <class F>
double bisect(F&& f, double lo, double hi, double flo, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline FixedPointSearch find_fixed_points(const ModelParams& prm, int grid_resolution = 2000) {
  if (grid_resolution < 100) throw std::invalid_argument("find_fixed_points: grid_resolution must be >= 100");
  FixedPointSearch out;
  for (int sign : {+1, -1}) {
    PhasePoint pole(0.0, sign, 0.0);
    out.fixed_points.push_back({pole, classify_fixed_point(pole, prm), fixed_point_residual(pole, prm)});
  }
  if (detail::alpha_degenerate(prm)) {
    out.degenerate_alpha = true;
    return out;
  }

  auto f = [&](double z) { return fixed_point_function(z, prm); };
  std::vector<double> roots;
  const double h = 1.0 / grid_resolution;
  double z_prev = h;
  double f_prev = f(z_prev);
  if (f_prev == 0.0) roots.push_back(z_prev);
  for (int i = 2; i <= grid_resolution; ++i) {
    const double z = i * h;
    const double fz = f(z);
    if (fz == 0.0) {
      roots.push_back(z);
    } else if (f_prev != 0.0 && ((fz < 0.0) != (f_prev < 0.0))) {
      roots.push_back(detail::bisect(f, z_prev, z, f_prev, 1e-12));
    }
    z_prev = z;
    f_prev = fz;
  }

  for (double zr : roots) {
    for (double z : {zr, -zr}) {
      const Vec3 v = fixed_point_from_z(z, prm);
      const double norm_err = std::abs(v.norm() - 1.0);
      const double res = std::isfinite(norm_err) ? (step_raw(v, prm) - v).norm() : INFINITY;
      if (!(norm_err < 1e-9) || !(res < 1e-9)) {
        out.rejected.push_back({z, norm_err, res});
        continue;
      }
      PhasePoint x(v);
      out.fixed_points.push_back({x, classify_fixed_point(x, prm), res});
    }
  }
  return out;
}

namespace detail {

// Minimum of the fixed-point function over (0, 1], grid plus golden-section
// refinement around the smallest grid sample.
inline double min_fixed_point_function(const ModelParams& prm, int grid = 2000) {
  auto f = [&](double z) { return fixed_point_function(z, prm); };
  const double h = 1.0 / grid;
  int best = 1;
  double fbest = f(h);
  for (int i = 2; i <= grid; ++i) {
    const double v = f(i * h);
    if (v < fbest) {
      fbest = v;
      best = i;
    }
  }
  double a = std::max(0.0, (best - 1) * h), b = std::min(1.0, (best + 1) * h);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 80; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return std::min({fbest, fc, fd});
}

}  // namespace detail

struct OnsetOptions {
  double k_max = 50.0;
  double k_step = 0.01;
  double tolerance = 1e-3;
};

// Smallest k at which nontrivial fixed points exist (f dips below zero).
inline std::optional<double> onset_of_new_fixed_points(int p, double alpha, const OnsetOptions& opt = {}) {
  const ModelParams base(p, 0.0, alpha);
  if (detail::alpha_degenerate(base)) return std::nullopt;
  auto has_roots = [&](double k) { return detail::min_fixed_point_function(base.with_k(k)) < 0.0; };
  double k_lo = 0.0;
  for (double k = opt.k_step; k <= opt.k_max + 1e-12; k += opt.k_step) {
    if (has_roots(k)) {
      double lo = k_lo, hi = k;
      while (hi - lo > opt.tolerance) {
        const double mid = 0.5 * (lo + hi);
        (has_roots(mid) ? hi : lo) = mid;
      }
      return 0.5 * (lo + hi);
    }
    k_lo = k;
  }
  return std::nullopt;
}

// Nontrivial eigenvalue pair of the four-step tangent map of the equator
// orbit (1,0,0) -> (0,0,-1) -> (-1,0,0) -> (0,0,1) at alpha = pi/2.
inline std::pair<cplx, cplx> equator_orbit_eigenvalues(double k, int p) {
  if (p < 2) throw std::invalid_argument("equator_orbit_eigenvalues: p must be >= 2");
  if (p == 2) {
    const double w = 2.0 * std::cos(k) + k * std::sin(k);
    return block_eigenvalues(w * w - 2.0, 1.0);
  }
  const double sgn = (p % 2 == 0) ? 1.0 : -1.0;
  const cplx i(0.0, 1.0);
  const cplx plus = (std::cos(k) - i * std::sin(k)) * (std::cos(k) - i * sgn * std::sin(k));
  const cplx minus = (std::cos(k) + i * std::sin(k)) * (std::cos(k) + i * sgn * std::sin(k));
  return {plus, minus};
}

struct PoleBifurcation {
  int q;
  int l;
  double alpha;
};

// Resonant precession angles 2 pi q / l in (0, pi] with gcd(q, l) = 1.
inline std::vector<PoleBifurcation> pole_bifurcation_alphas(int l_max) {
  if (l_max < 3) throw std::invalid_argument("pole_bifurcation_alphas: l_max must be >= 3");
  std::vector<PoleBifurcation> out;
  for (int l = 3; l <= l_max; ++l) {
    for (int q = 1; 2 * q <= l; ++q) {
      if (std::gcd(q, l) == 1) out.push_back({q, l, two_pi * q / l});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.alpha < b.alpha; });
  return out;
}

enum class Pole { North = 1, South = -1 };

// Area-preserving map for (dX, dZ) near a pole, x axis reflected:
//   dX' = sin(a) dZ + cos(a) (dX - k dZ^(p-1))
//   dZ' = cos(a) dZ - sin(a) (dX - k dZ^(p-1))
struct LocalMap2D {
  int p = 3;
  double k = 0.0;
  double alpha = 0.0;

  int degree() const { return p - 1; }

  Eigen::Vector2d apply(const Eigen::Vector2d& d) const {
    const double c = std::cos(alpha), s = std::sin(alpha);
    const double sheared = d.x() - k * ipow(d.y(), p - 1);
    return {s * d.y() + c * sheared, c * d.y() - s * sheared};
  }

  Eigen::Matrix2d jacobian(const Eigen::Vector2d& d) const {
    const double c = std::cos(alpha), s = std::sin(alpha);
    const double dshear = -k * (p - 1) * ipow(d.y(), p - 2);
    Eigen::Matrix2d j;
    j << c, s + c * dshear,
         -s, c - s * dshear;
    return j;
  }
};

inline LocalMap2D pole_local_map(const ModelParams& prm, Pole pole) {
  const bool flip = pole == Pole::South && prm.even_p();
  return {prm.p(), flip ? -prm.k() : prm.k(), prm.alpha()};
}

// Period-4 orbit born in the 1-to-4 bifurcation at alpha = pi/2 + gamma.
// Returns nullopt when no real solution exists.
inline std::optional<Eigen::Vector2d> bifurcated_orbit_positions(int p, double k, double gamma) {
  if (p <= 2) throw std::invalid_argument("bifurcated_orbit_positions: requires p > 2");
  if (k == 0.0) return std::nullopt;
  const double radicand = (4.0 * gamma + 9.0 * gamma * gamma * gamma) / k;
  const int root = p - 2;
  double dz;
  if (radicand < 0.0) {
    if (root % 2 == 0) return std::nullopt;
    dz = -std::pow(-radicand, 1.0 / root);
  } else {
    dz = std::pow(radicand, 1.0 / root);
  }
  const double dx = gamma * k * ipow(dz, p - 1) - 1.5 * gamma * gamma * dz;
  return Eigen::Vector2d(dx, dz);
}

// Trace of the local map around the odd-p equator orbit, to second order
// in gamma = alpha - pi/2.
inline double equator_orbit_local_trace(int p, double k, double gamma) {
  if (p < 3 || p % 2 == 0) throw std::invalid_argument("equator_orbit_local_trace: requires odd p >= 3");
  const double g2 = gamma * gamma;
  const double ck = std::cos(k);
  const double inner = 2.0 * g2 - (1.0 - 2.0 * g2) * (1.0 - g2) * ck * ck;
  return 2.0 * (1.0 + inner * inner / 8.0);
}

}  // namespace kpspin
