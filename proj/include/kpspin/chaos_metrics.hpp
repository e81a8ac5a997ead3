#pragma once

// Classical chaos diagnostics: largest Lyapunov exponent, finite-time
// Lyapunov fields, recurrence-based chaotic area and phase-portrait
// similarity under a parameter perturbation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "kpspin/classical_map.hpp"
#include "kpspin/model.hpp"
#include "kpspin/parallel.hpp"
#include "kpspin/seeding.hpp"

namespace kpspin {

inline std::vector<PhasePoint> fibonacci_sphere(std::size_t n_tot) {
  if (n_tot < 1) throw std::invalid_argument("fibonacci_sphere: n_tot must be >= 1");
  const double golden = pi * (3.0 - std::sqrt(5.0));
  std::vector<PhasePoint> pts;
  pts.reserve(n_tot);
  for (std::size_t i = 0; i < n_tot; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n_tot);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    pts.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return pts;
}

// Uniformly distributed point on the sphere (normalized Gaussian vector).
inline PhasePoint random_phase_point(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    const Vec3 v(g(rng), g(rng), g(rng));
    if (v.norm() > 1e-12) return PhasePoint(v);
  }
}

inline constexpr std::uint64_t default_root_seed = 1;

// Single random seed point derived from a root seed.
inline PhasePoint seed_point(std::uint64_t root_seed) {
  Rng rng = make_rng(derive_seed(root_seed, 0));
  return random_phase_point(rng);
}

struct LyapunovResult {
  double value = 0.0;
  std::size_t n_steps = 0;
  std::size_t transient_discarded = 0;
  PhasePoint seed;
  std::vector<double> convergence_history;  // running estimates at evenly spaced checkpoints
  bool converged = true;
};

struct LyapunovOptions {
  std::size_t n_transient = 1000;
  std::size_t history_points = 100;
  double convergence_tolerance = 1e-3;
};

namespace detail {

// Advances x and an orthonormal tangent frame one step, returning the log
// of the stretch of the leading direction.
inline double tangent_step(Vec3& x, Eigen::Matrix<double, 3, 2>& q, const ModelParams& prm) {
  const Mat3 m = tangent_map_raw(x, prm);
  x = step_raw(x, prm);
  x /= x.norm();
  Vec3 v1 = m * q.col(0);
  Vec3 v2 = m * q.col(1);
  v1 -= v1.dot(x) * x;
  const double r11 = v1.norm();
  v1 /= r11;
  v2 -= v2.dot(x) * x;
  v2 -= v2.dot(v1) * v1;
  v2 /= v2.norm();
  q.col(0) = v1;
  q.col(1) = v2;
  return std::log(r11);
}

inline Eigen::Matrix<double, 3, 2> initial_frame(const Vec3& x) {
  const Vec3 helper = std::abs(x.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Eigen::Matrix<double, 3, 2> q;
  q.col(0) = (helper - helper.dot(x) * x).normalized();
  q.col(1) = x.cross(Vec3(q.col(0)));
  return q;
}

}  // namespace detail

// Largest Lyapunov exponent by tangent-frame QR re-orthonormalization every
// step. n_transient steps are iterated first and not accumulated; the
// returned value averages log R11 over the following n_steps steps.
inline LyapunovResult lyapunov_qr(const ModelParams& prm, const PhasePoint& seed, std::size_t n_steps,
                                  const LyapunovOptions& opt = {}) {
  if (n_steps < 10000) throw std::invalid_argument("lyapunov_qr: n_steps must be >= 1e4");
  Vec3 x = seed.vec();
  auto q = detail::initial_frame(x);
  for (std::size_t i = 0; i < opt.n_transient; ++i) detail::tangent_step(x, q, prm);

  LyapunovResult res;
  res.seed = seed;
  res.n_steps = n_steps;
  res.transient_discarded = opt.n_transient;
  const std::size_t every = std::max<std::size_t>(1, n_steps / std::max<std::size_t>(1, opt.history_points));
  double sum = 0.0;
  for (std::size_t i = 1; i <= n_steps; ++i) {
    sum += detail::tangent_step(x, q, prm);
    if (i % every == 0) res.convergence_history.push_back(sum / static_cast<double>(i));
  }
  res.value = sum / static_cast<double>(n_steps);

  const auto& h = res.convergence_history;
  if (h.size() >= 10) {
    const std::size_t start = h.size() - h.size() / 10;
    const auto [lo, hi] = std::minmax_element(h.begin() + static_cast<std::ptrdiff_t>(start), h.end());
    res.converged = (*hi - *lo) <= opt.convergence_tolerance;
  }
  return res;
}

// Maximum of lyapunov_qr over n_seeds Fibonacci-sphere seeds, so that a
// seed inside a regular island does not under-report a chaotic sea.
inline LyapunovResult lyapunov_max_over_seeds(const ModelParams& prm, std::size_t n_steps, std::size_t n_seeds = 8,
                                              const LyapunovOptions& opt = {}) {
  const auto seeds = fibonacci_sphere(n_seeds);
  LyapunovResult best;
  bool first = true;
  for (const auto& s : seeds) {
    auto r = lyapunov_qr(prm, s, n_steps, opt);
    if (first || r.value > best.value) {
      best = std::move(r);
      first = false;
    }
  }
  return best;
}

struct AnalyticLyapunov {
  double value = 0.0;
  bool valid = false;
};

// Strong-kick estimate ln[(p-1) sin(alpha) k] - (p-1).
inline AnalyticLyapunov lyapunov_analytic(const ModelParams& prm) {
  const double arg = (prm.p() - 1) * prm.sin_alpha() * prm.k();
  if (!(arg > std::exp(static_cast<double>(prm.p() - 1)))) return {0.0, false};
  return {std::log(arg) - (prm.p() - 1), true};
}

// Finite-time exponent per initial condition, no transient.
inline std::vector<double> local_lyapunov_field(const ModelParams& prm, const std::vector<PhasePoint>& points,
                                                std::size_t n_steps, int threads = 0) {
  if (n_steps < 100) throw std::invalid_argument("local_lyapunov_field: n_steps must be >= 100");
  std::vector<double> out(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) {
    Vec3 x = points[i].vec();
    auto q = detail::initial_frame(x);
    double sum = 0.0;
    for (std::size_t s = 0; s < n_steps; ++s) sum += detail::tangent_step(x, q, prm);
    out[i] = sum / static_cast<double>(n_steps);
  });
  return out;
}

inline std::vector<int> default_t_max_list() {
  std::vector<int> t(21);
  std::iota(t.begin(), t.end(), 120);
  return t;
}

struct AreaResult {
  double a_ch = 0.0;          // steradians
  double n_escaped = 0.0;     // averaged over t_max_set
  std::size_t n_tot = 0;
  double d_min = 0.0;
  std::vector<int> t_max_set;

  double a_reg() const { return 4.0 * pi - a_ch; }
};

// Step of the first return of the trajectory into the d_min ball (chord
// distance) around its start, or max_steps + 1 if none by max_steps.
inline int first_recurrence(const PhasePoint& x0, const ModelParams& prm, double d_min, int max_steps) {
  Vec3 x = x0.vec();
  for (int t = 1; t <= max_steps; ++t) {
    x = step_raw(x, prm);
    x /= x.norm();
    if ((x - x0.vec()).norm() < d_min) return t;
  }
  return max_steps + 1;
}

inline std::vector<int> recurrence_times(const ModelParams& prm, const std::vector<PhasePoint>& points, double d_min,
                                         int max_steps, int threads = 0) {
  std::vector<int> out(points.size());
  parallel_for(points.size(), threads,
               [&](std::size_t i) { out[i] = first_recurrence(points[i], prm, d_min, max_steps); });
  return out;
}

// Chaotic-sea area 4 pi <n_escaped> / n_tot, where an initial condition
// escapes for a given t_max if it does not recur within t_max steps.
inline AreaResult chaotic_area(const ModelParams& prm, std::size_t n_tot, double d_min,
                               const std::vector<int>& t_max_list = default_t_max_list(), int threads = 0) {
  if (n_tot < 1000) throw std::invalid_argument("chaotic_area: n_tot must be >= 1000");
  if (!(d_min > 0.0)) throw std::invalid_argument("chaotic_area: d_min must be > 0");
  if (t_max_list.empty()) throw std::invalid_argument("chaotic_area: t_max list must be nonempty");
  for (int t : t_max_list)
    if (t < 1) throw std::invalid_argument("chaotic_area: t_max values must be >= 1");

  const int horizon = *std::max_element(t_max_list.begin(), t_max_list.end());
  const auto times = recurrence_times(prm, fibonacci_sphere(n_tot), d_min, horizon, threads);

  double total = 0.0;
  for (int t_max : t_max_list) {
    total += static_cast<double>(std::count_if(times.begin(), times.end(), [&](int r) { return r > t_max; }));
  }
  AreaResult res;
  res.n_escaped = total / static_cast<double>(t_max_list.size());
  res.n_tot = n_tot;
  res.d_min = d_min;
  res.t_max_set = t_max_list;
  res.a_ch = 4.0 * pi * res.n_escaped / static_cast<double>(n_tot);
  return res;
}

struct SimilarityResult {
  double s_bar = 0.0;  // NaN when every trajectory was excluded
  std::size_t n_tot = 0;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;  // trajectories with a constant component
  std::size_t n_kicks = 0;
  ModelParams params{2, 0.0, 0.0};
  ModelParams perturbed{2, 0.0, 0.0};
};

// Pearson correlation, or NaN when either series has (numerically) zero
// variance.
inline double pearson(const double* a, const double* b, std::size_t n) {
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  constexpr double floor = 1e-20;
  if (va <= floor * static_cast<double>(n) || vb <= floor * static_cast<double>(n))
    return std::numeric_limits<double>::quiet_NaN();
  return cov / std::sqrt(va * vb);
}

// Per-trajectory similarity: product of the component correlations over
// kicks 1..N for the same initial condition under two parameter sets.
inline double trajectory_similarity(const PhasePoint& x0, const ModelParams& a, const ModelParams& b,
                                    std::size_t n_kicks) {
  Eigen::Matrix<double, Eigen::Dynamic, 3> ta(n_kicks, 3), tb(n_kicks, 3);
  Vec3 xa = x0.vec(), xb = x0.vec();
  for (std::size_t t = 0; t < n_kicks; ++t) {
    xa = step_raw(xa, a);
    xa /= xa.norm();
    xb = step_raw(xb, b);
    xb /= xb.norm();
    ta.row(static_cast<Eigen::Index>(t)) = xa.transpose();
    tb.row(static_cast<Eigen::Index>(t)) = xb.transpose();
  }
  double s = 1.0;
  for (int c = 0; c < 3; ++c) s *= pearson(ta.col(c).data(), tb.col(c).data(), n_kicks);
  return s;
}

inline SimilarityResult phase_space_similarity(const ModelParams& prm, double d_alpha, double d_k, std::size_t n_tot,
                                               std::size_t n_kicks, int threads = 0) {
  if (n_tot < 100) throw std::invalid_argument("phase_space_similarity: n_tot must be >= 100");
  if (n_kicks < 10) throw std::invalid_argument("phase_space_similarity: N must be >= 10");
  const ModelParams other(prm.p(), prm.k() + d_k, prm.alpha() + d_alpha);
  const auto pts = fibonacci_sphere(n_tot);
  std::vector<double> s(n_tot);
  parallel_for(n_tot, threads, [&](std::size_t i) { s[i] = trajectory_similarity(pts[i], prm, other, n_kicks); });

  SimilarityResult res{0.0, n_tot, 0, 0, n_kicks, prm, other};
  double sum = 0.0;
  for (double v : s) {
    if (std::isnan(v)) {
      ++res.n_excluded;
    } else {
      sum += v;
      ++res.n_used;
    }
  }
  res.s_bar = res.n_used > 0 ? sum / static_cast<double>(res.n_used) : std::numeric_limits<double>::quiet_NaN();
  return res;
}

}  // namespace kpspin
