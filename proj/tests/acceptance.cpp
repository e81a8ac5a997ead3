// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
// and exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "kpspin/kpspin.hpp"

using namespace kpspin;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Detail {
 public:
  template <class... Args>
  void add(const char* fmt, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    if (!text_.empty()) text_ += "; ";
    text_ += buf;
  }
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

// Maximum exponent over 8 Fibonacci seeds, seeds evaluated in parallel.
double lyapunov_8(const ModelParams& prm, std::size_t n_steps) {
  const auto seeds = fibonacci_sphere(8);
  std::vector<double> v(seeds.size());
  parallel_for(seeds.size(), 0, [&](std::size_t i) { v[i] = lyapunov_qr(prm, seeds[i], n_steps).value; });
  return *std::max_element(v.begin(), v.end());
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

Outcome criterion_1() {
  Outcome o;
  Detail d;
  double worst = 0.0;
  for (int p : {2, 3, 4})
    for (double k : {50.0, 100.0}) {
      const ModelParams prm(p, k, pi / 2);
      const double num = lyapunov_8(prm, 1000000);
      const double ana = std::log((p - 1) * k) - (p - 1);
      const double e = rel(num, ana);
      worst = std::max(worst, e);
      d.add("p=%d k=%g %.4f vs %.4f (%.1f%%)", p, k, num, ana, 100 * e);
      if (!(e <= 0.05)) o.pass = false;
    }
  o.detail = d.str();
  return o;
}

Outcome criterion_2() {
  Outcome o;
  Detail d;
  const std::size_t n = 100000;
  double p2_max = 0.0, p2_at = 0.0;
  for (int i = 1; i <= 19; ++i) {
    const double k = 0.1 * i;
    const double l = lyapunov_8(ModelParams(2, k, pi / 2), n);
    if (l > p2_max) {
      p2_max = l;
      p2_at = k;
    }
  }
  const bool a = p2_max < 1e-3;
  d.add("p=2 max over k<=1.9: %.4g at k=%.1f [%s]", p2_max, p2_at, a ? "ok" : "FAIL");
  const double l26 = lyapunov_8(ModelParams(2, 2.6, pi / 2), n);
  const bool b = l26 > 0.05;
  d.add("p=2 k=2.6: %.4f [%s]", l26, b ? "ok" : "FAIL");
  const double l3 = lyapunov_8(ModelParams(3, 1.5, pi / 2), n);
  const bool c = l3 > 0.01;
  d.add("p=3 k=1.5: %.4f [%s]", l3, c ? "ok" : "FAIL");
  double first = -1.0;
  for (int i = 1; i <= 60 && first < 0.0; ++i) {
    const double k = 0.05 * i;
    if (lyapunov_8(ModelParams(4, k, pi / 2), n) > 0.01) first = k;
  }
  const bool e = first >= 1.4 - 1e-9 && first <= 1.9 + 1e-9;
  d.add("p=4 first k with >0.01: %.2f [%s]", first, e ? "ok" : "FAIL");
  o.pass = a && b && c && e;
  o.detail = d.str();
  return o;
}

Outcome criterion_3() {
  Outcome o;
  Detail d;
  const double target[] = {2.0, 4.7, 7.5};
  const double tol[] = {0.001, 0.1, 0.1};
  for (int p : {2, 3, 4}) {
    const auto k = onset_of_new_fixed_points(p, pi / 2);
    const bool ok = k && std::abs(*k - target[p - 2]) <= tol[p - 2];
    d.add("p=%d onset %.5f (target %.1f +- %g)", p, k ? *k : NAN, target[p - 2], tol[p - 2]);
    if (!ok) o.pass = false;
  }
  o.detail = d.str();
  return o;
}

Eigen::Matrix2d equator_block(double k, int p) {
  const ModelParams prm(p, k, pi / 2);
  Vec3 x(1.0, 0.0, 0.0);
  const Vec3 start = x;
  Mat3 m = Mat3::Identity();
  for (int i = 0; i < 4; ++i) {
    m = tangent_map_raw(x, prm) * m;
    x = step_raw(x, prm);
  }
  return tangent_block(m, start);
}

// Compares an analytic eigenvalue pair with the numerical block through the
// characteristic polynomial, which stays well conditioned at degeneracies.
double pair_mismatch(const Eigen::Matrix2d& blk, const std::pair<cplx, cplx>& ev) {
  const double tr = (ev.first + ev.second).real();
  const double det = (ev.first * ev.second).real();
  return std::max(std::abs(blk.trace() - tr), std::abs(blk.determinant() - det));
}

Outcome criterion_4() {
  Outcome o;
  Detail d;
  double worst3 = 0.0;
  for (double k : {0.4, 1.0, 2.3, 5.0}) {
    const auto blk = equator_block(k, 3);
    const auto ev = equator_orbit_eigenvalues(k, 3);
    worst3 = std::max({worst3, pair_mismatch(blk, ev), std::abs(ev.first - 1.0), std::abs(ev.second - 1.0)});
  }
  d.add("p=3 max mismatch %.2e", worst3);
  double worst4 = 0.0;
  Rng rng = make_rng(2024);
  std::uniform_real_distribution<double> kd(0.1, 10.0);
  for (int i = 0; i < 5; ++i) {
    const double k = kd(rng);
    const auto blk = equator_block(k, 4);
    const auto ev = equator_orbit_eigenvalues(k, 4);
    Eigen::EigenSolver<Eigen::Matrix2d> es(blk);
    const cplx a = es.eigenvalues()(0), b = es.eigenvalues()(1);
    const cplx ea = std::polar(1.0, -2.0 * k), eb = std::polar(1.0, 2.0 * k);
    const double direct = std::min(std::max(std::abs(a - ea), std::abs(b - eb)), std::max(std::abs(a - eb), std::abs(b - ea)));
    worst4 = std::max({worst4, pair_mismatch(blk, ev), direct, std::abs(ev.first - ea), std::abs(ev.second - eb)});
  }
  d.add("p=4 max mismatch %.2e", worst4);
  o.pass = worst3 <= 1e-10 && worst4 <= 1e-10;
  o.detail = d.str();
  return o;
}

Outcome criterion_5() {
  Outcome o;
  Detail d;
  const double full = 4.0 * pi;
  const double a1 = chaotic_area(ModelParams(2, 1.0, pi / 2), 10000, 6e-2).a_ch;
  const double a35 = chaotic_area(ModelParams(2, 3.5, pi / 2), 10000, 6e-2).a_ch;
  const bool lo = a1 < 0.05 * full, hi = a35 >= 0.95 * full;
  d.add("k=1: %.4f of 4pi [%s]", a1 / full, lo ? "ok" : "FAIL");
  d.add("k=3.5: %.4f of 4pi [%s]", a35 / full, hi ? "ok" : "FAIL");
  o.pass = lo && hi;
  o.detail = d.str();
  return o;
}

Outcome criterion_6() {
  Outcome o;
  Detail d;
  for (int p : {3, 4}) {
    const double target = two_pi / p;
    double best = INFINITY, best_alpha = NAN;
    for (int i = 0; i <= 200; ++i) {
      const double a = pi * i / 200.0;
      const double s = phase_space_similarity(ModelParams(p, 1.0, a), 5e-4, 0.0, 1500, 200).s_bar;
      if (std::isfinite(s) && s < best) {
        best = s;
        best_alpha = a;
      }
    }
    const bool ok = std::abs(best_alpha - target) <= 0.05;
    d.add("p=%d min S=%.4f at alpha=%.4f (target %.4f) [%s]", p, best, best_alpha, target, ok ? "ok" : "FAIL");
    if (!ok) o.pass = false;
  }
  o.detail = d.str();
  return o;
}

Outcome criterion_7() {
  Outcome o;
  Detail d;
  const int dim = 513, samples = 50;
  std::vector<double> r(samples), ip(samples);
  parallel_for(samples, 0, [&](std::size_t s) {
    const auto sp = eigensystem(coe_sample(dim, derive_seed(default_root_seed, s)));
    r[s] = mean_adjacent_ratio(sp.phases).r_bar;
    double m = 0.0;
    for (Eigen::Index c = 0; c < sp.vectors.cols(); ++c) m += ipr_coefficients(sp.vectors.col(c), 1e-8);
    ip[s] = m / dim;
  });
  const double r_coe = std::accumulate(r.begin(), r.end(), 0.0) / samples;
  const double ipr_ratio = std::accumulate(ip.begin(), ip.end(), 0.0) / samples / coe_delta(dim);
  Rng rng = make_rng(derive_seed(default_root_seed, 1000));
  std::uniform_real_distribution<double> u(-pi, pi);
  double r_pos = 0.0;
  for (int s = 0; s < samples; ++s) {
    std::vector<double> ph(2048);
    for (auto& x : ph) x = u(rng);
    r_pos += mean_adjacent_ratio(ph).r_bar / samples;
  }
  const bool a = std::abs(r_coe - 0.530) <= 0.005, b = std::abs(ipr_ratio - 1.0) <= 0.1,
             c = std::abs(r_pos - 0.386) <= 0.01;
  d.add("COE r=%.4f [%s]", r_coe, a ? "ok" : "FAIL");
  d.add("IPR/(D/3)=%.4f [%s]", ipr_ratio, b ? "ok" : "FAIL");
  d.add("Poisson r=%.4f [%s]", r_pos, c ? "ok" : "FAIL");
  o.pass = a && b && c;
  o.detail = d.str();
  return o;
}

Outcome criterion_8(const SpinRepresentation& rep, const JyEigenbasis& jy) {
  Outcome o;
  Detail d;
  const double g1 = spectrum_statistics(ModelParams(2, 1.0, pi / 2), rep, jy).gamma;
  const double g6 = spectrum_statistics(ModelParams(2, 6.0, pi / 2), rep, jy).gamma;
  const double g3 = spectrum_statistics(ModelParams(3, 1.5, pi / 2), rep, jy).gamma;
  const bool a = g1 < 0.2, b = std::abs(g6 - 1.0) <= 0.1, c = g3 > 0.4;
  d.add("p=2 k=1 G=%.3f [%s]", g1, a ? "ok" : "FAIL");
  d.add("p=2 k=6 G=%.3f [%s]", g6, b ? "ok" : "FAIL");
  d.add("p=3 k=1.5 G=%.3f [%s]", g3, c ? "ok" : "FAIL");
  o.pass = a && b && c;
  o.detail = d.str();
  return o;
}

Outcome criterion_9(const SpinRepresentation& rep, const JyEigenbasis& jy) {
  Outcome o;
  Detail d;
  const double d0 = floquet_delta(ModelParams(2, 0.0, pi / 2), rep, jy);
  const double d6 = floquet_delta(ModelParams(2, 6.0, pi / 2), rep, jy);
  const bool a = std::abs(d0 - 3.0 / rep.dim()) <= 1e-6, b = std::abs(d6 - 1.0) <= 0.15;
  d.add("k=0 delta=%.6g vs 3/D=%.6g [%s]", d0, 3.0 / rep.dim(), a ? "ok" : "FAIL");
  d.add("p=2 k=6 delta=%.3f [%s]", d6, b ? "ok" : "FAIL");
  o.pass = a && b;
  o.detail = d.str();
  return o;
}

Outcome criterion_10(const SpinRepresentation& rep) {
  Outcome o;
  Detail d;
  const int n_max = 60;
  const auto f3 = fit_quantum_lyapunov(otoc_series(ModelParams(2, 3.0, pi / 2), rep, n_max));
  const double lam = lyapunov_8(ModelParams(2, 3.0, pi / 2), 1000000);
  const double ratio = f3.has_window ? f3.lambda_q / (2.0 * lam) : NAN;
  const bool a = f3.has_window && std::abs(ratio - 1.0) <= 0.2;
  d.add("p=2 k=3 L_Q=%.4f window [%d,%d], 2L=%.4f, ratio %.3f [%s]", f3.lambda_q, f3.n_lo, f3.n_hi, 2 * lam, ratio,
        a ? "ok" : "FAIL");
  const auto g3 = fit_quantum_lyapunov(otoc_series(ModelParams(3, 1.5, pi / 2), rep, n_max));
  const auto g2 = fit_quantum_lyapunov(otoc_series(ModelParams(2, 1.5, pi / 2), rep, n_max));
  const bool b = g3.has_window, c = !g2.has_window;
  d.add("p=3 k=1.5 window=%s [%d,%d] [%s]", g3.has_window ? "yes" : "no", g3.n_lo, g3.n_hi, b ? "ok" : "FAIL");
  d.add("p=2 k=1.5 window=%s [%d,%d] [%s]", g2.has_window ? "yes" : "no", g2.n_lo, g2.n_hi, c ? "ok" : "FAIL");
  o.pass = a && b && c;
  o.detail = d.str();
  return o;
}

Outcome criterion_11() {
  Outcome o;
  Detail d;
  auto check = [&](const char* name, bool ok) {
    if (!ok) {
      o.pass = false;
      d.add("%s FAILED", name);
    }
  };
  Rng rng = make_rng(77);
  std::uniform_real_distribution<double> kd(0.0, 12.0), ad(0.0, pi);

  double inv = 0.0, det = 0.0, t_all = 0.0, tt_even = 0.0, tt_odd = 0.0, par_even = 0.0, par_odd = 0.0;
  for (int p : {2, 3, 4, 5})
    for (int i = 0; i < 500; ++i) {
      const ModelParams prm(p, kd(rng), ad(rng));
      const PhasePoint x = random_phase_point(rng);
      auto dist = [](const PhasePoint& a, const PhasePoint& b) { return (a.vec() - b.vec()).norm(); };
      inv = std::max(inv, dist(inverse_step(step(x, prm), prm), x));
      det = std::max(det, std::abs(tangent_map(x, prm).determinant() - 1.0));
      const auto back = inverse_step(x, prm);
      t_all = std::max(t_all, dist(involution_T(step(involution_T(x, prm), prm), prm), back));
      const double tt = dist(involution_Ttilde(step(involution_Ttilde(x, prm), prm), prm), back);
      const double pr = dist(step(rotation_y_pi(x), prm), rotation_y_pi(step(x, prm)));
      if (prm.even_p()) {
        tt_even = std::max(tt_even, tt);
        par_even = std::max(par_even, pr);
      } else {
        tt_odd = std::max(tt_odd, tt);
        par_odd = std::max(par_odd, pr);
      }
    }
  check("map/inverse", inv < 1e-12);
  check("det(M)=1", det < 1e-10);
  check("T all p", t_all < 1e-12);
  check("Ttilde even p", tt_even < 1e-12);
  check("Ttilde broken for odd p", tt_odd > 1e-3);
  check("classical parity even p", par_even < 1e-12);
  check("classical parity broken for odd p", par_odd > 1e-3);
  d.add("map/inverse %.1e, det %.1e, T %.1e, Ttilde even %.1e / odd %.2f", inv, det, t_all, tt_even, tt_odd);

  double unit = 0.0, qpar_even = 0.0, qpar_odd = 0.0, otoc = 0.0;
  for (int ns : {16, 63}) {
    const SpinRepresentation rep(ns);
    const auto jy = jy_eigenbasis(rep);
    const auto ops = spin_operators(rep);
    const auto ry = pi_rotation_y(jy);
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(rep.dim(), rep.dim());
    // rounding in C(n) is set by the operator norms, not by C(n) itself
    const double scale = std::pow(ops.jz.squaredNorm() / rep.dim(), 2);
    for (int p : {2, 3, 4}) {
      const auto u = floquet_operator(ModelParams(p, kd(rng), ad(rng)), rep, jy).matrix;
      unit = std::max(unit, (u.adjoint() * u - id).cwiseAbs().maxCoeff());
      const double comm = (u * ry - ry * u).cwiseAbs().maxCoeff();
      if (p % 2 == 0)
        qpar_even = std::max(qpar_even, comm);
      else
        qpar_odd = std::max(qpar_odd, comm);
      const auto s = otoc_series(u, ops.jz, ops.jz, 6);
      Eigen::MatrixXcd un = id;
      for (int n = 0; n <= 6; ++n) {
        const Eigen::MatrixXcd wn = un.adjoint() * ops.jz * un;
        const Eigen::MatrixXcd c = wn * ops.jz - ops.jz * wn;
        const double ref = c.squaredNorm() / rep.dim();
        otoc = std::max(otoc, std::abs(s.c[n] - ref) / scale);
        if (s.c[n] < -1e-10) otoc = INFINITY;
        un = un * u;
      }
    }
  }
  check("unitarity", unit < 1e-12);
  check("quantum parity even p", qpar_even < 1e-12);
  check("quantum parity broken for odd p", qpar_odd > 1e-3);
  check("OTOC oracle", otoc < 1e-10);
  d.add("unitarity %.1e, parity even %.1e, OTOC oracle %.1e", unit, qpar_even, otoc);

  ScanSpec spec;
  spec.metric = Metric::Lyapunov;
  spec.p = 3;
  spec.k_range = {0.5, 4.0, 4};
  spec.alpha_range = {0.5, 2.5, 3};
  spec.root_seed = 99;
  const auto serial = run_scan(spec, 1);
  const auto parallel = run_scan(spec, 4);
  const auto path = (std::filesystem::temp_directory_path() / "kpspin_acceptance.ckpt").string();
  ScanOptions part;
  part.parallelism = 2;
  part.checkpoint_path = path;
  part.checkpoint_every = 2;
  part.max_cells = 5;
  run_scan(spec, part);
  const auto resumed = resume(path);
  std::filesystem::remove(path);
  auto same = [](const ScanTable& a, const ScanTable& b) {
    return a.status == b.status && std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0;
  };
  check("scan parallelism", same(serial, parallel));
  check("scan checkpoint/resume", same(serial, resumed));
  d.add("scan determinism %s", same(serial, parallel) && same(serial, resumed) ? "bit-identical" : "MISMATCH");
  o.detail = d.str();
  return o;
}

}  // namespace

int main() {
  lapack::pin_blas_threads(1);
  const SpinRepresentation rep(512);
  const JyEigenbasis jy = jy_eigenbasis(rep);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"analytic Lyapunov limit", criterion_1},
      {"chaos onset ordering", criterion_2},
      {"fixed-point onsets", criterion_3},
      {"period-4 orbit eigenvalues", criterion_4},
      {"chaotic area", criterion_5},
      {"similarity dips", criterion_6},
      {"ensemble baselines", criterion_7},
      {"spectral chaos transition", [&] { return criterion_8(rep, jy); }},
      {"localization delta", [&] { return criterion_9(rep, jy); }},
      {"OTOC quantum Lyapunov", [&] { return criterion_10(rep); }},
      {"property suites", criterion_11},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2zu %s: %s (%.0fs) %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
