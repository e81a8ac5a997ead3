#pragma once

// Quantum chaos diagnostics: adjacent spacing ratios and Gamma, inverse
// participation ratios and the Floquet localization delta, OTOC series
// and their exponential growth rate, and COE reference values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kpspin/floquet.hpp"
#include "kpspin/model.hpp"
#include "kpspin/seeding.hpp"

namespace kpspin {

inline const double r_poisson = 2.0 * std::log(2.0) - 1.0;
inline constexpr double r_coe = 0.5307;

struct RatioStatistics {
  double r_bar = 0.0;
  std::vector<double> ratios;
  std::size_t excluded_degenerate = 0;
};

// Spacing ratios on the circle: phases are sorted, the wrap-around spacing
// is included, spacings below degenerate_tol are dropped (and counted)
// before ratios of cyclically adjacent spacings are formed.
inline RatioStatistics adjacent_ratios(std::vector<double> phases, double degenerate_tol = 1e-12) {
  for (double& p : phases) p = wrap_angle_0_2pi(p);
  std::sort(phases.begin(), phases.end());
  RatioStatistics rs;
  std::vector<double> d;
  d.reserve(phases.size());
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const double s = i + 1 < phases.size() ? phases[i + 1] - phases[i] : phases.front() + two_pi - phases.back();
    if (s < degenerate_tol)
      ++rs.excluded_degenerate;
    else
      d.push_back(s);
  }
  if (d.size() < 10) {
    throw std::invalid_argument("adjacent ratios need at least 10 usable spacings, got " + std::to_string(d.size()));
  }
  rs.ratios.reserve(d.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double a = d[i], b = d[(i + 1) % d.size()];
    const double r = std::min(a, b) / std::max(a, b);
    rs.ratios.push_back(r);
    sum += r;
  }
  rs.r_bar = sum / static_cast<double>(d.size());
  return rs;
}

inline RatioStatistics mean_adjacent_ratio(const std::vector<double>& phases) {
  if (phases.size() < 10) throw std::invalid_argument("mean_adjacent_ratio: need at least 10 phases");
  return adjacent_ratios(phases);
}

inline RatioStatistics mean_adjacent_ratio(const Eigen::VectorXd& phases) {
  return mean_adjacent_ratio(std::vector<double>(phases.data(), phases.data() + phases.size()));
}

// Ratios of several independent spectra (symmetry sectors) pooled into one
// average.
inline RatioStatistics pooled_adjacent_ratio(const std::vector<Eigen::VectorXd>& spectra) {
  RatioStatistics all;
  double sum = 0.0;
  for (const auto& s : spectra) {
    auto r = adjacent_ratios(std::vector<double>(s.data(), s.data() + s.size()));
    all.excluded_degenerate += r.excluded_degenerate;
    for (double v : r.ratios) sum += v;
    all.ratios.insert(all.ratios.end(), r.ratios.begin(), r.ratios.end());
  }
  if (all.ratios.empty()) throw std::invalid_argument("pooled_adjacent_ratio: no spectra");
  all.r_bar = sum / static_cast<double>(all.ratios.size());
  return all;
}

inline double normalized_gamma(double r_bar) { return (r_bar - r_poisson) / (r_coe - r_poisson); }

// Inverse participation ratio of a vector of basis coefficients.
inline double ipr_coefficients(const Eigen::VectorXcd& c, double norm_tolerance = 1e-10) {
  const double n2 = c.squaredNorm();
  if (std::abs(n2 - 1.0) > norm_tolerance) throw std::invalid_argument("ipr: state is not normalized");
  return 1.0 / c.cwiseAbs2().cwiseAbs2().sum();
}

// IPR of `state` in the orthonormal basis given by the columns of
// `reference_basis`.
inline double ipr(const Eigen::VectorXcd& state, const Eigen::MatrixXcd& reference_basis,
                  double norm_tolerance = 1e-10) {
  if (std::abs(state.squaredNorm() - 1.0) > norm_tolerance) throw std::invalid_argument("ipr: state is not normalized");
  return ipr_coefficients(reference_basis.adjoint() * state, 1e-8);
}

inline double coe_delta(int dim) { return dim / 3.0; }

// delta = sum_j IPR(v_j) / (delta_COE * D) for eigenvector coefficients
// already expressed in the reference basis (columns of `coefficients`).
inline double floquet_delta_from_coefficients(const Eigen::MatrixXcd& coefficients) {
  const auto d = static_cast<int>(coefficients.rows());
  double sum = 0.0;
  for (Eigen::Index c = 0; c < coefficients.cols(); ++c) sum += ipr_coefficients(coefficients.col(c), 1e-8);
  return sum / (coe_delta(d) * d);
}

// Localization of Floquet eigenvectors (given in the Jz basis) in the Jy
// eigenbasis.
inline double floquet_delta(const SpectralData& spectral, const JyEigenbasis& jy) {
  if (spectral.vectors.size() == 0) throw std::invalid_argument("floquet_delta: eigenvectors required");
  return floquet_delta_from_coefficients(jy.vectors.adjoint() * spectral.vectors);
}

inline double floquet_delta(const SpectralData& spectral, const SpinRepresentation& rep) {
  return floquet_delta(spectral, jy_eigenbasis(rep));
}

// Eigenphase sets of the independent symmetry sectors of a Floquet
// operator given in the Jy basis. Odd p: the full spectrum. Even p: the two
// parity sectors of the pi rotation about y; a sector is split once more
// along the eigenspaces of the pi rotation about x when that rotation maps
// the sector to itself and commutes with the block (alpha = pi/2).
inline std::vector<Eigen::VectorXd> symmetry_resolved_phases(const Eigen::MatrixXcd& u_jy, const ModelParams& prm,
                                                             const SpinRepresentation& rep, const JyEigenbasis& jy,
                                                             double tolerance = 1e-8) {
  if (!prm.even_p()) return {eigenphases(u_jy)};
  const auto blocks = parity_blocks_from_jy(u_jy, rep);
  const Eigen::MatrixXcd rx = pi_rotation_x_in_jy(jy);
  std::vector<Eigen::VectorXd> out;
  auto add_sector = [&](const Eigen::MatrixXcd& ub, const std::vector<int>& idx, const std::vector<int>& other) {
    const Eigen::MatrixXcd sb = rx(idx, idx);
    const double leak = other.empty() ? 0.0 : rx(idx, other).cwiseAbs().maxCoeff();
    const bool hermitian = (sb - sb.adjoint()).cwiseAbs().maxCoeff() < tolerance;
    if (ub.rows() < 4 || leak > tolerance || !hermitian || (ub * sb - sb * ub).cwiseAbs().maxCoeff() > tolerance) {
      out.push_back(eigenphases(ub));
      return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (sb + sb.adjoint()));
    std::vector<int> minus, plus;
    for (int i = 0; i < static_cast<int>(es.eigenvalues().size()); ++i) (es.eigenvalues()(i) < 0.0 ? minus : plus).push_back(i);
    for (const auto* part : {&minus, &plus}) {
      if (part->empty()) continue;
      const Eigen::MatrixXcd q = es.eigenvectors()(Eigen::all, *part);
      out.push_back(eigenphases(q.adjoint() * ub * q));
    }
  };
  add_sector(blocks.even, blocks.even_index, blocks.odd_index);
  add_sector(blocks.odd, blocks.odd_index, blocks.even_index);
  return out;
}

// Level statistics of a Floquet operator. By default ratios are computed
// per symmetry sector and pooled; with resolve_symmetries = false the full
// spectrum is used.
struct SpectrumStatistics {
  RatioStatistics ratios;
  double gamma = 0.0;
  std::size_t n_sectors = 1;
};

inline SpectrumStatistics spectrum_statistics(const ModelParams& prm, const SpinRepresentation& rep,
                                              const JyEigenbasis& jy, bool resolve_symmetries = true) {
  const Eigen::MatrixXcd u = floquet_in_jy_basis(prm, rep, jy);
  SpectrumStatistics s;
  if (resolve_symmetries) {
    const auto sectors = symmetry_resolved_phases(u, prm, rep, jy);
    s.ratios = pooled_adjacent_ratio(sectors);
    s.n_sectors = sectors.size();
  } else {
    s.ratios = mean_adjacent_ratio(eigenphases(u));
  }
  s.gamma = normalized_gamma(s.ratios.r_bar);
  return s;
}

// delta of the Floquet operator, eigenvectors computed directly in the Jy
// basis.
inline double floquet_delta(const ModelParams& prm, const SpinRepresentation& rep, const JyEigenbasis& jy) {
  const SpectralData s = eigensystem(floquet_in_jy_basis(prm, rep, jy));
  return floquet_delta_from_coefficients(s.vectors);
}

// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
// R's diagonal moved into Q.
inline Eigen::MatrixXcd haar_unitary(int dim, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXcd z(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c)
    for (Eigen::Index r = 0; r < dim; ++r) z(r, c) = cplx(g(rng), g(rng)) / std::sqrt(2.0);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd& rr = qr.matrixQR();
  for (Eigen::Index c = 0; c < dim; ++c) {
    const cplx d = rr(c, c);
    const double a = std::abs(d);
    q.col(c) *= a > 0.0 ? d / a : cplx(1.0, 0.0);
  }
  return q;
}

inline Eigen::VectorXcd haar_state(int dim, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXcd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = cplx(g(rng), g(rng));
  return v / v.norm();
}

// COE member U_H U_H^T with U_H Haar.
inline Eigen::MatrixXcd coe_sample(int dim, std::uint64_t seed) {
  if (dim < 2) throw std::invalid_argument("coe_sample: dimension must be >= 2");
  Rng rng = make_rng(seed);
  const Eigen::MatrixXcd uh = haar_unitary(dim, rng);
  Eigen::MatrixXcd u = uh * uh.transpose();
  return 0.5 * (u + u.transpose());
}

// Square commutator (2/D)(tr(V^2 W^2) - Re tr(V W V W)) for Hermitian V, W,
// i.e. ||[W, V]||_F^2 / D.
inline double square_commutator(const Eigen::MatrixXcd& v, const Eigen::MatrixXcd& w) {
  const Eigen::MatrixXcd a = v * w;
  double cross = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) cross += (a(i, j) * a(j, i)).real();
  return 2.0 / static_cast<double>(a.rows()) * (a.squaredNorm() - cross);
}

struct OtocSeries {
  std::vector<int> n;
  std::vector<double> c;
  double c_coe = std::numeric_limits<double>::quiet_NaN();
  std::optional<ModelParams> params;
  std::optional<SpinRepresentation> rep;
};

inline OtocSeries otoc_series(const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& v, const Eigen::MatrixXcd& w,
                              int n_max) {
  if (n_max < 1) throw std::invalid_argument("otoc_series: n_max must be >= 1");
  OtocSeries s;
  Eigen::MatrixXcd wn = w;
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) heisenberg_step(wn, u);
    s.n.push_back(n);
    s.c.push_back(square_commutator(v, wn));
  }
  return s;
}

// OTOC of V = W = Jz under the kicked p-spin Floquet operator.
inline OtocSeries otoc_series(const ModelParams& prm, const SpinRepresentation& rep, int n_max) {
  const auto ops = spin_operators(rep);
  auto s = otoc_series(floquet_operator(prm, rep).matrix, ops.jz, ops.jz, n_max);
  s.params = prm;
  s.rep = rep;
  return s;
}

struct CoeNormalization {
  double c_coe = 0.0;            // ensemble mean of C(1)
  double delta_coe = 0.0;        // analytic D/3
  double sampled_mean_ipr = 0.0; // mean eigenvector IPR in the Jz basis
  int n_samples = 0;
};

inline constexpr int default_coe_samples = 20;

inline CoeNormalization coe_normalization(const SpinRepresentation& rep, int n_samples, std::uint64_t root_seed,
                                          bool sample_ipr = true) {
  if (n_samples < 10) throw std::invalid_argument("coe_normalization: n_samples must be >= 10");
  const auto ops = spin_operators(rep);
  CoeNormalization out;
  out.n_samples = n_samples;
  out.delta_coe = coe_delta(rep.dim());
  double c_sum = 0.0, ipr_sum = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::MatrixXcd u = coe_sample(rep.dim(), derive_seed(root_seed, static_cast<std::uint64_t>(s)));
    Eigen::MatrixXcd w = ops.jz;
    heisenberg_step(w, u);
    c_sum += square_commutator(ops.jz, w);
    if (sample_ipr) {
      const auto sp = eigensystem(u);
      double m = 0.0;
      for (Eigen::Index c = 0; c < sp.vectors.cols(); ++c) m += ipr_coefficients(sp.vectors.col(c), 1e-8);
      ipr_sum += m / static_cast<double>(sp.vectors.cols());
    }
  }
  out.c_coe = c_sum / n_samples;
  out.sampled_mean_ipr = sample_ipr ? ipr_sum / n_samples : std::numeric_limits<double>::quiet_NaN();
  return out;
}

struct FitOptions {
  double floor_multiplier = 100.0;
  double epsilon_floor = 1.0;
  double saturation_fraction = 0.2;
  int min_points = 4;
};

struct QuantumLyapunovFit {
  bool has_window = false;
  double lambda_q = 0.0;
  int n_lo = 0;
  int n_hi = 0;
  double residual = 0.0;  // rms of ln C about the fitted line
};

// Least-squares slope of ln C(n) over the growth window
//   n_lo: first n with C(n) > floor_multiplier * epsilon_floor * C(first nonzero)
//   n_hi: last n with C(n) < saturation_fraction * max C
inline QuantumLyapunovFit fit_quantum_lyapunov(const OtocSeries& s, const FitOptions& opt = {}) {
  QuantumLyapunovFit fit;
  const std::size_t len = s.c.size();
  double c_first = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    if (s.n[i] > 0 && s.c[i] > 0.0) {
      c_first = s.c[i];
      break;
    }
  }
  if (c_first <= 0.0) return fit;
  const double c_max = *std::max_element(s.c.begin(), s.c.end());
  const double lo_thr = opt.floor_multiplier * opt.epsilon_floor * c_first;
  const double hi_thr = opt.saturation_fraction * c_max;

  std::optional<std::size_t> lo, hi;
  for (std::size_t i = 0; i < len; ++i)
    if (s.c[i] > lo_thr) {
      lo = i;
      break;
    }
  for (std::size_t i = len; i-- > 0;)
    if (s.c[i] < hi_thr) {
      hi = i;
      break;
    }
  if (!lo || !hi || *hi < *lo || static_cast<int>(*hi - *lo + 1) < opt.min_points) return fit;

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double m = static_cast<double>(*hi - *lo + 1);
  for (std::size_t i = *lo; i <= *hi; ++i) {
    const double x = s.n[i], y = std::log(s.c[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double icept = (sy - slope * sx) / m;
  double rss = 0.0;
  for (std::size_t i = *lo; i <= *hi; ++i) {
    const double e = std::log(s.c[i]) - (icept + slope * s.n[i]);
    rss += e * e;
  }
  fit.has_window = true;
  fit.lambda_q = slope;
  fit.n_lo = s.n[*lo];
  fit.n_hi = s.n[*hi];
  fit.residual = std::sqrt(rss / m);
  return fit;
}

}  // namespace kpspin
