#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "kpspin/quantum_metrics.hpp"

using namespace kpspin;

namespace {

// Square commutator straight from its definition, -(1/D) tr([W, V]^2),
// with W(n) built from explicit powers of U.
double reference_otoc(const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& v, const Eigen::MatrixXcd& w, int n) {
  Eigen::MatrixXcd un = Eigen::MatrixXcd::Identity(u.rows(), u.cols());
  for (int i = 0; i < n; ++i) un = un * u;
  const Eigen::MatrixXcd wn = un.adjoint() * w * un;
  const Eigen::MatrixXcd comm = wn * v - v * wn;
  return -(comm * comm).trace().real() / static_cast<double>(u.rows());
}

std::vector<double> uniform_phases(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(-pi, pi);
  std::vector<double> out(n);
  for (auto& x : out) x = u(rng);
  return out;
}

}  // namespace

TEST(Ratios, PicketFenceGivesOne) {
  std::vector<double> ph(50);
  for (std::size_t i = 0; i < ph.size(); ++i) ph[i] = -pi + two_pi * (i + 0.5) / ph.size();
  const auto r = mean_adjacent_ratio(ph);
  EXPECT_NEAR(r.r_bar, 1.0, 1e-12);
  EXPECT_EQ(r.ratios.size(), 50u);
}

TEST(Ratios, ShiftAndOrderInvariance) {
  Rng rng = make_rng(9);
  const auto ph = uniform_phases(300, rng);
  const double r0 = mean_adjacent_ratio(ph).r_bar;
  std::vector<double> shifted = ph, reversed(ph.rbegin(), ph.rend());
  for (auto& x : shifted) x += 1.234;
  EXPECT_NEAR(mean_adjacent_ratio(shifted).r_bar, r0, 1e-12);
  EXPECT_NEAR(mean_adjacent_ratio(reversed).r_bar, r0, 1e-15);
}

TEST(Ratios, DegenerateSpacingsExcluded) {
  std::vector<double> ph(40);
  for (std::size_t i = 0; i < 20; ++i) ph[2 * i] = ph[2 * i + 1] = -pi + two_pi * i / 20.0;
  const auto r = mean_adjacent_ratio(ph);
  EXPECT_EQ(r.excluded_degenerate, 20u);
  EXPECT_NEAR(r.r_bar, 1.0, 1e-12);
  std::vector<double> few(12, 0.3);
  EXPECT_THROW(mean_adjacent_ratio(few), std::invalid_argument);
  EXPECT_THROW(mean_adjacent_ratio(std::vector<double>(9, 0.0)), std::invalid_argument);
}

TEST(Ratios, PoissonBaseline) {
  Rng rng = make_rng(10);
  double sum = 0.0;
  for (int s = 0; s < 50; ++s) sum += mean_adjacent_ratio(uniform_phases(2048, rng)).r_bar;
  EXPECT_NEAR(sum / 50, 0.386, 0.01);
}

TEST(Gamma, FixedPoints) {
  EXPECT_NEAR(normalized_gamma(2 * std::log(2.0) - 1), 0.0, 1e-15);
  EXPECT_NEAR(normalized_gamma(0.5307), 1.0, 1e-15);
  EXPECT_LT(normalized_gamma(0.3), 0.0);
}

TEST(Ipr, BasicValues) {
  const int d = 17;
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
  EXPECT_NEAR(ipr(id.col(3), id), 1.0, 1e-14);
  const Eigen::VectorXcd flat = Eigen::VectorXcd::Constant(d, 1.0 / std::sqrt(d));
  EXPECT_NEAR(ipr(flat, id), d, 1e-10);
  EXPECT_THROW(ipr(2.0 * flat, id), std::invalid_argument);
  // phases on the basis vectors do not change the IPR
  Eigen::VectorXcd ph(d);
  for (int i = 0; i < d; ++i) ph(i) = std::polar(1.0, 0.3 * i);
  Rng rng = make_rng(1);
  const auto s = haar_state(d, rng);
  EXPECT_NEAR(ipr(s, id), ipr(s, Eigen::MatrixXcd(id * ph.asDiagonal())), 1e-12);
  EXPECT_GE(ipr(s, id), 1.0);
  EXPECT_LE(ipr(s, id), d);
}

TEST(Ipr, HaarStatesNearHalfDimension) {
  Rng rng = make_rng(2);
  const int d = 513;
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
  double sum = 0.0;
  for (int i = 0; i < 20; ++i) sum += ipr(haar_state(d, rng), id);
  EXPECT_NEAR(sum / 20 / (d / 2.0), 1.0, 0.1);
}

TEST(Delta, ZeroKickIsFullyLocalized) {
  const SpinRepresentation rep(64);
  const auto jy = jy_eigenbasis(rep);
  EXPECT_NEAR(floquet_delta(ModelParams(2, 0.0, 1.0), rep, jy), 3.0 / rep.dim(), 1e-12);
  const auto s = eigensystem(floquet_operator(ModelParams(2, 0.0, 1.0), rep, jy).matrix);
  EXPECT_NEAR(floquet_delta(s, jy), 3.0 / rep.dim(), 1e-8);
}

TEST(Coe, SymmetricUnitaryDeterministic) {
  const auto u = coe_sample(60, 42);
  const auto id = Eigen::MatrixXcd::Identity(60, 60);
  EXPECT_LT((u - u.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((u.adjoint() * u - id).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(coe_sample(60, 42), u);
  EXPECT_NE(coe_sample(60, 43), u);
  EXPECT_THROW(coe_sample(1, 0), std::invalid_argument);
}

TEST(Coe, NormalizationIsStable) {
  const SpinRepresentation rep(256);
  const auto a = coe_normalization(rep, 20, 5, false);
  const auto b = coe_normalization(rep, 40, 5, false);
  EXPECT_GT(a.c_coe, 0.0);
  EXPECT_NEAR(b.c_coe / a.c_coe, 1.0, 0.05);
  EXPECT_NEAR(a.delta_coe, rep.dim() / 3.0, 1e-12);
  EXPECT_THROW(coe_normalization(rep, 9, 5), std::invalid_argument);
}

TEST(Otoc, MatchesBruteForceOracle) {
  for (int p : {2, 3})
    for (int ns : {16, 63}) {
      const SpinRepresentation rep(ns);
      const auto u = floquet_operator(ModelParams(p, 3.0, 1.3), rep).matrix;
      const auto ops = spin_operators(rep);
      const auto s = otoc_series(u, ops.jz, ops.jz, 8);
      ASSERT_EQ(s.c.size(), 9u);
      EXPECT_EQ(s.c[0], 0.0);
      for (int n = 0; n <= 8; ++n) {
        const double ref = reference_otoc(u, ops.jz, ops.jz, n);
        EXPECT_NEAR(s.c[n], ref, 1e-10 * std::max(1.0, ref));
        EXPECT_GE(s.c[n], -1e-10);
      }
      // mixed operators
      const auto t = otoc_series(u, ops.jx, ops.jz, 3);
      for (int n = 0; n <= 3; ++n)
        EXPECT_NEAR(t.c[n], reference_otoc(u, ops.jx, ops.jz, n), 1e-10 * std::max(1.0, t.c[n]));
    }
  EXPECT_THROW(otoc_series(Eigen::MatrixXcd::Identity(3, 3), Eigen::MatrixXcd::Identity(3, 3),
                           Eigen::MatrixXcd::Identity(3, 3), 0),
               std::invalid_argument);
}

TEST(Otoc, SquareCommutatorEqualsFrobeniusForm) {
  Rng rng = make_rng(12);
  const auto a = haar_unitary(20, rng);
  const Eigen::MatrixXcd v = a + a.adjoint();
  const auto b = haar_unitary(20, rng);
  const Eigen::MatrixXcd w = b + b.adjoint();
  const Eigen::MatrixXcd comm = w * v - v * w;
  EXPECT_NEAR(square_commutator(v, w), comm.squaredNorm() / 20.0, 1e-10);
}

TEST(Fit, ZeroKickHasNoWindow) {
  const SpinRepresentation rep(64);
  const auto s = otoc_series(ModelParams(2, 0.0, pi / 2), rep, 40);
  EXPECT_FALSE(fit_quantum_lyapunov(s).has_window);
}

TEST(Fit, RecoversSyntheticExponential) {
  OtocSeries s;
  for (int n = 0; n <= 40; ++n) {
    s.n.push_back(n);
    s.c.push_back(n == 0 ? 0.0 : std::min(1e-3 * std::exp(0.7 * n), 1e6));
  }
  const auto f = fit_quantum_lyapunov(s);
  ASSERT_TRUE(f.has_window);
  EXPECT_NEAR(f.lambda_q, 0.7, 1e-9);
  EXPECT_LT(f.n_lo, f.n_hi);
  EXPECT_LT(s.c[f.n_hi], 0.5 * 1e6);
}

TEST(SpectrumStatistics, EvenPSectors) {
  const SpinRepresentation rep(128);
  const auto jy = jy_eigenbasis(rep);
  const auto s = spectrum_statistics(ModelParams(2, 6.0, pi / 2), rep, jy);
  EXPECT_GE(s.n_sectors, 2u);
  const auto g = spectrum_statistics(ModelParams(2, 6.0, 1.2), rep, jy);
  EXPECT_EQ(g.n_sectors, 2u);
  const auto odd = spectrum_statistics(ModelParams(3, 6.0, 1.2), rep, jy);
  EXPECT_EQ(odd.n_sectors, 1u);
  EXPECT_EQ(odd.ratios.ratios.size(), static_cast<std::size_t>(rep.dim()));
}

TEST(SpectrumStatistics, SectorsRaiseRatioInChaoticRegime) {
  const SpinRepresentation rep(256);
  const auto jy = jy_eigenbasis(rep);
  const ModelParams prm(2, 8.0, 1.2);
  EXPECT_LT(spectrum_statistics(prm, rep, jy, false).ratios.r_bar, spectrum_statistics(prm, rep, jy, true).ratios.r_bar);
}
