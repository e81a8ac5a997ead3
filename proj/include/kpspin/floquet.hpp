#pragma once

// Collective spin operators and the kicked p-spin Floquet operator
//   U = exp(-i k/(p J^(p-1)) Jz^p) exp(-i alpha Jy)
// in the (N_s + 1)-dimensional symmetric subspace.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kpspin/lapack.hpp"
#include "kpspin/model.hpp"

namespace kpspin {

using cplx = std::complex<double>;

class SpinRepresentation {
 public:
  explicit SpinRepresentation(int n_s) : n_s_(n_s) {
    if (n_s < 1) throw std::invalid_argument("number of spins N_s must be >= 1");
  }

  int n_s() const { return n_s_; }
  double j() const { return 0.5 * n_s_; }
  int dim() const { return n_s_ + 1; }
  // Jz eigenvalue of basis index i; basis ordered m = J, J-1, ..., -J.
  double m(int i) const { return j() - i; }

  friend bool operator==(const SpinRepresentation& a, const SpinRepresentation& b) { return a.n_s_ == b.n_s_; }

 private:
  int n_s_;
};

struct SpinOperators {
  Eigen::MatrixXcd jx, jy, jz;
};

inline SpinOperators spin_operators(const SpinRepresentation& rep) {
  const int d = rep.dim();
  const double j = rep.j();
  SpinOperators ops;
  ops.jx = Eigen::MatrixXcd::Zero(d, d);
  ops.jy = Eigen::MatrixXcd::Zero(d, d);
  ops.jz = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < d; ++i) ops.jz(i, i) = rep.m(i);
  // <m+1| J+ |m> sits at (i-1, i)
  for (int i = 1; i < d; ++i) {
    const double m = rep.m(i);
    const double c = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
    ops.jx(i - 1, i) = ops.jx(i, i - 1) = 0.5 * c;
    ops.jy(i - 1, i) = cplx(0.0, -0.5 * c);
    ops.jy(i, i - 1) = cplx(0.0, 0.5 * c);
  }
  return ops;
}

// Jy eigenbasis in the Jz basis. Jx is real tridiagonal and
// Jy = R Jx R^H with R = exp(-i pi/2 Jz), so the eigenvectors come from a
// real symmetric tridiagonal problem and a diagonal phase.
struct JyEigenbasis {
  Eigen::VectorXd m;         // ascending: -J, ..., J
  Eigen::MatrixXcd vectors;  // column c has Jy eigenvalue m(c)
  Eigen::MatrixXd jx_vectors;  // real Jx eigenvectors, same ordering
};

inline JyEigenbasis jy_eigenbasis(const SpinRepresentation& rep) {
  const int d = rep.dim();
  const double j = rep.j();
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd sub(std::max(0, d - 1));
  for (int i = 1; i < d; ++i) {
    const double m = rep.m(i);
    sub(i - 1) = 0.5 * std::sqrt(j * (j + 1.0) - m * (m + 1.0));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw std::runtime_error("Jx tridiagonal eigensolve failed");

  JyEigenbasis b;
  b.m.resize(d);
  b.vectors.resize(d, d);
  for (int c = 0; c < d; ++c) b.m(c) = -j + c;  // exact spectrum
  b.jx_vectors = es.eigenvectors();
  for (int i = 0; i < d; ++i) {
    const cplx phase = std::polar(1.0, -0.5 * pi * rep.m(i));
    for (int c = 0; c < d; ++c) b.vectors(i, c) = phase * es.eigenvectors()(i, c);
  }
  return b;
}

// Diagonal of the kick exp(-i k/(p J^(p-1)) Jz^p).
inline Eigen::VectorXcd kick_diagonal(const ModelParams& prm, const SpinRepresentation& rep) {
  const int d = rep.dim();
  const double scale = prm.k() / (prm.p() * std::pow(rep.j(), prm.p() - 1));
  Eigen::VectorXcd kd(d);
  for (int i = 0; i < d; ++i) kd(i) = std::polar(1.0, -scale * ipow(rep.m(i), prm.p()));
  return kd;
}

inline Eigen::VectorXcd rotation_phases(double alpha, const JyEigenbasis& jy) {
  Eigen::VectorXcd e(jy.m.size());
  for (Eigen::Index c = 0; c < jy.m.size(); ++c) e(c) = std::polar(1.0, -alpha * jy.m(c));
  return e;
}

struct FloquetOperator {
  ModelParams params;
  SpinRepresentation rep;
  Eigen::MatrixXcd matrix;  // Jz basis
};

inline FloquetOperator floquet_operator(const ModelParams& prm, const SpinRepresentation& rep, const JyEigenbasis& jy) {
  const Eigen::MatrixXcd rot =
      jy.vectors * rotation_phases(prm.alpha(), jy).asDiagonal() * jy.vectors.adjoint();
  return {prm, rep, kick_diagonal(prm, rep).asDiagonal() * rot};
}

inline FloquetOperator floquet_operator(const ModelParams& prm, const SpinRepresentation& rep) {
  return floquet_operator(prm, rep, jy_eigenbasis(rep));
}

// The Floquet operator expressed in the Jy eigenbasis, V^H K V E, built as
// (I + V^H (K - I) V) E so that k = 0 gives an exactly diagonal matrix.
inline Eigen::MatrixXcd floquet_in_jy_basis(const ModelParams& prm, const SpinRepresentation& rep,
                                            const JyEigenbasis& jy) {
  const Eigen::VectorXcd kd = kick_diagonal(prm, rep) - Eigen::VectorXcd::Ones(rep.dim());
  Eigen::MatrixXcd u = jy.vectors.adjoint() * kd.asDiagonal() * jy.vectors;
  u.diagonal().array() += 1.0;
  return u * rotation_phases(prm.alpha(), jy).asDiagonal();
}

struct SpectralData {
  Eigen::VectorXd phases;    // ascending, in (-pi, pi]
  Eigen::MatrixXcd vectors;  // column j pairs with phases(j); empty for phases-only solves
};

namespace detail {

// U v = exp(-i mu) v, mu in (-pi, pi].
inline double eigenphase(cplx lambda) {
  const double mu = -std::arg(lambda);
  return mu <= -pi ? pi : mu;
}

inline SpectralData sorted_spectrum(const lapack::SchurResult& s, bool with_vectors) {
  const Eigen::Index d = s.eigenvalues.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd mu(d);
  for (Eigen::Index i = 0; i < d; ++i) mu(i) = eigenphase(s.eigenvalues(i));
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return mu(a) < mu(b); });
  SpectralData out;
  out.phases.resize(d);
  if (with_vectors) out.vectors.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    out.phases(i) = mu(order[static_cast<std::size_t>(i)]);
    if (with_vectors) out.vectors.col(i) = s.vectors.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace detail

inline SpectralData eigensystem(const Eigen::MatrixXcd& u, double residual_tolerance = 1e-6) {
  const auto s = lapack::schur(u, true);
  SpectralData out = detail::sorted_spectrum(s, true);
  for (Eigen::Index c = 0; c < out.phases.size(); ++c) {
    const cplx lambda = std::polar(1.0, -out.phases(c));
    const double res = (u * out.vectors.col(c) - lambda * out.vectors.col(c)).norm();
    if (!(res <= residual_tolerance)) {
      throw std::runtime_error("eigensystem: residual " + std::to_string(res) +
                               " exceeds tolerance (input not unitary or solver failure)");
    }
  }
  return out;
}

inline Eigen::VectorXd eigenphases(const Eigen::MatrixXcd& u) {
  return detail::sorted_spectrum(lapack::schur(u, false), false).phases;
}

// Sectors of the pi rotation exp(-i pi Jy), labelled by the parity of
// J - m_y. Blocks are taken from the Jy-basis operator; index lists give
// the Jy basis columns of each sector.
struct ParityBlocks {
  Eigen::MatrixXcd even;
  Eigen::MatrixXcd odd;
  std::vector<int> even_index;
  std::vector<int> odd_index;
};

inline ParityBlocks parity_blocks_from_jy(const Eigen::MatrixXcd& u_jy, const SpinRepresentation& rep,
                                          double commutator_tolerance = 1e-8) {
  ParityBlocks b;
  for (int c = 0; c < rep.dim(); ++c) (c % 2 == 0 ? b.even_index : b.odd_index).push_back(c);
  double leak = 0.0;
  for (int r : b.even_index)
    for (int c : b.odd_index) leak = std::max({leak, std::abs(u_jy(r, c)), std::abs(u_jy(c, r))});
  if (leak > commutator_tolerance) {
    throw std::invalid_argument("parity_blocks: operator does not commute with the pi rotation about y (leak " +
                                std::to_string(leak) + ")");
  }
  // m_y(c) = -J + c, so J - m_y = N_s - c
  if (rep.n_s() % 2 != 0) std::swap(b.even_index, b.odd_index);
  b.even = u_jy(b.even_index, b.even_index);
  b.odd = u_jy(b.odd_index, b.odd_index);
  return b;
}

inline ParityBlocks parity_blocks(const FloquetOperator& u, const JyEigenbasis& jy,
                                  double commutator_tolerance = 1e-8) {
  const Eigen::MatrixXcd u_jy = jy.vectors.adjoint() * u.matrix * jy.vectors;
  return parity_blocks_from_jy(u_jy, u.rep, commutator_tolerance);
}

inline ParityBlocks parity_blocks(const FloquetOperator& u, double commutator_tolerance = 1e-8) {
  return parity_blocks(u, jy_eigenbasis(u.rep), commutator_tolerance);
}

// exp(-i pi Jy) in the Jz basis.
inline Eigen::MatrixXcd pi_rotation_y(const JyEigenbasis& jy) {
  return jy.vectors * rotation_phases(pi, jy).asDiagonal() * jy.vectors.adjoint();
}

// exp(-i pi Jx) expressed in the Jy eigenbasis.
inline Eigen::MatrixXcd pi_rotation_x_in_jy(const JyEigenbasis& jy) {
  Eigen::VectorXcd ph(jy.m.size());
  for (Eigen::Index c = 0; c < jy.m.size(); ++c) ph(c) = std::polar(1.0, -pi * jy.m(c));
  const Eigen::MatrixXcd rx = jy.jx_vectors.cast<cplx>() * ph.asDiagonal() * jy.jx_vectors.transpose().cast<cplx>();
  return jy.vectors.adjoint() * rx * jy.vectors;
}

// One Heisenberg step W -> U^H W U, re-symmetrized.
inline void heisenberg_step(Eigen::MatrixXcd& w, const Eigen::MatrixXcd& u) {
  Eigen::MatrixXcd t = u.adjoint() * w * u;
  w = 0.5 * (t + t.adjoint());
}

inline Eigen::MatrixXcd heisenberg_evolve(const Eigen::MatrixXcd& w, const Eigen::MatrixXcd& u, int n) {
  if (n < 0) throw std::invalid_argument("heisenberg_evolve: n must be >= 0");
  Eigen::MatrixXcd out = w;
  for (int i = 0; i < n; ++i) heisenberg_step(out, u);
  return out;
}

// Binary container for operators and spectra (little-endian):
//   char[8]  magic "KPSPINOP"
//   u32      format version (1)
//   u32      payload kind (1 = operator, 2 = spectrum)
//   i32 p, f64 k, f64 alpha, i32 N_s
//   u64 rows, u64 cols
//   payload:
//     operator: rows*cols complex (re, im f64 pairs), row-major
//     spectrum: rows f64 phases, then rows*cols complex eigenvectors, row-major
namespace dump {

inline constexpr char magic[8] = {'K', 'P', 'S', 'P', 'I', 'N', 'O', 'P'};
inline constexpr std::uint32_t version = 1;
enum class Kind : std::uint32_t { Operator = 1, Spectrum = 2 };

struct Header {
  Kind kind = Kind::Operator;
  int p = 2;
  double k = 0.0;
  double alpha = 0.0;
  int n_s = 1;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
};

namespace io {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("operator dump: truncated file");
  return v;
}

inline void put_complex_rows(std::ostream& os, const Eigen::MatrixXcd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      put(os, m(r, c).real());
      put(os, m(r, c).imag());
    }
}

inline Eigen::MatrixXcd get_complex_rows(std::istream& is, std::uint64_t rows, std::uint64_t cols) {
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double re = get<double>(is);
      const double im = get<double>(is);
      m(r, c) = cplx(re, im);
    }
  return m;
}

inline void write_header(std::ostream& os, const Header& h) {
  os.write(magic, sizeof magic);
  put(os, version);
  put(os, static_cast<std::uint32_t>(h.kind));
  put(os, static_cast<std::int32_t>(h.p));
  put(os, h.k);
  put(os, h.alpha);
  put(os, static_cast<std::int32_t>(h.n_s));
  put(os, h.rows);
  put(os, h.cols);
}

inline Header read_header(std::istream& is) {
  char m[8];
  is.read(m, sizeof m);
  if (!is || std::memcmp(m, magic, sizeof m) != 0) throw std::runtime_error("operator dump: bad magic");
  const auto v = get<std::uint32_t>(is);
  if (v != version) throw std::runtime_error("operator dump: unsupported version " + std::to_string(v));
  Header h;
  h.kind = static_cast<Kind>(get<std::uint32_t>(is));
  h.p = get<std::int32_t>(is);
  h.k = get<double>(is);
  h.alpha = get<double>(is);
  h.n_s = get<std::int32_t>(is);
  h.rows = get<std::uint64_t>(is);
  h.cols = get<std::uint64_t>(is);
  if (h.rows > (1u << 20) || h.cols > (1u << 20)) throw std::runtime_error("operator dump: implausible dimensions");
  return h;
}

}  // namespace io

inline void write_operator(const std::string& path, const FloquetOperator& u) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  const auto n = static_cast<std::uint64_t>(u.matrix.rows());
  io::write_header(os, {Kind::Operator, u.params.p(), u.params.k(), u.params.alpha(), u.rep.n_s(), n, n});
  io::put_complex_rows(os, u.matrix);
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline FloquetOperator read_operator(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  const Header h = io::read_header(is);
  if (h.kind != Kind::Operator) throw std::runtime_error("operator dump: file holds a spectrum, not an operator");
  if (h.rows != h.cols || h.rows != static_cast<std::uint64_t>(h.n_s) + 1)
    throw std::runtime_error("operator dump: dimensions inconsistent with N_s");
  return {ModelParams(h.p, h.k, h.alpha), SpinRepresentation(h.n_s), io::get_complex_rows(is, h.rows, h.cols)};
}

inline void write_spectrum(const std::string& path, const ModelParams& prm, const SpinRepresentation& rep,
                           const SpectralData& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  io::write_header(os, {Kind::Spectrum, prm.p(), prm.k(), prm.alpha(), rep.n_s(),
                        static_cast<std::uint64_t>(s.vectors.rows()), static_cast<std::uint64_t>(s.vectors.cols())});
  for (Eigen::Index i = 0; i < s.phases.size(); ++i) io::put(os, s.phases(i));
  io::put_complex_rows(os, s.vectors);
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline SpectralData read_spectrum(const std::string& path, Header* header = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  const Header h = io::read_header(is);
  if (h.kind != Kind::Spectrum) throw std::runtime_error("operator dump: file holds an operator, not a spectrum");
  SpectralData s;
  s.phases.resize(static_cast<Eigen::Index>(h.rows));
  for (Eigen::Index i = 0; i < s.phases.size(); ++i) s.phases(i) = io::get<double>(is);
  s.vectors = io::get_complex_rows(is, h.rows, h.cols);
  if (header) *header = h;
  return s;
}

}  // namespace dump

}  // namespace kpspin
