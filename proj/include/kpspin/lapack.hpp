#pragma once

// Thin wrappers over the LAPACK routines used by the quantum modules.
// Requires linking LAPACKE and a BLAS (OpenBLAS).

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <lapacke.h>

extern "C" void openblas_set_num_threads(int num_threads);

namespace kpspin::lapack {

inline lapack_complex_double* as_lapack(std::complex<double>* p) { return reinterpret_cast<lapack_complex_double*>(p); }

// BLAS threading is pinned so that results do not depend on the worker
// count chosen by the library.
inline void pin_blas_threads(int n = 1) { openblas_set_num_threads(n); }

struct SchurResult {
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd vectors;  // empty when not requested
};

// Complex Schur decomposition A = Z T Z^H. For normal A the Schur vectors
// are orthonormal eigenvectors.
inline SchurResult schur(const Eigen::MatrixXcd& a, bool want_vectors) {
  if (a.rows() != a.cols()) throw std::invalid_argument("schur: matrix must be square");
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Eigen::MatrixXcd work = a;
  SchurResult r;
  r.eigenvalues.resize(n);
  if (want_vectors) r.vectors.resize(n, n);
  lapack_int sdim = 0;
  const lapack_int info =
      LAPACKE_zgees(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'N', nullptr, n, as_lapack(work.data()), n, &sdim,
                    as_lapack(r.eigenvalues.data()), want_vectors ? as_lapack(r.vectors.data()) : nullptr, n);
  if (info != 0) throw std::runtime_error("zgees failed, info = " + std::to_string(info));
  return r;
}

}  // namespace kpspin::lapack
