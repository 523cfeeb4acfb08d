#pragma once

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "fapre/error.hpp"

namespace fapre {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

inline bool all_finite(const ComplexMatrix& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (!std::isfinite(a(i, j).real()) || !std::isfinite(a(i, j).imag())) return false;
  return true;
}

/// tr(A^H A), i.e. the squared Frobenius norm.
inline double power(const ComplexMatrix& a) { return a.squaredNorm(); }

/// Real inner product of C^{m x n} seen as R^{2mn}.
inline double real_inner(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a.conjugate().cwiseProduct(b)).sum().real();
}

struct Svd {
  ComplexMatrix u;      // N x N
  RealVector sigma;     // min(N, M), descending
  ComplexMatrix v;      // M x M
};

/// Full SVD H = U diag(sigma) V^H with singular values sorted descending and
/// the first non-negligible entry of every V column rotated to the positive
/// real axis (U columns rotated alongside).
inline Svd svd(const ComplexMatrix& h) {
  if (!all_finite(h)) throw Error(ErrorKind::NonFiniteInput, "svd input");
  Eigen::JacobiSVD<ComplexMatrix> solver(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Svd out{solver.matrixU(), solver.singularValues(), solver.matrixV()};

  const Eigen::Index rank_cols = out.sigma.size();
  for (Eigen::Index j = 0; j < out.v.cols(); ++j) {
    const double scale = out.v.col(j).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < out.v.rows(); ++i) {
      const Complex entry = out.v(i, j);
      if (std::abs(entry) > 1e-12 * scale) {
        const Complex phase = std::conj(entry) / std::abs(entry);
        out.v.col(j) *= phase;
        out.v(i, j) = std::abs(entry);
        if (j < rank_cols) out.u.col(j) *= phase;
        break;
      }
    }
  }
  return out;
}

inline ComplexMatrix reconstruct(const Svd& s) {
  const Eigen::Index r = s.sigma.size();
  return s.u.leftCols(r) * s.sigma.cast<Complex>().asDiagonal() * s.v.leftCols(r).adjoint();
}

}  // namespace fapre
