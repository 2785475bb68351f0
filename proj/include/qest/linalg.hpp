// Copyright 2026 The qest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense linear-algebra helpers shared by every module. Everything here is a
// thin layer over Eigen's self-adjoint eigensolver and SVD.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "qest/errors.hpp"

namespace qest {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

/// Largest entry modulus of any dense expression.
template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() ? static_cast<double>(m.cwiseAbs().maxCoeff()) : 0.0;
}

inline bool is_hermitian(const CMatrix& m, double tol) {
  return m.rows() == m.cols() && max_abs(m - m.adjoint()) <= tol;
}

inline CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }
inline RMatrix symmetric_part(const RMatrix& m) { return 0.5 * (m + m.transpose()); }

struct HermitianEig {
  RVector values;   // ascending
  CMatrix vectors;  // columns
};

inline HermitianEig eigh(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

struct SymmetricEig {
  RVector values;
  RMatrix vectors;
};

inline SymmetricEig eigh(const RMatrix& m) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

/// Spectral calculus V f(Λ) V† for a Hermitian matrix.
template <class F>
CMatrix apply_spectral(const CMatrix& m, F&& f) {
  const auto e = eigh(m);
  RVector fv = e.values.unaryExpr([&](double x) { return f(x); });
  return e.vectors * fv.asDiagonal() * e.vectors.adjoint();
}

template <class F>
RMatrix apply_spectral(const RMatrix& m, F&& f) {
  const auto e = eigh(m);
  RVector fv = e.values.unaryExpr([&](double x) { return f(x); });
  return e.vectors * fv.asDiagonal() * e.vectors.transpose();
}

/// Square root of a symmetric PSD matrix; eigenvalues in [-tol, 0) are clamped.
inline RMatrix psd_sqrt(const RMatrix& m, double tol = 1e-10) {
  return apply_spectral(symmetric_part(m), [tol](double x) {
    if (x < -tol) throw NumericalError("psd_sqrt: matrix is not positive semidefinite");
    return std::sqrt(std::max(x, 0.0));
  });
}

inline RMatrix pd_inv_sqrt(const RMatrix& m) {
  return apply_spectral(symmetric_part(m), [](double x) {
    if (x <= 0.0) throw NumericalError("pd_inv_sqrt: matrix is not positive definite");
    return 1.0 / std::sqrt(x);
  });
}

/// |A| = (AᵀA)^{1/2} for a real matrix.
inline RMatrix abs_matrix(const RMatrix& a) { return psd_sqrt(a.transpose() * a, 1e-9); }

/// Sum of singular values.
inline double trace_norm(const RMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<RMatrix> svd(a);
  return svd.singularValues().sum();
}

inline double min_eigenvalue(const CMatrix& m) { return eigh(hermitian_part(m)).values(0); }
inline double min_eigenvalue(const RMatrix& m) { return eigh(symmetric_part(m)).values(0); }

/// v + i s as a complex Hermitian matrix.
inline CMatrix complex_covariance(const RMatrix& v, const RMatrix& s) {
  return v.cast<cplx>() + kI * s.cast<cplx>();
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Inverse with a condition-number guard.
inline RMatrix checked_inverse(const RMatrix& m, double max_condition = 1e12) {
  require(m.rows() == m.cols() && m.rows() > 0, "inverse of non-square or empty matrix");
  Eigen::JacobiSVD<RMatrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > max_condition)
    throw NumericalError("matrix is singular (condition number above " +
                         std::to_string(max_condition) + ")");
  return m.inverse();
}

/// Pauli matrices in the usual (x, y, z) order.
inline CMatrix pauli(char which) {
  CMatrix m(2, 2);
  switch (which) {
    case 'x': m << 0, 1, 1, 0; break;
    case 'y': m << 0, -kI, kI, 0; break;
    case 'z': m << 1, 0, 0, -1; break;
    case 'i': m << 1, 0, 0, 1; break;
    default: throw ValidationError(std::string("unknown Pauli label ") + which);
  }
  return m;
}

/// Orthonormal (Hilbert–Schmidt) basis of traceless Hermitian dim×dim
/// matrices: symmetric and antisymmetric off-diagonal units, then
/// generalized Gell-Mann diagonals.
inline std::vector<CMatrix> traceless_hermitian_basis(Eigen::Index dim) {
  std::vector<CMatrix> basis;
  basis.reserve(static_cast<size_t>(dim * dim - 1));
  const double r = 1.0 / std::sqrt(2.0);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = i + 1; j < dim; ++j) {
      CMatrix a = CMatrix::Zero(dim, dim);
      a(i, j) = a(j, i) = r;
      basis.push_back(a);
      CMatrix b = CMatrix::Zero(dim, dim);
      b(i, j) = -kI * r;
      b(j, i) = kI * r;
      basis.push_back(b);
    }
  for (Eigen::Index l = 1; l < dim; ++l) {
    CMatrix d = CMatrix::Zero(dim, dim);
    const double norm = 1.0 / std::sqrt(static_cast<double>(l * (l + 1)));
    for (Eigen::Index k = 0; k < l; ++k) d(k, k) = norm;
    d(l, l) = -static_cast<double>(l) * norm;
    basis.push_back(d);
  }
  return basis;
}

/// Tr(A B) without forming the product.
inline cplx trace_product(const CMatrix& a, const CMatrix& b) {
  return (a.transpose().cwiseProduct(b)).sum();
}

}  // namespace qest
