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

// Symmetric and right logarithmic derivatives, their Fisher matrices, the
// classical Fisher matrix of a measurement, and the superoperator D.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qest/models.hpp"
#include "qest/qcore.hpp"

namespace qest {

namespace tol {
inline constexpr double kSupport = 1e-10;
inline constexpr double kOutcomeFloor = 1e-12;
}  // namespace tol

enum class FisherKind { sld, rld, classical };

inline const char* to_string(FisherKind k) {
  switch (k) {
    case FisherKind::sld: return "sld";
    case FisherKind::rld: return "rld";
    case FisherKind::classical: return "classical";
  }
  return "?";
}

struct FisherMatrix {
  FisherKind kind = FisherKind::sld;
  CMatrix value;              // real for sld and classical
  double dropped_mass = 0.0;  // classical only: outcome mass below the floor

  RMatrix real() const { return value.real(); }
  Eigen::Index dim() const { return value.rows(); }
};

struct LogDerivativeSet {
  std::vector<CMatrix> ops;
  std::vector<double> residuals;
  bool rank_deficient = false;  // ρ has eigenvalues below the support tolerance
};

/// SLD solving L∘ρ = ∂ρ for each derivative (A∘B = (AB + BA)/2). Components
/// between null eigenvectors are fixed to zero; a derivative leaving the
/// support is an error.
inline LogDerivativeSet sld_operators(const DensityOperator& rho,
                                      const std::vector<CMatrix>& derivs) {
  const auto e = eigh(rho.matrix());
  const Eigen::Index n = rho.dim();
  LogDerivativeSet out;
  out.rank_deficient = e.values(0) < tol::kSupport;
  for (const CMatrix& d : derivs) {
    const CMatrix dp = e.vectors.adjoint() * d * e.vectors;
    CMatrix lp = CMatrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k) {
        const double sum = e.values(j) + e.values(k);
        if (sum > tol::kSupport) {
          lp(j, k) = 2.0 * dp(j, k) / sum;
        } else if (std::abs(dp(j, k)) >= tol::kSupport) {
          throw ValidationError("SLD: derivative leaves the support of the state");
        }
      }
    CMatrix l = hermitian_part(e.vectors * lp * e.vectors.adjoint());
    const CMatrix& r = rho.matrix();
    out.residuals.push_back((0.5 * (l * r + r * l) - d).norm());
    out.ops.push_back(std::move(l));
  }
  return out;
}

inline RMatrix sld_fisher_matrix(const DensityOperator& rho, const std::vector<CMatrix>& ls) {
  const auto d = static_cast<Eigen::Index>(ls.size());
  RMatrix j(d, d);
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index l = k; l < d; ++l) {
      // Tr ρ(L_k∘L_l) = Re Tr ρ L_k L_l for Hermitian L.
      j(k, l) = j(l, k) = trace_product(rho.matrix(), ls[k] * ls[l]).real();
    }
  return j;
}

inline std::pair<LogDerivativeSet, FisherMatrix> sld_fisher(const ParametricModel& model,
                                                            const RVector& theta) {
  const DensityOperator rho = model.state_at(theta);
  LogDerivativeSet set = sld_operators(rho, model_derivatives(model, theta));
  FisherMatrix f;
  f.kind = FisherKind::sld;
  f.value = sld_fisher_matrix(rho, set.ops).cast<cplx>();
  return {std::move(set), std::move(f)};
}

/// RLD L = ρ⁻¹∂ρ with j_{k,l} = Tr ρ L_l L_k†. Requires full-rank ρ.
inline std::pair<LogDerivativeSet, FisherMatrix> rld_fisher(const ParametricModel& model,
                                                            const RVector& theta) {
  const DensityOperator rho = model.state_at(theta);
  const auto e = eigh(rho.matrix());
  if (e.values(0) <= tol::kSupport)
    throw ValidationError("RLD undefined: state is rank deficient (minimum eigenvalue " +
                          std::to_string(e.values(0)) + ")");
  const RVector inv = e.values.cwiseInverse();
  const CMatrix rho_inv = e.vectors * inv.asDiagonal() * e.vectors.adjoint();
  LogDerivativeSet set;
  for (const CMatrix& d : model_derivatives(model, theta)) {
    CMatrix l = rho_inv * d;
    set.residuals.push_back((rho.matrix() * l - d).norm());
    set.ops.push_back(std::move(l));
  }
  const auto dim = static_cast<Eigen::Index>(set.ops.size());
  CMatrix j(dim, dim);
  for (Eigen::Index k = 0; k < dim; ++k)
    for (Eigen::Index l = 0; l < dim; ++l)
      j(k, l) = trace_product(rho.matrix(), set.ops[l] * set.ops[k].adjoint());
  FisherMatrix f;
  f.kind = FisherKind::rld;
  f.value = hermitian_part(j);
  return {std::move(set), std::move(f)};
}

/// Classical Fisher matrix of the outcome family p_θ(ω) = Tr ρ_θ M_ω. Outcomes
/// with p below the floor are dropped and their mass reported.
inline FisherMatrix classical_fisher(const ParametricModel& model, const RVector& theta,
                                     const Povm& m, double floor = tol::kOutcomeFloor) {
  const DensityOperator rho = model.state_at(theta);
  require(rho.dim() == m.dim(), "classical_fisher: POVM dimension mismatch");
  const std::vector<CMatrix> derivs = model_derivatives(model, theta);
  const auto d = static_cast<Eigen::Index>(derivs.size());
  RMatrix j = RMatrix::Zero(d, d);
  RVector dp(d);
  double dropped = 0.0;
  bool any = false;
  for (const PovmElement& el : m.elements()) {
    const double p = el.weight * trace_product(rho.matrix(), el.op).real();
    if (p <= floor) {
      dropped += std::max(p, 0.0);
      continue;
    }
    any = true;
    for (Eigen::Index k = 0; k < d; ++k) dp(k) = el.weight * trace_product(derivs[k], el.op).real();
    j += dp * dp.transpose() / p;
  }
  if (!any) throw NumericalError("classical_fisher: every outcome is below the probability floor");
  FisherMatrix f;
  f.kind = FisherKind::classical;
  f.value = symmetric_part(j).cast<cplx>();
  f.dropped_mass = dropped;
  return f;
}

/// D(X)_{jk} = −2i(λ_j−λ_k)/(λ_j+λ_k) X_{jk} in ρ's eigenbasis.
inline CMatrix d_map(const DensityOperator& rho, const CMatrix& x) {
  require(x.rows() == rho.dim() && is_hermitian(x, 1e-10), "d_map: X must be Hermitian of matching size");
  const auto e = eigh(rho.matrix());
  if (e.values(0) <= tol::kSupport) throw ValidationError("d_map: state is singular");
  CMatrix xp = e.vectors.adjoint() * x * e.vectors;
  for (Eigen::Index j = 0; j < xp.rows(); ++j)
    for (Eigen::Index k = 0; k < xp.cols(); ++k) {
      const double lj = e.values(j), lk = e.values(k);
      xp(j, k) *= -2.0 * kI * (lj - lk) / (lj + lk);
    }
  return hermitian_part(e.vectors * xp * e.vectors.adjoint());
}

}  // namespace qest
