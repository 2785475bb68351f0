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

// Lower bounds on weighted mean-square error: Cramér–Rao values, the qubit
// separable bound, the Gill–Massar trace, the Holevo bound and the Gaussian
// shift bound.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "qest/fisher.hpp"
#include "qest/parallel.hpp"

namespace qest {

/// Checks that g is a symmetric PSD weight matrix of size d.
inline void validate_weight(const RMatrix& g, Eigen::Index d) {
  require(g.rows() == d && g.cols() == d, "weight matrix must be " + std::to_string(d) + "x" +
                                               std::to_string(d));
  require(max_abs(g - g.transpose()) <= 1e-12, "weight matrix is not symmetric");
  require(min_eigenvalue(g) >= -1e-12, "weight matrix is not positive semidefinite");
}

/// tr(g j⁻¹).
inline double cr_value(const RMatrix& j, const RMatrix& g) {
  validate_weight(g, j.rows());
  return (g * checked_inverse(symmetric_part(j))).trace();
}

/// (tr √(j^{−1/2} g j^{−1/2}))², the optimal weighted error of separable
/// qubit measurements.
inline double qubit_c1(const RMatrix& js, const RMatrix& g) {
  validate_weight(g, js.rows());
  checked_inverse(js);
  const RMatrix r = pd_inv_sqrt(js);
  const double t = psd_sqrt(r * g * r, 1e-9).trace();
  return t * t;
}

struct GillMassar {
  double value = 0.0;
  bool satisfied = true;
};

inline GillMassar gill_massar(const RMatrix& js, const RMatrix& jm, Eigen::Index hilbert_dim) {
  require(js.rows() == jm.rows() && js.cols() == jm.cols(), "gill_massar: size mismatch");
  GillMassar r;
  r.value = (checked_inverse(symmetric_part(js)) * jm).trace();
  r.satisfied = r.value <= static_cast<double>(hilbert_dim - 1) + 1e-8;
  return r;
}

/// tr(g v) + ‖√g s √g‖₁, the minimum of tr(g a) over real symmetric a ⪰ v + is.
inline double gaussian_shift_bound(const RMatrix& v, const RMatrix& s, const RMatrix& g) {
  require(v.rows() == s.rows() && v.cols() == s.cols() && v.rows() == v.cols(),
          "gaussian_shift_bound: size mismatch");
  validate_weight(g, v.rows());
  require(max_abs(v - v.transpose()) <= 1e-12, "v is not symmetric");
  require(max_abs(s + s.transpose()) <= 1e-12, "s is not antisymmetric");
  require(min_eigenvalue(complex_covariance(v, s)) >= -1e-10, "v + i s is not positive semidefinite");
  const RMatrix rg = psd_sqrt(g);
  return (g * v).trace() + trace_norm(rg * s * rg);
}

struct HolevoObjective {
  double value = 0.0;
  RMatrix v;
  RMatrix s;
};

/// v^{kj} = Re Tr ρ X̃^k X̃^j (X̃ centered), s^{kj} = Im Tr ρ X^k X^j.
inline HolevoObjective holevo_objective(const DensityOperator& rho, const std::vector<CMatrix>& xs,
                                        const RMatrix& g) {
  const auto d = static_cast<Eigen::Index>(xs.size());
  validate_weight(g, d);
  std::vector<CMatrix> c;
  for (const CMatrix& x : xs) {
    require(x.rows() == rho.dim() && is_hermitian(x, 1e-10), "holevo_objective: X must be Hermitian");
    const double mean = trace_product(rho.matrix(), x).real();
    c.push_back(hermitian_part(x) - mean * CMatrix::Identity(rho.dim(), rho.dim()));
  }
  HolevoObjective out;
  out.v.resize(d, d);
  out.s.resize(d, d);
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index j = 0; j < d; ++j) {
      const cplx t = trace_product(rho.matrix(), c[k] * c[j]);
      out.v(k, j) = t.real();
      out.s(k, j) = t.imag();
    }
  out.v = symmetric_part(out.v);
  out.s = 0.5 * (out.s - out.s.transpose());
  const RMatrix rg = psd_sqrt(g);
  out.value = (g * out.v).trace() + trace_norm(rg * out.s * rg);
  return out;
}

inline HolevoObjective holevo_objective(const ParametricModel& model, const RVector& theta,
                                        const std::vector<CMatrix>& xs, const RMatrix& g) {
  require(static_cast<int>(xs.size()) == model.param_dim, "holevo_objective: need one X per parameter");
  return holevo_objective(model.state_at(theta), xs, g);
}

struct HolevoOptions {
  std::uint64_t seed = 1;
  int starts = 5;          // first start is X = L⁻¹, the rest are random feasible points
  int max_iter = 2000;     // per smoothing stage
  double tol = 1e-6;       // stationarity of the smoothed objective
  double start_scale = 1.0;
};

struct HolevoStage {
  double mu;
  int iterations;
  double value;
  double gradient_norm;
};

struct HolevoSolution {
  double value = 0.0;
  std::vector<CMatrix> x_ops;
  RMatrix v;
  RMatrix s;
  double constraint_residual = 0.0;
  double stationarity = 0.0;
  int iterations = 0;
  std::vector<HolevoStage> trace;   // stages of the best start
  std::vector<double> start_values; // final value of every start
  double sld_bound = 0.0;           // tr(g j_S⁻¹) for the ordering chain
};

namespace detail {

/// Holevo problem in affine coordinates C = C0 + N Z over a traceless
/// Hermitian basis. Rows of C index basis elements, columns parameters.
struct HolevoProblem {
  RMatrix V, Sigma, C0, N, g, rg;
  Eigen::Index d = 0, r = 0;

  RMatrix coeffs(const RVector& z) const {
    RMatrix c = C0;
    if (r > 0) c += N * Eigen::Map<const RMatrix>(z.data(), r, d);
    return c;
  }

  // Smoothed objective and its gradient with respect to z.
  double eval(const RVector& z, double mu, RVector* grad) const {
    const RMatrix c = coeffs(z);
    const RMatrix v = c.transpose() * V * c;
    const RMatrix s = c.transpose() * Sigma * c;
    const RMatrix a = rg * s * rg;
    const auto e = eigh(RMatrix(a.transpose() * a));
    RVector root = (e.values.array().max(0.0) + mu * mu).sqrt();
    const double value = (g * v).trace() + root.sum();
    if (grad && r > 0) {
      const RMatrix inv_root = e.vectors * root.cwiseInverse().asDiagonal() * e.vectors.transpose();
      const RMatrix q = rg * a * inv_root * rg;  // ∂(smoothed norm)/∂s
      const RMatrix gc = 2.0 * V * c * g + Sigma * c * (q.transpose() - q);
      const RMatrix gz = N.transpose() * gc;
      *grad = Eigen::Map<const RVector>(gz.data(), gz.size());
    }
    return value;
  }

  double exact(const RVector& z) const {
    const RMatrix c = coeffs(z);
    const RMatrix v = c.transpose() * V * c;
    const RMatrix s = c.transpose() * Sigma * c;
    return (g * v).trace() + trace_norm(rg * s * rg);
  }
};

struct BfgsResult {
  RVector z;
  int iterations = 0;
  double value = 0.0;
  double gradient_norm = 0.0;
};

/// BFGS with Armijo backtracking on a fixed smoothing level.
inline BfgsResult bfgs(const HolevoProblem& p, RVector z, double mu, int max_iter, double tol) {
  const Eigen::Index n = z.size();
  BfgsResult out;
  RVector gr;
  double f = p.eval(z, mu, &gr);
  RMatrix h = RMatrix::Identity(n, n);
  int stall = 0;
  int it = 0;
  for (; it < max_iter && gr.norm() > tol; ++it) {
    RVector dir = -h * gr;
    double slope = gr.dot(dir);
    if (slope >= 0.0) {
      h.setIdentity();
      dir = -gr;
      slope = -gr.squaredNorm();
    }
    double step = 1.0;
    RVector zn, gn;
    double fn = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      zn = z + step * dir;
      fn = p.eval(zn, mu, &gn);
      if (fn <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent at machine precision
    const RVector sv = zn - z;
    const RVector yv = gn - gr;
    const double sy = sv.dot(yv);
    if (sy > 1e-300) {
      const double rho = 1.0 / sy;
      const RMatrix id = RMatrix::Identity(n, n);
      h = (id - rho * sv * yv.transpose()) * h * (id - rho * yv * sv.transpose()) +
          rho * sv * sv.transpose();
    }
    stall = (f - fn <= 1e-15 * std::max(1.0, std::abs(f))) ? stall + 1 : 0;
    z = zn;
    gr = gn;
    f = fn;
    if (stall >= 5) break;
  }
  out.z = std::move(z);
  out.iterations = it;
  out.value = f;
  out.gradient_norm = gr.size() ? gr.norm() : 0.0;
  return out;
}

}  // namespace detail

/// Minimizes tr(g v(X)) + ‖√g s(X) √g‖₁ subject to Tr X^k ∂_lρ = δ^k_l.
/// The trace norm is smoothed as Σ√(σ² + μ²) with μ annealed from 1e-2 to
/// 1e-8; the reported value is unsmoothed.
inline HolevoSolution holevo_bound(const ParametricModel& model, const RVector& theta,
                                   const RMatrix& g, const HolevoOptions& opts = {}) {
  const Eigen::Index d = model.param_dim;
  validate_weight(g, d);
  require(opts.starts >= 1, "holevo_bound: need at least one start");
  const DensityOperator rho = model.state_at(theta);
  const std::vector<CMatrix> derivs = model_derivatives(model, theta);
  auto [lset, jfish] = sld_fisher(model, theta);
  const RMatrix js = jfish.real();
  const RMatrix js_inv = checked_inverse(js);

  const std::vector<CMatrix> basis = traceless_hermitian_basis(rho.dim());
  const auto m = static_cast<Eigen::Index>(basis.size());
  detail::HolevoProblem p;
  p.d = d;
  p.g = g;
  p.rg = psd_sqrt(g);
  RMatrix G(d, m);
  for (Eigen::Index l = 0; l < d; ++l)
    for (Eigen::Index a = 0; a < m; ++a) G(l, a) = trace_product(basis[a], derivs[l]).real();
  RVector means(m);
  for (Eigen::Index a = 0; a < m; ++a) means(a) = trace_product(rho.matrix(), basis[a]).real();
  p.V.resize(m, m);
  p.Sigma.resize(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) {
      const cplx t = trace_product(rho.matrix(), basis[a] * basis[b]);
      p.V(a, b) = t.real() - means(a) * means(b);
      p.Sigma(a, b) = t.imag();
    }
  p.V = symmetric_part(p.V);
  p.Sigma = 0.5 * (p.Sigma - p.Sigma.transpose());

  Eigen::JacobiSVD<RMatrix> svd(G, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RVector& sv = svd.singularValues();
  if (sv.size() < d || sv(d - 1) <= 1e-10 * std::max(1.0, sv(0)))
    throw NumericalError("holevo_bound: constraint matrix is rank deficient");
  // Minimum-norm particular solution G C0 = I and an orthonormal null space.
  p.C0 = svd.matrixV().leftCols(d) * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  p.r = m - d;
  p.N = svd.matrixV().rightCols(p.r);

  // Start at X = L⁻¹ = Σ_l (j_S⁻¹)^{kl} L_l, written in the basis.
  RMatrix c_sld(m, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    CMatrix x = CMatrix::Zero(rho.dim(), rho.dim());
    for (Eigen::Index l = 0; l < d; ++l) x += js_inv(k, l) * lset.ops[l];
    for (Eigen::Index a = 0; a < m; ++a) c_sld(a, k) = trace_product(basis[a], x).real();
  }
  const RMatrix z_sld_m = p.r > 0 ? RMatrix(p.N.transpose() * (c_sld - p.C0)) : RMatrix(0, d);
  const RVector z_sld = Eigen::Map<const RVector>(z_sld_m.data(), z_sld_m.size());

  struct StartResult {
    RVector z;
    double value = 0.0;
    double stationarity = 0.0;
    int iterations = 0;
    std::vector<HolevoStage> trace;
  };
  std::vector<StartResult> results(static_cast<size_t>(opts.starts));
  parallel_for(results.size(), [&](std::size_t i) {
    RVector z = z_sld;
    if (i > 0 && z.size() > 0) {
      std::mt19937_64 gen(derive_seed(opts.seed, i));
      std::normal_distribution<double> nd(0.0, opts.start_scale);
      for (Eigen::Index k = 0; k < z.size(); ++k) z(k) += nd(gen);
    }
    StartResult& res = results[i];
    if (p.r > 0) {
      for (double mu = 1e-2; mu >= 1e-8 * 0.999; mu *= 0.1) {
        const detail::BfgsResult b = detail::bfgs(p, z, mu, opts.max_iter, opts.tol);
        z = b.z;
        res.iterations += b.iterations;
        res.trace.push_back({mu, b.iterations, b.value, b.gradient_norm});
        res.stationarity = b.gradient_norm;
      }
    }
    res.z = z;
    res.value = p.exact(z);
  });

  size_t best = 0;
  for (size_t i = 1; i < results.size(); ++i)
    if (results[i].value < results[best].value - 1e-12) best = i;
  const StartResult& b = results[best];

  HolevoSolution out;
  out.value = b.value;
  out.iterations = b.iterations;
  out.trace = b.trace;
  out.stationarity = b.stationarity;
  for (const auto& r : results) out.start_values.push_back(r.value);
  const RMatrix c = p.coeffs(b.z);
  for (Eigen::Index k = 0; k < d; ++k) {
    CMatrix x = CMatrix::Zero(rho.dim(), rho.dim());
    for (Eigen::Index a = 0; a < m; ++a) x += c(a, k) * basis[a];
    out.x_ops.push_back(x);
  }
  double res = 0.0;
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index l = 0; l < d; ++l)
      res = std::max(res, std::abs(trace_product(out.x_ops[k], derivs[l]).real() - (k == l ? 1.0 : 0.0)));
  out.constraint_residual = res;
  const HolevoObjective obj = holevo_objective(rho, out.x_ops, g);
  out.v = obj.v;
  out.s = obj.s;
  out.sld_bound = (g * js_inv).trace();
  if (res > 1e-7) throw NumericalError("holevo_bound: constraint residual " + std::to_string(res));
  if (!std::isfinite(out.value)) throw NumericalError("holevo_bound: optimizer diverged");
  return out;
}

}  // namespace qest
