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

// Gaussian states of canonical commutation relations: Wick moments, the
// T-operator and its outcome density, beam-splitter concentration and the
// one-mode estimation protocol built on it.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "qest/estimation.hpp"
#include "qest/fock.hpp"
#include "qest/parallel.hpp"

namespace qest {

/// Mean θ, covariance v and commutator matrix s (½[X^k, X^j] = i s^{kj}).
struct GaussianSpec {
  RVector theta;
  RMatrix v;
  RMatrix s;

  Eigen::Index dim() const { return theta.size(); }

  void validate() const {
    const Eigen::Index d = theta.size();
    require(d >= 1 && v.rows() == d && v.cols() == d && s.rows() == d && s.cols() == d,
            "GaussianSpec: inconsistent sizes");
    require(max_abs(v - v.transpose()) <= 1e-12, "GaussianSpec: v is not symmetric");
    require(max_abs(s + s.transpose()) <= 1e-12, "GaussianSpec: s is not antisymmetric");
    require(min_eigenvalue(complex_covariance(v, s)) >= -1e-10,
            "GaussianSpec: v + i s is not positive semidefinite");
  }
};

/// One mode with θ = (Q, P) means, v = (N+½)I and s = [[0,½],[−½,0]].
inline GaussianSpec one_mode_spec(cplx zeta, double N) {
  GaussianSpec g;
  g.theta = RVector{{std::sqrt(2.0) * zeta.real(), std::sqrt(2.0) * zeta.imag()}};
  g.v = (N + 0.5) * RMatrix::Identity(2, 2);
  g.s = RMatrix{{0.0, 0.5}, {-0.5, 0.0}};
  return g;
}

namespace detail {

inline cplx wick(const CMatrix& cov, const std::vector<int>& idx, std::vector<bool>& used) {
  size_t first = 0;
  while (first < idx.size() && used[first]) ++first;
  if (first == idx.size()) return 1.0;
  used[first] = true;
  cplx total = 0.0;
  for (size_t b = first + 1; b < idx.size(); ++b) {
    if (used[b]) continue;
    used[b] = true;
    total += cov(idx[first], idx[b]) * wick(cov, idx, used);
    used[b] = false;
  }
  used[first] = false;
  return total;
}

}  // namespace detail

/// Centered moment Tr ρ (X^{k₁}−θ^{k₁})···(X^{k_l}−θ^{k_l}) as the sum over
/// pairings {a<b} of Π (v + i s)^{k_a k_b}. Indices are zero-based.
inline cplx gaussian_moment(const GaussianSpec& spec, const std::vector<int>& indices,
                            int degree_cap = 10) {
  require(static_cast<int>(indices.size()) <= degree_cap,
          "gaussian_moment: degree " + std::to_string(indices.size()) + " exceeds the cap");
  for (int k : indices)
    require(k >= 0 && k < spec.dim(), "gaussian_moment: index out of range");
  if (indices.size() % 2 == 1) return 0.0;
  const CMatrix cov = complex_covariance(spec.v, spec.s);
  std::vector<bool> used(indices.size(), false);
  return detail::wick(cov, indices, used);
}

/// Quadratic-form kernel of the T-operator: W = v'^{-1/2} f(|M|) v'^{-1/2}
/// with M = v'^{-1/2} s v'^{-1/2} and f(x) = atanh(x)/(2x), f(0) = ½.
struct TKernel {
  RMatrix w;
  double normalization = 1.0;  // ∫ T dθ' = I for T = exp(−(X−θ')ᵀW(X−θ'))/normalization
  double max_abs_eigenvalue = 0.0;
};

inline TKernel t_kernel(const RMatrix& vprime, const RMatrix& s) {
  const Eigen::Index d = vprime.rows();
  require(vprime.cols() == d && s.rows() == d && s.cols() == d, "T-kernel: size mismatch");
  require(max_abs(vprime - vprime.transpose()) <= 1e-12, "T-kernel: v' is not symmetric");
  if (min_eigenvalue(vprime) <= 0.0) throw ValidationError("T-kernel: v' is not positive definite");
  const RMatrix r = pd_inv_sqrt(vprime);
  const RMatrix m = r * s * r;
  const RMatrix am = abs_matrix(m);
  const auto e = eigh(am);
  TKernel k;
  k.max_abs_eigenvalue = e.values.cwiseAbs().maxCoeff();
  // The boundary |M| = 1 is inadmissible; rounding can land just below it.
  if (k.max_abs_eigenvalue >= 1.0 - 1e-12)
    throw ValidationError("T-kernel: |v'^{-1/2} s v'^{-1/2}| has an eigenvalue >= 1");
  const RVector f = e.values.unaryExpr([](double x) {
    x = std::max(x, 0.0);
    return x < 1e-8 ? 0.5 + x * x / 6.0 : std::atanh(x) / (2.0 * x);
  });
  k.w = symmetric_part(r * (e.vectors * f.asDiagonal() * e.vectors.transpose()) * r);
  const RVector one_minus = (1.0 - e.values.array().square()).matrix();
  k.normalization = std::pow(2.0 * std::numbers::pi, 0.5 * static_cast<double>(d)) *
                    std::sqrt(vprime.determinant()) * std::pow(one_minus.prod(), 0.25);
  return k;
}

/// Density of the T-measurement outcome at θ' on the Gaussian state: normal
/// with mean θ and covariance v + v'.
inline double t_density(const RVector& theta_prime, const RMatrix& vprime, const GaussianSpec& spec) {
  spec.validate();
  require(theta_prime.size() == spec.dim(), "t_density: dimension mismatch");
  t_kernel(vprime, spec.s);  // admissibility of v'
  const RMatrix c = spec.v + vprime;
  Eigen::LDLT<RMatrix> ldlt(c);
  if (ldlt.info() != Eigen::Success || min_eigenvalue(c) <= 0.0)
    throw NumericalError("t_density: v + v' is singular");
  const RVector diff = theta_prime - spec.theta;
  const double q = diff.dot(ldlt.solve(diff));
  const double d = static_cast<double>(spec.dim());
  return std::exp(-0.5 * q) / (std::pow(2.0 * std::numbers::pi, 0.5 * d) * std::sqrt(c.determinant()));
}

/// T_{θ',v'}(X) = exp(−Σ W_kj (X^k−θ'_k)(X^j−θ'_j)) / normalization for
/// Hermitian operators X^k.
inline CMatrix t_operator(const std::vector<CMatrix>& xs, const RVector& theta_prime,
                          const TKernel& kernel) {
  const auto d = static_cast<Eigen::Index>(xs.size());
  require(d == kernel.w.rows() && theta_prime.size() == d, "t_operator: dimension mismatch");
  const Eigen::Index n = xs.front().rows();
  std::vector<CMatrix> shifted;
  for (Eigen::Index k = 0; k < d; ++k)
    shifted.push_back(xs[k] - theta_prime(k) * CMatrix::Identity(n, n));
  CMatrix q = CMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index j = 0; j < d; ++j)
      if (kernel.w(k, j) != 0.0) q += kernel.w(k, j) * (shifted[k] * shifted[j]);
  const double c = 1.0 / kernel.normalization;
  return apply_spectral(hermitian_part(q), [c](double x) { return c * std::exp(-x); });
}

/// Normalization of the one-mode T-operator measured directly: with
/// X = √(2σ)(q, p) on a truncated Fock space, ∫ T dθ' = I forces
/// normalization = 2σ · 2π · Tr exp(−XᵀWX).
inline double calibrated_t_normalization(double sigma, const RMatrix& vprime, int cutoff = 200) {
  require(sigma > 0.0 && vprime.rows() == 2, "calibration: one mode with sigma > 0");
  const RMatrix s{{0.0, sigma}, {-sigma, 0.0}};
  const TKernel k = t_kernel(vprime, s);
  const int big = cutoff + 64;
  CMatrix a = CMatrix::Zero(big, big);
  for (int m = 1; m < big; ++m) a(m - 1, m) = std::sqrt(static_cast<double>(m));
  const CMatrix q = (a + a.adjoint()) / std::sqrt(2.0);
  const CMatrix p = (a - a.adjoint()) / (kI * std::sqrt(2.0));
  const double scale = std::sqrt(2.0 * sigma);
  const std::vector<CMatrix> xs{scale * q, scale * p};
  CMatrix form = CMatrix::Zero(big, big);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) form += k.w(i, j) * (xs[i] * xs[j]);
  const CMatrix e = apply_spectral(hermitian_part(form), [](double x) { return std::exp(-x); });
  return 2.0 * sigma * 2.0 * std::numbers::pi * e.topLeftCorner(cutoff, cutoff).trace().real();
}

struct ModeSpec {
  cplx zeta;
  double N = 0.0;
};

struct Concentration {
  std::vector<ModeSpec> modes;
  std::vector<std::vector<cplx>> layers;  // means after each half-mirror layer
};

/// Passive concentration ρ_{ζ,N}^{⊗n} → ρ_{√nζ,N} ⊗ ρ_{0,N}^{⊗(n−1)}. For
/// n = 2^m the half-mirror network is traced layer by layer.
inline Concentration concentrate(cplx zeta, double N, int n) {
  require(n >= 1, "concentrate: n must be at least 1");
  require(N >= 0.0, "concentrate: N must be non-negative");
  Concentration c;
  const bool power_of_two = (n & (n - 1)) == 0;
  if (!power_of_two) {
    c.modes.assign(static_cast<size_t>(n), {0.0, N});
    c.modes[0].zeta = std::sqrt(static_cast<double>(n)) * zeta;
    return c;
  }
  std::vector<cplx> means(static_cast<size_t>(n), zeta);
  const double r = 1.0 / std::sqrt(2.0);
  for (int stride = 1; stride < n; stride *= 2) {
    for (int i = 0; i < n; i += 2 * stride) {
      const cplx a = means[i], b = means[i + stride];
      means[i] = r * (a + b);
      means[i + stride] = r * (a - b);
    }
    c.layers.push_back(means);
  }
  for (const cplx& m : means) c.modes.push_back({m, N});
  return c;
}

struct GaussProtocolTrial {
  cplx zeta_hat;
  double n_hat = 0.0;
  cplx zeta_hat_baseline;
  double n_hat_baseline = 0.0;
};

struct GaussProtocolReport {
  cplx zeta;
  double N = 0.0;
  int n = 0;
  long trials = 0;
  std::uint64_t seed = 0;
  EstimationReport theta;           // θ = √2(ζ_x, ζ_y), concentrated protocol
  EstimationReport number;          // N̂ from the n−1 photon counts
  EstimationReport theta_baseline;  // per-copy heterodyne
  EstimationReport number_baseline;
  double scaled_theta_mse = 0.0, scaled_theta_se = 0.0;            // n·tr MSE_θ
  double scaled_number_mse = 0.0, scaled_number_se = 0.0;          // (n−1)·MSE_N
  double scaled_number_baseline = 0.0, scaled_number_baseline_se = 0.0;  // n·MSE_N
  double scaled_theta_baseline = 0.0, scaled_theta_baseline_se = 0.0;
  double shift_bound = 0.0;  // 2(N+1)
  std::vector<GaussProtocolTrial> per_trial;
};

/// Monte Carlo of the concentrate-then-measure protocol and the per-copy
/// heterodyne baseline. Trials use seeds derived from `seed`.
inline GaussProtocolReport gaussian_protocol_mse(cplx zeta, double N, int n, long trials,
                                                 std::uint64_t seed) {
  require(n >= 2, "gaussian protocol: n must be at least 2");
  require(trials >= 2, "gaussian protocol: need at least two trials");
  require(N >= 0.0, "gaussian protocol: N must be non-negative");
  const Concentration conc = concentrate(zeta, N, n);
  const double rn = std::sqrt(static_cast<double>(n));
  const double sd = std::sqrt(0.5 * (N + 1.0));
  std::vector<GaussProtocolTrial> out(static_cast<size_t>(trials));
  parallel_for(out.size(), [&](std::size_t t) {
    std::mt19937_64 gen(derive_seed(seed, t));
    std::normal_distribution<double> g(0.0, sd);
    GaussProtocolTrial& tr = out[t];
    const cplx alpha = conc.modes[0].zeta + cplx(g(gen), g(gen));
    tr.zeta_hat = alpha / rn;
    double counts = 0.0;
    for (int k = 1; k < n; ++k) counts += static_cast<double>(sample_photon_count(N, gen));
    tr.n_hat = counts / (n - 1);
    std::vector<cplx> a(static_cast<size_t>(n));
    cplx mean = 0.0;
    for (auto& x : a) {
      x = zeta + cplx(g(gen), g(gen));
      mean += x;
    }
    mean /= static_cast<double>(n);
    double spread = 0.0;
    for (const auto& x : a) spread += std::norm(x - mean);
    tr.zeta_hat_baseline = mean;
    tr.n_hat_baseline = spread / n - 1.0;
  });

  GaussProtocolReport r;
  r.zeta = zeta;
  r.N = N;
  r.n = n;
  r.trials = trials;
  r.seed = seed;
  r.shift_bound = 2.0 * (N + 1.0);
  const double s2 = std::sqrt(2.0);
  auto theta_of = [s2](cplx z) { return RVector{{s2 * z.real(), s2 * z.imag()}}; };
  std::vector<RVector> th, nh, thb, nhb;
  for (const auto& t : out) {
    th.push_back(theta_of(t.zeta_hat));
    nh.push_back(RVector::Constant(1, t.n_hat));
    thb.push_back(theta_of(t.zeta_hat_baseline));
    nhb.push_back(RVector::Constant(1, t.n_hat_baseline));
  }
  const RVector theta_true = theta_of(zeta);
  const RVector n_true = RVector::Constant(1, N);
  r.theta = mse_report(th, theta_true, r.shift_bound / n, "shift");
  r.number = mse_report(nh, n_true, N * (N + 1.0) / (n - 1), "number");
  r.theta_baseline = mse_report(thb, theta_true, r.shift_bound / n, "shift");
  r.number_baseline = mse_report(nhb, n_true, (N + 1.0) * (N + 1.0) / n, "heterodyne");
  for (auto* rep : {&r.theta, &r.number, &r.theta_baseline, &r.number_baseline}) rep->seed = seed;
  r.scaled_theta_mse = n * r.theta.weighted_trace;
  r.scaled_theta_se = n * r.theta.weighted_trace_se;
  r.scaled_number_mse = (n - 1) * r.number.weighted_trace;
  r.scaled_number_se = (n - 1) * r.number.weighted_trace_se;
  r.scaled_theta_baseline = n * r.theta_baseline.weighted_trace;
  r.scaled_theta_baseline_se = n * r.theta_baseline.weighted_trace_se;
  r.scaled_number_baseline = n * r.number_baseline.weighted_trace;
  r.scaled_number_baseline_se = n * r.number_baseline.weighted_trace_se;
  r.per_trial = std::move(out);
  return r;
}

}  // namespace qest
