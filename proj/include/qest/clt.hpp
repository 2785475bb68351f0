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

// Exact moments of the collective observables X^{(n)} = n^{-1/2} Σ_j X_(j)
// on ρ^{⊗n}, compared with the Wick moments of the limiting Gaussian state.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "qest/gaussian.hpp"
#include "qest/qcore.hpp"

namespace qest {

/// Centered observables on a fixed state with their v and s matrices.
struct CollectiveSpec {
  DensityOperator rho;
  std::vector<CMatrix> xs;
  RMatrix v;
  RMatrix s;

  Eigen::Index size() const { return static_cast<Eigen::Index>(xs.size()); }

  /// The limiting Gaussian spec (0, v, s) restricted to the first `d` observables.
  GaussianSpec limit(Eigen::Index d = -1) const {
    if (d < 0) d = size();
    return {RVector::Zero(d), v.topLeftCorner(d, d), s.topLeftCorner(d, d)};
  }
};

inline CollectiveSpec make_collective_spec(const DensityOperator& rho, const std::vector<CMatrix>& xs) {
  require(!xs.empty(), "collective spec needs at least one observable");
  const Eigen::Index n = rho.dim();
  CollectiveSpec spec{rho, {}, {}, {}};
  for (const CMatrix& x : xs) {
    require(x.rows() == n && x.cols() == n && is_hermitian(x, 1e-10),
            "collective spec: observables must be Hermitian of the state's size");
    const double mean = trace_product(rho.matrix(), x).real();
    spec.xs.push_back(hermitian_part(x) - mean * CMatrix::Identity(n, n));
  }
  const Eigen::Index d = spec.size();
  spec.v.resize(d, d);
  spec.s.resize(d, d);
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index j = 0; j < d; ++j) {
      const cplx t = trace_product(rho.matrix(), spec.xs[k] * spec.xs[j]);
      spec.v(k, j) = t.real();
      spec.s(k, j) = t.imag();
    }
  spec.v = symmetric_part(spec.v);
  spec.s = 0.5 * (spec.s - spec.s.transpose());
  if (min_eigenvalue(complex_covariance(spec.v, spec.s)) < -1e-10)
    throw NumericalError("collective spec: v + i s is not positive semidefinite");
  return spec;
}

namespace detail {

/// Visits every set partition of {0, …, m−1} as a block label per position
/// (restricted growth strings).
inline void for_each_partition(int m, const std::function<void(const std::vector<int>&, int)>& f) {
  std::vector<int> label(static_cast<size_t>(m), 0);
  std::function<void(int, int)> rec = [&](int pos, int blocks) {
    if (pos == m) {
      f(label, blocks);
      return;
    }
    for (int b = 0; b <= blocks; ++b) {
      label[pos] = b;
      rec(pos + 1, std::max(blocks, b + 1));
    }
  };
  rec(0, 0);
}

}  // namespace detail

/// Tr ρ^{⊗n} X^{k₁,(n)} ··· X^{k_m,(n)} by summing over set partitions of the
/// word positions: each partition with b blocks contributes
/// n(n−1)···(n−b+1) Π_blocks Tr ρ(ordered product), times n^{−m/2}.
inline cplx collective_moment(const CollectiveSpec& spec, long n, const std::vector<int>& word,
                              int degree_cap = 8) {
  require(n >= 1, "collective_moment: n must be positive");
  require(static_cast<int>(word.size()) <= degree_cap,
          "collective_moment: degree " + std::to_string(word.size()) + " exceeds the cap");
  for (int k : word) require(k >= 0 && k < spec.size(), "collective_moment: index out of range");
  const int m = static_cast<int>(word.size());
  if (m == 0) return 1.0;
  const Eigen::Index dim = spec.rho.dim();
  cplx total = 0.0;
  detail::for_each_partition(m, [&](const std::vector<int>& label, int blocks) {
    if (blocks > n) return;
    std::vector<int> size(static_cast<size_t>(blocks), 0);
    for (int b : label) ++size[b];
    for (int s : size)
      if (s == 1) return;  // centered single-site factor vanishes
    cplx term = 1.0;
    for (long b = 0; b < blocks; ++b) term *= static_cast<double>(n - b);
    for (int b = 0; b < blocks && term != 0.0; ++b) {
      CMatrix prod = CMatrix::Identity(dim, dim);
      for (int pos = 0; pos < m; ++pos)
        if (label[pos] == b) prod = prod * spec.xs[word[pos]];
      term *= trace_product(spec.rho.matrix(), prod);
    }
    total += term;
  });
  return total / std::pow(static_cast<double>(n), 0.5 * m);
}

/// X^{(n)} as explicit dim^n matrices for every observable in the spec.
inline std::vector<CMatrix> collective_operators(const CollectiveSpec& spec, int n,
                                                 Eigen::Index cap = tol::kDefaultDimCap) {
  require(n >= 1, "collective_operators: n must be positive");
  const Eigen::Index dim = spec.rho.dim();
  const double total = std::pow(static_cast<double>(dim), n);
  require(total <= static_cast<double>(cap),
          "collective_operators: dimension " + std::to_string(total) + " exceeds the cap");
  const auto big = static_cast<Eigen::Index>(total);
  std::vector<CMatrix> out;
  for (const CMatrix& x : spec.xs) {
    CMatrix sum = CMatrix::Zero(big, big);
    for (int site = 0; site < n; ++site) {
      CMatrix term = CMatrix::Identity(1, 1);
      for (int j = 0; j < n; ++j)
        term = kron(term, j == site ? x : CMatrix(CMatrix::Identity(dim, dim)));
      sum += term;
    }
    out.push_back(sum / std::sqrt(static_cast<double>(n)));
  }
  return out;
}

/// Same moment by explicit tensor-product matrices (oracle for small n).
inline cplx collective_moment_bruteforce(const CollectiveSpec& spec, int n, const std::vector<int>& word,
                                         Eigen::Index cap = 256) {
  const std::vector<CMatrix> ops = collective_operators(spec, n, cap);
  const DensityOperator big = tensor_power(spec.rho, n, cap);
  CMatrix prod = CMatrix::Identity(big.dim(), big.dim());
  for (int k : word) {
    require(k >= 0 && k < spec.size(), "collective_moment_bruteforce: index out of range");
    prod = prod * ops[k];
  }
  return trace_product(big.matrix(), prod);
}

struct CltGap {
  long n;
  cplx exact;
  cplx gaussian;
  double gap;
};

inline std::vector<CltGap> clt_gap(const CollectiveSpec& spec, const std::vector<long>& ns,
                                   const std::vector<int>& word) {
  const cplx limit = gaussian_moment(spec.limit(), word);
  std::vector<CltGap> out;
  for (long n : ns) {
    const cplx e = collective_moment(spec, n, word);
    out.push_back({n, e, limit, std::abs(e - limit)});
  }
  return out;
}

/// T_{θ',v'}(X^{(n)}) on dim^n for the first θ'.size() observables.
inline CMatrix t_operator_on_sums(const CollectiveSpec& spec, int n, const RVector& theta_prime,
                                  const RMatrix& vprime, Eigen::Index cap = tol::kDefaultDimCap) {
  const Eigen::Index d = theta_prime.size();
  require(d >= 1 && d <= spec.size(), "t_operator_on_sums: bad number of observables");
  const TKernel kernel = t_kernel(vprime, spec.s.topLeftCorner(d, d));
  std::vector<CMatrix> ops = collective_operators(spec, n, cap);
  ops.resize(static_cast<size_t>(d));
  return t_operator(ops, theta_prime, kernel);
}

}  // namespace qest
