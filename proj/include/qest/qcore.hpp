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

// Finite-dimensional quantum primitives: density operators, POVMs, Born-rule
// statistics, mixtures, tensor powers and outcome sampling.

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qest/linalg.hpp"

namespace qest {

namespace tol {
inline constexpr double kHermitian = 1e-12;
inline constexpr double kTrace = 1e-10;
inline constexpr double kPsd = 1e-10;
inline constexpr double kPovmDiscrete = 1e-10;
inline constexpr double kProbClamp = 1e-12;
inline constexpr double kProbSum = 1e-8;
inline constexpr Eigen::Index kDefaultDimCap = 4096;
}  // namespace tol

/// Trace-one positive Hermitian matrix. Immutable after construction.
class DensityOperator {
 public:
  /// Validates and, when the smallest eigenvalues lie in [-1e-10, 0), clamps
  /// them to zero and renormalizes.
  explicit DensityOperator(CMatrix m) : matrix_(std::move(m)) {
    require(matrix_.rows() > 0 && matrix_.rows() == matrix_.cols(),
            "density operator must be a non-empty square matrix");
    require(is_hermitian(matrix_, tol::kHermitian), "density operator is not Hermitian");
    matrix_ = hermitian_part(matrix_);
    require(std::abs(matrix_.trace().real() - 1.0) <= tol::kTrace,
            "density operator trace differs from 1");
    const auto e = eigh(matrix_);
    require(e.values(0) >= -tol::kPsd, "density operator has a negative eigenvalue");
    if (e.values(0) < 0.0) {
      RVector clamped = e.values.cwiseMax(0.0);
      clamped /= clamped.sum();
      matrix_ = e.vectors * clamped.asDiagonal() * e.vectors.adjoint();
      matrix_ = hermitian_part(matrix_);
    }
  }

  /// Skips the eigenvalue check; for matrices that are valid by construction
  /// (convex combinations, tensor products of valid states).
  static DensityOperator trusted(CMatrix m) { return DensityOperator(std::move(m), Trusted{}); }

  /// Normalizes a PSD matrix to unit trace first.
  static DensityOperator normalized(const CMatrix& m) {
    const double t = m.trace().real();
    require(t > 0.0, "cannot normalize a matrix with non-positive trace");
    return DensityOperator(hermitian_part(m) / t);
  }

  static DensityOperator maximally_mixed(Eigen::Index dim) {
    return trusted(CMatrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  Eigen::Index dim() const { return matrix_.rows(); }
  const CMatrix& matrix() const { return matrix_; }
  double purity() const { return trace_product(matrix_, matrix_).real(); }

 private:
  struct Trusted {};
  DensityOperator(CMatrix m, Trusted) : matrix_(std::move(m)) {}
  CMatrix matrix_;
};

/// One POVM element. Discrete outcomes carry a tag; gridded outcomes carry a
/// point in R^d and a quadrature weight.
struct PovmElement {
  std::string label;
  CMatrix op;
  double weight = 1.0;
  std::optional<RVector> point;
};

class Povm {
 public:
  enum class Kind { discrete, gridded };

  /// Discrete POVM; completeness is enforced at 1e-10 entrywise.
  static Povm discrete(std::vector<std::string> labels, std::vector<CMatrix> ops) {
    require(labels.size() == ops.size() && !ops.empty(), "POVM needs one label per element");
    std::vector<PovmElement> els;
    for (size_t i = 0; i < ops.size(); ++i) els.push_back({labels[i], std::move(ops[i]), 1.0, {}});
    return Povm(Kind::discrete, std::move(els), tol::kPovmDiscrete);
  }

  static Povm discrete(std::vector<CMatrix> ops) {
    std::vector<std::string> labels;
    for (size_t i = 0; i < ops.size(); ++i) labels.push_back(std::to_string(i));
    return discrete(std::move(labels), std::move(ops));
  }

  /// Gridded POVM: Σ_i w_i M_i ≈ I. The residual is certified against
  /// `completeness_tol` and stored.
  static Povm gridded(std::vector<RVector> points, std::vector<double> weights,
                      std::vector<CMatrix> ops, double completeness_tol) {
    require(points.size() == ops.size() && weights.size() == ops.size() && !ops.empty(),
            "gridded POVM needs matching points, weights and elements");
    std::vector<PovmElement> els;
    for (size_t i = 0; i < ops.size(); ++i) {
      std::string label;
      for (Eigen::Index k = 0; k < points[i].size(); ++k)
        label += (k ? ";" : "") + std::to_string(points[i](k));
      els.push_back({label, std::move(ops[i]), weights[i], points[i]});
    }
    return Povm(Kind::gridded, std::move(els), completeness_tol);
  }

  /// Projective measurement in the computational basis.
  static Povm computational_basis(Eigen::Index dim) {
    std::vector<CMatrix> ops;
    for (Eigen::Index k = 0; k < dim; ++k) {
      CMatrix p = CMatrix::Zero(dim, dim);
      p(k, k) = 1.0;
      ops.push_back(p);
    }
    return discrete(std::move(ops));
  }

  /// Projective measurement onto the eigenvectors of a Hermitian observable.
  static Povm spectral(const CMatrix& observable) {
    const auto e = eigh(hermitian_part(observable));
    std::vector<CMatrix> ops;
    for (Eigen::Index k = 0; k < e.vectors.cols(); ++k)
      ops.push_back(e.vectors.col(k) * e.vectors.col(k).adjoint());
    return discrete(std::move(ops));
  }

  /// Probabilistic combination Σ λ_i M_i of discrete POVMs (outcome set is the
  /// disjoint union, labels prefixed by the component index).
  static Povm combine(const std::vector<Povm>& parts, const std::vector<double>& weights) {
    require(parts.size() == weights.size() && !parts.empty(), "combine: size mismatch");
    std::vector<std::string> labels;
    std::vector<CMatrix> ops;
    for (size_t i = 0; i < parts.size(); ++i) {
      require(weights[i] >= 0.0, "combine: negative weight");
      for (const auto& el : parts[i].elements()) {
        labels.push_back(std::to_string(i) + ":" + el.label);
        ops.push_back(weights[i] * el.weight * el.op);
      }
    }
    return discrete(std::move(labels), std::move(ops));
  }

  Kind kind() const { return kind_; }
  Eigen::Index dim() const { return elements_.front().op.rows(); }
  size_t size() const { return elements_.size(); }
  const std::vector<PovmElement>& elements() const { return elements_; }
  double completeness_residual() const { return residual_; }
  double completeness_tolerance() const { return tolerance_; }

 private:
  Povm(Kind kind, std::vector<PovmElement> els, double tolerance)
      : kind_(kind), elements_(std::move(els)), tolerance_(tolerance) {
    const Eigen::Index d = elements_.front().op.rows();
    CMatrix total = CMatrix::Zero(d, d);
    for (auto& el : elements_) {
      require(el.op.rows() == d && el.op.cols() == d, "POVM elements differ in dimension");
      require(el.weight >= 0.0, "POVM quadrature weight is negative");
      require(is_hermitian(el.op, 1e-10), "POVM element " + el.label + " is not Hermitian");
      el.op = hermitian_part(el.op);
      require(min_eigenvalue(el.op) >= -tol::kPsd, "POVM element " + el.label + " is not PSD");
      total += el.weight * el.op;
    }
    residual_ = max_abs(total - CMatrix::Identity(d, d));
    require(residual_ <= tolerance_, "POVM completeness residual " + std::to_string(residual_) +
                                         " exceeds tolerance " + std::to_string(tolerance_));
  }

  Kind kind_;
  std::vector<PovmElement> elements_;
  double tolerance_;
  double residual_ = 0.0;
};

/// Probability mass per outcome label (including quadrature weight).
struct OutcomeDistribution {
  std::vector<std::string> labels;
  std::vector<double> probs;
  std::vector<RVector> points;  // empty for discrete outcomes

  size_t size() const { return probs.size(); }

  void validate() const {
    require(!probs.empty() && labels.size() == probs.size(), "malformed outcome distribution");
    double total = 0.0;
    for (double p : probs) {
      require(p >= 0.0, "negative outcome probability");
      total += p;
    }
    require(std::abs(total - 1.0) <= tol::kProbSum, "outcome probabilities do not sum to 1");
  }
};

/// Born rule: p(ω) = Tr(ρ M_ω) · w_ω.
inline OutcomeDistribution measure_distribution(const DensityOperator& rho, const Povm& m) {
  require(rho.dim() == m.dim(), "state and POVM dimensions differ");
  OutcomeDistribution out;
  double total = 0.0;
  for (const auto& el : m.elements()) {
    double p = trace_product(rho.matrix(), el.op).real() * el.weight;
    if (p < -1e-8) throw NumericalError("Born-rule probability is negative: " + std::to_string(p));
    p = std::max(p, 0.0);
    out.labels.push_back(el.label);
    out.probs.push_back(p);
    if (el.point) out.points.push_back(*el.point);
    total += p;
  }
  const double deviation = std::abs(total - 1.0);
  const double allowed = m.kind() == Povm::Kind::discrete
                             ? tol::kProbSum
                             : std::max(tol::kProbSum, m.completeness_tolerance());
  if (deviation > allowed)
    throw NumericalError("outcome mass " + std::to_string(total) + " violates completeness");
  if (deviation > 0.0 && (deviation < tol::kProbSum || m.kind() == Povm::Kind::gridded))
    for (double& p : out.probs) p /= total;
  return out;
}

/// Σ λ_i ρ_i.
inline DensityOperator mix(const std::vector<DensityOperator>& states,
                           const std::vector<double>& weights) {
  require(!states.empty() && states.size() == weights.size(), "mix: size mismatch");
  double wsum = 0.0;
  for (double w : weights) {
    require(w >= 0.0, "mix: negative weight");
    wsum += w;
  }
  require(std::abs(wsum - 1.0) <= 1e-12, "mix: weights do not sum to 1");
  const Eigen::Index d = states.front().dim();
  CMatrix out = CMatrix::Zero(d, d);
  for (size_t i = 0; i < states.size(); ++i) {
    require(states[i].dim() == d, "mix: dimension mismatch");
    out += weights[i] * states[i].matrix();
  }
  return DensityOperator::trusted(hermitian_part(out));
}

/// ρ^{⊗n}, guarded by a dimension cap.
inline DensityOperator tensor_power(const DensityOperator& rho, int n,
                                    Eigen::Index cap = tol::kDefaultDimCap) {
  require(n >= 1, "tensor_power: n must be positive");
  double dim_n = std::pow(static_cast<double>(rho.dim()), n);
  require(dim_n <= static_cast<double>(cap),
          "tensor_power: dimension " + std::to_string(dim_n) + " exceeds cap");
  CMatrix out = rho.matrix();
  for (int k = 1; k < n; ++k) out = kron(out, rho.matrix());
  return DensityOperator::trusted(std::move(out));
}

/// i.i.d. outcome indices drawn from dist; identical (seed, count) always
/// yields the identical sequence.
inline std::vector<std::size_t> sample_outcomes(const OutcomeDistribution& dist,
                                                std::uint64_t seed, std::size_t count) {
  require(!dist.probs.empty(), "sample_outcomes: empty distribution");
  std::vector<double> cdf(dist.probs.size());
  std::partial_sum(dist.probs.begin(), dist.probs.end(), cdf.begin());
  const double total = cdf.back();
  require(total > 0.0, "sample_outcomes: zero total mass");
  std::size_t last_nonzero = cdf.size() - 1;
  while (last_nonzero > 0 && dist.probs[last_nonzero] == 0.0) --last_nonzero;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, total);
  std::vector<std::size_t> out(count);
  for (auto& o : out) {
    const double x = u(gen);
    auto it = std::upper_bound(cdf.begin(), cdf.end(), x);
    o = static_cast<std::size_t>(it - cdf.begin());
    if (o == cdf.size()) o = last_nonzero;  // x rounded up to the total
  }
  return out;
}

/// Counts per outcome for a sequence of sampled indices.
inline std::vector<long> histogram(const std::vector<std::size_t>& samples, std::size_t outcomes) {
  std::vector<long> counts(outcomes, 0);
  for (auto s : samples) ++counts.at(s);
  return counts;
}

}  // namespace qest
