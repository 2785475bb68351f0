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

// Estimators that reach the bounds: the collective POVM built from the
// T-operator on X^{(n)}, and the two-stage adaptive estimator for qubits.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "qest/bounds.hpp"
#include "qest/clt.hpp"
#include "qest/estimation.hpp"

namespace qest {

/// v' = √g⁻¹(|√g s √g| + ε)√g⁻¹; ε > 0 keeps the T-kernel finite.
inline RMatrix regularized_vprime(const RMatrix& s, const RMatrix& g, double eps) {
  require(eps > 0.0, "v' regularization needs eps > 0");
  validate_weight(g, s.rows());
  const RMatrix rg = psd_sqrt(g);
  const RMatrix rg_inv = checked_inverse(rg);
  const RMatrix inner = abs_matrix(rg * s * rg) + eps * RMatrix::Identity(s.rows(), s.rows());
  return symmetric_part(rg_inv * inner * rg_inv);
}

enum class CollectiveReduction { automatic, dense, spin };

struct CollectivePovmOptions {
  double radius = 0.0;     // 0 selects 4·√λmax(v + v')
  int steps_per_radius = 16;
  double support_tol = 1e-8;  // relative to λmax(S)
  Eigen::Index cap = tol::kDefaultDimCap;
  CollectiveReduction reduction = CollectiveReduction::automatic;  // spin for qubits
};

/// One invariant block of the collective observables. `basis` spans a single
/// copy inside the full space; the block occurs `multiplicity` times.
struct CollectiveBlock {
  long multiplicity = 1;
  CMatrix basis;
  std::vector<CMatrix> ops;  // X^{(n)} restricted to the block
  CMatrix s_operator;
  CMatrix s_inv_sqrt;        // on the ε-support of S
  CMatrix support_projector;
};

namespace detail {

/// Applies a one-site operator to every column of `vecs`; site 0 is the most
/// significant tensor factor, matching kron ordering.
inline CMatrix apply_site(const CMatrix& op, const CMatrix& vecs, int site, int n) {
  const Eigen::Index d = op.rows();
  Eigen::Index stride = 1;
  for (int j = site + 1; j < n; ++j) stride *= d;
  const Eigen::Index rows = vecs.rows();
  CMatrix out = CMatrix::Zero(rows, vecs.cols());
  for (Eigen::Index outer = 0; outer < rows; outer += stride * d)
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = 0; b < d; ++b) {
        const cplx c = op(a, b);
        if (c == 0.0) continue;
        out.middleRows(outer + a * stride, stride) += c * vecs.middleRows(outer + b * stride, stride);
      }
  return out;
}

/// (Σ_sites X_site / √n) V.
inline CMatrix apply_collective(const CMatrix& x, const CMatrix& vecs, int n) {
  CMatrix out = CMatrix::Zero(vecs.rows(), vecs.cols());
  for (int s = 0; s < n; ++s) out += apply_site(x, vecs, s, n);
  return out / std::sqrt(static_cast<double>(n));
}

/// (ρ ⊗ … ⊗ ρ) V, or the product-rule derivative Σ_s (ρ ⊗ … ∂ρ … ⊗ ρ) V.
inline CMatrix apply_product(const CMatrix& rho, const CMatrix* drho, const CMatrix& vecs, int n) {
  if (!drho) {
    CMatrix out = vecs;
    for (int s = 0; s < n; ++s) out = apply_site(rho, out, s, n);
    return out;
  }
  CMatrix total = CMatrix::Zero(vecs.rows(), vecs.cols());
  for (int special = 0; special < n; ++special) {
    CMatrix out = vecs;
    for (int s = 0; s < n; ++s) out = apply_site(s == special ? *drho : rho, out, s, n);
    total += out;
  }
  return total;
}

inline long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace detail

/// Total-spin ladders of n qubits: for J = n/2 − k the highest-weight vector
/// (singlet)^{⊗k} ⊗ |0⟩^{⊗(n−2k)} and its lowering-operator orbit, with
/// multiplicity C(n,k) − C(n,k−1). Permutation-invariant operators act as
/// B_J ⊗ I on each isotypic component, so one ladder per J suffices.
inline std::vector<std::pair<long, CMatrix>> spin_ladders(int n) {
  require(n >= 1 && n <= 16, "spin_ladders: n must be in 1..16");
  const Eigen::Index dim = Eigen::Index{1} << n;
  CMatrix lower = CMatrix::Zero(2, 2);
  lower(1, 0) = 1.0;  // |1⟩⟨0|
  std::vector<std::pair<long, CMatrix>> out;
  for (int k = 0; 2 * k <= n; ++k) {
    const long mult = detail::binomial(n, k) - detail::binomial(n, k - 1);
    const int width = n - 2 * k + 1;
    CVector top = CVector::Zero(dim);
    // Singlets on pairs (0,1), (2,3), …; remaining sites in |0⟩.
    for (Eigen::Index mask = 0; mask < (Eigen::Index{1} << k); ++mask) {
      Eigen::Index idx = 0;
      double sign = 1.0;
      for (int pair = 0; pair < k; ++pair) {
        const bool flip = (mask >> pair) & 1;  // |10⟩ instead of |01⟩
        const int hi = n - 1 - 2 * pair, lo = n - 2 - 2 * pair;
        idx |= (flip ? Eigen::Index{1} << hi : Eigen::Index{1} << lo);
        if (flip) sign = -sign;
      }
      top(idx) = sign / std::pow(std::sqrt(2.0), k);
    }
    CMatrix basis(dim, width);
    basis.col(0) = top;
    for (int m = 1; m < width; ++m) {
      CVector next = CVector::Zero(dim);
      for (int s = 0; s < n; ++s) next += detail::apply_site(lower, basis.col(m - 1), s, n);
      basis.col(m) = next / next.norm();
    }
    out.emplace_back(mult, std::move(basis));
  }
  return out;
}

/// M(θ̂) = n^{d/2} S^{-1/2} T_{√nθ̂,v'}(X^{(n)}) S^{-1/2} on the grid
/// θ̂ = x/√n, ‖x‖ ≤ R, with S = Σ_x T_x Δx over the same grid. Everything is
/// kept block-diagonal; at dim^n = 256 a list of dense elements would not fit
/// in memory, so elements are generated on demand.
class CollectivePovm {
 public:
  int n = 0;
  double radius = 0.0;
  double step = 0.0;
  RMatrix vprime;
  TKernel kernel;
  std::vector<RVector> grid;  // x points (scaled outcomes are x/√n)
  std::vector<CollectiveBlock> blocks;
  bool spin_reduced = false;
  double completeness_residual = 0.0;
  double s_defect = 0.0;  // max|S − I|, the quadrature plus tail error
  Eigen::Index support_rank = 0;

  Eigen::Index dim() const {
    Eigen::Index total = 0;
    for (const auto& b : blocks) total += b.multiplicity * b.basis.cols();
    return total;
  }
  Eigen::Index param_dim() const { return static_cast<Eigen::Index>(blocks.front().ops.size()); }
  double outcome_weight() const {
    return std::pow(step, static_cast<double>(param_dim())) /
           std::pow(static_cast<double>(n), 0.5 * static_cast<double>(param_dim()));
  }
  RVector outcome(size_t i) const { return grid[i] / std::sqrt(static_cast<double>(n)); }

  CMatrix t_block(size_t b, size_t i) const { return t_operator(blocks[b].ops, grid[i], kernel); }

  /// Restriction of ρ^{⊗n} (drho null) or of its derivative along drho.
  std::vector<CMatrix> compress_product(const CMatrix& rho, const CMatrix* drho = nullptr) const {
    std::vector<CMatrix> out;
    for (const auto& b : blocks)
      out.push_back(b.basis.adjoint() * detail::apply_product(rho, drho, b.basis, n));
    return out;
  }

  /// Full-space element; only for the unreduced dense form.
  CMatrix element(size_t i) const {
    require(!spin_reduced, "element: POVM is spin-reduced, build it with the dense reduction");
    const CollectiveBlock& b = blocks.front();
    return std::pow(static_cast<double>(n), 0.5 * static_cast<double>(param_dim())) *
           (b.basis * b.s_inv_sqrt * t_block(0, i) * b.s_inv_sqrt * b.basis.adjoint());
  }

  /// Materialized gridded POVM (small dense instances only). The complement of
  /// S's support is attached to the first outcome so completeness is exact.
  Povm materialize(double tol = 1e-5) const {
    require(!spin_reduced && dim() <= 64, "materialize: needs a dense POVM of dimension <= 64");
    const CollectiveBlock& b = blocks.front();
    const CMatrix off = CMatrix::Identity(dim(), dim()) - b.basis * b.support_projector * b.basis.adjoint();
    std::vector<RVector> pts;
    std::vector<double> ws;
    std::vector<CMatrix> els;
    for (size_t i = 0; i < grid.size(); ++i) {
      pts.push_back(outcome(i));
      ws.push_back(outcome_weight());
      CMatrix el = element(i);
      if (i == 0) el += off / outcome_weight();
      els.push_back(std::move(el));
    }
    return Povm::gridded(std::move(pts), std::move(ws), std::move(els), tol);
  }

  /// Tr(Y_j M(θ̂_i)) · weight for every grid point i and operator Y_j, with
  /// ys[j][b] the restriction of Y_j to block b. One pass builds each T once.
  std::vector<std::vector<double>> traces(const std::vector<std::vector<CMatrix>>& ys) const {
    std::vector<std::vector<CMatrix>> sandwiched(ys.size());
    for (size_t j = 0; j < ys.size(); ++j) {
      require(ys[j].size() == blocks.size(), "traces: one matrix per block required");
      for (size_t b = 0; b < blocks.size(); ++b)
        sandwiched[j].push_back(static_cast<double>(blocks[b].multiplicity) *
                                (blocks[b].s_inv_sqrt * ys[j][b] * blocks[b].s_inv_sqrt));
    }
    const double scale = std::pow(step, static_cast<double>(param_dim()));  // n^{d/2}·Δθ̂
    std::vector<std::vector<double>> out(ys.size(), std::vector<double>(grid.size(), 0.0));
    parallel_for(grid.size(), [&](std::size_t i) {
      for (size_t b = 0; b < blocks.size(); ++b) {
        const CMatrix t = t_block(b, i);
        for (size_t j = 0; j < ys.size(); ++j) out[j][i] += scale * trace_product(sandwiched[j][b], t).real();
      }
    });
    return out;
  }
};

inline CollectivePovm build_collective_povm(const CollectiveSpec& spec, const RMatrix& vprime, int n,
                                            CollectivePovmOptions opts = {}) {
  const Eigen::Index d = vprime.rows();
  require(d >= 1 && d <= spec.size(), "collective POVM: v' size must not exceed the observable count");
  require(n >= 1, "collective POVM: n must be positive");
  CollectivePovm m;
  m.n = n;
  m.vprime = vprime;
  m.kernel = t_kernel(vprime, spec.s.topLeftCorner(d, d));
  const RMatrix total_cov = spec.v.topLeftCorner(d, d) + vprime;
  m.radius = opts.radius > 0.0 ? opts.radius : 4.0 * std::sqrt(eigh(total_cov).values.maxCoeff());
  require(opts.steps_per_radius >= 1, "collective POVM: steps_per_radius must be positive");
  m.step = m.radius / opts.steps_per_radius;
  const int per_axis = 2 * opts.steps_per_radius + 1;
  long total = 1;
  for (Eigen::Index k = 0; k < d; ++k) total *= per_axis;
  for (long idx = 0; idx < total; ++idx) {
    RVector x(d);
    long rest = idx;
    for (Eigen::Index k = 0; k < d; ++k) {
      x(k) = m.step * static_cast<double>(rest % per_axis - opts.steps_per_radius);
      rest /= per_axis;
    }
    if (x.norm() <= m.radius * (1.0 + 1e-12)) m.grid.push_back(x);
  }

  const Eigen::Index local = spec.rho.dim();
  const double full = std::pow(static_cast<double>(local), n);
  require(full <= static_cast<double>(opts.cap),
          "collective POVM: dimension " + std::to_string(full) + " exceeds the cap");
  m.spin_reduced = opts.reduction == CollectiveReduction::spin ||
                   (opts.reduction == CollectiveReduction::automatic && local == 2);
  if (m.spin_reduced) {
    require(local == 2, "collective POVM: spin reduction needs qubit observables");
    for (auto& [mult, basis] : spin_ladders(n)) m.blocks.push_back({mult, std::move(basis), {}, {}, {}, {}});
  } else {
    const auto big = static_cast<Eigen::Index>(full);
    m.blocks.push_back({1, CMatrix::Identity(big, big), {}, {}, {}, {}});
  }
  for (auto& b : m.blocks)
    for (Eigen::Index k = 0; k < d; ++k)
      b.ops.push_back(hermitian_part(b.basis.adjoint() * detail::apply_collective(spec.xs[k], b.basis, n)));

  // S = Σ T_x Δx per block, accumulated per worker to keep memory bounded.
  const double dx = std::pow(m.step, static_cast<double>(d));
  const unsigned workers = std::max(1u, std::min<unsigned>(effective_jobs(), 8u));
  std::vector<std::vector<CMatrix>> partial(workers);
  for (auto& p : partial)
    for (const auto& b : m.blocks) p.push_back(CMatrix::Zero(b.basis.cols(), b.basis.cols()));
  parallel_for(workers, [&](std::size_t w) {
    for (size_t i = w; i < m.grid.size(); i += workers)
      for (size_t b = 0; b < m.blocks.size(); ++b) partial[w][b] += dx * m.t_block(b, i);
  });
  for (size_t bi = 0; bi < m.blocks.size(); ++bi) {
    CollectiveBlock& b = m.blocks[bi];
    const Eigen::Index k = b.basis.cols();
    b.s_operator = CMatrix::Zero(k, k);
    for (const auto& p : partial) b.s_operator += p[bi];
    b.s_operator = hermitian_part(b.s_operator);
    m.s_defect = std::max(m.s_defect, max_abs(b.s_operator - CMatrix::Identity(k, k)));
    const auto e = eigh(b.s_operator);
    const double lmax = e.values.maxCoeff();
    if (lmax <= 0.0) throw NumericalError("collective POVM: S vanishes on a block");
    RVector inv(k), proj(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const bool keep = e.values(j) > opts.support_tol * lmax;
      inv(j) = keep ? 1.0 / std::sqrt(e.values(j)) : 0.0;
      proj(j) = keep ? 1.0 : 0.0;
      m.support_rank += keep ? b.multiplicity : 0;
    }
    b.s_inv_sqrt = e.vectors * inv.asDiagonal() * e.vectors.adjoint();
    b.support_projector = e.vectors * proj.asDiagonal() * e.vectors.adjoint();
    // Σ w M(θ̂) = S^{-1/2} S S^{-1/2} must equal the support projector.
    m.completeness_residual = std::max(
        m.completeness_residual, max_abs(b.s_inv_sqrt * b.s_operator * b.s_inv_sqrt - b.support_projector));
  }
  return m;
}

/// ∂ρ^{⊗n}/∂θ^j = Σ_sites ρ ⊗ … ⊗ ∂_jρ ⊗ … ⊗ ρ.
inline CMatrix tensor_power_derivative(const CMatrix& rho, const CMatrix& drho, int n) {
  CMatrix total;
  for (int site = 0; site < n; ++site) {
    CMatrix term = CMatrix::Identity(1, 1);
    for (int j = 0; j < n; ++j) term = kron(term, j == site ? drho : rho);
    if (site == 0) total = term;
    else total += term;
  }
  return total;
}

struct CollectiveCheck {
  int n = 0;
  RVector mean;                  // e_θ(M^n)
  RMatrix a;                     // ∂e/∂θ
  RMatrix covariance;            // about the mean
  RMatrix scaled_covariance;     // n A⁻¹ cov A⁻ᵀ
  double scaled_trace = 0.0;
  double a_gap = 0.0;            // ‖A − I‖ (max entry)
  double completeness_residual = 0.0;
  double s_defect = 0.0;
  double leakage = 0.0;          // Tr ρ^{⊗n}(I − P_support)
  std::size_t grid_points = 0;
  Eigen::Index dimension = 0;
  double seconds = 0.0;
};

struct CollectiveCheckResult {
  RMatrix target;  // v(X) + v'
  double target_trace = 0.0;
  std::vector<CollectiveCheck> per_n;
};

/// Exact statistics of the collective POVM at θ for each n: the mean, its
/// θ-derivative A_n (product-rule derivative of ρ^{⊗n}, no finite
/// differences) and the covariance after the A_n⁻¹ correction.
inline CollectiveCheckResult collective_estimator_check(const ParametricModel& model, const RVector& theta,
                                                        const std::vector<CMatrix>& xs,
                                                        const RMatrix& vprime, const std::vector<int>& ns,
                                                        CollectivePovmOptions opts = {}) {
  const DensityOperator rho = model.state_at(theta);
  const std::vector<CMatrix> derivs = model_derivatives(model, theta);
  require(static_cast<int>(xs.size()) == model.param_dim, "collective check: need one X per parameter");
  const CollectiveSpec spec = make_collective_spec(rho, xs);
  CollectiveCheckResult res;
  res.target = spec.v + vprime;
  res.target_trace = res.target.trace();
  const Eigen::Index d = model.param_dim;
  for (int n : ns) {
    const auto start = std::chrono::steady_clock::now();
    const CollectivePovm m = build_collective_povm(spec, vprime, n, opts);
    std::vector<std::vector<CMatrix>> ys{m.compress_product(rho.matrix())};
    for (const CMatrix& dr : derivs) ys.push_back(m.compress_product(rho.matrix(), &dr));
    const auto tr = m.traces(ys);
    CollectiveCheck c;
    c.n = n;
    c.dimension = m.dim();
    c.grid_points = m.grid.size();
    c.completeness_residual = m.completeness_residual;
    c.s_defect = m.s_defect;
    double support_mass = 0.0;
    for (size_t b = 0; b < m.blocks.size(); ++b)
      support_mass += m.blocks[b].multiplicity * trace_product(ys[0][b], m.blocks[b].support_projector).real();
    c.leakage = std::max(0.0, 1.0 - support_mass);
    c.mean = RVector::Zero(d);
    c.a = RMatrix::Zero(d, d);
    double mass = 0.0;
    for (size_t i = 0; i < m.grid.size(); ++i) {
      const RVector t = m.outcome(i);
      const double p = tr[0][i];
      mass += p;
      c.mean += p * t;
      for (Eigen::Index j = 0; j < d; ++j) c.a.col(j) += tr[1 + j][i] * t;
    }
    if (std::abs(mass - (1.0 - c.leakage)) > 1e-6)
      throw NumericalError("collective check: outcome mass " + std::to_string(mass) +
                           " disagrees with the support mass");
    c.mean /= mass;
    c.covariance = RMatrix::Zero(d, d);
    for (size_t i = 0; i < m.grid.size(); ++i) {
      const RVector diff = m.outcome(i) - c.mean;
      c.covariance += (tr[0][i] / mass) * diff * diff.transpose();
    }
    const RMatrix a_inv = checked_inverse(c.a, 1e8);
    c.scaled_covariance = symmetric_part(n * a_inv * c.covariance * a_inv.transpose());
    c.scaled_trace = c.scaled_covariance.trace();
    c.a_gap = max_abs(c.a - RMatrix::Identity(d, d));
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.per_n.push_back(std::move(c));
  }
  return res;
}

/// Equal mixture of projective Pauli measurements along the given axes.
inline Povm pauli_mixture(const std::string& axes) {
  require(!axes.empty(), "pauli_mixture: no axes");
  std::vector<Povm> parts;
  for (char a : axes) parts.push_back(Povm::spectral(pauli(a)));
  return Povm::combine(parts, std::vector<double>(axes.size(), 1.0 / static_cast<double>(axes.size())));
}

struct C1Measurement {
  std::optional<Povm> povm;
  std::vector<double> weights;        // mixing probabilities
  std::vector<RVector> directions;    // coefficient vectors c on the SLDs
};

/// Separable measurement attaining (tr √(j^{-1/2} g j^{-1/2}))² on a qubit:
/// with √A = Σ μ_i e_i e_iᵀ for A = j^{-1/2} g j^{-1/2}, measure the SLD
/// combination Σ_k (j^{-1/2} e_i)_k L_k with probability μ_i / Σμ.
inline C1Measurement c1_optimal_measurement(const ParametricModel& model, const RVector& theta,
                                            const RMatrix& g) {
  require(model.hilbert_dim == 2, "c1_optimal_measurement: qubit models only");
  validate_weight(g, model.param_dim);
  auto [lset, j] = sld_fisher(model, theta);
  const RMatrix r = pd_inv_sqrt(j.real());
  const auto e = eigh(RMatrix(psd_sqrt(r * g * r, 1e-9)));
  const double total = e.values.sum();
  require(total > 0.0, "c1_optimal_measurement: zero weight matrix");
  C1Measurement out;
  std::vector<Povm> parts;
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    const double w = std::max(e.values(i), 0.0) / total;
    if (w <= 1e-14) continue;
    const RVector c = r * e.vectors.col(i);
    CMatrix h = CMatrix::Zero(2, 2);
    for (Eigen::Index k = 0; k < c.size(); ++k) h += c(k) * lset.ops[k];
    parts.push_back(Povm::spectral(h));
    out.weights.push_back(w);
    out.directions.push_back(c);
  }
  double sum = 0.0;
  for (double w : out.weights) sum += w;
  for (double& w : out.weights) w /= sum;
  out.povm = Povm::combine(parts, out.weights);
  return out;
}

struct TwoStageOptions {
  long trials = 2000;
  std::uint64_t seed = 1;
  int mle_grid = 41;
  double boundary_margin = 1e-6;  // stage-1 estimates with λmin(ρ) below this are discarded
};

struct TwoStageReport {
  EstimationReport report;
  long n = 0;
  long stage1 = 0;
  double scaled_trace = 0.0;     // n·tr(g·MSE)
  double scaled_trace_se = 0.0;
  double qubit_c1 = 0.0;
  double holevo = 0.0;
  std::vector<RVector> estimates;
};

/// Two-stage adaptive estimator: ⌈√n⌉ copies measured with M' and an MLE θ̂₁,
/// then the remaining copies measured with the C¹-optimal measurement at θ̂₁
/// and a second MLE on those outcomes only.
inline TwoStageReport two_stage_estimate(const ParametricModel& model, const RVector& theta_true,
                                         const Povm& mprime, long n, const RMatrix& g,
                                         TwoStageOptions opts = {}) {
  require(model.hilbert_dim == 2, "two-stage estimator: qubit models only");
  require(n >= 4, "two-stage estimator: n must be at least 4");
  require(opts.trials >= 2, "two-stage estimator: need at least two trials");
  validate_weight(g, model.param_dim);
  const DensityOperator rho = model.state_at(theta_true);
  const long n1 = static_cast<long>(std::ceil(std::sqrt(static_cast<double>(n))));
  const long n2 = n - n1;
  const auto grid = make_likelihood_grid(model, opts.mle_grid);
  const OutcomeDistribution dist1 = measure_distribution(rho, mprime);

  std::vector<RVector> est(static_cast<size_t>(opts.trials));
  std::vector<char> ok(est.size(), 0);
  parallel_for(est.size(), [&](std::size_t t) {
    const std::uint64_t s = derive_seed(opts.seed, t);
    auto to_counts = [](const std::vector<long>& h) { return std::vector<double>(h.begin(), h.end()); };
    const auto c1 = to_counts(histogram(sample_outcomes(dist1, derive_seed(s, 0), n1), dist1.size()));
    MleOptions mo;
    mo.grid = grid;
    MleResult first;
    try {
      first = mle(model, mprime, c1, mo);
    } catch (const NumericalError&) {
      return;
    }
    if (first.boundary) return;
    if (eigh(model.state(first.theta).matrix()).values(0) < opts.boundary_margin) return;
    C1Measurement m2;
    try {
      m2 = c1_optimal_measurement(model, first.theta, g);
    } catch (const std::exception&) {
      return;
    }
    const OutcomeDistribution dist2 = measure_distribution(rho, *m2.povm);
    const auto c2 = to_counts(histogram(sample_outcomes(dist2, derive_seed(s, 1), n2), dist2.size()));
    try {
      est[t] = mle(model, *m2.povm, c2, mo).theta;
      ok[t] = 1;
    } catch (const NumericalError&) {
    }
  });

  std::vector<RVector> kept;
  for (size_t t = 0; t < est.size(); ++t)
    if (ok[t]) kept.push_back(est[t]);
  if (kept.size() < 2) throw NumericalError("two-stage estimator: fewer than two usable trials");
  auto [lset, j] = sld_fisher(model, theta_true);
  TwoStageReport r;
  r.n = n;
  r.stage1 = n1;
  r.qubit_c1 = qubit_c1(j.real(), g);
  r.holevo = holevo_bound(model, theta_true, g).value;
  r.report = mse_report(kept, theta_true, r.qubit_c1 / static_cast<double>(n), "qubit_c1", &g);
  r.report.seed = opts.seed;
  r.report.discarded = opts.trials - static_cast<long>(kept.size());
  r.scaled_trace = static_cast<double>(n) * r.report.weighted_trace;
  r.scaled_trace_se = static_cast<double>(n) * r.report.weighted_trace_se;
  r.estimates = std::move(kept);
  return r;
}

}  // namespace qest
