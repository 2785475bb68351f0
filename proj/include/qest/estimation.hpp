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

// Mean-square-error reports and maximum likelihood estimation on a grid.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "qest/models.hpp"
#include "qest/qcore.hpp"

namespace qest {

struct EstimationReport {
  RVector theta_true;
  RVector empirical_mean;
  RMatrix mse;              // Σ(θ̂−θ)(θ̂−θ)ᵀ / trials
  RMatrix standard_errors;  // per entry of mse
  double weighted_trace = 0.0;     // tr(g·mse)
  double weighted_trace_se = 0.0;
  long trials = 0;
  long discarded = 0;
  std::uint64_t seed = 0;
  double bound_value = std::numeric_limits<double>::quiet_NaN();
  std::string bound_kind;
};

/// Empirical MSE matrix with jackknife standard errors. For a sample mean the
/// jackknife estimate reduces to sd/√T, which is what is computed.
inline EstimationReport mse_report(const std::vector<RVector>& estimates, const RVector& theta_true,
                                   double bound_value = std::numeric_limits<double>::quiet_NaN(),
                                   std::string bound_kind = {}, const RMatrix* g = nullptr) {
  require(estimates.size() >= 2, "mse_report needs at least two estimates");
  const Eigen::Index d = theta_true.size();
  const RMatrix w = g ? *g : RMatrix::Identity(d, d);
  require(w.rows() == d && w.cols() == d, "mse_report: weight size mismatch");
  const auto t = static_cast<double>(estimates.size());
  EstimationReport r;
  r.theta_true = theta_true;
  r.trials = static_cast<long>(estimates.size());
  r.bound_value = bound_value;
  r.bound_kind = std::move(bound_kind);
  r.empirical_mean = RVector::Zero(d);
  r.mse = RMatrix::Zero(d, d);
  RMatrix sq = RMatrix::Zero(d, d);
  double tr = 0.0, tr2 = 0.0;
  for (const RVector& e : estimates) {
    require(e.size() == d, "mse_report: estimate dimension mismatch");
    const RVector err = e - theta_true;
    const RMatrix outer = err * err.transpose();
    r.empirical_mean += e;
    r.mse += outer;
    sq += outer.cwiseProduct(outer);
    const double z = err.dot(w * err);
    tr += z;
    tr2 += z * z;
  }
  r.empirical_mean /= t;
  r.mse /= t;
  const RMatrix var = (sq / t - r.mse.cwiseProduct(r.mse)) * (t / (t - 1.0));
  r.standard_errors = (var.array().max(0.0) / t).sqrt().matrix();
  r.weighted_trace = tr / t;
  const double vtr = (tr2 / t - r.weighted_trace * r.weighted_trace) * (t / (t - 1.0));
  r.weighted_trace_se = std::sqrt(std::max(vtr, 0.0) / t);
  return r;
}

/// Model states on a regular grid over the model's bounding box, restricted to
/// the domain. Shared across MLE calls with the same model.
struct LikelihoodGrid {
  std::vector<RVector> points;
  std::vector<CMatrix> states;
};

inline std::shared_ptr<const LikelihoodGrid> make_likelihood_grid(const ParametricModel& model,
                                                                  int per_axis = 41) {
  require(model.param_dim >= 1 && model.param_dim <= 3, "MLE grid supports 1 to 3 parameters");
  require(per_axis >= 2, "MLE grid needs at least two points per axis");
  auto grid = std::make_shared<LikelihoodGrid>();
  const int d = model.param_dim;
  long total = 1;
  for (int k = 0; k < d; ++k) total *= per_axis;
  for (long idx = 0; idx < total; ++idx) {
    RVector t(d);
    long rest = idx;
    for (int k = 0; k < d; ++k) {
      const long i = rest % per_axis;
      rest /= per_axis;
      t(k) = model.lower(k) + (model.upper(k) - model.lower(k)) * static_cast<double>(i) / (per_axis - 1);
    }
    if (!model.in_domain(t)) continue;
    grid->points.push_back(t);
    grid->states.push_back(model.state(t).matrix());
  }
  require(!grid->points.empty(), "MLE grid has no points inside the domain");
  return grid;
}

struct MleOptions {
  int per_axis = 41;
  double gradient_tol = 1e-8;  // on the per-count log-likelihood gradient
  int max_iter = 200;
  std::shared_ptr<const LikelihoodGrid> grid;  // built on demand when empty
};

struct MleResult {
  RVector theta;
  double log_likelihood = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool boundary = false;
};

namespace detail {

inline double log_likelihood(const CMatrix& rho, const Povm& m, const std::vector<double>& counts) {
  double ll = 0.0;
  const auto& els = m.elements();
  for (size_t w = 0; w < els.size(); ++w) {
    if (counts[w] <= 0.0) continue;
    const double p = els[w].weight * trace_product(rho, els[w].op).real();
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    ll += counts[w] * std::log(p);
  }
  return ll;
}

}  // namespace detail

/// argmax_θ Σ_ω c_ω log p_θ(ω): grid search (ties to the smallest grid
/// index) followed by Fisher scoring confined to the domain.
inline MleResult mle(const ParametricModel& model, const Povm& m, const std::vector<double>& counts,
                     MleOptions opts = {}) {
  require(model.param_dim <= 3, "MLE is limited to at most 3 parameters");
  require(counts.size() == m.size(), "MLE: one count per POVM outcome required");
  require(m.dim() == model.hilbert_dim, "MLE: POVM dimension mismatch");
  double total = 0.0;
  for (double c : counts) {
    require(c >= 0.0 && std::isfinite(c), "MLE: counts must be non-negative");
    total += c;
  }
  require(total > 0.0, "MLE: counts are empty");
  if (!opts.grid) opts.grid = make_likelihood_grid(model, opts.per_axis);
  const LikelihoodGrid& grid = *opts.grid;

  size_t best = 0;
  double best_ll = -std::numeric_limits<double>::infinity();
  double worst_ll = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < grid.points.size(); ++i) {
    const double ll = detail::log_likelihood(grid.states[i], m, counts);
    if (ll > best_ll) {
      best_ll = ll;
      best = i;
    }
    worst_ll = std::min(worst_ll, ll);
  }
  if (!std::isfinite(best_ll)) throw NumericalError("MLE: likelihood vanishes on the whole grid");
  if (best_ll - worst_ll < 1e-12 * std::max(1.0, std::abs(best_ll)))
    throw NumericalError("MLE: likelihood is flat");

  MleResult r;
  r.theta = grid.points[best];
  r.log_likelihood = best_ll;
  const auto& els = m.elements();
  const int d = model.param_dim;
  for (; r.iterations < opts.max_iter; ++r.iterations) {
    const CMatrix rho = model.state(r.theta).matrix();
    std::vector<CMatrix> derivs;
    try {
      derivs = model_derivatives(model, r.theta);
    } catch (const ValidationError&) {
      r.boundary = true;  // stencil does not fit inside the domain
      break;
    }
    RVector score = RVector::Zero(d);
    RMatrix info = RMatrix::Zero(d, d);
    RVector dp(d);
    for (size_t w = 0; w < els.size(); ++w) {
      const double p = els[w].weight * trace_product(rho, els[w].op).real();
      if (p <= 1e-300) continue;
      for (int k = 0; k < d; ++k) dp(k) = els[w].weight * trace_product(derivs[k], els[w].op).real();
      score += (counts[w] / p) * dp;
      info += (total / p) * dp * dp.transpose();
    }
    r.gradient_norm = score.norm() / total;
    if (r.gradient_norm < opts.gradient_tol) break;
    RVector step = (info + 1e-12 * info.trace() * RMatrix::Identity(d, d)).ldlt().solve(score);
    if (!step.allFinite()) step = score / total;
    bool moved = false, blocked = false;
    for (int ls = 0; ls < 60; ++ls) {
      const RVector cand = r.theta + step;
      if (!model.in_domain(cand)) {
        blocked = true;
        step *= 0.5;
        continue;
      }
      const double ll = detail::log_likelihood(model.state(cand).matrix(), m, counts);
      if (ll > r.log_likelihood) {
        r.theta = cand;
        r.log_likelihood = ll;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      r.boundary = blocked;
      break;
    }
  }
  return r;
}

}  // namespace qest
