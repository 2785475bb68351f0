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

// Parametric state families θ ↦ ρ_θ with derivative access.

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "qest/fock.hpp"
#include "qest/qcore.hpp"

namespace qest {

/// Immutable model description. `derivative` may be empty, in which case
/// model_derivatives falls back to central differences.
struct ParametricModel {
  std::string name;
  int param_dim = 0;
  Eigen::Index hilbert_dim = 0;
  std::function<DensityOperator(const RVector&)> state;
  std::function<CMatrix(const RVector&, int)> derivative;
  std::function<bool(const RVector&)> in_domain;
  RVector lower;  // bounding box used for grid searches
  RVector upper;

  DensityOperator state_at(const RVector& theta) const {
    check_theta(theta);
    return state(theta);
  }

  void check_theta(const RVector& theta) const {
    require(theta.size() == param_dim, name + ": expected " + std::to_string(param_dim) +
                                           " parameters, got " + std::to_string(theta.size()));
    require(in_domain(theta), name + ": parameter outside the model domain");
  }
};

namespace detail {

inline CMatrix qubit_matrix(double x, double y, double z) {
  CMatrix m(2, 2);
  m << 1.0 + x, cplx(y, z), cplx(y, -z), 1.0 - x;
  return 0.5 * m;
}

inline bool in_ball(const RVector& t, double radius2 = 1.0) {
  return t.squaredNorm() <= radius2 + 1e-12;
}

}  // namespace detail

enum class QubitKind { full, z0 };

/// ρ = ½[[1+x, y+iz],[y−iz, 1−x]] on the Bloch ball (full), or its z = 0 slice.
inline ParametricModel qubit_family(QubitKind kind) {
  ParametricModel m;
  m.hilbert_dim = 2;
  if (kind == QubitKind::full) {
    m.name = "qubit-full";
    m.param_dim = 3;
    m.state = [](const RVector& t) {
      return DensityOperator(detail::qubit_matrix(t(0), t(1), t(2)));
    };
    m.derivative = [](const RVector&, int k) {
      CMatrix d = CMatrix::Zero(2, 2);
      if (k == 0) d << 0.5, 0, 0, -0.5;
      else if (k == 1) d << 0, 0.5, 0.5, 0;
      else d << 0, 0.5 * kI, -0.5 * kI, 0;
      return d;
    };
  } else {
    m.name = "qubit-z0";
    m.param_dim = 2;
    m.state = [](const RVector& t) { return DensityOperator(detail::qubit_matrix(t(0), t(1), 0.0)); };
    m.derivative = [](const RVector&, int k) {
      CMatrix d = CMatrix::Zero(2, 2);
      if (k == 0) d << 0.5, 0, 0, -0.5;
      else d << 0, 0.5, 0.5, 0;
      return d;
    };
  }
  m.in_domain = [](const RVector& t) { return detail::in_ball(t); };
  m.lower = RVector::Constant(m.param_dim, -1.0);
  m.upper = RVector::Constant(m.param_dim, 1.0);
  return m;
}

/// Full qubit model with z held fixed; parameters (x, y).
inline ParametricModel qubit_xy_family(double z) {
  require(std::abs(z) <= 1.0, "qubit-xy: |z| must be at most 1");
  ParametricModel full = qubit_family(QubitKind::full);
  ParametricModel m;
  m.name = "qubit-xy:" + std::to_string(z);
  m.param_dim = 2;
  m.hilbert_dim = 2;
  m.state = [z](const RVector& t) { return DensityOperator(detail::qubit_matrix(t(0), t(1), z)); };
  m.derivative = [d = full.derivative, z](const RVector& t, int k) {
    return d(RVector{{t(0), t(1), z}}, k);
  };
  m.in_domain = [z](const RVector& t) { return t.squaredNorm() + z * z <= 1.0 + 1e-12; };
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  m.lower = RVector::Constant(2, -r);
  m.upper = RVector::Constant(2, r);
  return m;
}

/// Commutative simplex family diag(θ₁, …, θ_{K−1}, 1 − Σθ).
inline ParametricModel diagonal_family(int outcomes) {
  require(outcomes >= 2, "diagonal family needs at least two outcomes");
  ParametricModel m;
  m.name = "diag:" + std::to_string(outcomes);
  m.param_dim = outcomes - 1;
  m.hilbert_dim = outcomes;
  m.state = [outcomes](const RVector& t) {
    CMatrix d = CMatrix::Zero(outcomes, outcomes);
    for (int k = 0; k + 1 < outcomes; ++k) d(k, k) = t(k);
    d(outcomes - 1, outcomes - 1) = 1.0 - t.sum();
    return DensityOperator(d);
  };
  m.derivative = [outcomes](const RVector&, int k) {
    CMatrix d = CMatrix::Zero(outcomes, outcomes);
    d(k, k) = 1.0;
    d(outcomes - 1, outcomes - 1) = -1.0;
    return d;
  };
  m.in_domain = [](const RVector& t) {
    return (t.array() >= -1e-12).all() && t.sum() <= 1.0 + 1e-12;
  };
  m.lower = RVector::Zero(m.param_dim);
  m.upper = RVector::Ones(m.param_dim);
  return m;
}

/// One-mode displaced thermal family with known N, θ = (√2ζ_x, √2ζ_y) = the
/// means of (Q, P). Truncated at a fixed Fock cutoff; derivatives by
/// finite differences.
inline ParametricModel gauss1_family(double N, int cutoff = 0) {
  require(N >= 0.0, "gauss1: N must be non-negative");
  if (cutoff <= 0) cutoff = fock_density(cplx(0.0), N).cutoff;
  ParametricModel m;
  m.name = "gauss1:" + std::to_string(N);
  m.param_dim = 2;
  m.hilbert_dim = cutoff;
  m.state = [N, cutoff](const RVector& t) {
    const FockState st = fock_density(cplx(t(0), t(1)) / std::sqrt(2.0), N, cutoff, 1e-6);
    return DensityOperator(st.matrix);
  };
  m.in_domain = [](const RVector& t) { return t.allFinite() && t.norm() <= 1.0; };
  m.lower = RVector::Constant(2, -1.0);
  m.upper = RVector::Constant(2, 1.0);
  return m;
}

/// Coordinates θ' = cθ; states are unchanged, derivatives scale by 1/c.
inline ParametricModel rescaled(const ParametricModel& base, double c) {
  require(c != 0.0, "rescaled: zero scale");
  ParametricModel m = base;
  m.name = base.name + "*" + std::to_string(c);
  m.state = [s = base.state, c](const RVector& t) { return s(t / c); };
  if (base.derivative)
    m.derivative = [d = base.derivative, c](const RVector& t, int k) {
      return CMatrix(d(t / c, k) / c);
    };
  m.in_domain = [dom = base.in_domain, c](const RVector& t) { return dom(t / c); };
  m.lower = (c > 0 ? base.lower : base.upper) * c;
  m.upper = (c > 0 ? base.upper : base.lower) * c;
  return m;
}

struct DerivativeOptions {
  double step = 1e-5;
};

/// ∂ρ/∂θ^k for every k: analytic when the model provides it, else central
/// differences. Each result is symmetrized to exact Hermiticity.
inline std::vector<CMatrix> model_derivatives(const ParametricModel& model, const RVector& theta,
                                              DerivativeOptions opts = {}) {
  model.check_theta(theta);
  std::vector<CMatrix> out;
  out.reserve(static_cast<size_t>(model.param_dim));
  for (int k = 0; k < model.param_dim; ++k) {
    if (model.derivative) {
      out.push_back(hermitian_part(model.derivative(theta, k)));
      continue;
    }
    RVector plus = theta, minus = theta;
    plus(k) += opts.step;
    minus(k) -= opts.step;
    if (!model.in_domain(plus) || !model.in_domain(minus))
      throw ValidationError(model.name + ": finite-difference stencil leaves the domain at "
                            "parameter " + std::to_string(k));
    CMatrix d = (model.state(plus).matrix() - model.state(minus).matrix()) / (2.0 * opts.step);
    out.push_back(hermitian_part(d));
  }
  return out;
}

/// Central-difference derivatives even when analytic ones exist (test oracle
/// and cross-check).
inline std::vector<CMatrix> finite_difference_derivatives(const ParametricModel& model,
                                                          const RVector& theta,
                                                          double step = 1e-5) {
  ParametricModel copy = model;
  copy.derivative = nullptr;
  return model_derivatives(copy, theta, {step});
}

/// CLI model names: "qubit-full", "qubit-z0", "qubit-xy:<z>", "diag:<K>",
/// "gauss1:<N>".
inline ParametricModel model_by_name(const std::string& name) {
  auto arg = [&](const std::string& prefix) { return name.substr(prefix.size()); };
  try {
    if (name == "qubit-full") return qubit_family(QubitKind::full);
    if (name == "qubit-z0") return qubit_family(QubitKind::z0);
    if (name.rfind("qubit-xy:", 0) == 0) return qubit_xy_family(std::stod(arg("qubit-xy:")));
    if (name.rfind("diag:", 0) == 0) return diagonal_family(std::stoi(arg("diag:")));
    if (name.rfind("gauss1:", 0) == 0) return gauss1_family(std::stod(arg("gauss1:")));
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const ValidationError*>(&e)) throw;
    throw ValidationError("malformed model name: " + name);
  }
  throw ValidationError("unknown model: " + name);
}

}  // namespace qest
