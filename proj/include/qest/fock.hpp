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

// Truncated Fock-basis numerics for one-mode displaced thermal states, the
// number and heterodyne measurements, and exact samplers for both.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "qest/qcore.hpp"

namespace qest {

struct FockState {
  int cutoff = 0;
  CMatrix matrix;         // renormalized, cutoff × cutoff
  double tail_mass = 0.0; // 1 − trace before renormalization
};

namespace detail {

/// Block [0, rows) × [0, cols) of the displacement D(β) = exp(βa† − β̄a).
/// The generator is exponentiated in a padded space so that truncation
/// effects at the top levels never reach the returned block.
inline CMatrix displacement_block(cplx beta, int rows, int cols) {
  const int pad = 64 + static_cast<int>(std::ceil(16.0 * std::abs(beta) + 4.0 * std::norm(beta)));
  const int dim = std::max(rows, cols) + pad;
  // βa† − β̄a = i H with H Hermitian.
  CMatrix h = CMatrix::Zero(dim, dim);
  for (int m = 1; m < dim; ++m) {
    const double s = std::sqrt(static_cast<double>(m));
    h(m, m - 1) = -kI * beta * s;
    h(m - 1, m) = kI * std::conj(beta) * s;
  }
  const auto e = eigh(h);
  const CVector phase = e.values.unaryExpr([](double x) { return std::exp(kI * x); });
  const CMatrix top = e.vectors.topRows(rows);
  const CMatrix left = e.vectors.topRows(cols);
  return top * phase.asDiagonal() * left.adjoint();
}

/// Number of thermal levels whose cumulative mass reaches 1 − 1e-17.
inline int thermal_levels(double N) {
  if (N <= 0.0) return 1;
  const double q = N / (N + 1.0);
  return static_cast<int>(std::ceil(std::log(1e-17) / std::log(q))) + 1;
}

inline FockState build_fock_state(cplx zeta, double N, int cutoff) {
  const int levels = thermal_levels(N);
  const CMatrix cols = displacement_block(zeta, cutoff, levels);
  RVector weights(levels);
  const double q = N > 0.0 ? N / (N + 1.0) : 0.0;
  double w = 1.0 / (N + 1.0);
  for (int j = 0; j < levels; ++j) {
    weights(j) = w;
    w *= q;
  }
  CMatrix rho = cols * weights.asDiagonal() * cols.adjoint();
  const double trace = rho.trace().real();
  FockState st;
  st.cutoff = cutoff;
  st.tail_mass = std::max(0.0, 1.0 - trace);
  st.matrix = hermitian_part(rho) / trace;
  return st;
}

}  // namespace detail

/// Displaced thermal state ρ_{ζ,N} = exp(log(N/(N+1))(a*−ζ̄)(a−ζ))/(N+1)
/// in the Fock basis. cutoff ≤ 0 selects the smallest power of two whose
/// tail mass is below tail_tol.
inline FockState fock_density(cplx zeta, double N, int cutoff = 0, double tail_tol = 1e-8) {
  require(N >= 0.0, "fock_density: N must be non-negative");
  if (cutoff <= 0) {
    for (int c = 4; c <= 4096; c *= 2) {
      FockState st = detail::build_fock_state(zeta, N, c);
      if (st.tail_mass < tail_tol) return st;
    }
    throw NumericalError("fock_density: no cutoff up to 4096 reaches the tail tolerance");
  }
  FockState st = detail::build_fock_state(zeta, N, cutoff);
  if (st.tail_mass >= tail_tol)
    throw NumericalError("fock_density: cutoff " + std::to_string(cutoff) + " leaves tail mass " +
                         std::to_string(st.tail_mass));
  return st;
}

/// Tr ρ exp(i(xQ + yP)) on the truncated state (Q = (a+a†)/√2, P = (a−a†)/(i√2)).
inline cplx fock_characteristic(const FockState& st, double x, double y) {
  const cplx beta = cplx(-y, x) / std::sqrt(2.0);
  const CMatrix disp = detail::displacement_block(beta, st.cutoff, st.cutoff);
  return trace_product(st.matrix, disp);
}

/// Closed form of the displaced-thermal characteristic function.
inline cplx gaussian_characteristic(cplx zeta, double N, double x, double y) {
  const double s2 = std::sqrt(2.0);
  return std::exp(kI * (s2 * zeta.real() * x + s2 * zeta.imag() * y) -
                  0.5 * (N + 0.5) * (x * x + y * y));
}

/// Number measurement k ↦ |k⟩⟨k|.
inline OutcomeDistribution number_distribution(const FockState& st) {
  OutcomeDistribution d;
  double total = 0.0;
  for (int k = 0; k < st.cutoff; ++k) {
    d.labels.push_back(std::to_string(k));
    const double p = std::max(0.0, st.matrix(k, k).real());
    d.probs.push_back(p);
    total += p;
  }
  for (double& p : d.probs) p /= total;
  return d;
}

inline std::pair<double, double> mean_variance(const OutcomeDistribution& d) {
  double m = 0.0, m2 = 0.0;
  for (size_t k = 0; k < d.size(); ++k) {
    m += static_cast<double>(k) * d.probs[k];
    m2 += static_cast<double>(k * k) * d.probs[k];
  }
  return {m, m2 - m * m};
}

/// Fock-basis quadrature of ∫ |α⟩⟨α| d²α/π over |α| ≤ radius on the first
/// `levels` number states (polar grid, Gauss–Legendre in r).
inline CMatrix heterodyne_resolution(int levels, double radius, int radial_nodes = 400,
                                     int angular_nodes = 64) {
  // Gauss–Legendre nodes via Newton on P_n.
  std::vector<double> xs(radial_nodes), ws(radial_nodes);
  for (int i = 0; i < radial_nodes; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (radial_nodes + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= radial_nodes; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      double dp = radial_nodes * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) {
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        break;
      }
      ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    xs[i] = x;
  }
  CMatrix acc = CMatrix::Zero(levels, levels);
  for (int i = 0; i < radial_nodes; ++i) {
    const double r = 0.5 * radius * (xs[i] + 1.0);
    const double wr = 0.5 * radius * ws[i];
    for (int a = 0; a < angular_nodes; ++a) {
      const double phi = 2.0 * std::numbers::pi * a / angular_nodes;
      const cplx alpha = std::polar(r, phi);
      CVector v(levels);
      cplx term = std::exp(-0.5 * r * r);
      for (int m = 0; m < levels; ++m) {
        if (m > 0) term *= alpha / std::sqrt(static_cast<double>(m));
        v(m) = term;
      }
      acc += (wr * r * (2.0 * std::numbers::pi / angular_nodes) / std::numbers::pi) *
             (v * v.adjoint());
    }
  }
  return acc;
}

/// Heterodyne outcomes on ρ_{ζ,N}: complex Gaussian, mean ζ, E|α−ζ|² = N+1.
inline std::vector<cplx> heterodyne_sample(cplx zeta, double N, std::size_t count,
                                           std::uint64_t seed) {
  require(N >= 0.0, "heterodyne_sample: N must be non-negative");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5 * (N + 1.0)));
  std::vector<cplx> out(count);
  for (auto& a : out) {
    const double re = g(gen);
    const double im = g(gen);
    a = zeta + cplx(re, im);
  }
  return out;
}

/// Photon counts on ρ_{0,N}: geometric law P(k) = N^k/(N+1)^{k+1}.
template <class Gen>
long sample_photon_count(double N, Gen& gen) {
  if (N <= 0.0) return 0;
  std::geometric_distribution<long> geo(1.0 / (N + 1.0));
  return geo(gen);
}

}  // namespace qest
