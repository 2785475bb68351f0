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

// gaussian (Wick moments, T-kernel, Fock numerics, concentration protocol) and clt.

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "test_util.hpp"

namespace qest {
namespace {

constexpr double kPi = std::numbers::pi;

RMatrix eye(Eigen::Index d) { return RMatrix::Identity(d, d); }

double double_factorial(int k) {
  double r = 1.0;
  for (int i = k; i > 1; i -= 2) r *= i;
  return r;
}

// ---------------------------------------------------------------- Wick moments

TEST(GaussianMoment, SecondMomentsAndOddVanish) {
  const GaussianSpec g = one_mode_spec(cplx(0.3, -0.2), 1.0);
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j) {
      const cplx m = gaussian_moment(g, {k, j});
      EXPECT_DOUBLE_EQ(m.real(), g.v(k, j));
      EXPECT_DOUBLE_EQ(m.imag(), g.s(k, j));
    }
  EXPECT_EQ(gaussian_moment(g, {0}), cplx(0.0));
  EXPECT_EQ(gaussian_moment(g, {0, 1, 1}), cplx(0.0));
  EXPECT_THROW(gaussian_moment(g, std::vector<int>(12, 0)), ValidationError);
  EXPECT_THROW(gaussian_moment(g, {2}), ValidationError);
}

TEST(GaussianMoment, ClassicalMomentsFromPairingCount) {
  const double v0 = 1.7;
  GaussianSpec g{RVector::Zero(1), RMatrix::Constant(1, 1, v0), RMatrix::Zero(1, 1)};
  EXPECT_NEAR(gaussian_moment(g, {0, 0, 0, 0}).real(), 3 * v0 * v0, 1e-12);
  for (int n = 1; n <= 5; ++n) {
    const cplx m = gaussian_moment(g, std::vector<int>(2 * n, 0));
    EXPECT_NEAR(m.real(), double_factorial(2 * n - 1) * std::pow(v0, n), 1e-9);
    EXPECT_EQ(m.imag(), 0.0);
  }
}

TEST(GaussianMoment, OrderedPairingsForNoncommutingPair) {
  // For the one-mode spec, ⟨Q P Q P⟩ pairs (1,2)(3,4), (1,3)(2,4), (1,4)(2,3) in order.
  const GaussianSpec g = one_mode_spec(0.0, 0.5);
  const CMatrix c = complex_covariance(g.v, g.s);
  const cplx expected = c(0, 1) * c(0, 1) + c(0, 0) * c(1, 1) + c(0, 1) * c(1, 0);
  EXPECT_LT(std::abs(gaussian_moment(g, {0, 1, 0, 1}) - expected), 1e-14);
}

// ---------------------------------------------------------------- T-kernel

TEST(TDensity, Examples) {
  GaussianSpec g{RVector{{0.4, -0.3}}, eye(2), RMatrix::Zero(2, 2)};
  EXPECT_NEAR(t_density(g.theta, eye(2), g), 1.0 / (4 * kPi), 1e-15);
  const double n = 1.0;
  const GaussianSpec mode = one_mode_spec(cplx(0.2, 0.1), n);
  const RMatrix vp = 0.5 * eye(2) + 1e-9 * eye(2);
  const RVector at = mode.theta + RVector{{0.7, -0.4}};
  const double var = n + 1.0;
  const double expected = std::exp(-0.5 * (0.49 + 0.16) / var) / (2 * kPi * var);
  EXPECT_NEAR(t_density(at, vp, mode), expected, 1e-9);
}

TEST(TDensity, IntegratesToOne) {
  const GaussianSpec g{RVector{{0.5, 1.0}}, RMatrix{{1.5, 0.3}, {0.3, 0.8}}, RMatrix{{0.0, 0.5}, {-0.5, 0.0}}};
  const RMatrix vp{{1.0, 0.1}, {0.1, 0.7}};
  const RMatrix c = g.v + vp;
  const double sx = std::sqrt(c(0, 0)), sy = std::sqrt(c(1, 1));
  const int steps = 600;
  const double hx = 12 * sx / steps, hy = 12 * sy / steps;
  double total = 0.0;
  for (int i = 0; i < steps; ++i)
    for (int j = 0; j < steps; ++j) {
      const RVector p{{g.theta(0) - 6 * sx + (i + 0.5) * hx, g.theta(1) - 6 * sy + (j + 0.5) * hy}};
      total += t_density(p, vp, g) * hx * hy;
    }
  EXPECT_NEAR(total, 1.0, 1e-4);
}

TEST(TKernel, AdmissibilityAndNormalization) {
  const RMatrix s{{0.0, 0.5}, {-0.5, 0.0}};
  EXPECT_THROW(t_kernel(0.5 * eye(2), s), ValidationError);
  EXPECT_THROW(t_kernel(-eye(2), s), ValidationError);
  // Closed form for one mode: normalization 2πc√(1 − x²) with v' = cI and x = σ/c.
  for (double c : {0.6, 1.0, 2.0}) {
    const TKernel k = t_kernel(c * eye(2), s);
    EXPECT_NEAR(k.normalization, 2 * kPi * c * std::sqrt(1 - 0.25 / (c * c)), 1e-12);
  }
  // Calibration against a truncated oscillator agrees with the analytic constant.
  for (const RMatrix& vp : {RMatrix(0.6 * eye(2)), RMatrix{{1.2, 0.2}, {0.2, 0.7}}}) {
    EXPECT_NEAR(calibrated_t_normalization(0.5, vp) / t_kernel(vp, s).normalization, 1.0, 1e-6);
  }
}

TEST(TOperator, ScalarKernelAndCompleteness) {
  const CMatrix x = pauli('z');
  const double vp = 0.3;
  const TKernel k = t_kernel(RMatrix::Constant(1, 1, vp), RMatrix::Zero(1, 1));
  const CMatrix t = t_operator({x}, RVector::Constant(1, 0.4), k);
  const double up = std::exp(-0.36 / (2 * vp)) / std::sqrt(2 * kPi * vp);
  const double down = std::exp(-1.96 / (2 * vp)) / std::sqrt(2 * kPi * vp);
  EXPECT_NEAR(t(0, 0).real(), up, 1e-14);
  EXPECT_NEAR(t(1, 1).real(), down, 1e-14);
  CMatrix total = CMatrix::Zero(2, 2);
  const double h = 0.01;
  for (double th = -8; th <= 8; th += h) total += h * t_operator({x}, RVector::Constant(1, th), k);
  EXPECT_LT(max_abs(CMatrix(total - CMatrix::Identity(2, 2))), 1e-6);
}

// ---------------------------------------------------------------- Fock numerics

TEST(FockDensity, DiagonalExamples) {
  const FockState th = fock_density(0.0, 1.0, 64);
  EXPECT_NEAR(th.matrix(0, 0).real(), 0.5, 1e-12);
  EXPECT_NEAR(th.matrix(1, 1).real(), 0.25, 1e-12);
  const FockState vac = fock_density(0.0, 0.0, 8);
  EXPECT_NEAR(vac.matrix(0, 0).real(), 1.0, 1e-14);
  const FockState coh = fock_density(1.0, 0.0, 64);
  double fact = 1.0;
  for (int k = 0; k < 10; ++k) {
    if (k > 0) fact *= k;
    EXPECT_NEAR(coh.matrix(k, k).real(), std::exp(-1.0) / fact, 1e-12);
  }
  EXPECT_THROW(fock_density(2.0, 4.0, 8), NumericalError);
  EXPECT_THROW(fock_density(0.0, -1.0), ValidationError);
  const FockState autosel = fock_density(cplx(1.0, 1.0), 1.0);
  EXPECT_LT(autosel.tail_mass, 1e-8);
  EXPECT_EQ(autosel.cutoff & (autosel.cutoff - 1), 0);
}

TEST(FockDensity, ValidStateAndCharacteristicFunction) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double n : {0.0, 1.0, 4.0}) {
    const cplx zeta = std::polar(2.0 * std::abs(u(gen)), kPi * u(gen));
    const FockState st = fock_density(zeta, n, 128);
    EXPECT_TRUE(is_hermitian(st.matrix, 1e-12));
    EXPECT_NEAR(st.matrix.trace().real(), 1.0, 1e-12);
    EXPECT_GE(min_eigenvalue(st.matrix), -1e-10);
    for (int i = 0; i < 10; ++i) {
      const double x = 1.5 * u(gen), y = 1.5 * u(gen);
      EXPECT_LT(std::abs(fock_characteristic(st, x, y) - gaussian_characteristic(zeta, n, x, y)), 1e-6);
    }
  }
}

TEST(NumberDistribution, Moments) {
  const auto vac = number_distribution(fock_density(0.0, 0.0, 8));
  EXPECT_NEAR(vac.probs[0], 1.0, 1e-14);
  for (double n : {0.5, 1.0, 2.0}) {
    const auto [mean, var] = mean_variance(number_distribution(fock_density(0.0, n, 128)));
    EXPECT_NEAR(mean, n, 1e-6);
    EXPECT_NEAR(var, n * (n + 1), 1e-6);
  }
  const auto [pm, pv] = mean_variance(number_distribution(fock_density(1.0, 0.0, 128)));
  EXPECT_NEAR(pm, 1.0, 1e-6);
  EXPECT_NEAR(pv, 1.0, 1e-6);
}

TEST(Heterodyne, ResolutionOfIdentity) {
  const CMatrix r = heterodyne_resolution(16, 6.0);
  EXPECT_LT(max_abs(CMatrix(r - CMatrix::Identity(16, 16))), 1e-4);
}

TEST(Heterodyne, SamplingLaw) {
  const auto a = heterodyne_sample(0.0, 0.0, 1000000, 41);
  double e2 = 0.0;
  for (const cplx& x : a) e2 += std::norm(x);
  EXPECT_NEAR(e2 / 1e6, 1.0, 0.005);
  const auto b = heterodyne_sample(cplx(2.0, 1.0), 0.0, 1000000, 42);
  cplx mean = 0.0;
  for (const cplx& x : b) mean += x;
  mean /= 1e6;
  EXPECT_NEAR(mean.real(), 2.0, 0.005);
  EXPECT_NEAR(mean.imag(), 1.0, 0.005);
  EXPECT_EQ(heterodyne_sample(0.3, 1.0, 100, 7), heterodyne_sample(0.3, 1.0, 100, 7));
}

// ---------------------------------------------------------------- concentration protocol

TEST(Concentrate, HalfMirrorNetwork) {
  const cplx z(0.3, -0.4);
  const Concentration one = concentrate(z, 1.0, 1);
  ASSERT_EQ(one.modes.size(), 1u);
  EXPECT_EQ(one.modes[0].zeta, z);
  const Concentration four = concentrate(z, 1.5, 4);
  ASSERT_EQ(four.layers.size(), 2u);
  EXPECT_LT(std::abs(four.layers[0][0] - std::sqrt(2.0) * z), 1e-15);
  EXPECT_LT(std::abs(four.layers[1][0] - 2.0 * z), 1e-15);
  for (size_t i = 1; i < 4; ++i) EXPECT_LT(std::abs(four.modes[i].zeta), 1e-15);
  for (int n : {4, 6, 16, 64}) {
    const Concentration c = concentrate(z, 2.0, n);
    double energy = 0.0;
    for (const auto& m : c.modes) {
      energy += std::norm(m.zeta);
      EXPECT_EQ(m.N, 2.0);
    }
    EXPECT_NEAR(energy, n * std::norm(z), 1e-12);
    EXPECT_LT(std::abs(c.modes[0].zeta - std::sqrt(static_cast<double>(n)) * z), 1e-12);
  }
  EXPECT_THROW(concentrate(z, 1.0, 0), ValidationError);
}

TEST(GaussProtocol, SmallRunIsDeterministicAndNearConstants) {
  const auto a = gaussian_protocol_mse(cplx(0.5, 0.2), 1.0, 16, 20000, 5);
  const auto b = gaussian_protocol_mse(cplx(0.5, 0.2), 1.0, 16, 20000, 5);
  EXPECT_EQ(a.scaled_theta_mse, b.scaled_theta_mse);
  EXPECT_EQ(a.scaled_number_mse, b.scaled_number_mse);
  EXPECT_NEAR(a.scaled_theta_mse, 4.0, 4 * a.scaled_theta_se);
  EXPECT_NEAR(a.scaled_number_mse, 2.0, 4 * a.scaled_number_se);
  EXPECT_NEAR(a.scaled_number_baseline, 4.0, 4 * a.scaled_number_baseline_se);
  EXPECT_DOUBLE_EQ(a.shift_bound, 4.0);
}

// ---------------------------------------------------------------- clt

CollectiveSpec pauli_spec(const CMatrix& rho, const std::string& axes) {
  std::vector<CMatrix> xs;
  for (char c : axes) xs.push_back(pauli(c));
  return make_collective_spec(DensityOperator(rho), xs);
}

TEST(CollectiveMoment, SecondMomentsAreExactForEveryN) {
  std::mt19937_64 gen(51);
  const DensityOperator rho = testing::random_qubit(gen);
  const CollectiveSpec spec = make_collective_spec(rho, {pauli('x'), pauli('y'), pauli('z')});
  for (int k = 0; k < 3; ++k) {
    EXPECT_LT(std::abs(trace_product(rho.matrix(), spec.xs[k])), 1e-12);
    for (int j = 0; j < 3; ++j)
      for (long n = 1; n <= 64; ++n) {
        const cplx m = collective_moment(spec, n, {k, j});
        EXPECT_LT(std::abs(m - cplx(spec.v(k, j), spec.s(k, j))), 1e-12);
      }
  }
}

TEST(CollectiveMoment, Examples) {
  const CollectiveSpec mixed = pauli_spec(CMatrix::Identity(2, 2) / 2.0, "z");
  EXPECT_NEAR(collective_moment(mixed, 2, {0, 0, 0, 0}).real(), 2.0, 1e-14);
  CMatrix r(2, 2);
  r << 0.75, 0, 0, 0.25;
  const CollectiveSpec xy = pauli_spec(r, "xy");
  for (long n : {1L, 3L, 17L}) EXPECT_LT(std::abs(collective_moment(xy, n, {0, 1}) - cplx(0.0, 0.5)), 1e-14);
  EXPECT_THROW(collective_moment(xy, 2, std::vector<int>(9, 0)), ValidationError);
}

TEST(CollectiveMoment, MatchesTensorEngine) {
  std::mt19937_64 gen(52);
  std::uniform_int_distribution<int> pick(0, 2);
  for (int trial = 0; trial < 6; ++trial) {
    const CollectiveSpec spec =
        make_collective_spec(testing::random_qubit(gen), {testing::random_hermitian(gen, 2), pauli('x'), pauli('z')});
    for (int n = 1; n <= 4; ++n)
      for (int m = 1; m <= 6; ++m) {
        std::vector<int> word;
        for (int i = 0; i < m; ++i) word.push_back(pick(gen));
        const cplx a = collective_moment(spec, n, word);
        const cplx b = collective_moment_bruteforce(spec, n, word);
        EXPECT_LT(std::abs(a - b), 1e-10) << "n=" << n << " m=" << m;
      }
  }
}

TEST(CltGap, FourthMomentOfMixedQubit) {
  const CollectiveSpec spec = pauli_spec(CMatrix::Identity(2, 2) / 2.0, "z");
  const auto gaps = clt_gap(spec, {2, 5, 10}, {0, 0, 0, 0});
  for (const auto& g : gaps) EXPECT_NEAR(g.gap, 2.0 / g.n, 1e-10);
  EXPECT_NEAR(gaps[2].gap, 0.2, 1e-10);
  for (const auto& g : clt_gap(spec, {1, 4, 9}, {0, 0, 0})) EXPECT_EQ(g.gap, 0.0);
  for (const auto& g : clt_gap(spec, {1, 4, 9}, {0, 0})) EXPECT_LT(g.gap, 1e-12);
}

TEST(CltGap, InverseNScaling) {
  std::mt19937_64 gen(53);
  const CollectiveSpec spec =
      make_collective_spec(testing::random_qubit(gen), {pauli('x'), pauli('y'), pauli('z')});
  const std::vector<long> ns{4, 8, 16, 32, 64};
  const auto gaps = clt_gap(spec, ns, {0, 1, 2, 0});
  std::vector<double> x, y;
  for (const auto& g : gaps) {
    x.push_back(1.0 / g.n);
    y.push_back(g.gap);
  }
  for (size_t i = 1; i < gaps.size(); ++i) {
    const double ratio = gaps[i].gap / gaps[i - 1].gap;
    EXPECT_GE(ratio, 0.3);
    EXPECT_LE(ratio, 0.7);
  }
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  EXPECT_GT(sxy * sxy / (sxx * syy), 0.999);
}

TEST(TOperatorOnSums, HermitianPsdAndApproachesDensity) {
  const CollectiveSpec spec = pauli_spec(CMatrix::Identity(2, 2) / 2.0, "xy");
  const GaussianSpec limit = spec.limit();
  const double target = t_density(RVector::Zero(2), eye(2), limit);
  double last = std::numeric_limits<double>::infinity(), gap4 = 0.0;
  for (int n : {2, 4, 6, 8}) {
    const CMatrix t = t_operator_on_sums(spec, n, RVector::Zero(2), eye(2));
    EXPECT_TRUE(is_hermitian(t, 1e-9));
    EXPECT_GE(min_eigenvalue(t), -1e-9);
    const double value = trace_product(tensor_power(spec.rho, n).matrix(), t).real();
    const double gap = std::abs(value - target);
    EXPECT_LT(gap, last);
    if (n == 4) gap4 = gap;
    last = gap;
  }
  // O(1/n) approach: doubling n roughly halves the gap.
  EXPECT_GT(last / gap4, 0.4);
  EXPECT_LT(last / gap4, 0.6);
}

TEST(TOperatorOnSums, ScalarCompletenessOnSums) {
  const CollectiveSpec spec = pauli_spec(CMatrix::Identity(2, 2) / 2.0, "z");
  const int n = 3;
  CMatrix total = CMatrix::Zero(8, 8);
  const double h = 0.02;
  for (double th = -9; th <= 9; th += h) total += h * t_operator_on_sums(spec, n, RVector::Constant(1, th), eye(1));
  EXPECT_LT(max_abs(CMatrix(total - CMatrix::Identity(8, 8))), 1e-6);
}

}  // namespace
}  // namespace qest
