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

// collective POVM, two-stage estimator, experiment runner and CLI.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "test_util.hpp"

namespace qest {
namespace {

RMatrix eye(Eigen::Index d) { return RMatrix::Identity(d, d); }

// ---------------------------------------------------------------- collective POVM

TEST(SpinLadders, OrthonormalAndComplete) {
  for (int n : {1, 2, 3, 4, 5, 6}) {
    const auto ladders = spin_ladders(n);
    long total = 0;
    for (const auto& [mult, basis] : ladders) {
      total += mult * basis.cols();
      EXPECT_LT(max_abs(CMatrix(basis.adjoint() * basis - CMatrix::Identity(basis.cols(), basis.cols()))), 1e-12);
    }
    EXPECT_EQ(total, 1L << n);
  }
}

TEST(TensorPowerDerivative, MatchesFiniteDifferences) {
  const ParametricModel m = qubit_family(QubitKind::full);
  const RVector theta{{0.2, -0.1, 0.3}};
  const auto derivs = model_derivatives(m, theta);
  const double h = 1e-6;
  for (int k = 0; k < 3; ++k) {
    RVector p = theta, q = theta;
    p(k) += h;
    q(k) -= h;
    const CMatrix fd =
        (tensor_power(m.state_at(p), 3).matrix() - tensor_power(m.state_at(q), 3).matrix()) / (2 * h);
    EXPECT_LT(max_abs(CMatrix(tensor_power_derivative(m.state_at(theta).matrix(), derivs[k], 3) - fd)), 1e-8);
  }
}

TEST(RegularizedVprime, AdmissibleForPositiveEps) {
  const RMatrix s{{0.0, 0.5}, {-0.5, 0.0}};
  const RMatrix vp = regularized_vprime(s, eye(2), 0.1);
  EXPECT_LT(max_abs(RMatrix(vp - 0.6 * eye(2))), 1e-12);
  EXPECT_LT(t_kernel(vp, s).max_abs_eigenvalue, 1.0);
  const RMatrix g{{2.0, 0.3}, {0.3, 1.0}};
  EXPECT_LT(t_kernel(regularized_vprime(s, g, 0.05), s).max_abs_eigenvalue, 1.0);
  EXPECT_ANY_THROW(regularized_vprime(s, eye(2), 0.0));
}

TEST(CollectivePovm, ScalarCaseIsClassicalSmoothing) {
  CMatrix r(2, 2);
  r << 0.7, 0, 0, 0.3;
  const DensityOperator rho(r);
  const CollectiveSpec spec = make_collective_spec(rho, {pauli('z')});
  const int n = 4;
  const double vp = 0.2;
  CollectivePovmOptions opts;
  opts.reduction = CollectiveReduction::dense;
  const CollectivePovm m = build_collective_povm(spec, RMatrix::Constant(1, 1, vp), n, opts);
  const auto tr = m.traces({m.compress_product(rho.matrix())});
  // Spectral oracle: X^{(n)} has eigenvalues (2k − n − n·0.4)/√n with binomial weights.
  auto g = [vp](double a) { return std::exp(-a * a / (2 * vp)) / std::sqrt(2 * std::numbers::pi * vp); };
  for (size_t i = 0; i < m.grid.size(); ++i) {
    double p = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double lambda = (2.0 * k - n - 0.4 * n) / std::sqrt(static_cast<double>(n));
      const double weight = detail::binomial(n, k) * std::pow(0.7, k) * std::pow(0.3, n - k);
      double s = 0.0;
      for (const RVector& x : m.grid) s += m.step * g(lambda - x(0));
      p += weight * m.step * g(lambda - m.grid[i](0)) / s;
    }
    EXPECT_NEAR(tr[0][i], p, 1e-8);
  }
}

TEST(CollectivePovm, CompletenessAtSixCopies) {
  const CollectiveSpec spec = make_collective_spec(DensityOperator::maximally_mixed(2), {pauli('z'), pauli('x')});
  CollectivePovmOptions opts;
  opts.radius = 4.0;
  opts.steps_per_radius = 16;
  const CollectivePovm m = build_collective_povm(spec, RMatrix(0.6 * eye(2)), 6, opts);
  EXPECT_DOUBLE_EQ(m.step, 0.25);
  EXPECT_LT(m.completeness_residual, 1e-6);
  EXPECT_EQ(m.dim(), 64);
  EXPECT_TRUE(m.spin_reduced);
}

TEST(CollectivePovm, DenseAndSpinReductionsAgree) {
  const ParametricModel xy = qubit_xy_family(0.5);
  const std::vector<CMatrix> xs{pauli('z'), pauli('x')};
  const RMatrix vp = regularized_vprime(RMatrix{{0.0, 0.5}, {-0.5, 0.0}}, eye(2), 0.1);
  CollectivePovmOptions dense, spin;
  dense.reduction = CollectiveReduction::dense;
  spin.reduction = CollectiveReduction::spin;
  const auto a = collective_estimator_check(xy, RVector::Zero(2), xs, vp, {2, 4}, dense);
  const auto b = collective_estimator_check(xy, RVector::Zero(2), xs, vp, {2, 4}, spin);
  for (size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(a.per_n[i].scaled_trace, b.per_n[i].scaled_trace, 1e-9);
    EXPECT_LT(max_abs(RMatrix(a.per_n[i].a - b.per_n[i].a)), 1e-10);
  }
}

TEST(CollectivePovm, MaterializedElementsFormAPovm) {
  const CollectiveSpec spec = make_collective_spec(DensityOperator::maximally_mixed(2), {pauli('z'), pauli('x')});
  CollectivePovmOptions opts;
  opts.reduction = CollectiveReduction::dense;
  opts.steps_per_radius = 8;
  const CollectivePovm m = build_collective_povm(spec, eye(2), 2, opts);
  const Povm povm = m.materialize();
  EXPECT_LT(povm.completeness_residual(), 1e-5);
  for (const auto& e : povm.elements()) EXPECT_GE(min_eigenvalue(e.op), -1e-9);
  std::mt19937_64 gen(3);
  const auto d = measure_distribution(tensor_power(testing::random_qubit(gen), 2), povm);
  double total = 0.0;
  for (double p : d.probs) total += p;
  EXPECT_NEAR(total, 1.0, 1e-8);
}

TEST(CollectiveCheck, OneCopyStructure) {
  const ParametricModel xy = qubit_xy_family(0.0);
  const auto r = collective_estimator_check(xy, RVector::Zero(2), {pauli('z'), pauli('x')}, eye(2), {1});
  EXPECT_LT(max_abs(RMatrix(r.target - 2.0 * eye(2))), 1e-12);
  const CollectiveCheck& c = r.per_n[0];
  EXPECT_LT(max_abs(RMatrix(c.covariance - c.covariance.transpose())), 1e-12);
  EXPECT_GT(min_eigenvalue(c.covariance), 0.0);
  const RMatrix ai = c.a.inverse();
  EXPECT_LT(max_abs(RMatrix(c.scaled_covariance - ai * c.covariance * ai.transpose())), 1e-10);
  EXPECT_NEAR(c.scaled_trace, c.scaled_covariance.trace(), 1e-12);
  EXPECT_LT(c.mean.norm(), 1e-10);
}

TEST(CollectiveCheck, TrendTowardTargetForSmallN) {
  const ParametricModel xy = qubit_xy_family(0.5);
  const RMatrix vp = regularized_vprime(RMatrix{{0.0, 0.5}, {-0.5, 0.0}}, eye(2), 0.1);
  const auto r = collective_estimator_check(xy, RVector::Zero(2), {pauli('z'), pauli('x')}, vp, {2, 4, 6});
  EXPECT_NEAR(r.target_trace, 3.2, 1e-12);
  for (size_t i = 0; i < r.per_n.size(); ++i) {
    const auto& c = r.per_n[i];
    EXPECT_LT(c.completeness_residual, 1e-5);
    EXPECT_GT(c.scaled_trace, r.target_trace);
    EXPECT_LT(std::abs(c.a(0, 1)) + std::abs(c.a(1, 0)), 1e-10);
    if (i > 0) {
      EXPECT_LE(c.a_gap, r.per_n[i - 1].a_gap + 1e-3);
      EXPECT_LE(c.scaled_trace, r.per_n[i - 1].scaled_trace + 1e-3);
    }
  }
}

// ---------------------------------------------------------------- two-stage

TEST(C1Measurement, AttainsSeparableBound) {
  const ParametricModel z0 = qubit_family(QubitKind::z0);
  const RVector theta{{0.5, 0.0}};
  const C1Measurement c1 = c1_optimal_measurement(z0, theta, eye(2));
  auto [set, js] = sld_fisher(z0, theta);
  const FisherMatrix jm = classical_fisher(z0, theta, *c1.povm);
  EXPECT_NEAR(cr_value(jm.real(), eye(2)), std::pow(std::sqrt(0.75) + 1.0, 2), 1e-9);
  EXPECT_NEAR(gill_massar(js.real(), jm.real(), 2).value, 1.0, 1e-9);
  double sum = 0.0;
  for (double w : c1.weights) sum += w;
  EXPECT_NEAR(sum, 1.0, 1e-14);
}

TEST(TwoStage, SmallRunDeterministicAndBracketed) {
  const ParametricModel z0 = qubit_family(QubitKind::z0);
  const RVector theta{{0.5, 0.0}};
  TwoStageOptions opts;
  opts.trials = 400;
  opts.seed = 11;
  const TwoStageReport a = two_stage_estimate(z0, theta, pauli_mixture("zx"), 1000, eye(2), opts);
  const TwoStageReport b = two_stage_estimate(z0, theta, pauli_mixture("zx"), 1000, eye(2), opts);
  EXPECT_EQ(a.scaled_trace, b.scaled_trace);
  EXPECT_EQ(a.stage1, 32);
  EXPECT_NEAR(a.qubit_c1, 3.482050807568877, 1e-9);
  EXPECT_NEAR(a.holevo, 1.75, 1e-4);
  EXPECT_GE(a.scaled_trace, a.holevo - 3 * a.scaled_trace_se);
  EXPECT_LE(a.scaled_trace, 1.3 * a.qubit_c1 + 3 * a.scaled_trace_se);
  EXPECT_EQ(a.report.trials + a.report.discarded, opts.trials);
  EXPECT_THROW(two_stage_estimate(diagonal_family(3), RVector{{0.2, 0.3}}, Povm::computational_basis(3), 100,
                                  eye(2), opts),
               ValidationError);
}

// ---------------------------------------------------------------- experiment runner

json config(const std::string& text) { return json::parse(text); }

TEST(Experiment, ConfigValidation) {
  EXPECT_THROW(config_from_json(config(R"({"experiment":"bounds","model":"qubit-full","colour":1})")),
               ValidationError);
  EXPECT_THROW(config_from_json(config(R"({"experiment":"nope"})")), ValidationError);
  EXPECT_THROW(config_from_json(config(R"({"experiment":"gauss","seed":-1})")), ValidationError);
  const ExperimentConfig c = config_from_json(config(R"({"experiment":"gauss","seed":9,"N":1})"));
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.params["N"], 1);
}

TEST(Experiment, BoundsReport) {
  const RunResult r =
      run(config_from_json(config(R"({"experiment":"bounds","model":"qubit-full","theta":[0,0,0]})")));
  ASSERT_EQ(r.exit_code, 0) << r.error;
  EXPECT_NEAR(r.report["crSld"].get<double>(), 3.0, 1e-12);
  EXPECT_NEAR(r.report["holevo"].get<double>(), 3.0, 1e-4);
  EXPECT_NEAR(r.report["qubitC1"].get<double>(), 9.0, 1e-12);
  for (const char* key : {"configHash", "seed", "tolerances", "versions", "gaps", "optimizer"})
    EXPECT_TRUE(r.report.contains(key)) << key;
  const RunResult d =
      run(config_from_json(config(R"({"experiment":"bounds","model":"diag:3","theta":"0.2,0.3"})")));
  ASSERT_EQ(d.exit_code, 0) << d.error;
  EXPECT_EQ(d.report["qubitC1"], "C1 unavailable");
}

TEST(Experiment, GaussReportCarriesConstants) {
  const RunResult r =
      run(config_from_json(config(R"({"experiment":"gauss","zeta":[0.5,0.2],"N":1,"n":100,"trials":2000})")));
  ASSERT_EQ(r.exit_code, 0) << r.error;
  EXPECT_DOUBLE_EQ(r.report["constants"]["shiftBound"].get<double>(), 4.0);
  EXPECT_DOUBLE_EQ(r.report["constants"]["numberWithCorrelation"].get<double>(), 2.0);
  EXPECT_DOUBLE_EQ(r.report["constants"]["numberWithoutCorrelation"].get<double>(), 4.0);
  EXPECT_EQ(std::count(r.csv.begin(), r.csv.end(), '\n'), 2001);
}

TEST(Experiment, IdenticalConfigsGiveIdenticalReports) {
  const json c = config(R"({"experiment":"estimate","model":"qubit-z0","theta":[0.5,0],"n":400,"trials":50,"seed":3})");
  const RunResult a = run(config_from_json(c));
  const RunResult b = run(config_from_json(c));
  ASSERT_EQ(a.exit_code, 0) << a.error;
  EXPECT_EQ(a.report.dump(), b.report.dump());
  EXPECT_EQ(a.csv, b.csv);
}

TEST(Experiment, ExitCodesAndNoFilesOnFailure) {
  const auto dir = std::filesystem::temp_directory_path() / "qest_exit_codes";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::string prefix = (dir / "bad").string();
  json bad = config(R"({"experiment":"fisher","model":"qubit-full","theta":[2,0,0]})");
  bad["out"] = prefix;
  EXPECT_EQ(run(config_from_json(bad)).exit_code, 2);
  EXPECT_FALSE(std::filesystem::exists(prefix + ".json"));
  EXPECT_FALSE(std::filesystem::exists(prefix + ".csv"));
  // σy statistics carry no information on the real z0 family: flat likelihood.
  json flat = config(R"({"experiment":"estimate","model":"qubit-z0","theta":[0.5,0],"n":16,"trials":2,"mprime":"y"})");
  flat["out"] = prefix;
  const RunResult r = run(config_from_json(flat));
  EXPECT_EQ(r.exit_code, 3) << r.error;
  EXPECT_FALSE(std::filesystem::exists(prefix + ".json"));
}

TEST(Experiment, FisherAndCltReports) {
  const RunResult f =
      run(config_from_json(config(R"({"experiment":"fisher","model":"qubit-full","theta":[0,0,0.5],"kind":"sld"})")));
  ASSERT_EQ(f.exit_code, 0) << f.error;
  EXPECT_NEAR(f.report["matrix"]["re"][2][2].get<double>(), 4.0 / 3.0, 1e-12);
  EXPECT_EQ(f.csv.substr(0, 10), "k,l,re,im\n");
  const RunResult c = run(config_from_json(
      config(R"({"experiment":"clt","model":"qubit-full","theta":[0,0,0],"ops":"z","word":"1,1,1,1","n":"2,5,10"})")));
  ASSERT_EQ(c.exit_code, 0) << c.error;
  EXPECT_NEAR(c.report["rows"][2]["gap"].get<double>(), 0.2, 1e-10);
  EXPECT_EQ(c.csv.substr(0, 42), "n,exact_re,exact_im,gaussian_re,gaussian_i");
}

TEST(Experiment, CollectiveEpsSweep) {
  const RunResult r = run(config_from_json(config(
      R"({"experiment":"estimate","mode":"collective","model":"qubit-xy:0.5","theta":[0,0],"n":"2,4","eps":"0.05,0.3"})")));
  ASSERT_EQ(r.exit_code, 0) << r.error;
  ASSERT_EQ(r.report["rows"].size(), 4u);
  EXPECT_NEAR(r.report["rows"][0]["targetTrace"].get<double>(), 3.1, 1e-9);
  EXPECT_NEAR(r.report["rows"][3]["targetTrace"].get<double>(), 3.6, 1e-9);
  // More smoothing costs variance at fixed n.
  EXPECT_LT(r.report["rows"][1]["scaledTrace"].get<double>(), r.report["rows"][3]["scaledTrace"].get<double>());
  EXPECT_EQ(std::count(r.csv.begin(), r.csv.end(), '\n'), 5);
}

// ---------------------------------------------------------------- CLI binary

int run_cli(const std::string& args) {
  const int status = std::system((std::string(QEST_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Cli, WritesReportsAndIsDeterministic) {
  const auto dir = std::filesystem::temp_directory_path() / "qest_cli";
  std::filesystem::create_directories(dir);
  const std::string a = (dir / "a").string(), b = (dir / "b").string();
  const std::string args = "gauss --zeta 0.5,0.2 --N 1 --n 16 --trials 1000 --seed 4 --jobs 1 --out ";
  ASSERT_EQ(run_cli(args + a), 0);
  ASSERT_EQ(run_cli(args + b), 0);
  EXPECT_EQ(slurp(a + ".json"), slurp(b + ".json"));
  EXPECT_EQ(slurp(a + ".csv"), slurp(b + ".csv"));
  const json report = json::parse(slurp(a + ".json"));
  EXPECT_EQ(report["seed"], 4);
  EXPECT_EQ(report["experiment"], "gauss");
}

TEST(Cli, ConfigFileAndOverrides) {
  const auto dir = std::filesystem::temp_directory_path() / "qest_cli";
  std::filesystem::create_directories(dir);
  const std::string cfg = (dir / "bounds.json").string(), out = (dir / "bounds").string();
  std::ofstream(cfg) << R"({"experiment":"bounds","model":"qubit-full","theta":[0.3,0.2,0.4],"seed":2})";
  ASSERT_EQ(run_cli("bounds --config " + cfg + " --theta 0,0,0 --out " + out), 0);
  const json report = json::parse(slurp(out + ".json"));
  EXPECT_NEAR(report["crSld"].get<double>(), 3.0, 1e-12);
  EXPECT_EQ(report["seed"], 2);
  EXPECT_EQ(run_cli("fisher --config " + cfg), 2);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("fisher --model qubit-full --theta 0,0,0 --kind sld"), 0);
  EXPECT_EQ(run_cli("fisher --model nope --theta 0"), 2);
  EXPECT_EQ(run_cli("fisher --model qubit-full --theta 0,0,0 --kind rld --bogus 1"), 2);
  EXPECT_EQ(run_cli("bounds --model qubit-full --theta 0,0,zero"), 2);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("--version"), 0);
  EXPECT_EQ(run_cli("fisher --model qubit-xy:1 --theta 0,0 --kind rld"), 2);
}

}  // namespace
}  // namespace qest
