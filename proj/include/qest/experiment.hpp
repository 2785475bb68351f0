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

// Named experiments driven by a JSON config. Reports are deterministic
// functions of the config: no timestamps, no timings.

#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qest/collective.hpp"
#include "qest/io.hpp"

#define QEST_VERSION "1.0.0"

namespace qest {

struct ExperimentConfig {
  std::string experiment;
  json params = json::object();  // experiment-specific keys
  std::uint64_t seed = 1;
  std::string out;               // path prefix; empty means no files
  unsigned jobs = 0;
};

struct RunResult {
  int exit_code = 0;
  json report;
  std::string csv;
  std::string error;
};

namespace detail {

inline const std::set<std::string>& allowed_keys(const std::string& experiment) {
  static const std::map<std::string, std::set<std::string>> keys{
      {"fisher", {"model", "theta", "kind", "povm"}},
      {"bounds", {"model", "theta", "g", "starts"}},
      {"gauss", {"zeta", "N", "n", "trials"}},
      {"clt", {"model", "theta", "ops", "word", "n"}},
      {"estimate", {"mode", "model", "theta", "n", "trials", "eps", "g", "mprime"}},
  };
  const auto it = keys.find(experiment);
  if (it == keys.end()) throw ValidationError("unknown experiment '" + experiment + "'");
  return it->second;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::vector<double> number_list(const json& j, const std::string& what) {
  std::vector<double> out;
  if (j.is_number()) return {j.get<double>()};
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    size_t pos = 0;
    while (pos <= s.size()) {
      const size_t next = s.find(',', pos);
      const std::string item = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(item, &used);
      } catch (const std::exception&) {
        throw ValidationError(what + ": '" + item + "' is not a number");
      }
      require(used == item.size(), what + ": '" + item + "' is not a number");
      out.push_back(v);
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    return out;
  }
  require(j.is_array(), what + " must be a number list");
  for (const json& e : j) {
    require(e.is_number(), what + " must contain numbers only");
    out.push_back(e.get<double>());
  }
  return out;
}

inline RVector vector_param(const json& p, const std::string& key) {
  require(p.contains(key), "missing '" + key + "'");
  const auto v = number_list(p[key], key);
  return Eigen::Map<const RVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline double number_param(const json& p, const std::string& key, double fallback) {
  if (!p.contains(key)) return fallback;
  require(p[key].is_number(), "'" + key + "' must be a number");
  return p[key].get<double>();
}

inline long integer_param(const json& p, const std::string& key, long fallback) {
  if (!p.contains(key)) return fallback;
  const double v = number_param(p, key, 0.0);
  require(v == std::floor(v), "'" + key + "' must be an integer");
  return static_cast<long>(v);
}

inline std::string string_param(const json& p, const std::string& key, const std::string& fallback) {
  if (!p.contains(key)) {
    require(!fallback.empty(), "missing '" + key + "'");
    return fallback;
  }
  require(p[key].is_string(), "'" + key + "' must be a string");
  return p[key].get<std::string>();
}

inline RMatrix weight_param(const json& p, Eigen::Index d) {
  if (!p.contains("g")) return RMatrix::Identity(d, d);
  const json& g = p["g"];
  if (g.is_string() && g.get<std::string>() == "identity") return RMatrix::Identity(d, d);
  const CMatrix m = g.is_string() ? matrix_from_json(read_json_file(g.get<std::string>())) : matrix_from_json(g);
  require(max_abs(RMatrix(m.imag())) == 0.0, "weight matrix must be real");
  RMatrix r = m.real();
  validate_weight(r, d);
  return r;
}

inline ParametricModel model_param(const json& p) { return model_by_name(string_param(p, "model", "")); }

inline json estimation_to_json(const EstimationReport& r) {
  return {{"thetaTrue", vector_to_json(r.theta_true)},
          {"empiricalMean", vector_to_json(r.empirical_mean)},
          {"mse", matrix_to_json(r.mse)["re"]},
          {"standardErrors", matrix_to_json(r.standard_errors)["re"]},
          {"weightedTrace", r.weighted_trace},
          {"weightedTraceSe", r.weighted_trace_se},
          {"trials", r.trials},
          {"discarded", r.discarded},
          {"seed", r.seed},
          {"boundValue", r.bound_value},
          {"boundKind", r.bound_kind}};
}

inline std::string csv_row(const std::vector<double>& xs) {
  std::string s;
  for (size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + format_double(xs[i]);
  return s + "\n";
}

inline void run_fisher(const json& p, RunResult& r) {
  const ParametricModel model = model_param(p);
  const RVector theta = vector_param(p, "theta");
  model.check_theta(theta);
  const std::string kind = string_param(p, "kind", "sld");
  FisherMatrix f;
  json extra = json::object();
  if (kind == "sld" || kind == "rld") {
    auto [set, fm] = kind == "sld" ? sld_fisher(model, theta) : rld_fisher(model, theta);
    f = fm;
    extra["residuals"] = set.residuals;
    extra["rankDeficient"] = set.rank_deficient;
  } else if (kind == "classical") {
    require(p.contains("povm"), "classical Fisher needs 'povm'");
    const json& pj = p["povm"];
    const Povm m = pj.is_string() ? povm_from_json(read_json_file(pj.get<std::string>())) : povm_from_json(pj);
    f = classical_fisher(model, theta, m);
    extra["droppedMass"] = f.dropped_mass;
  } else {
    throw ValidationError("kind must be sld, rld or classical");
  }
  r.report = {{"kind", kind}, {"model", model.name}, {"theta", vector_to_json(theta)},
              {"matrix", matrix_to_json(f.value)}};
  r.report.update(extra);
  r.csv = "k,l,re,im\n";
  for (Eigen::Index k = 0; k < f.dim(); ++k)
    for (Eigen::Index l = 0; l < f.dim(); ++l)
      r.csv += std::to_string(k) + "," + std::to_string(l) + "," + format_double(f.value(k, l).real()) +
               "," + format_double(f.value(k, l).imag()) + "\n";
}

inline void run_bounds(const json& p, std::uint64_t seed, RunResult& r) {
  const ParametricModel model = model_param(p);
  const RVector theta = vector_param(p, "theta");
  model.check_theta(theta);
  const RMatrix g = weight_param(p, model.param_dim);
  HolevoOptions opts;
  opts.seed = seed;
  opts.starts = static_cast<int>(integer_param(p, "starts", 5));
  auto [lset, js] = sld_fisher(model, theta);
  const double cr = cr_value(js.real(), g);
  const HolevoSolution h = holevo_bound(model, theta, g, opts);
  r.report = {{"model", model.name},
              {"theta", vector_to_json(theta)},
              {"g", matrix_to_json(g)["re"]},
              {"crSld", cr},
              {"holevo", h.value},
              {"holevoV", matrix_to_json(h.v)["re"]},
              {"holevoS", matrix_to_json(h.s)["re"]},
              {"optimizer",
               {{"iters", h.iterations},
                {"residual", h.constraint_residual},
                {"stationarity", h.stationarity},
                {"startValues", h.start_values}}}};
  json gaps = {{"holevoMinusCr", h.value - cr}};
  r.csv = "quantity,value\ncrSld," + format_double(cr) + "\nholevo," + format_double(h.value) + "\n";
  if (model.hilbert_dim == 2) {
    const double c1 = qubit_c1(js.real(), g);
    r.report["qubitC1"] = c1;
    gaps["c1MinusHolevo"] = c1 - h.value;
    r.csv += "qubitC1," + format_double(c1) + "\n";
  } else {
    r.report["qubitC1"] = "C1 unavailable";
  }
  r.report["gaps"] = gaps;
}

inline void run_gauss(const json& p, std::uint64_t seed, RunResult& r) {
  const RVector z = vector_param(p, "zeta");
  require(z.size() == 2, "'zeta' needs real and imaginary parts");
  const double N = number_param(p, "N", 1.0);
  const long n = integer_param(p, "n", 100);
  const long trials = integer_param(p, "trials", 100000);
  require(n >= 2 && n <= 1000000, "'n' must be in [2, 1e6]");
  require(trials >= 2, "'trials' must be at least 2");
  const GaussProtocolReport g = gaussian_protocol_mse(cplx(z(0), z(1)), N, static_cast<int>(n), trials, seed);
  r.report = {{"zeta", {z(0), z(1)}},
              {"N", N},
              {"n", n},
              {"trials", trials},
              {"nMseTheta", g.scaled_theta_mse},
              {"nMseThetaSe", g.scaled_theta_se},
              {"nMinus1MseN", g.scaled_number_mse},
              {"nMinus1MseNSe", g.scaled_number_se},
              {"baselineNMseN", g.scaled_number_baseline},
              {"baselineNMseNSe", g.scaled_number_baseline_se},
              {"baselineNMseTheta", g.scaled_theta_baseline},
              {"baselineNMseThetaSe", g.scaled_theta_baseline_se},
              {"constants",
               {{"shiftBound", 2.0 * (N + 1.0)},
                {"numberWithCorrelation", N * (N + 1.0)},
                {"numberWithoutCorrelation", (N + 1.0) * (N + 1.0)}}},
              {"theta", estimation_to_json(g.theta)},
              {"number", estimation_to_json(g.number)},
              {"baselineNumber", estimation_to_json(g.number_baseline)}};
  r.csv = "trial,zeta_re,zeta_im,n_hat,baseline_zeta_re,baseline_zeta_im,baseline_n_hat\n";
  for (size_t t = 0; t < g.per_trial.size(); ++t) {
    const auto& e = g.per_trial[t];
    r.csv += std::to_string(t) + "," +
             csv_row({e.zeta_hat.real(), e.zeta_hat.imag(), e.n_hat, e.zeta_hat_baseline.real(),
                      e.zeta_hat_baseline.imag(), e.n_hat_baseline});
  }
}

inline void run_clt(const json& p, RunResult& r) {
  const ParametricModel model = model_param(p);
  require(model.hilbert_dim == 2, "clt: observables are given as Pauli labels, qubit models only");
  const RVector theta = vector_param(p, "theta");
  const std::string ops = string_param(p, "ops", "x,y,z");
  std::vector<CMatrix> xs;
  for (char c : ops)
    if (c != ',') xs.push_back(pauli(c));
  const CollectiveSpec spec = make_collective_spec(model.state_at(theta), xs);
  std::vector<int> word;
  for (double w : number_list(p.contains("word") ? p["word"] : json("1,1"), "word")) {
    require(w == std::floor(w) && w >= 1 && w <= static_cast<double>(xs.size()),
            "'word' indices must be integers in 1..number of observables");
    word.push_back(static_cast<int>(w) - 1);
  }
  std::vector<long> ns;
  for (double n : number_list(p.contains("n") ? p["n"] : json("2,4,8,16"), "n")) {
    require(n == std::floor(n) && n >= 1, "'n' entries must be positive integers");
    ns.push_back(static_cast<long>(n));
  }
  const auto gaps = clt_gap(spec, ns, word);
  json rows = json::array();
  r.csv = "n,exact_re,exact_im,gaussian_re,gaussian_im,gap\n";
  for (const auto& g : gaps) {
    rows.push_back({{"n", g.n}, {"exact", {g.exact.real(), g.exact.imag()}},
                    {"gaussian", {g.gaussian.real(), g.gaussian.imag()}}, {"gap", g.gap}});
    r.csv += std::to_string(g.n) + "," +
             csv_row({g.exact.real(), g.exact.imag(), g.gaussian.real(), g.gaussian.imag(), g.gap});
  }
  r.report = {{"model", model.name}, {"theta", vector_to_json(theta)}, {"ops", ops},
              {"v", matrix_to_json(spec.v)["re"]}, {"s", matrix_to_json(spec.s)["re"]}, {"rows", rows}};
}

inline void run_estimate(const json& p, std::uint64_t seed, RunResult& r) {
  const std::string mode = string_param(p, "mode", "two-stage");
  const ParametricModel model = model_param(p);
  const RVector theta = vector_param(p, "theta");
  model.check_theta(theta);
  const RMatrix g = weight_param(p, model.param_dim);
  if (mode == "two-stage") {
    TwoStageOptions opts;
    opts.seed = seed;
    opts.trials = integer_param(p, "trials", 2000);
    const long n = integer_param(p, "n", 10000);
    const std::string axes = string_param(p, "mprime", model.param_dim == 3 ? "zxy" : "zx");
    const TwoStageReport t = two_stage_estimate(model, theta, pauli_mixture(axes), n, g, opts);
    r.report = {{"mode", mode}, {"model", model.name}, {"n", n}, {"stage1", t.stage1},
                {"nTraceMse", t.scaled_trace}, {"nTraceMseSe", t.scaled_trace_se},
                {"qubitC1", t.qubit_c1}, {"holevo", t.holevo},
                {"report", estimation_to_json(t.report)}};
    r.csv = "trial";
    for (int k = 0; k < model.param_dim; ++k) r.csv += ",theta" + std::to_string(k + 1);
    r.csv += "\n";
    for (size_t i = 0; i < t.estimates.size(); ++i)
      r.csv += std::to_string(i) + "," +
               csv_row(std::vector<double>(t.estimates[i].data(), t.estimates[i].data() + t.estimates[i].size()));
  } else if (mode == "collective") {
    require(model.hilbert_dim == 2, "collective mode: qubit models only");
    // A list of ε values runs a sweep; each row carries its ε.
    const std::vector<double> epsilons = number_list(p.contains("eps") ? p["eps"] : json(0.1), "eps");
    for (double eps : epsilons) require(eps > 0.0, "'eps' entries must be positive");
    std::vector<int> ns;
    for (double n : number_list(p.contains("n") ? p["n"] : json("2,4,6,8"), "n")) {
      require(n == std::floor(n) && n >= 1 && n <= 8, "collective 'n' entries must be integers in 1..8");
      ns.push_back(static_cast<int>(n));
    }
    HolevoOptions ho;
    ho.seed = seed;
    const HolevoSolution h = holevo_bound(model, theta, g, ho);
    const CollectiveSpec spec = make_collective_spec(model.state_at(theta), h.x_ops);
    json rows = json::array();
    r.csv = "eps,n,scaled_trace,target_trace,a_gap,completeness_residual,leakage\n";
    for (double eps : epsilons) {
      const RMatrix vprime = regularized_vprime(spec.s, g, eps);
      const CollectiveCheckResult c = collective_estimator_check(model, theta, h.x_ops, vprime, ns);
      for (const auto& e : c.per_n) {
        rows.push_back({{"eps", eps}, {"n", e.n}, {"vprime", matrix_to_json(vprime)["re"]},
                        {"targetTrace", c.target_trace}, {"a", matrix_to_json(e.a)["re"]},
                        {"scaledCovariance", matrix_to_json(e.scaled_covariance)["re"]},
                        {"scaledTrace", e.scaled_trace}, {"aGap", e.a_gap},
                        {"completenessResidual", e.completeness_residual}, {"sDefect", e.s_defect},
                        {"leakage", e.leakage}, {"gridPoints", e.grid_points}});
        r.csv += csv_row({eps, static_cast<double>(e.n), e.scaled_trace, c.target_trace, e.a_gap,
                          e.completeness_residual, e.leakage});
      }
    }
    r.report = {{"mode", mode}, {"model", model.name}, {"eps", epsilons}, {"holevo", h.value},
                {"rows", rows}};
  } else {
    throw ValidationError("mode must be two-stage or collective");
  }
}

}  // namespace detail

/// Validates a JSON config: {"experiment", "seed", "out", "jobs", ...params}.
inline ExperimentConfig config_from_json(const json& j) {
  require(j.is_object(), "config must be a JSON object");
  require(j.contains("experiment") && j["experiment"].is_string(), "config needs an 'experiment' string");
  ExperimentConfig c;
  c.experiment = j["experiment"].get<std::string>();
  const auto& allowed = detail::allowed_keys(c.experiment);
  for (const auto& [key, value] : j.items()) {
    if (key == "experiment") continue;
    if (key == "seed") {
      require(value.is_number_unsigned(), "'seed' must be a non-negative integer");
      c.seed = value.get<std::uint64_t>();
    } else if (key == "out") {
      require(value.is_string(), "'out' must be a string");
      c.out = value.get<std::string>();
    } else if (key == "jobs") {
      require(value.is_number_unsigned(), "'jobs' must be a non-negative integer");
      c.jobs = value.get<unsigned>();
    } else if (allowed.count(key)) {
      c.params[key] = value;
    } else {
      throw ValidationError("unknown config key '" + key + "' for experiment " + c.experiment);
    }
  }
  return c;
}

/// Runs one experiment. Exit code 0 on success, 2 on invalid input, 3 on a
/// numerical failure. Files <out>.json and <out>.csv are written only on success.
inline RunResult run(const ExperimentConfig& config) {
  RunResult r;
  try {
    detail::allowed_keys(config.experiment);
    for (const auto& [key, _] : config.params.items())
      require(detail::allowed_keys(config.experiment).count(key) > 0, "unknown config key '" + key + "'");
    max_jobs() = config.jobs;
    const json& p = config.params;
    if (config.experiment == "fisher") detail::run_fisher(p, r);
    else if (config.experiment == "bounds") detail::run_bounds(p, config.seed, r);
    else if (config.experiment == "gauss") detail::run_gauss(p, config.seed, r);
    else if (config.experiment == "clt") detail::run_clt(p, r);
    else detail::run_estimate(p, config.seed, r);

    json canonical = config.params;
    canonical["experiment"] = config.experiment;
    canonical["seed"] = config.seed;
    r.report["experiment"] = config.experiment;
    r.report["seed"] = config.seed;
    char hash[17];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a(canonical.dump())));
    r.report["configHash"] = hash;
    r.report["tolerances"] = {{"hermitian", tol::kHermitian}, {"trace", tol::kTrace}, {"psd", tol::kPsd},
                              {"povmDiscrete", tol::kPovmDiscrete}, {"probSum", tol::kProbSum},
                              {"support", tol::kSupport}, {"outcomeFloor", tol::kOutcomeFloor}};
    r.report["versions"] = {{"qest", QEST_VERSION},
                            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                          std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                          std::to_string(EIGEN_MINOR_VERSION)},
                            {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  } catch (const ValidationError& e) {
    return {2, json(), "", e.what()};
  } catch (const NumericalError& e) {
    return {3, json(), "", e.what()};
  } catch (const json::exception& e) {
    return {2, json(), "", e.what()};
  } catch (const std::invalid_argument& e) {
    return {2, json(), "", e.what()};
  } catch (const std::exception& e) {
    return {3, json(), "", e.what()};
  }
  if (!config.out.empty()) {
    std::ofstream js(config.out + ".json"), cs(config.out + ".csv");
    if (!js || !cs) return {2, json(), "", "cannot write output files with prefix " + config.out};
    js << r.report.dump(2) << "\n";
    cs << r.csv;
  }
  return r;
}

}  // namespace qest
