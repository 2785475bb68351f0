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

// qest command line. Every subcommand accepts --config <file>; flags given on
// the command line override keys from the file.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qest/experiment.hpp"

namespace {

// Flag values arrive as text. Plain numbers become JSON numbers, anything else
// (csv lists, file paths, names) stays a string for the experiment to parse.
qest::json flag_value(const std::string& text) {
  try {
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) {
      if (text.find_first_of(".eE") == std::string::npos && v >= 0) return qest::json(std::stoull(text));
      return qest::json(v);
    }
  } catch (const std::exception&) {
  }
  return qest::json(text);
}

struct Subcommand {
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;
  std::string config, out;
  std::uint64_t seed = 1;
  unsigned jobs = 0;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qest: quantum estimation theory toolkit"};
  app.set_version_flag("--version", QEST_VERSION);
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::vector<std::string>>> layout{
      {"fisher", {"model", "theta", "kind", "povm"}},
      {"bounds", {"model", "theta", "g", "starts"}},
      {"gauss", {"zeta", "N", "n", "trials"}},
      {"clt", {"model", "theta", "ops", "word", "n"}},
      {"estimate", {"mode", "model", "theta", "n", "trials", "eps", "g", "mprime"}},
  };
  std::map<std::string, Subcommand> subs;
  for (const auto& [name, keys] : layout) {
    Subcommand& s = subs[name];
    s.app = app.add_subcommand(name, "run the " + name + " experiment");
    for (const std::string& key : keys) s.app->add_option("--" + key, s.values[key]);
    s.app->add_option("--config", s.config, "JSON config file")->check(CLI::ExistingFile);
    s.app->add_option("--out", s.out, "output prefix for <out>.json and <out>.csv");
    s.app->add_option("--seed", s.seed, "RNG seed");
    s.app->add_option("--jobs", s.jobs, "worker cap (0 = hardware)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (auto& [name, s] : subs) {
    if (!s.app->parsed()) continue;
    qest::RunResult result;
    bool to_files = false;
    try {
      qest::json j = qest::json::object();
      if (!s.config.empty()) {
        j = qest::read_json_file(s.config);
        qest::require(j.is_object(), "config must be a JSON object");
        if (j.contains("experiment"))
          qest::require(j["experiment"] == name, "config experiment does not match subcommand " + name);
      }
      j["experiment"] = name;
      for (const auto& [key, text] : s.values)
        if (s.app->count("--" + key)) j[key] = flag_value(text);
      if (s.app->count("--seed") || !j.contains("seed")) j["seed"] = s.seed;
      if (s.app->count("--jobs")) j["jobs"] = s.jobs;
      if (s.app->count("--out")) j["out"] = s.out;
      const qest::ExperimentConfig config = qest::config_from_json(j);
      to_files = !config.out.empty();
      result = qest::run(config);
    } catch (const qest::ValidationError& e) {
      result = {2, {}, "", e.what()};
    } catch (const std::exception& e) {
      result = {2, {}, "", e.what()};
    }
    if (result.exit_code != 0) {
      std::cerr << "qest " << name << ": " << result.error << "\n";
      return result.exit_code;
    }
    if (!to_files) std::cout << result.report.dump(2) << "\n";
    return 0;
  }
  return 2;
}
