// runner.hpp: subcommand drivers producing in-memory artifact bundles, the
// figure reproduction batteries and artifact/manifest output.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "exdyn/scenario.hpp"

namespace exdyn {

inline constexpr const char* kToolVersion = "0.1.0";

// Files are kept in memory until the run has succeeded.
struct Artifacts {
    std::vector<std::pair<std::string, std::string>> files;  // relative path, content
    nlohmann::ordered_json manifest = nlohmann::ordered_json::object();

    void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
    void merge(const Artifacts& other, const std::string& prefix);
};

Artifacts run_model(const ScenarioConfig& config);
Artifacts run_bath_check(const ScenarioConfig& config);
Artifacts run_propagate(const ScenarioConfig& config);
Artifacts run_optimize(const ScenarioConfig& config);
Artifacts run_xfrog(const ScenarioConfig& config, const std::string& field_path);
Artifacts run_fit2g(const ScenarioConfig& config, const std::string& field_path);

// Tags fig1..fig8.
Artifacts reproduce(const std::string& tag, int threads);
std::vector<std::string> reproduce_tags();

// Writes every file plus manifest.json (which also lists the files and the
// wall-clock time). On failure the files written so far are removed.
void write_artifacts(const Artifacts& artifacts, const std::string& dir, double wall_seconds);

// 2 config, 3 memory budget, 4 numerical, 5 I/O, 1 anything else.
int exit_code_of(const std::exception& e);

// CSV writers shared with the tests.
std::string trajectory_csv(const std::vector<double>& times, const std::vector<Eigen::VectorXd>& populations,
                           const EigenSystem& eigen);
std::string depth_norms_csv(const std::vector<double>& times, const std::vector<std::vector<double>>& norms);

}  // namespace exdyn
