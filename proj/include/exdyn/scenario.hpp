// scenario.hpp: YAML scenario configuration, validation and content hashing

#pragma once

#include <optional>
#include <string>

#include "exdyn/control.hpp"
#include "exdyn/heom.hpp"
#include "exdyn/parameters.hpp"

namespace exdyn {

enum class Method { markov, heom };

struct HeomSettings {
    int order{7};
    std::size_t max_ados{5'000'000};
    AdoScaling scaling{AdoScaling::unit_numerator};
    // Field-free runs from block-diagonal states propagate only the manifold blocks.
    bool block_diagonal_when_possible{true};
    bool include_residual{true};
};

struct PropagationSettings {
    double dt{0.05};         // fs
    double t_final{500.0};   // fs
    int record_every{20};
    // Eigenstate ("2_3") or site label ("12", "0").
    std::string initial_state{"0"};
};

struct ScenarioConfig {
    std::string preset_name;  // empty when built from scratch
    AggregateSpec spec;
    Method method{Method::markov};
    HeomSettings heom;
    PropagationSettings propagation;
    std::string field_file;  // optional
    std::optional<OCTConfig> oct;
    XFROGConfig xfrog;
    std::string output_dir{"out"};
    int threads{1};

    void validate() const;
    // Canonical JSON text of the resolved configuration.
    std::string canonical() const;
    // FNV-1a 64-bit hash of canonical(), hex.
    std::string hash() const;
};

// Parses YAML text. Unknown keys and out-of-range values raise ConfigError.
ScenarioConfig parse_scenario(const std::string& yaml_text);
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig scenario_from_preset(const std::string& name);

std::string fnv1a_hex(const std::string& text);

// Eigenbasis density operator of an initial-state label.
Operator initial_density(const ExcitonSystem& system, const std::string& label);

}  // namespace exdyn
