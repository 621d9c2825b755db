#pragma once

#include <map>
#include <string>

#include "blowup/continuation.hpp"
#include "blowup/shooting.hpp"
#include "blowup/stability.hpp"

namespace blowup {

// Settings shared by every command. The file form is flat `key = value`
// lines with `#` comments; unknown keys are rejected.
struct RunConfig {
    int d = 1;
    double sigma = 2.3;
    double eps = 0.0;
    double delta = 0.0;
    DeltaRule delta_rule{};
    Normalization normalization = Normalization::FixOmega;
    double xi1 = 30.0;
    int n_terms = 2;
    double tol = 1e-8;
    double integrator_tol = 1e-11;
    int grid_n = 600;
    Scheme scheme = Scheme::Central4;
    Closure closure = Closure::Dynamic;
    double margin = 1e-3;
    std::string out = "-";
    std::string sidecar;
    std::string branch_file = "branch.jsonl";
    std::string spectrum_csv = "spectrum.csv";
    std::string verdict_json = "verdict.json";

    ShootingOptions shooting() const;
    NewtonOptions newton() const;
    StabilityOptions stability() const;
    // Fixed part of the shooting problem at the configured eps and delta.
    ShootingProblem problem() const;
};

// Assigns one key. Throws std::invalid_argument for an unknown key or a
// malformed value.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

// Parses `key = value` lines into cfg. Throws ParseError with the line number.
void parse_config(RunConfig& cfg, const std::string& text);
RunConfig load_config(const std::string& path);

// Canonical form: every key in a fixed order, numbers in their shortest
// round-trip representation. Parsing the output reproduces it byte for byte.
std::string format_config(const RunConfig& cfg);

}  // namespace blowup
