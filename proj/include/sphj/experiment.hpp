#pragma once
#include <string>
#include <vector>

#include "json.hpp"
#include "sphj/hj_solver.hpp"

namespace sphj {

// Experiment configuration: YAML or JSON text, held as a JSON tree.
class ExperimentConfig {
public:
    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load(const std::string& path);

    // dotted key, value parsed as a YAML scalar or flow sequence ("0.1", "[0.4, 0.2]", "true")
    void set(const std::string& key, const std::string& value);
    // unknown keys and malformed values throw a config error
    void check_keys() const;
    std::string canonical() const;
    const nlohmann::json& tree() const { return tree_; }

private:
    nlohmann::json tree_ = nlohmann::json::object();
};

std::vector<std::string> experiment_commands();

struct RunOutcome {
    int code = 0;
    std::string message;
    std::string summary;              // summary.json contents
    std::vector<std::string> files;   // written artifact names
};

// runs a command and writes its artifacts under out_dir; throws sphj::Error on config and numerical failures
RunOutcome run_experiment(const ExperimentConfig& cfg, const std::string& command, const std::string& out_dir);

// dry run: key checks, CFL pre-check, memory estimate; never throws for config problems
std::string validate_experiment(const ExperimentConfig& cfg, const std::string& command);

// the solve command without artifacts
SolveOutput solve_from_config(const ExperimentConfig& cfg);

// exit status for an error kind: 2 config, 3 numerical, 4 non-convergence
int exit_code_for(int error_kind);

}  // namespace sphj
