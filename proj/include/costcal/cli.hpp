#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "costcal/model.hpp"
#include "costcal/sim.hpp"

namespace costcal::cli {

/// Everything a config file can hold. Sections other than `model` are optional.
struct Config {
    ModelParams model;
    JumpSpec jumps;
    std::optional<CostParams> costs;
    std::optional<PolicyTargets> targets;
    SimConfig sim;
    PrincipalParams principal;
};

/// Throws Error(Io) when the file cannot be read or parsed and
/// Error(InvalidConfig) when a field has the wrong type.
Config load_config(const std::string& path);
Config parse_config(const std::string& json_text);

/// Exit codes: 0 success, 1 validation error, 2 solver failure, 3 I/O error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace costcal::cli
