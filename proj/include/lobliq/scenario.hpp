// scenario.hpp - versioned scenario files binding model, objective, grid, sim.
#ifndef LOBLIQ_SCENARIO_HPP
#define LOBLIQ_SCENARIO_HPP

#include <stdexcept>
#include <string>

#include "lobliq/grid.hpp"
#include "lobliq/model.hpp"
#include "lobliq/objective.hpp"
#include "lobliq/pathsim.hpp"

namespace lobliq {

/// Scenario file violation; the message names the offending key path.
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

struct OutputSpec {
    std::string dir = "out";
    bool csv = true;
    bool grid_container = false;
};

/// Parsed scenario. Sections other than `model` are optional in the file;
/// commands check the presence flags for what they need.
struct Scenario {
    std::string name;
    ModelSpec model;
    ObjectiveSpec objective;
    GridSpec grid;
    SimConfig sim;
    MarketState initial;
    OutputSpec outputs;

    bool has_objective = false;
    bool has_grid = false;
    bool has_sim = false;
    bool has_initial = false;

    std::string content_hash;  // fingerprint of the file bytes
};

/// Parses and validates a scenario JSON document. Unknown keys, missing
/// required keys and type mismatches raise SchemaError with the key path.
Scenario parse_scenario(const std::string& json_text, const std::string& name_hint = "");

/// Loads a scenario file (see README for the schema).
Scenario load_scenario(const std::string& path);

}  // namespace lobliq

#endif
