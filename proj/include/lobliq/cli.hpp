// cli.hpp - command implementations behind the lobliq executable.
#ifndef LOBLIQ_CLI_HPP
#define LOBLIQ_CLI_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lobliq/scenario.hpp"

namespace lobliq {

// Stable exit-code contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;       // I/O or internal failure
inline constexpr int kExitSchema = 2;      // scenario/usage violation
inline constexpr int kExitNumerical = 3;   // stability abort / non-finite values
inline constexpr int kExitValidation = 4;  // a validation suite failed

struct CliOptions {
    std::string scenario_path;
    std::string out_dir;            // empty: use the scenario's outputs.dir
    std::string scenarios_dir = "scenarios";
    bool has_seed = false;
    uint64_t seed = 0;
    int threads = 0;                // 0 = hardware
    int paths = 0;                  // 0 = scenario value
    std::string suite;              // validate
    std::string figure;             // reproduce
};

int cmd_simulate(const CliOptions& opt);
int cmd_solve(const CliOptions& opt);
int cmd_evaluate(const CliOptions& opt);
int cmd_validate(const CliOptions& opt);
int cmd_reproduce(const CliOptions& opt);

/// Names understood by cmd_validate.
std::vector<std::string> known_suites();
/// Figure ids understood by cmd_reproduce (base ids; _left/_right variants
/// of a base id are accepted too).
std::vector<std::string> known_figures();

}  // namespace lobliq

#endif
