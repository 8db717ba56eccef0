// lobliq - simulate, solve, evaluate, validate and reproduce figure datasets
// for the lit/dark-pool optimal liquidation engine.
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lobliq/cli.hpp"
#include "lobliq/solver.hpp"

using namespace lobliq;

int main(int argc, char** argv) {
    CLI::App app{"jump-driven limit-order-book liquidation: simulator and HJB solver"};
    app.require_subcommand(1);

    CliOptions opt;
    if (const char* env = std::getenv("LOBLIQ_THREADS")) opt.threads = std::atoi(env);

    auto add_common = [&](CLI::App* cmd, bool needs_scenario) {
        if (needs_scenario)
            cmd->add_option("--scenario", opt.scenario_path, "scenario file")->required();
        cmd->add_option("--out", opt.out_dir, "output directory (default: scenario outputs.dir)");
        cmd->add_option("--seed", opt.seed, "override the scenario seed")
            ->each([&](const std::string&) { opt.has_seed = true; });
        cmd->add_option("--threads", opt.threads, "worker threads (env LOBLIQ_THREADS)");
    };

    CLI::App* sim = app.add_subcommand("simulate", "simulate book paths under the zero policy");
    add_common(sim, true);
    sim->add_option("--paths", opt.paths, "number of paths")->check(CLI::PositiveNumber);

    CLI::App* solve = app.add_subcommand("solve", "solve the HJB PIDE backward on the grid");
    add_common(solve, true);

    CLI::App* eval = app.add_subcommand("evaluate",
                                        "solve, extract the policy and evaluate it by Monte Carlo");
    add_common(eval, true);
    eval->add_option("--paths", opt.paths, "number of MC paths")->check(CLI::PositiveNumber);

    CLI::App* val = app.add_subcommand("validate", "run a named property suite");
    add_common(val, true);
    std::string suites;
    for (const auto& s : known_suites()) suites += (suites.empty() ? "" : "|") + s;
    val->add_option("--suite", opt.suite, "one of " + suites)->required();
    val->add_option("--paths", opt.paths, "number of MC paths")->check(CLI::PositiveNumber);

    CLI::App* rep = app.add_subcommand("reproduce", "emit plot-ready data for a bundled figure");
    rep->add_option("figure", opt.figure, "figure id (fig1..fig11, optional _left/_right)")
        ->required();
    rep->add_option("--scenarios-dir", opt.scenarios_dir, "bundled scenario directory");
    add_common(rep, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitSchema;
    }

    try {
        if (sim->parsed()) return cmd_simulate(opt);
        if (solve->parsed()) return cmd_solve(opt);
        if (eval->parsed()) return cmd_evaluate(opt);
        if (val->parsed()) return cmd_validate(opt);
        if (rep->parsed()) return cmd_reproduce(opt);
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const StabilityError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const std::exception& e) {
        const std::string what = e.what();
        if (what.find("non-finite") != std::string::npos) {
            std::cerr << "numerical abort: " << what << "\n";
            return kExitNumerical;
        }
        std::cerr << "error: " << what << "\n";
        return kExitError;
    }
    return kExitError;
}
