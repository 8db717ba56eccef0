#include "lobliq/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "lobliq/io.hpp"
#include "lobliq/policy.hpp"
#include "lobliq/reports.hpp"
#include "lobliq/solver.hpp"

namespace lobliq {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "lobliq 1.0.0";

PolicyCallback zero_policy() {
    return [](double, const MarketState&) { return ControlPair{0.0, 0.0}; };
}

Scenario load_with_overrides(const CliOptions& opt) {
    Scenario sc = load_scenario(opt.scenario_path);
    if (opt.has_seed) sc.sim.seed = opt.seed;
    if (opt.paths > 0) sc.sim.n_paths = opt.paths;
    sc.sim.n_threads = opt.threads;
    if (!opt.out_dir.empty()) sc.outputs.dir = opt.out_dir;
    return sc;
}

void require(bool cond, const std::string& what) {
    if (!cond) throw SchemaError(what);
}

std::string out_path(const Scenario& sc, const std::string& file) {
    fs::create_directories(sc.outputs.dir);
    return (fs::path(sc.outputs.dir) / file).string();
}

void write_manifest(const Scenario& sc, const CliOptions& opt, const std::string& command,
                    const std::vector<std::string>& outputs) {
    json m;
    m["version"] = kVersion;
    m["command"] = command;
    m["scenario"] = sc.name;
    m["scenario_file"] = opt.scenario_path.empty() ? json(nullptr) : json(opt.scenario_path);
    m["scenario_hash"] = sc.content_hash;
    m["seed"] = sc.sim.seed;
    m["paths"] = sc.sim.n_paths;
    m["threads"] = opt.threads;
    m["outputs"] = outputs;
    write_text_file(out_path(sc, "manifest.json"), m.dump(2) + "\n");
}

int nearest_index(const Axis& ax, double v) {
    const auto loc = ax.locate(v);
    return loc.frac < 0.5 ? loc.cell : std::min(loc.cell + 1, ax.size() - 1);
}

std::string policy_curves_csv(const PolicyGrid& g, const std::vector<int>& t_idx, double s0,
                              double d0) {
    const int j = nearest_index(g.nu_star.s, s0);
    const int l = nearest_index(g.nu_star.d, d0);
    std::ostringstream os;
    os << "# s_b=" << g.nu_star.s[j] << " delta=" << g.nu_star.d[l] << "\n";
    os << "t,x,nu,eta\n";
    for (int k : t_idx)
        for (int i = 0; i < g.nu_star.x.size(); ++i)
            os << g.nu_star.t[k] << "," << g.nu_star.x[i] << "," << g.nu_star.at(k, i, j, l)
               << "," << g.eta_star.at(k, i, j, l) << "\n";
    return os.str();
}

std::string policy_surfaces_csv(const PolicyGrid& g, const std::vector<int>& t_idx, int i) {
    std::ostringstream os;
    os << "# x=" << g.nu_star.x[i] << "\n";
    os << "t,s_b,delta,nu,eta\n";
    for (int k : t_idx)
        for (int jj = 0; jj < g.nu_star.s.size(); ++jj)
            for (int ll = 0; ll < g.nu_star.d.size(); ++ll)
                os << g.nu_star.t[k] << "," << g.nu_star.s[jj] << "," << g.nu_star.d[ll] << ","
                   << g.nu_star.at(k, i, jj, ll) << "," << g.eta_star.at(k, i, jj, ll) << "\n";
    return os.str();
}

std::vector<int> default_t_slices(const Axis& t) {
    const int n = t.size();
    std::vector<int> idx = {0, n / 3, (2 * n) / 3, n - 2};
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

}  // namespace

int cmd_simulate(const CliOptions& opt) {
    Scenario sc = load_with_overrides(opt);
    require(sc.has_initial, "simulate needs an initial_state section");
    require(sc.has_sim, "simulate needs a sim section");

    const auto paths = simulate_paths(sc.model, zero_policy(), sc.initial, sc.sim);
    const std::string file = out_path(sc, "paths.csv");
    write_paths_csv(file, paths);
    write_manifest(sc, opt, "simulate", {file});

    long long clamps = 0, events = 0;
    for (const auto& p : paths) {
        clamps += p.clamp_events;
        for (long long c : p.event_counts) events += c;
    }
    std::cout << "simulated " << paths.size() << " path(s), " << events << " jump events, "
              << clamps << " clamp events -> " << file << "\n";
    return kExitOk;
}

namespace {

struct Solved {
    SolveResult result;
    std::shared_ptr<const PolicyGrid> policy_ptr;
};

Solved run_solve(const Scenario& sc, int threads) {
    Solved s;
    s.result = solve_backward(sc.model, sc.objective, sc.grid, threads);
    s.policy_ptr = std::make_shared<const PolicyGrid>(s.result.policy);
    return s;
}

json diagnostics_json(const SolveDiagnostics& d) {
    json j;
    j["dt_slice"] = d.dt_slice;
    j["dt_substep"] = d.dt_substep;
    j["substeps_per_slice"] = d.substeps_per_slice;
    j["dt_stable"] = d.dt_stable;
    j["cfl_ratio"] = d.cfl_ratio;
    j["jump_clamp_events"] = d.jump_clamp_events;
    j["max_residual"] = d.max_residual;
    return j;
}

}  // namespace

int cmd_solve(const CliOptions& opt) {
    Scenario sc = load_with_overrides(opt);
    require(sc.has_objective, "solve needs an objective section");
    require(sc.has_grid, "solve needs a grid section");

    Solved s = run_solve(sc, opt.threads);
    s.result.diagnostics.max_residual =
        discrete_residual(s.result.value, sc.model, sc.objective, opt.threads);

    std::vector<std::string> outputs;
    const std::string grid_file = out_path(sc, "solution.grid");
    write_grid_container(grid_file, s.result.value, s.result.policy);
    outputs.push_back(grid_file);

    const std::string diag_file = out_path(sc, "diagnostics.json");
    json d = diagnostics_json(s.result.diagnostics);
    d["reduction"] = reduce_cash_dimension(sc.objective).reason;
    write_text_file(diag_file, d.dump(2) + "\n");
    outputs.push_back(diag_file);
    write_manifest(sc, opt, "solve", outputs);

    std::cout << "solved " << sc.name << ": substeps/slice=" << s.result.diagnostics.substeps_per_slice
              << " cfl=" << s.result.diagnostics.cfl_ratio
              << " residual=" << s.result.diagnostics.max_residual << " -> " << grid_file
              << "\n";
    return kExitOk;
}

int cmd_evaluate(const CliOptions& opt) {
    Scenario sc = load_with_overrides(opt);
    require(sc.has_objective && sc.has_grid, "evaluate needs objective and grid sections");
    require(sc.has_initial && sc.has_sim, "evaluate needs initial_state and sim sections");

    Solved s = run_solve(sc, opt.threads);
    PolicyFn policy(s.policy_ptr);
    const Estimate mc = evaluate_policy(sc.model, sc.objective, policy, sc.initial, sc.sim);
    const double u0 = interp_field(s.result.value.u, 0.0, sc.initial.x, sc.initial.s_b,
                                   sc.initial.delta);
    const double solver_value = sc.initial.w + u0;
    const double tol = std::max(0.02 * std::fabs(solver_value), 3.0 * mc.std_error);
    const bool agree = std::fabs(mc.value - solver_value) <= tol;

    json rep;
    rep["solver_value"] = solver_value;
    rep["mc_mean"] = mc.value;
    rep["mc_std_error"] = mc.std_error;
    rep["tolerance"] = tol;
    rep["agrees"] = agree;
    const std::string file = out_path(sc, "evaluation.json");
    write_text_file(file, rep.dump(2) + "\n");
    write_manifest(sc, opt, "evaluate", {file});

    std::cout << (agree ? "[PASS] " : "[WARN] ") << "policy value " << mc.value << " +/- "
              << mc.std_error << " vs solver " << solver_value << " (tol " << tol << ")\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// validate

namespace {

struct SuiteCheck {
    std::string name;
    bool passed;
    double metric;
    std::string detail;
};

struct SuiteOutcome {
    std::string suite;
    std::vector<SuiteCheck> checks;
    bool passed() const {
        return std::all_of(checks.begin(), checks.end(),
                           [](const SuiteCheck& c) { return c.passed; });
    }
};

void print_suite(const SuiteOutcome& s) {
    for (const auto& c : s.checks)
        std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << s.suite << "." << c.name
                  << " metric=" << c.metric << (c.detail.empty() ? "" : " " + c.detail)
                  << "\n";
}

json suite_json(const SuiteOutcome& s) {
    json checks = json::array();
    for (const auto& c : s.checks)
        checks.push_back({{"name", c.name},
                          {"passed", c.passed},
                          {"metric", c.metric},
                          {"detail", c.detail}});
    return {{"suite", s.suite}, {"passed", s.passed()}, {"checks", checks}};
}

SuiteOutcome moments_suite(const Scenario& sc, int threads) {
    SuiteOutcome out{"moments", {}};
    SimConfig cfg = sc.sim;
    cfg.n_threads = threads;
    const auto paths = simulate_paths(sc.model, zero_policy(), sc.initial, cfg);
    const double T = sc.model.horizon;

    // Per-channel Poisson event counts.
    for (JumpChannel c : kAllChannels) {
        const double lambda = sc.model.channel(c).intensity;
        if (lambda == 0.0) continue;
        if (c == JumpChannel::DarkFill && cfg.forced_fill_mode != ForcedFillMode::None) continue;
        std::vector<long long> counts;
        counts.reserve(paths.size());
        for (const auto& p : paths) counts.push_back(p.event_counts[static_cast<int>(c)]);
        const double p_val = poisson_count_pvalue(counts, lambda * T);
        out.checks.push_back({std::string("poisson_counts_") + channel_name(c), p_val >= 0.01,
                              p_val, "chi-square p-value (reject at 1%)"});
    }

    // Martingale mean preservation at several horizons.
    if (classify_martingale(sc.model) == MartingaleClass::Martingale) {
        for (double h : {T / 10.0, T / 2.0, T}) {
            const MomentReport rep = estimate_moments(paths, h);
            const double dev = std::fabs(rep.mean_bid.value - sc.initial.s_b);
            const double band = 3.0 * rep.mean_bid.std_error;
            std::ostringstream os;
            os << "h=" << h << " |mean-s0|=" << dev << " 3se=" << band;
            out.checks.push_back({"martingale_mean", dev <= band, dev, os.str()});
        }
    }

    // Second-moment linear scaling in h for small h.
    {
        const double h = std::min(1.0, T / 10.0);
        const MomentReport at_h = estimate_moments(paths, h);
        const MomentReport at_h2 = estimate_moments(paths, h / 2.0);
        const double ratio = at_h.abs_dev[1].value / std::max(at_h2.abs_dev[1].value, 1e-300);
        const double normalized = ratio / 2.0;
        std::ostringstream os;
        os << "m2(" << h << ")/m2(" << h / 2.0 << ")=" << ratio << " (linear scaling -> 2)";
        out.checks.push_back(
            {"second_moment_scaling", normalized >= 0.8 && normalized <= 1.2, normalized,
             os.str()});
    }
    return out;
}

SuiteOutcome comparison_suite(const Scenario& sc, int threads, bool swapped) {
    SuiteOutcome out{swapped ? "comparison_swapped" : "comparison", {}};
    ObjectiveSpec high = sc.objective;           // larger alpha: smaller terminal reward
    ObjectiveSpec low = sc.objective;
    low.alpha = sc.objective.alpha / 2.0;

    const auto sol_high = solve_backward(sc.model, high, sc.grid, threads);
    const auto sol_low = solve_backward(sc.model, low, sc.grid, threads);

    double scale = 0.0;
    for (double v : sol_low.value.u.data) scale = std::max(scale, std::fabs(v));
    const double tol = 1e-9 * std::max(scale, 1.0);

    const OrderingReport rep = swapped ? compare_values(sol_low.value, sol_high.value, tol)
                                       : compare_values(sol_high.value, sol_low.value, tol);
    std::ostringstream os;
    os << "alpha " << high.alpha << " vs " << low.alpha << ", violations " << rep.violations
       << "/" << rep.compared << " max " << rep.max_violation;
    out.checks.push_back({"terminal_ordering_preserved", rep.violations == 0,
                          static_cast<double>(rep.violations), os.str()});
    return out;
}

SuiteOutcome bertsimas_lo_suite(const Scenario& sc, int threads) {
    SuiteOutcome out{"bertsimas_lo", {}};
    const auto sol = solve_backward(sc.model, sc.objective, sc.grid, threads);
    const BLReport rep = check_bertsimas_lo(sol.policy, sc.model, sc.objective);
    const bool is_mart = rep.classification == MartingaleClass::Martingale;
    std::ostringstream os;
    os << martingale_class_name(rep.classification) << " bid; worst slice " << rep.worst_slice
       << "; profile dev " << rep.profile_max_rel_dev;
    out.checks.push_back({is_mart ? "policy_flat_across_book" : "policy_depends_on_book",
                          is_mart ? rep.flat : !rep.flat, rep.max_rel_variation, os.str()});
    return out;
}

SuiteOutcome kratz_suite(const Scenario& sc, int threads) {
    SuiteOutcome out{"kratz_schoeneborn", {}};
    const auto sol = solve_backward(sc.model, sc.objective, sc.grid, threads);
    const KSReport rep = check_kratz_schoeneborn(sol.policy, sc.model, sc.objective);
    out.checks.push_back({"full_dark_posting", rep.full_posting, rep.full_posting_fraction,
                          "fraction of interior nodes with eta* = min(N, x)"});
    out.checks.push_back({"lit_rate_increasing_in_inventory",
                          rep.nu_nondecreasing_fraction >= 0.99, rep.nu_nondecreasing_fraction,
                          "max nu* = " + std::to_string(rep.max_nu)});
    return out;
}

SuiteOutcome roundtrip_suite(const Scenario& sc, int threads) {
    SuiteOutcome out{"roundtrip", {}};
    const auto sol = solve_backward(sc.model, sc.objective, sc.grid, threads);
    const RoundtripReport rep = roundtrip_analysis(sol.policy, sc.model);
    std::ostringstream os;
    os << rep.underposted_nodes << "/" << rep.interior_nodes << " interior nodes post less "
       << "than min(N, x)";
    out.checks.push_back({"underposting_exists", rep.underposting_fraction > 0.0,
                          rep.underposting_fraction, os.str()});
    return out;
}

}  // namespace

std::vector<std::string> known_suites() {
    return {"moments", "comparison", "comparison_swapped", "bertsimas_lo",
            "kratz_schoeneborn", "roundtrip"};
}

int cmd_validate(const CliOptions& opt) {
    Scenario sc = load_with_overrides(opt);
    SuiteOutcome outcome;
    if (opt.suite == "moments") {
        require(sc.has_initial && sc.has_sim, "moments suite needs initial_state and sim");
        outcome = moments_suite(sc, opt.threads);
    } else if (opt.suite == "comparison" || opt.suite == "comparison_swapped") {
        require(sc.has_objective && sc.has_grid, "comparison suite needs objective and grid");
        outcome = comparison_suite(sc, opt.threads, opt.suite == "comparison_swapped");
    } else if (opt.suite == "bertsimas_lo") {
        require(sc.has_objective && sc.has_grid, "bertsimas_lo suite needs objective and grid");
        outcome = bertsimas_lo_suite(sc, opt.threads);
    } else if (opt.suite == "kratz_schoeneborn") {
        require(sc.has_objective && sc.has_grid, "kratz suite needs objective and grid");
        outcome = kratz_suite(sc, opt.threads);
    } else if (opt.suite == "roundtrip") {
        require(sc.has_objective && sc.has_grid, "roundtrip suite needs objective and grid");
        outcome = roundtrip_suite(sc, opt.threads);
    } else {
        throw SchemaError("unknown suite '" + opt.suite + "'");
    }

    print_suite(outcome);
    const std::string file = out_path(sc, "validate_" + outcome.suite + ".json");
    write_text_file(file, suite_json(outcome).dump(2) + "\n");
    write_manifest(sc, opt, "validate " + outcome.suite, {file});
    return outcome.passed() ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------------------
// reproduce

namespace {

std::vector<std::string> figure_variants(const std::string& base) {
    if (base == "fig2" || base == "fig5" || base == "fig6" || base == "fig7" ||
        base == "fig11")
        return {base + "_left", base + "_right"};
    return {base};
}

Scenario load_bundled(const CliOptions& opt, const std::string& id) {
    CliOptions o = opt;
    o.scenario_path = (fs::path(opt.scenarios_dir) / (id + ".json")).string();
    return load_with_overrides(o);
}

std::vector<std::string> reproduce_simulation_figure(const CliOptions& opt,
                                                     const std::string& id) {
    Scenario sc = load_bundled(opt, id);
    const auto paths = simulate_paths(sc.model, zero_policy(), sc.initial, sc.sim);
    const std::string file = out_path(sc, id + "_paths.csv");
    write_paths_csv(file, paths);
    return {file};
}

std::vector<std::string> reproduce_policy_figure(const CliOptions& opt, const std::string& id,
                                                 const std::string& base) {
    Scenario sc = load_bundled(opt, id);
    Solved s = run_solve(sc, opt.threads);
    const PolicyGrid& pg = s.result.policy;
    std::vector<std::string> files;

    if (base == "fig2" || base == "fig3" || base == "fig4") {
        // Lit-rate surface over the book state at full inventory, start of trading.
        const std::string f = out_path(sc, id + "_nu_surface.csv");
        write_text_file(f, field_slice_csv(pg.nu_star, "nu", 0, 0, 1, pg.nu_star.x.size() - 1));
        files.push_back(f);
    } else if (base == "fig8" || base == "fig9") {
        const std::string f = out_path(sc, id + "_surfaces.csv");
        write_text_file(f, policy_surfaces_csv(pg, default_t_slices(pg.nu_star.t),
                                               pg.nu_star.x.size() - 1));
        files.push_back(f);
    } else {  // fig5/6/7/11: strategy as a function of the remaining inventory
        const std::string f = out_path(sc, id + "_strategy_vs_inventory.csv");
        write_text_file(f, policy_curves_csv(pg, default_t_slices(pg.nu_star.t),
                                             sc.initial.s_b, sc.initial.delta));
        files.push_back(f);
    }

    if (base == "fig5" || base == "fig6" || base == "fig7") {
        // Inventory trajectories under the extracted policy.
        PolicyFn policy(s.policy_ptr);
        SimConfig cfg = sc.sim;
        cfg.n_paths = 1;
        cfg.n_threads = opt.threads;
        if (base == "fig5") {
            const std::pair<const char*, ForcedFillMode> modes[] = {
                {"none", ForcedFillMode::None},
                {"partial", ForcedFillMode::Draw},
                {"full", ForcedFillMode::Full}};
            for (auto [label, mode] : modes) {
                SimConfig c = cfg;
                c.forced_fill_mode = mode;
                if (mode == ForcedFillMode::None) c.forced_fill_times.clear();
                const auto paths = simulate_paths(sc.model, policy, sc.initial, c);
                const std::string f = out_path(sc, id + "_inventory_" + label + ".csv");
                write_paths_csv(f, paths);
                files.push_back(f);
            }
        } else {
            const auto paths = simulate_paths(sc.model, policy, sc.initial, cfg);
            const std::string f = out_path(sc, id + "_path.csv");
            write_paths_csv(f, paths);
            files.push_back(f);
        }
    }

    if (sc.outputs.grid_container) {
        const std::string f = out_path(sc, id + ".grid");
        write_grid_container(f, s.result.value, pg);
        files.push_back(f);
    }
    return files;
}

}  // namespace

std::vector<std::string> known_figures() {
    return {"fig1", "fig2", "fig3", "fig4", "fig5", "fig6",
            "fig7", "fig8", "fig9", "fig10", "fig11"};
}

int cmd_reproduce(const CliOptions& opt) {
    std::string base = opt.figure;
    std::string only_variant;
    for (const std::string& suffix : {std::string("_left"), std::string("_right")}) {
        if (base.size() > suffix.size() &&
            base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
            only_variant = base;
            base = base.substr(0, base.size() - suffix.size());
        }
    }
    const auto known = known_figures();
    if (std::find(known.begin(), known.end(), base) == known.end())
        throw SchemaError("unknown figure id '" + opt.figure + "'");

    std::vector<std::string> ids = only_variant.empty() ? figure_variants(base)
                                                        : std::vector<std::string>{only_variant};
    std::vector<std::string> all_files;
    for (const std::string& id : ids) {
        std::vector<std::string> files;
        if (base == "fig1" || base == "fig10")
            files = reproduce_simulation_figure(opt, id);
        else
            files = reproduce_policy_figure(opt, id, base);
        all_files.insert(all_files.end(), files.begin(), files.end());
        for (const auto& f : files) std::cout << id << " -> " << f << "\n";
    }

    // One manifest for the whole figure run.
    Scenario sc = load_bundled(opt, ids.front());
    CliOptions mopt = opt;
    mopt.scenario_path = (fs::path(opt.scenarios_dir) / (ids.front() + ".json")).string();
    write_manifest(sc, mopt, "reproduce " + opt.figure, all_files);
    return kExitOk;
}

}  // namespace lobliq
