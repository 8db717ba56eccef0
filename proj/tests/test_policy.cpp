#include <doctest.h>

#include <cmath>
#include <memory>

#include "lobliq/policy.hpp"
#include "lobliq/reports.hpp"
#include "lobliq/rng.hpp"
#include "lobliq/solver.hpp"

using namespace lobliq;

namespace {

ModelSpec small_desk(double mu = 0.01) {
    ModelSpec m;
    m.family = ModelFamily::MeanReverting;
    m.kappa_b = 0.02;
    m.kappa_delta = 0.02;
    m.s_bar = 40.0;
    m.delta_bar = 0.1;
    m.mu_b = mu;
    m.mu_delta = mu;
    m.beta = 1e-5;
    m.jumps_bid_up = {0.2, MarkDist::uniform(0.0, 0.1)};
    m.jumps_bid_down = {0.2, MarkDist::uniform(0.0, 0.1)};
    m.jumps_spread_up = {0.2, MarkDist::uniform(0.0, 0.1)};
    m.jumps_spread_down = {0.2, MarkDist::uniform(0.0, 0.1)};
    m.dark_fill = {0.1, MarkDist::uniform(0.0, 1.0)};
    m.horizon = 10.0;
    m.inventory_cap = 3000.0;
    m.control_cap = 600.0;
    return m;
}

GridSpec small_grid() {
    GridSpec g;
    g.n_t = 11;
    g.n_x = 11;
    g.n_s = 17;
    g.n_d = 13;
    g.x_max = 3000.0;
    g.s_min = 36.0;
    g.s_max = 44.0;
    g.d_max = 1.2;
    g.n_eta = 7;
    return g;
}

MarketState start(double x, double s, double d) {
    MarketState st;
    st.x = x;
    st.s_b = s;
    st.delta = d;
    return st;
}

}  // namespace

TEST_CASE("interpolated policy stays feasible") {
    ModelSpec m = small_desk();
    auto sol = solve_backward(m, {1e-4, 2.0, 0.0}, small_grid(), 2);
    auto pg = std::make_shared<const PolicyGrid>(sol.policy);
    for (auto mode : {PolicyFn::Interp::Multilinear, PolicyFn::Interp::Nearest}) {
        PolicyFn policy(pg, mode);
        CounterRng gen(7, 0, 1);
        for (int trial = 0; trial < 300; ++trial) {
            MarketState st = start(3000.0 * gen.next_unit(), 36.0 + 8.0 * gen.next_unit(),
                                   0.6 * gen.next_unit());
            const double t = 12.0 * gen.next_unit() - 1.0;  // also out-of-range queries
            const ControlPair c = policy(t, st);
            CHECK(c.nu >= 0.0);
            CHECK(c.nu <= m.control_cap);
            CHECK(c.eta >= 0.0);
            CHECK(c.eta <= std::min(m.control_cap, st.x) + 1e-12);
        }
    }
}

TEST_CASE("zero policy with a frozen book evaluates exactly") {
    ModelSpec m = small_desk();
    m.kappa_b = m.kappa_delta = 0.0;
    m.jumps_bid_up = m.jumps_bid_down = JumpSpec::off();
    m.jumps_spread_up = m.jumps_spread_down = JumpSpec::off();
    m.dark_fill = JumpSpec::off();

    SimConfig cfg;
    cfg.n_paths = 3;
    cfg.dt_max = 0.1;
    cfg.record_every = 0.5;
    const MarketState st = start(3000.0, 40.0, 0.1);
    auto zero = [](double, const MarketState&) { return ControlPair{0.0, 0.0}; };

    ObjectiveSpec risk_neutral{0.0, 2.0, 0.0};
    auto est = evaluate_policy(m, risk_neutral, zero, st, cfg);
    CHECK(est.value == doctest::Approx((40.0 - 2.0 * 3000.0) * 3000.0).epsilon(1e-12));
    CHECK(est.std_error == 0.0);

    ObjectiveSpec averse{1e-4, 2.0, 0.0};
    auto est2 = evaluate_policy(m, averse, zero, st, cfg);
    const double expected =
        (40.0 - 2.0 * 3000.0) * 3000.0 - 1e-4 * 3000.0 * 3000.0 * m.horizon;
    CHECK(est2.value == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("extracted policy beats the zero policy and matches the solver value") {
    ModelSpec m = small_desk();
    ObjectiveSpec obj{1e-4, 2.0, 0.0};
    auto sol = solve_backward(m, obj, small_grid(), 2);
    PolicyFn policy(std::make_shared<const PolicyGrid>(sol.policy));

    const MarketState st = start(3000.0, 40.0, 0.1);
    SimConfig cfg;
    cfg.n_paths = 800;
    cfg.dt_max = 0.05;
    cfg.record_every = 0.25;
    cfg.seed = 2;

    auto opt = evaluate_policy(m, obj, policy, st, cfg);
    auto zero = evaluate_policy(
        m, obj, [](double, const MarketState&) { return ControlPair{0.0, 0.0}; }, st, cfg);
    CHECK(opt.value >= zero.value - 3.0 * (opt.std_error + zero.std_error));

    // DP consistency at the start node.
    const double u0 = interp_field(sol.value.u, 0.0, st.x, st.s_b, st.delta);
    const double tol = std::max(0.02 * std::fabs(u0), 3.0 * opt.std_error);
    CHECK(std::fabs(opt.value - u0) <= tol);

    // Value dominance: the solved value cannot be beaten by a feasible policy.
    CHECK(u0 >= zero.value - 3.0 * zero.std_error);
}

TEST_CASE("flatness check separates martingale from drifting books") {
    GridSpec g = small_grid();
    g.n_eta = 5;

    ModelSpec mart = small_desk(0.0);
    mart.kappa_b = mart.kappa_delta = 0.0;
    mart.dark_fill = JumpSpec::off();
    auto sol = solve_backward(mart, {0.0, 2.0, 0.0}, g, 2);
    BLReport rep = check_bertsimas_lo(sol.policy, mart, {0.0, 2.0, 0.0});
    CHECK(rep.classification == MartingaleClass::Martingale);
    CHECK(rep.flat);
    CHECK(rep.max_rel_variation <= 0.05);

    ModelSpec sub = small_desk(0.0);
    sub.s_bar = 42.0;  // pull from above: locally submartingale everywhere on the grid
    sub.jumps_bid_up.intensity = 0.5;
    sub.jumps_bid_down.intensity = 0.1;
    sub.dark_fill = JumpSpec::off();
    auto sol2 = solve_backward(sub, {0.0, 2.0, 0.0}, g, 2);
    BLReport rep2 = check_bertsimas_lo(sol2.policy, sub, {0.0, 2.0, 0.0});
    CHECK(rep2.classification == MartingaleClass::Submartingale);
    CHECK_FALSE(rep2.flat);

    CHECK_THROWS_AS(check_bertsimas_lo(sol.policy, mart, {0.01, 2.0, 0.0}),
                    std::invalid_argument);
    ModelSpec impact = small_desk(0.01);
    CHECK_THROWS_AS(check_bertsimas_lo(sol.policy, impact, {0.0, 2.0, 0.0}),
                    std::invalid_argument);
}

TEST_CASE("full-posting limit posts everything in the dark pool") {
    ModelSpec ks = small_desk(0.0);
    ks.kappa_b = ks.kappa_delta = 0.0;
    ks.delta_bar = 0.0;
    ks.dark_fill = {0.1, MarkDist::point(1.0)};
    GridSpec g = small_grid();
    g.n_d = 1;
    g.d_max = 0.0;
    ObjectiveSpec obj{0.0, 1e-5, 0.0};
    auto sol = solve_backward(ks, obj, g, 2);

    KSReport rep = check_kratz_schoeneborn(sol.policy, ks, obj);
    CHECK(rep.full_posting);
    CHECK(rep.full_posting_fraction == 1.0);
    CHECK(rep.nu_nondecreasing_fraction >= 0.99);

    RoundtripReport rt = roundtrip_analysis(sol.policy, ks);
    CHECK(rt.underposting_fraction == 0.0);

    // Preconditions are enforced.
    ModelSpec partial = ks;
    partial.dark_fill = {0.1, MarkDist::uniform(0.0, 1.0)};
    CHECK_THROWS_AS(check_kratz_schoeneborn(sol.policy, partial, obj), std::invalid_argument);
}

TEST_CASE("terminal-penalty ordering shows up in the argmax surfaces") {
    ModelSpec m = small_desk();
    GridSpec g = small_grid();
    auto hi = solve_backward(m, {1e-4, 6.0, 0.0}, g, 2);
    auto lo = solve_backward(m, {1e-4, 0.5, 0.0}, g, 2);
    // Higher alpha sells at least as fast.
    MonotonicityReport rep = compare_controls(lo.policy, hi.policy, true, m, "nu by alpha");
    CHECK(rep.violation_fraction <= 0.01);
    CHECK(rep.compared > 500);
}

TEST_CASE("time pressure: controls grow toward the deadline") {
    ModelSpec m = small_desk();
    auto sol = solve_backward(m, {1e-4, 6.0, 0.0}, small_grid(), 2);
    MonotonicityReport nu_rep = time_monotonicity(sol.policy, true, m, "nu in t");
    MonotonicityReport eta_rep = time_monotonicity(sol.policy, false, m, "eta in t");
    CHECK(nu_rep.violation_fraction <= 0.01);
    CHECK(eta_rep.violation_fraction <= 0.01);
}
