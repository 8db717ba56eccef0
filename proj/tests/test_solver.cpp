#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lobliq/solver.hpp"
#include "oracle_5d.hpp"
#include "oracle_bellman.hpp"

using namespace lobliq;

namespace {

// Small-valued instance so absolute 1e-12 comparisons are meaningful.
ModelSpec tiny_model() {
    ModelSpec m;
    m.family = ModelFamily::MeanReverting;
    m.kappa_b = 0.5;
    m.kappa_delta = 0.4;
    m.s_bar = 1.0;
    m.delta_bar = 0.1;
    m.mu_b = 0.1;
    m.mu_delta = 0.1;
    m.beta = 0.01;
    m.jumps_bid_up = {0.5, MarkDist::uniform(0.0, 0.05)};
    m.jumps_bid_down = {0.3, MarkDist::uniform(0.0, 0.05)};
    m.jumps_spread_up = {0.2, MarkDist::uniform(0.0, 0.04)};
    m.jumps_spread_down = {0.2, MarkDist::uniform(0.0, 0.04)};
    m.dark_fill = {0.4, MarkDist::uniform(0.0, 1.0)};
    m.horizon = 0.05;
    m.inventory_cap = 2.0;
    m.control_cap = 1.0;
    return m;
}

GridSpec tiny_grid() {
    GridSpec g;
    g.n_t = 2;
    g.n_x = 3;
    g.n_s = 3;
    g.n_d = 3;
    g.x_max = 2.0;
    g.s_min = 0.8;
    g.s_max = 1.2;
    g.d_max = 0.2;
    g.n_nu = 2;
    g.n_eta = 2;
    return g;
}

ModelSpec desk_model() {
    ModelSpec m;
    m.family = ModelFamily::MeanReverting;
    m.kappa_b = 0.02;
    m.kappa_delta = 0.02;
    m.s_bar = 40.0;
    m.delta_bar = 0.1;
    m.mu_b = 0.01;
    m.mu_delta = 0.01;
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

GridSpec desk_grid() {
    GridSpec g;
    g.n_t = 11;
    g.n_x = 11;
    g.n_s = 7;
    g.n_d = 5;
    g.x_max = 3000.0;
    g.s_min = 38.0;
    g.s_max = 42.0;
    g.d_max = 0.4;
    g.n_eta = 7;
    return g;
}

ValueGrid analytic_grid(const GridSpec& spec, double horizon,
                        const std::function<double(double, double, double)>& f) {
    ValueGrid v;
    v.spec = spec;
    v.u.t = spec.make_t_axis(horizon);
    v.u.x = spec.make_x_axis();
    v.u.s = spec.make_s_axis();
    v.u.d = spec.make_d_axis();
    v.u.allocate();
    for (int k = 0; k < v.u.t.size(); ++k)
        for (int i = 0; i < v.u.x.size(); ++i)
            for (int j = 0; j < v.u.s.size(); ++j)
                for (int l = 0; l < v.u.d.size(); ++l)
                    v.u.at(k, i, j, l) = f(v.u.x[i], v.u.s[j], v.u.d[l]);
    return v;
}

}  // namespace

TEST_CASE("cash reduction certificate") {
    CHECK(reduce_cash_dimension({0.0, 2.0, 0.0}).reduced);
    CHECK_FALSE(reduce_cash_dimension({0.0, 2.0, 0.05}).reduced);
}

TEST_CASE("terminal slice is exact") {
    ModelSpec m = desk_model();
    ObjectiveSpec obj{1e-4, 6.0, 0.0};
    auto sol = solve_backward(m, obj, desk_grid(), 2);
    const Field4& u = sol.value.u;
    const int kT = u.t.size() - 1;
    for (int i = 0; i < u.x.size(); ++i)
        for (int j = 0; j < u.s.size(); ++j)
            for (int l = 0; l < u.d.size(); ++l)
                CHECK(u.at(kT, i, j, l) == (u.s[j] - obj.alpha * u.x[i]) * u.x[i]);
}

TEST_CASE("jump operator closed forms") {
    ModelSpec m = desk_model();
    m.jumps_bid_up = {0.5, MarkDist::uniform(0.0, 0.1)};
    ObjectiveSpec obj{0.0, 1.0, 0.0};
    GridSpec g = desk_grid();

    // Constant field with nothing posted: every channel telescopes to zero.
    ValueGrid vc = analytic_grid(g, m.horizon, [](double, double, double) { return 7.5; });
    for (JumpChannel c : kAllChannels)
        CHECK(apply_jump_operator(vc, m, obj, 0, 5, 3, 2, c, {0.0, 0.0}) ==
              doctest::Approx(0.0).epsilon(1e-14));

    // u = s: bid-up increment = lambda E[z] (1 - slope_d), slope_d = 0.
    ValueGrid vs = analytic_grid(g, m.horizon, [](double, double s, double) { return s; });
    CHECK(apply_jump_operator(vs, m, obj, 0, 5, 3, 2, JumpChannel::BidUp) ==
          doctest::Approx(0.5 * 0.05).epsilon(1e-12));

    // u = 0 with a posting: pure cash term lambda * eta * E[z] * mid.
    ValueGrid v0 = analytic_grid(g, m.horizon, [](double, double, double) { return 0.0; });
    // node (j=3, l=1): s = 40, d = 0.1 on the desk grid axes
    const double s = v0.u.s[3], d = v0.u.d[1];
    CHECK(s == doctest::Approx(40.0));
    CHECK(d == doctest::Approx(0.1));
    CHECK(apply_jump_operator(v0, m, obj, 0, 5, 3, 1, JumpChannel::DarkFill, {0.0, 1000.0}) ==
          doctest::Approx(0.1 * 1000.0 * 0.5 * (s + 0.5 * d)).epsilon(1e-12));
}

TEST_CASE("hamiltonian optimizer closed forms") {
    ModelSpec m = desk_model();
    m.kappa_b = m.kappa_delta = 0.0;  // no drift terms
    m.mu_b = m.mu_delta = 0.0;
    ObjectiveSpec obj{0.0, 1.0, 0.0};
    GridSpec g = desk_grid();

    // Flat value: vertex s/(2 beta) is off the box, so nu* saturates at N.
    ValueGrid vc = analytic_grid(g, m.horizon, [](double, double, double) { return 0.0; });
    auto h1 = optimize_hamiltonian(vc, m, obj, 0, 5, 3, 2);
    CHECK(h1.control.nu == doctest::Approx(m.control_cap));
    // and eta* posts the full feasible amount (dark term linear in eta)
    CHECK(h1.control.eta == doctest::Approx(std::min(m.control_cap, vc.u.x[5])));

    // du/dx = s kills the marginal gain: nu* = 0.
    ValueGrid vx = analytic_grid(g, m.horizon, [](double x, double s, double) { return x * s; });
    ModelSpec m_nodark = m;
    m_nodark.dark_fill = JumpSpec::off();
    auto h2 = optimize_hamiltonian(vx, m_nodark, obj, 0, 5, 3, 2);
    CHECK(h2.control.nu == 0.0);
    CHECK(h2.control.eta == 0.0);
}

TEST_CASE("one-step solve equals the Bellman enumeration oracle") {
    ModelSpec m = tiny_model();
    ObjectiveSpec obj{0.1, 0.5, 0.0};
    GridSpec g = tiny_grid();
    auto sol = solve_backward(m, obj, g, 1);
    REQUIRE(sol.diagnostics.substeps_per_slice == 1);

    const Field4& u = sol.value.u;
    std::vector<double> term(u.slice(1), u.slice(1) + u.slice_size());
    auto oracle = testing::bellman_enumeration_step(m, obj, u.x, u.s, u.d, term,
                                                    sol.diagnostics.dt_substep, 1.0, g.n_nu,
                                                    g.n_eta);
    double worst = 0.0;
    for (size_t n = 0; n < oracle.size(); ++n)
        worst = std::max(worst, std::fabs(oracle[n] - u.slice(0)[n]));
    CHECK(worst <= 1e-12);
}

TEST_CASE("multi-step solve equals the iterated oracle") {
    ModelSpec m = tiny_model();
    m.horizon = 0.15;
    ObjectiveSpec obj{0.1, 0.5, 0.0};
    GridSpec g = tiny_grid();
    g.n_t = 4;
    g.n_nu = 3;
    g.n_eta = 3;
    g.time_substeps = 1;
    auto sol = solve_backward(m, obj, g, 2);

    const Field4& u = sol.value.u;
    std::vector<double> cur(u.slice(3), u.slice(3) + u.slice_size());
    for (int k = 2; k >= 0; --k) {
        cur = testing::bellman_enumeration_step(m, obj, u.x, u.s, u.d, cur,
                                                sol.diagnostics.dt_substep, 1.0, g.n_nu,
                                                g.n_eta);
        double worst = 0.0;
        for (size_t n = 0; n < cur.size(); ++n)
            worst = std::max(worst, std::fabs(cur[n] - u.slice(k)[n]));
        CHECK(worst <= 1e-11);
    }
}

TEST_CASE("5-D solve certifies the cash reduction and cash translation") {
    ModelSpec m = tiny_model();
    m.horizon = 0.15;
    ObjectiveSpec obj{0.1, 0.5, 0.0};
    GridSpec g = tiny_grid();
    g.n_t = 4;
    g.n_nu = 3;
    g.n_eta = 3;
    g.time_substeps = 1;
    auto sol = solve_backward(m, obj, g, 1);
    const Field4& u = sol.value.u;

    // Padded cash axis: dark fills never clamp at the compared nodes.
    Axis wax({0.0, 1.0, 2.0, 10.0, 25.0});
    auto oracle = testing::solve_5d(m, obj, u.x, u.s, u.d, wax, sol.diagnostics.dt_substep, 3,
                                    g.n_nu, g.n_eta);

    double worst = 0.0;
    for (int i = 0; i < u.x.size(); ++i)
        for (int j = 0; j < u.s.size(); ++j)
            for (int l = 0; l < u.d.size(); ++l)
                for (int mw = 0; mw < 3; ++mw) {
                    const double v5 = oracle.v[oracle.idx(i, j, l, mw)];
                    const double v4 = wax[mw] + u.at(0, i, j, l);
                    worst = std::max(worst, std::fabs(v5 - v4));
                }
    CHECK(worst <= 1e-8);

    //

    double worst_shift = 0.0;
    for (int i = 0; i < u.x.size(); ++i)
        for (int j = 0; j < u.s.size(); ++j)
            for (int l = 0; l < u.d.size(); ++l) {
                const double dv = oracle.v[oracle.idx(i, j, l, 2)] -
                                  oracle.v[oracle.idx(i, j, l, 0)];
                worst_shift = std::max(worst_shift, std::fabs(dv - (wax[2] - wax[0])));
            }
    CHECK(worst_shift <= 1e-9);
}

TEST_CASE("discounting decays the reduced value when nothing moves") {
    ModelSpec m = desk_model();
    m.kappa_b = m.kappa_delta = 0.0;
    m.control_cap = 0.0;
    m.jumps_bid_up = m.jumps_bid_down = JumpSpec::off();
    m.jumps_spread_up = m.jumps_spread_down = JumpSpec::off();
    m.dark_fill = JumpSpec::off();
    ObjectiveSpec obj{0.0, 2.0, 0.1};
    GridSpec g = desk_grid();
    g.n_t = 5;
    g.time_substeps = 2;
    auto sol = solve_backward(m, obj, g, 1);
    const Field4& u = sol.value.u;
    const double dt = sol.diagnostics.dt_substep;
    const double decay = std::pow(1.0 - obj.r * dt, 8.0);
    for (int i : {3, 7})
        CHECK(u.at(0, i, 2, 1) == doctest::Approx(decay * u.at(4, i, 2, 1)).epsilon(1e-12));
}

TEST_CASE("comparison principle and risk-aversion ordering") {
    ModelSpec m = desk_model();
    GridSpec g = desk_grid();

    auto alpha_high = solve_backward(m, {1e-4, 6.0, 0.0}, g, 2);
    auto alpha_low = solve_backward(m, {1e-4, 0.5, 0.0}, g, 2);
    long long viol = 0;
    double scale = 0.0;
    for (double v : alpha_low.value.u.data) scale = std::max(scale, std::fabs(v));
    for (size_t n = 0; n < alpha_low.value.u.data.size(); ++n)
        if (alpha_high.value.u.data[n] > alpha_low.value.u.data[n] + 1e-9 * scale) ++viol;
    CHECK(viol == 0);

    auto gamma_low = solve_backward(m, {1e-4, 2.0, 0.0}, g, 2);
    auto gamma_high = solve_backward(m, {1e-2, 2.0, 0.0}, g, 2);
    viol = 0;
    for (size_t n = 0; n < gamma_low.value.u.data.size(); ++n)
        if (gamma_high.value.u.data[n] > gamma_low.value.u.data[n] + 1e-9 * scale) ++viol;
    CHECK(viol == 0);
}

TEST_CASE("policy stays in the feasible box") {
    ModelSpec m = desk_model();
    auto sol = solve_backward(m, {1e-4, 2.0, 0.0}, desk_grid(), 2);
    const Field4& nu = sol.policy.nu_star;
    const Field4& eta = sol.policy.eta_star;
    for (int k = 0; k < nu.t.size(); ++k)
        for (int i = 0; i < nu.x.size(); ++i)
            for (int j = 0; j < nu.s.size(); ++j)
                for (int l = 0; l < nu.d.size(); ++l) {
                    const double n = nu.at(k, i, j, l), e = eta.at(k, i, j, l);
                    CHECK(n >= 0.0);
                    CHECK(n <= m.control_cap);
                    CHECK(e >= 0.0);
                    CHECK(e <= std::min(m.control_cap, nu.x[i]) + 1e-12);
                    if (i == 0) {
                        CHECK(n == 0.0);
                        CHECK(e == 0.0);
                    }
                }
}

TEST_CASE("stored slices satisfy the wrapper-level Bellman recursion") {
    ModelSpec m = tiny_model();
    m.horizon = 0.1;
    ObjectiveSpec obj{0.1, 0.5, 0.0};
    GridSpec g = tiny_grid();
    g.n_t = 3;
    g.time_substeps = 1;
    auto sol = solve_backward(m, obj, g, 1);
    const Field4& u = sol.value.u;
    const double dt = sol.diagnostics.dt_substep;
    for (int k = 1; k >= 0; --k)
        for (int i = 1; i < u.x.size(); ++i)
            for (int j = 0; j < u.s.size(); ++j)
                for (int l = 0; l < u.d.size(); ++l) {
                    const auto h = optimize_hamiltonian(sol.value, m, obj, k + 1, i, j, l);
                    const double expect = u.at(k + 1, i, j, l) + dt * h.value;
                    CHECK(u.at(k, i, j, l) == doctest::Approx(expect).epsilon(1e-12));
                }
}

TEST_CASE("stability abort reports the admissible step") {
    ModelSpec m = desk_model();
    m.jumps_bid_up.intensity = 500.0;  // forces a tiny stable dt
    GridSpec g = desk_grid();
    g.time_substeps = 1;
    try {
        solve_backward(m, {0.0, 2.0, 0.0}, g, 1);
        FAIL("expected StabilityError");
    } catch (const StabilityError& e) {
        CHECK(e.max_admissible_dt > 0.0);
        CHECK(e.max_admissible_dt < 1.0 / 500.0);
    }
}

TEST_CASE("residual: consistency order and perturbation response") {
    ModelSpec m = desk_model();
    m.control_cap = 0.0;  // uncontrolled evolution keeps the field smooth
    m.dark_fill = JumpSpec::off();
    ObjectiveSpec obj{0.0, 0.001, 0.0};

    GridSpec coarse = desk_grid();
    coarse.n_t = 6;
    coarse.n_eta = 2;
    GridSpec fine = coarse;
    fine.n_t = 11;
    fine.n_x = 2 * coarse.n_x - 1;
    fine.n_s = 2 * coarse.n_s - 1;
    fine.n_d = 2 * coarse.n_d - 1;

    auto sc = solve_backward(m, obj, coarse, 2);
    auto sf = solve_backward(m, obj, fine, 2);
    const double rc = discrete_residual(sc.value, m, obj, 2);
    const double rf = discrete_residual(sf.value, m, obj, 2);
    CHECK(rf > 0.0);
    const double ratio = rc / rf;
    CHECK(ratio >= 2.0 / 1.5);
    CHECK(ratio <= 2.0 * 1.5);

    // Perturbation sized to the field scale (values are ~1e5 here).
    ValueGrid perturbed = sc.value;
    perturbed.u.at(2, 5, 3, 2) += 1000.0;
    CHECK(discrete_residual(perturbed, m, obj, 2) > rc);
}

TEST_CASE("solver output is independent of the thread count") {
    ModelSpec m = desk_model();
    ObjectiveSpec obj{1e-4, 2.0, 0.0};
    auto one = solve_backward(m, obj, desk_grid(), 1);
    auto four = solve_backward(m, obj, desk_grid(), 4);
    CHECK(one.value.u.data == four.value.u.data);
    CHECK(one.policy.nu_star.data == four.policy.nu_star.data);
    CHECK(one.policy.eta_star.data == four.policy.eta_star.data);
}

TEST_CASE("custom family reproduces the built-in dynamics") {
    ModelSpec mr = tiny_model();
    GridSpec g = tiny_grid();
    g.n_nu = 3;
    g.n_eta = 3;
    ObjectiveSpec obj{0.1, 0.5, 0.0};
    auto ref = solve_backward(mr, obj, g, 1);

    ModelSpec custom = mr;
    custom.family = ModelFamily::Custom;
    custom.custom.drift = [&mr](const MarketState& st, const ControlPair& c) {
        DriftRates d;
        d.ds_b = mr.kappa_b * (mr.s_bar - st.s_b - mr.mu_b * c.nu);
        d.ddelta = mr.kappa_delta * (mr.delta_bar - st.delta + mr.mu_delta * c.nu);
        return d;
    };
    custom.custom.jump = [](const MarketState& st, JumpChannel c, double z) {
        double s = st.s_b, d = st.delta;
        switch (c) {
            case JumpChannel::BidUp: s += z; d -= z; break;
            case JumpChannel::BidDown: s -= z; d += z; break;
            case JumpChannel::SpreadUp: d += z; break;
            case JumpChannel::SpreadDown: d -= z; break;
            default: break;
        }
        return std::make_pair(s, d);
    };
    auto sol = solve_backward(custom, obj, g, 1);
    double worst = 0.0;
    for (size_t n = 0; n < sol.value.u.data.size(); ++n)
        worst = std::max(worst, std::fabs(sol.value.u.data[n] - ref.value.u.data[n]));
    CHECK(worst <= 1e-9);
}

TEST_CASE("singleton spread axis solves") {
    ModelSpec m = desk_model();
    m.kappa_b = 0.0;
    m.mu_b = m.mu_delta = 0.0;
    m.jumps_bid_down.intensity = m.jumps_bid_up.intensity;  // martingale
    m.dark_fill = {0.1, MarkDist::point(1.0)};
    GridSpec g = desk_grid();
    g.n_d = 1;
    g.d_max = 0.0;
    auto sol = solve_backward(m, {0.0, 1e-5, 0.0}, g, 2);
    CHECK(sol.value.u.d.size() == 1);
    for (double v : sol.value.u.data) CHECK(std::isfinite(v));
}
