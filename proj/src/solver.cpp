#include "lobliq/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace lobliq {

namespace {

struct NodeDerivatives {
    double dm_x;        // backward difference in x (upwind for dx/dt = -nu <= 0)
    double dm_s, dp_s;  // one-sided differences in s
    double dm_d, dp_d;  // one-sided differences in d
};

inline void run_partitioned(size_t n, int n_threads, const std::function<void(size_t, size_t, int)>& fn) {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    int nt = n_threads > 0 ? n_threads : std::max(1, hw);
    nt = static_cast<int>(std::min<size_t>(nt, n));
    if (nt <= 1) {
        fn(0, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    const size_t chunk = (n + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
        size_t lo = static_cast<size_t>(t) * chunk, hi = std::min(n, lo + chunk);
        if (lo < hi) pool.emplace_back(fn, lo, hi, t);
    }
    for (auto& th : pool) th.join();
}

/// Everything needed to apply one explicit backward substep on a value slice.
class Stepper {
public:
    Stepper(const ModelSpec& model, const ObjectiveSpec& obj, const GridSpec& spec,
            const Axis& xax, const Axis& sax, const Axis& dax)
        : model_(model), obj_(obj), spec_(spec), xax_(xax), sax_(sax), dax_(dax) {
        for (JumpChannel c : kAllChannels)
            quad_[static_cast<int>(c)] = model.channel(c).marks.quadrature();
        n_x_ = xax.size();
        n_s_ = sax.size();
        n_d_ = dax.size();
        mr_ = model.family == ModelFamily::MeanReverting;
        geo_ = model.family == ModelFamily::GeometricLevy;
    }

    size_t slice_size() const { return static_cast<size_t>(n_x_) * n_s_ * n_d_; }
    size_t idx(int i, int j, int l) const {
        return (static_cast<size_t>(i) * n_s_ + j) * n_d_ + l;
    }

    // --- interpolation on a slice -------------------------------------------------

    double interp_sd(const double* u, int i, double s, double d, long long* clamps) const {
        auto ls = sax_.locate(s);
        auto ld = dax_.locate(d);
        if (clamps && (ls.clamped || ld.clamped)) ++(*clamps);
        const int j0 = ls.cell, j1 = std::min(ls.cell + 1, n_s_ - 1);
        const int l0 = ld.cell, l1 = std::min(ld.cell + 1, n_d_ - 1);
        const double fs = ls.frac, fd = ld.frac;
        const double v00 = u[idx(i, j0, l0)], v01 = u[idx(i, j0, l1)];
        const double v10 = u[idx(i, j1, l0)], v11 = u[idx(i, j1, l1)];
        return (1 - fs) * ((1 - fd) * v00 + fd * v01) + fs * ((1 - fd) * v10 + fd * v11);
    }

    double interp_x(const double* u, double x, int j, int l, long long* clamps) const {
        auto lx = xax_.locate(x);
        if (clamps && lx.clamped) ++(*clamps);
        const int i0 = lx.cell, i1 = std::min(lx.cell + 1, n_x_ - 1);
        return (1 - lx.frac) * u[idx(i0, j, l)] + lx.frac * u[idx(i1, j, l)];
    }

    // --- jump destinations (same maps as jump_map, on reduced coordinates) --------

    std::pair<double, double> price_jump_dest(double s, double d, JumpChannel c,
                                              double z) const {
        if (mr_) {
            switch (c) {
                case JumpChannel::BidUp: return {s + z, d - z};
                case JumpChannel::BidDown: return {s - z, d + z};
                case JumpChannel::SpreadUp: return {s, d + z};
                case JumpChannel::SpreadDown: return {s, d - z};
                default: break;
            }
        } else if (geo_) {
            switch (c) {
                case JumpChannel::BidUp: return {s * (1 + z), d * (1 - z)};
                case JumpChannel::BidDown: return {s * (1 - z), d * (1 + z)};
                case JumpChannel::SpreadUp: return {s, d * (1 + z)};
                case JumpChannel::SpreadDown: return {s, d * (1 - z)};
                default: break;
            }
        } else {
            MarketState st;
            st.x = 0.0;
            st.s_b = s;
            st.delta = d;
            return model_.custom.jump(st, c, z);
        }
        return {s, d};
    }

    /// Sum of the four price-channel expectations at a node.
    double price_jump_sum(const double* u, int i, int j, int l, long long* clamps) const {
        const double s = sax_[j], d = dax_[l];
        const double u0 = u[idx(i, j, l)];
        double total = 0.0;
        for (JumpChannel c : {JumpChannel::BidUp, JumpChannel::BidDown, JumpChannel::SpreadUp,
                              JumpChannel::SpreadDown}) {
            const double lambda = model_.channel(c).intensity;
            if (lambda == 0.0) continue;
            double exp_val = 0.0;
            for (const MarkNode& q : quad_[static_cast<int>(c)]) {
                auto [sd, dd] = price_jump_dest(s, d, c, q.value);
                exp_val += q.weight * interp_sd(u, i, sd, dd, clamps);
            }
            total += lambda * (exp_val - u0);
        }
        return total;
    }

    /// Dark-pool expectation for a given posted quantity.
    double dark_increment(const double* u, int i, int j, int l, double eta,
                          double cash_factor) const {
        const double lambda = model_.dark_fill.intensity;
        if (lambda == 0.0 || eta == 0.0) return 0.0;
        const double x = xax_[i];
        const double mid = sax_[j] + 0.5 * dax_[l];
        const double u0 = u[idx(i, j, l)];
        double exp_val = 0.0;
        for (const MarkNode& q : quad_[static_cast<int>(JumpChannel::DarkFill)]) {
            const double exec = eta * q.value;
            exp_val += q.weight *
                       (interp_x(u, x - exec, j, l, nullptr) - u0 + cash_factor * exec * mid);
        }
        return lambda * exp_val;
    }

    NodeDerivatives derivatives(const double* u, int i, int j, int l) const {
        NodeDerivatives nd{};
        const double u0 = u[idx(i, j, l)];
        nd.dm_x = (u0 - u[idx(i - 1, j, l)]) / xax_.spacing_left(i);

        if (n_s_ > 1) {
            const bool has_m = j > 0, has_p = j + 1 < n_s_;
            const double dm = has_m ? (u0 - u[idx(i, j - 1, l)]) / sax_.spacing_left(j) : 0.0;
            const double dp = has_p ? (u[idx(i, j + 1, l)] - u0) / sax_.spacing_right(j) : 0.0;
            nd.dm_s = has_m ? dm : dp;
            nd.dp_s = has_p ? dp : dm;
        }
        if (n_d_ > 1) {
            const bool has_m = l > 0, has_p = l + 1 < n_d_;
            const double dm = has_m ? (u0 - u[idx(i, j, l - 1)]) / dax_.spacing_left(l) : 0.0;
            const double dp = has_p ? (u[idx(i, j, l + 1)] - u0) / dax_.spacing_right(l) : 0.0;
            nd.dm_d = has_m ? dm : dp;
            nd.dp_d = has_p ? dp : dm;
        }
        return nd;
    }

    // Drift coefficients, affine in nu: a_s(nu) = s0 + s1*nu, a_d(nu) = d0 + d1*nu.
    struct DriftCoeffs {
        double s0, s1, d0, d1;
    };
    DriftCoeffs drift_coeffs(double s, double d) const {
        if (mr_)
            return {model_.kappa_b * (model_.s_bar - s), -model_.kappa_b * model_.mu_b,
                    model_.kappa_delta * (model_.delta_bar - d),
                    model_.kappa_delta * model_.mu_delta};
        if (geo_) return {0.0, -model_.mu_b * s, 0.0, model_.mu_delta * d};
        return {0.0, 0.0, 0.0, 0.0};  // custom handled separately
    }

    /// Lit-rate part of the Hamiltonian at a fixed nu, with upwind directions
    /// selected by the sign of each drift coefficient.
    double lit_value(double nu, double s, const DriftCoeffs& dc, const NodeDerivatives& nd,
                     double cash_factor) const {
        const double a_s = dc.s0 + dc.s1 * nu;
        const double a_d = dc.d0 + dc.d1 * nu;
        const double ds = a_s > 0.0 ? nd.dp_s : nd.dm_s;
        const double dd = a_d > 0.0 ? nd.dp_d : nd.dm_d;
        return a_s * ds + a_d * dd - nu * nd.dm_x +
               cash_factor * nu * (s - model_.beta * nu);
    }

    double lit_value_custom(double nu, double t, double x, double s, double d,
                            const NodeDerivatives& nd, double cash_factor) const {
        MarketState st;
        st.t = t;
        st.x = x;
        st.s_b = s;
        st.delta = d;
        const DriftRates dr = model_.custom.drift(st, ControlPair{nu, 0.0});
        const double ds = dr.ds_b > 0.0 ? nd.dp_s : nd.dm_s;
        const double dd = dr.ddelta > 0.0 ? nd.dp_d : nd.dm_d;
        return dr.ds_b * ds + dr.ddelta * dd - nu * nd.dm_x +
               cash_factor * nu * (s - model_.beta * nu);
    }

    struct NuBest {
        double nu;
        double value;
    };

    /// Maximizes the nu-part over [0, N]. Closed form: the objective is
    /// piecewise quadratic in nu (upwind switches at the drift sign changes),
    /// so each piece is solved at its clamped vertex and endpoints. Grid mode
    /// evaluates the n_nu candidates directly. Ties go to the smallest nu.
    NuBest optimize_nu(double t, double x, double s, double d, const NodeDerivatives& nd,
                       double cash_factor) const {
        const double N = model_.control_cap;
        NuBest best{0.0, -std::numeric_limits<double>::infinity()};
        auto consider = [&](double nu, double val) {
            if (val > best.value) best = {nu, val};
        };

        if (model_.family == ModelFamily::Custom || spec_.n_nu >= 2) {
            const int m = std::max(2, spec_.n_nu);
            for (int q = 0; q < m; ++q) {
                const double nu = N * static_cast<double>(q) / (m - 1);
                const double val = model_.family == ModelFamily::Custom
                                       ? lit_value_custom(nu, t, x, s, d, nd, cash_factor)
                                       : lit_value(nu, s, drift_coeffs(s, d), nd, cash_factor);
                consider(nu, val);
            }
            return best;
        }

        const DriftCoeffs dc = drift_coeffs(s, d);
        consider(0.0, lit_value(0.0, s, dc, nd, cash_factor));  // also covers N == 0
        double bps[4] = {0.0, N, N, N};
        int n_bp = 2;
        if (dc.s1 != 0.0) {
            const double b = -dc.s0 / dc.s1;
            if (b > 0.0 && b < N) bps[n_bp++] = b;
        }
        if (dc.d1 != 0.0) {
            const double b = -dc.d0 / dc.d1;
            if (b > 0.0 && b < N) bps[n_bp++] = b;
        }
        std::sort(bps, bps + n_bp);

        for (int seg = 0; seg + 1 < n_bp; ++seg) {
            const double lo = bps[seg], hi = bps[seg + 1];
            if (!(hi > lo)) continue;
            const double mid = 0.5 * (lo + hi);
            const double a_s_mid = dc.s0 + dc.s1 * mid;
            const double a_d_mid = dc.d0 + dc.d1 * mid;
            const double ds = a_s_mid > 0.0 ? nd.dp_s : nd.dm_s;
            const double dd = a_d_mid > 0.0 ? nd.dp_d : nd.dm_d;
            // H(nu) = c0 + c1 nu + c2 nu^2 on [lo, hi]
            const double c1 = dc.s1 * ds + dc.d1 * dd - nd.dm_x + cash_factor * s;
            const double c2 = -cash_factor * model_.beta;
            auto eval = [&](double nu) {
                return (dc.s0) * ds + (dc.d0) * dd + c1 * nu + c2 * nu * nu;
            };
            consider(lo, eval(lo));
            if (c2 < 0.0) {
                const double v = std::clamp(-c1 / (2.0 * c2), lo, hi);
                consider(v, eval(v));
            }
            consider(hi, eval(hi));
        }
        return best;
    }

    struct EtaBest {
        double eta;
        double value;
    };

    /// Grid search for the dark posting over [0, min(N, x)]; the increment of
    /// eta = 0 is exactly zero. Ties go to the smallest eta.
    EtaBest optimize_eta(const double* u, int i, int j, int l, double cash_factor) const {
        EtaBest best{0.0, 0.0};
        if (model_.dark_fill.intensity == 0.0) return best;
        const double cap = std::min(model_.control_cap, xax_[i]);
        if (cap <= 0.0) return best;
        const int m = spec_.n_eta;
        for (int q = 1; q < m; ++q) {
            const double eta = cap * static_cast<double>(q) / (m - 1);
            const double val = dark_increment(u, i, j, l, eta, cash_factor);
            if (val > best.value) best = {eta, val};
        }
        return best;
    }

    struct NodeResult {
        double hamiltonian;
        ControlPair control;
    };

    /// Full sup-Hamiltonian at an interior node of a slice.
    NodeResult optimize_node(const double* u, double t, int i, int j, int l,
                             double cash_factor, long long* clamps) const {
        const double x = xax_[i], s = sax_[j], d = dax_[l];
        const NodeDerivatives nd = derivatives(u, i, j, l);
        const NuBest nb = optimize_nu(t, x, s, d, nd, cash_factor);
        const EtaBest eb = optimize_eta(u, i, j, l, cash_factor);
        const double jumps = price_jump_sum(u, i, j, l, clamps);
        const double ham = running_reward_reduced(obj_, x) + nb.value + eb.value + jumps;
        return {ham, ControlPair{nb.nu, eb.eta}};
    }

    /// One explicit backward substep: u_out = u_next + dt (H[u_next] - r u_next).
    /// Writes the argmax controls when policy buffers are given.
    void update_slice(const double* u_next, double t_next, double cash_factor_next, double dt,
                      double* u_out, double* nu_out, double* eta_out, int n_threads,
                      long long* clamp_total) const {
        const size_t n_sd = static_cast<size_t>(n_s_) * n_d_;
        const size_t n_nodes = static_cast<size_t>(n_x_) * n_sd;
        std::atomic<long long> clamp_sum{0};

        run_partitioned(n_nodes, n_threads, [&](size_t lo, size_t hi, int) {
            long long clamps = 0;
            for (size_t node = lo; node < hi; ++node) {
                const int i = static_cast<int>(node / n_sd);
                const size_t rem = node % n_sd;
                const int j = static_cast<int>(rem / n_d_);
                const int l = static_cast<int>(rem % n_d_);
                if (i == 0) {
                    // Depleted inventory: absorbed, no trading.
                    u_out[node] = 0.0;
                    if (nu_out) nu_out[node] = 0.0;
                    if (eta_out) eta_out[node] = 0.0;
                    continue;
                }
                const NodeResult res = optimize_node(u_next, t_next, i, j, l,
                                                     cash_factor_next, &clamps);
                u_out[node] = u_next[node] + dt * (res.hamiltonian - obj_.r * u_next[node]);
                if (nu_out) nu_out[node] = res.control.nu;
                if (eta_out) eta_out[node] = res.control.eta;
            }
            clamp_sum.fetch_add(clamps, std::memory_order_relaxed);
        });
        if (clamp_total) *clamp_total += clamp_sum.load();
    }

    /// Largest explicit step keeping every node-update coefficient non-negative.
    double stable_dt() const {
        const double N = model_.control_cap;
        double adv_x = 0.0;
        for (int i = 1; i < n_x_; ++i) adv_x = std::max(adv_x, N / xax_.spacing_left(i));

        double adv_s = 0.0, adv_d = 0.0;
        const double hs = n_s_ > 1 ? sax_.min_spacing() : 1.0;
        const double hd = n_d_ > 1 ? dax_.min_spacing() : 1.0;
        for (double s : {sax_.lo(), sax_.hi()}) {
            for (double d : {dax_.lo(), dax_.hi()}) {
                for (double nu : {0.0, N}) {
                    double as, ad;
                    if (model_.family == ModelFamily::Custom) {
                        MarketState st;
                        st.x = xax_.hi();
                        st.s_b = s;
                        st.delta = d;
                        const DriftRates dr = model_.custom.drift(st, ControlPair{nu, 0.0});
                        as = dr.ds_b;
                        ad = dr.ddelta;
                    } else {
                        const DriftCoeffs dc = drift_coeffs(s, d);
                        as = dc.s0 + dc.s1 * nu;
                        ad = dc.d0 + dc.d1 * nu;
                    }
                    if (n_s_ > 1) adv_s = std::max(adv_s, std::fabs(as) / hs);
                    if (n_d_ > 1) adv_d = std::max(adv_d, std::fabs(ad) / hd);
                }
            }
        }
        double lambda_sum = 0.0;
        for (JumpChannel c : kAllChannels) lambda_sum += model_.channel(c).intensity;
        const double denom = adv_x + adv_s + adv_d + lambda_sum + obj_.r;
        return denom > 0.0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
    }

private:
    const ModelSpec& model_;
    const ObjectiveSpec& obj_;
    const GridSpec& spec_;
    const Axis &xax_, &sax_, &dax_;
    std::array<std::vector<MarkNode>, kNumChannels> quad_;
    int n_x_, n_s_, n_d_;
    bool mr_ = false, geo_ = false;
};

int resolve_substeps(const GridSpec& spec, double dt_slice, double dt_stable) {
    if (spec.time_substeps > 0) {
        const double dt_sub = dt_slice / spec.time_substeps;
        if (dt_sub > dt_stable * (1.0 + 1e-9))
            throw StabilityError(
                "explicit step " + std::to_string(dt_sub) +
                    " exceeds the stability bound; max admissible dt = " +
                    std::to_string(dt_stable),
                dt_stable);
        return spec.time_substeps;
    }
    if (!std::isfinite(dt_stable)) return 1;
    return std::max(1, static_cast<int>(std::ceil(dt_slice / dt_stable - 1e-12)));
}

double cash_factor_at_slice(const ObjectiveSpec& obj, int k, int n_t, double dt_sub,
                            int substeps) {
    if (obj.r == 0.0) return 1.0;
    const double per = 1.0 - obj.r * dt_sub;
    return std::pow(per, static_cast<double>(n_t - 1 - k) * substeps);
}

}  // namespace

SolveResult solve_backward(const ModelSpec& model, const ObjectiveSpec& obj,
                           const GridSpec& spec, int n_threads) {
    model.validate();
    obj.validate();
    spec.validate();
    if (spec.x_max > model.inventory_cap + 1e-9)
        throw std::invalid_argument("grid x_max exceeds the model inventory cap");
    if (model.family == ModelFamily::Custom && spec.n_nu < 2)
        throw std::invalid_argument("custom models need a nu control grid (n_nu >= 2)");

    SolveResult out;
    out.value.spec = spec;
    out.policy.spec = spec;
    out.policy.control_cap = model.control_cap;

    Field4& u = out.value.u;
    u.t = spec.make_t_axis(model.horizon);
    u.x = spec.make_x_axis();
    u.s = spec.make_s_axis();
    u.d = spec.make_d_axis();
    u.allocate();
    out.policy.nu_star = u;
    out.policy.eta_star = u;

    const Axis &tax = u.t, &xax = u.x, &sax = u.s, &dax = u.d;
    Stepper stepper(model, obj, spec, xax, sax, dax);

    const int n_t = tax.size();
    const double dt_slice = tax[1] - tax[0];
    const double dt_stable = stepper.stable_dt();
    const int substeps = resolve_substeps(spec, dt_slice, dt_stable);
    const double dt_sub = dt_slice / substeps;

    SolveDiagnostics& diag = out.diagnostics;
    diag.dt_slice = dt_slice;
    diag.dt_substep = dt_sub;
    diag.substeps_per_slice = substeps;
    diag.dt_stable = dt_stable;
    diag.cfl_ratio = std::isfinite(dt_stable) ? dt_sub / dt_stable : 0.0;

    // Terminal slice: u(T) = (s - alpha x) x exactly at the nodes.
    {
        double* term = u.slice(n_t - 1);
        for (int i = 0; i < xax.size(); ++i)
            for (int j = 0; j < sax.size(); ++j)
                for (int l = 0; l < dax.size(); ++l)
                    term[stepper.idx(i, j, l)] = terminal_reward_reduced(obj, xax[i], sax[j]);
        // Terminal-limit controls, for completeness of the policy grid.
        std::vector<double> scratch(stepper.slice_size());
        stepper.update_slice(term, tax[n_t - 1], 1.0, 0.0, scratch.data(),
                             out.policy.nu_star.slice(n_t - 1),
                             out.policy.eta_star.slice(n_t - 1), n_threads, nullptr);
    }

    std::vector<double> buf_a(stepper.slice_size()), buf_b(stepper.slice_size());
    double cash_factor = 1.0;  // at t_{k+1}, starts at T

    for (int k = n_t - 2; k >= 0; --k) {
        const double* src = u.slice(k + 1);
        double* cur = buf_a.data();
        double* nxt = buf_b.data();
        std::copy(src, src + stepper.slice_size(), cur);

        for (int m = 0; m < substeps; ++m) {
            const double t_next = tax[k + 1] - dt_sub * m;
            const bool last = (m == substeps - 1);
            double* dst = last ? u.slice(k) : nxt;
            stepper.update_slice(cur, t_next, cash_factor, dt_sub, dst,
                                 last ? out.policy.nu_star.slice(k) : nullptr,
                                 last ? out.policy.eta_star.slice(k) : nullptr, n_threads,
                                 &diag.jump_clamp_events);
            cash_factor *= (1.0 - obj.r * dt_sub);
            if (!last) std::swap(cur, nxt);
            else cur = u.slice(k);
        }
        for (size_t n = 0; n < stepper.slice_size(); ++n) {
            if (!std::isfinite(u.slice(k)[n]))
                throw std::runtime_error("solve_backward: non-finite value at t = " +
                                         std::to_string(tax[k]));
        }
    }
    return out;
}

namespace {

// Shared setup for the public node-level wrappers.
struct GridView {
    Axis xax, sax, dax;
    GridView(const ValueGrid& v) : xax(v.u.x), sax(v.u.s), dax(v.u.d) {}
};

double wrapper_cash_factor(const ValueGrid& value, const ModelSpec& model,
                           const ObjectiveSpec& obj, int k) {
    if (obj.r == 0.0) return 1.0;
    const Axis& tax = value.u.t;
    Stepper stepper(model, obj, value.spec, value.u.x, value.u.s, value.u.d);
    const double dt_slice = tax[1] - tax[0];
    const int substeps = resolve_substeps(value.spec, dt_slice, stepper.stable_dt());
    return cash_factor_at_slice(obj, k, tax.size(), dt_slice / substeps, substeps);
}

}  // namespace

double apply_jump_operator(const ValueGrid& value, const ModelSpec& model,
                           const ObjectiveSpec& obj, int k, int i, int j, int l,
                           JumpChannel channel, const ControlPair& control) {
    Stepper stepper(model, obj, value.spec, value.u.x, value.u.s, value.u.d);
    const double* slice = value.u.slice(k);
    const double cash_factor = wrapper_cash_factor(value, model, obj, k);
    if (channel == JumpChannel::DarkFill)
        return stepper.dark_increment(slice, i, j, l, control.eta, cash_factor);

    const double lambda = model.channel(channel).intensity;
    if (lambda == 0.0) return 0.0;
    const double s = value.u.s[j], d = value.u.d[l];
    const double u0 = slice[stepper.idx(i, j, l)];
    double exp_val = 0.0;
    long long clamps = 0;
    for (const MarkNode& q : model.channel(channel).marks.quadrature()) {
        auto [sd, dd] = stepper.price_jump_dest(s, d, channel, q.value);
        exp_val += q.weight * stepper.interp_sd(slice, i, sd, dd, &clamps);
    }
    return lambda * (exp_val - u0);
}

HamiltonianResult optimize_hamiltonian(const ValueGrid& value, const ModelSpec& model,
                                       const ObjectiveSpec& obj, int k, int i, int j, int l) {
    if (i == 0) return {ControlPair{0.0, 0.0}, 0.0};
    Stepper stepper(model, obj, value.spec, value.u.x, value.u.s, value.u.d);
    const double cash_factor = wrapper_cash_factor(value, model, obj, k);
    long long clamps = 0;
    auto res = stepper.optimize_node(value.u.slice(k), value.u.t[k], i, j, l, cash_factor,
                                     &clamps);
    return {res.control, res.hamiltonian};
}

double discrete_residual(const ValueGrid& value, const ModelSpec& model,
                         const ObjectiveSpec& obj, int n_threads) {
    const Field4& u = value.u;
    Stepper stepper(model, obj, value.spec, u.x, u.s, u.d);
    const Axis& tax = u.t;
    const int n_t = tax.size();
    const double dt_slice = tax[1] - tax[0];
    const int substeps = resolve_substeps(value.spec, dt_slice, stepper.stable_dt());
    const double dt_sub = dt_slice / substeps;

    std::vector<double> worst(n_t - 1, 0.0);

    run_partitioned(static_cast<size_t>(n_t - 1), n_threads, [&](size_t lo, size_t hi, int) {
        for (size_t kk = lo; kk < hi; ++kk) {
            const int k = static_cast<int>(kk);
            const double cash_factor =
                cash_factor_at_slice(obj, k, n_t, dt_sub, substeps);
            const double* uk = u.slice(k);
            const double* uk1 = u.slice(k + 1);
            double m = 0.0;
            for (int i = 1; i < u.x.size(); ++i) {
                for (int j = 0; j < u.s.size(); ++j) {
                    for (int l = 0; l < u.d.size(); ++l) {
                        const size_t n = stepper.idx(i, j, l);
                        const auto res = stepper.optimize_node(uk, tax[k], i, j, l,
                                                               cash_factor, nullptr);
                        const double r = (uk1[n] - uk[n]) / dt_slice + res.hamiltonian -
                                         obj.r * uk[n];
                        m = std::max(m, std::fabs(r));
                    }
                }
            }
            worst[kk] = m;
        }
    });
    double m = 0.0;
    for (double v : worst) m = std::max(m, v);
    return m;
}

}  // namespace lobliq
