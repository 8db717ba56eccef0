#include "oracle_5d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lobliq::testing {

namespace {

struct Loc {
    int cell;
    double frac;
};

Loc find(const Axis& ax, double c) {
    if (ax.size() == 1) return {0, 0.0};
    if (c <= ax.lo()) return {0, 0.0};
    if (c >= ax.hi()) return {ax.size() - 2, 1.0};
    int cell = 0;
    while (cell + 2 < ax.size() && ax[cell + 1] <= c) ++cell;
    return {cell, (c - ax[cell]) / (ax[cell + 1] - ax[cell])};
}

}  // namespace

Oracle5D solve_5d(const ModelSpec& model, const ObjectiveSpec& obj, const Axis& xax,
                  const Axis& sax, const Axis& dax, const Axis& wax, double dt, int n_steps,
                  int n_nu, int n_eta) {
    Oracle5D g;
    g.xax = xax;
    g.sax = sax;
    g.dax = dax;
    g.wax = wax;
    const int nx = xax.size(), ns = sax.size(), nd = dax.size(), nw = wax.size();
    const size_t total = static_cast<size_t>(nx) * ns * nd * nw;
    std::vector<double> cur(total), next(total);

    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ns; ++j)
            for (int l = 0; l < nd; ++l)
                for (int m = 0; m < nw; ++m)
                    cur[g.idx(i, j, l, m)] =
                        wax[m] + (sax[j] - obj.alpha * xax[i]) * xax[i];

    const bool geo = model.family == ModelFamily::GeometricLevy;
    const double N = model.control_cap;

    auto at = [&](const std::vector<double>& v, int i, int j, int l, int m) {
        return v[g.idx(i, j, l, m)];
    };
    auto interp_sd = [&](const std::vector<double>& v, int i, double s, double d, int m) {
        const Loc ls = find(sax, s), ld = find(dax, d);
        const int j1 = std::min(ls.cell + 1, ns - 1), l1 = std::min(ld.cell + 1, nd - 1);
        return (1 - ls.frac) * ((1 - ld.frac) * at(v, i, ls.cell, ld.cell, m) +
                                ld.frac * at(v, i, ls.cell, l1, m)) +
               ls.frac * ((1 - ld.frac) * at(v, i, j1, ld.cell, m) +
                          ld.frac * at(v, i, j1, l1, m));
    };
    // Cash enters the value linearly, so the oracle extrapolates in w beyond
    // the top node instead of clamping (clamping there would leak a spurious
    // kink back into the compared region through the w-derivative).
    auto find_w = [&](double w) -> Loc {
        if (nw == 1) return {0, 0.0};
        if (w <= wax.lo()) return {0, (w - wax[0]) / (wax[1] - wax[0])};
        int cell = 0;
        while (cell + 2 < nw && wax[cell + 1] <= w) ++cell;
        return {cell, (w - wax[cell]) / (wax[cell + 1] - wax[cell])};
    };
    auto interp_xw = [&](const std::vector<double>& v, double x, int j, int l, double w) {
        const Loc lx = find(xax, x), lw = find_w(w);
        const int i1 = std::min(lx.cell + 1, nx - 1), m1 = std::min(lw.cell + 1, nw - 1);
        return (1 - lx.frac) * ((1 - lw.frac) * at(v, lx.cell, j, l, lw.cell) +
                                lw.frac * at(v, lx.cell, j, l, m1)) +
               lx.frac * ((1 - lw.frac) * at(v, i1, j, l, lw.cell) +
                          lw.frac * at(v, i1, j, l, m1));
    };

    for (int step = 0; step < n_steps; ++step) {
        for (int i = 0; i < nx; ++i) {
            for (int j = 0; j < ns; ++j) {
                for (int l = 0; l < nd; ++l) {
                    for (int m = 0; m < nw; ++m) {
                        const size_t node = g.idx(i, j, l, m);
                        if (i == 0) {
                            // Depleted: cash can only sit still.
                            next[node] = cur[node] + dt * (-obj.r * cur[node]);
                            continue;
                        }
                        const double x = xax[i], s = sax[j], d = dax[l], w = wax[m];
                        const double v0 = cur[node];

                        const double dmx = (v0 - at(cur, i - 1, j, l, m)) / (xax[i] - xax[i - 1]);
                        double dms = 0, dps = 0, dmd = 0, dpd = 0, dmw = 0, dpw = 0;
                        if (ns > 1) {
                            dms = j > 0 ? (v0 - at(cur, i, j - 1, l, m)) / (sax[j] - sax[j - 1])
                                        : (at(cur, i, j + 1, l, m) - v0) / (sax[j + 1] - sax[j]);
                            dps = j + 1 < ns
                                      ? (at(cur, i, j + 1, l, m) - v0) / (sax[j + 1] - sax[j])
                                      : dms;
                        }
                        if (nd > 1) {
                            dmd = l > 0 ? (v0 - at(cur, i, j, l - 1, m)) / (dax[l] - dax[l - 1])
                                        : (at(cur, i, j, l + 1, m) - v0) / (dax[l + 1] - dax[l]);
                            dpd = l + 1 < nd
                                      ? (at(cur, i, j, l + 1, m) - v0) / (dax[l + 1] - dax[l])
                                      : dmd;
                        }
                        if (nw > 1) {
                            dmw = m > 0 ? (v0 - at(cur, i, j, l, m - 1)) / (wax[m] - wax[m - 1])
                                        : (at(cur, i, j, l, m + 1) - v0) / (wax[m + 1] - wax[m]);
                            dpw = m + 1 < nw
                                      ? (at(cur, i, j, l, m + 1) - v0) / (wax[m + 1] - wax[m])
                                      : dmw;
                        }

                        double jumps = 0.0;
                        for (JumpChannel c : {JumpChannel::BidUp, JumpChannel::BidDown,
                                              JumpChannel::SpreadUp, JumpChannel::SpreadDown}) {
                            const JumpSpec& spec = model.channel(c);
                            if (spec.intensity == 0.0) continue;
                            double ev = 0.0;
                            for (const MarkNode& q : spec.marks.quadrature()) {
                                double sd = s, dd = d;
                                switch (c) {
                                    case JumpChannel::BidUp:
                                        sd = geo ? s * (1 + q.value) : s + q.value;
                                        dd = geo ? d * (1 - q.value) : d - q.value;
                                        break;
                                    case JumpChannel::BidDown:
                                        sd = geo ? s * (1 - q.value) : s - q.value;
                                        dd = geo ? d * (1 + q.value) : d + q.value;
                                        break;
                                    case JumpChannel::SpreadUp:
                                        dd = geo ? d * (1 + q.value) : d + q.value;
                                        break;
                                    case JumpChannel::SpreadDown:
                                        dd = geo ? d * (1 - q.value) : d - q.value;
                                        break;
                                    default: break;
                                }
                                ev += q.weight * interp_sd(cur, i, sd, dd, m);
                            }
                            jumps += spec.intensity * (ev - v0);
                        }

                        const double cap = std::min(N, x);
                        double best = -std::numeric_limits<double>::infinity();
                        for (int a = 0; a < n_nu; ++a) {
                            const double nu = N * static_cast<double>(a) / (n_nu - 1);
                            double as, ad;
                            if (geo) {
                                as = -model.mu_b * nu * s;
                                ad = model.mu_delta * nu * d;
                            } else {
                                as = model.kappa_b * (model.s_bar - s - model.mu_b * nu);
                                ad = model.kappa_delta *
                                     (model.delta_bar - d + model.mu_delta * nu);
                            }
                            const double aw = nu * (s - model.beta * nu);
                            const double lit = as * (as > 0 ? dps : dms) +
                                               ad * (ad > 0 ? dpd : dmd) - nu * dmx +
                                               aw * (aw > 0 ? dpw : dmw);
                            for (int b = 0; b < n_eta; ++b) {
                                const double eta = cap * static_cast<double>(b) / (n_eta - 1);
                                double dark = 0.0;
                                if (model.dark_fill.intensity > 0.0 && eta > 0.0) {
                                    double ev = 0.0;
                                    for (const MarkNode& q : model.dark_fill.marks.quadrature()) {
                                        const double exec = eta * q.value;
                                        ev += q.weight *
                                              (interp_xw(cur, x - exec, j, l,
                                                         w + exec * (s + 0.5 * d)) -
                                               v0);
                                    }
                                    dark = model.dark_fill.intensity * ev;
                                }
                                best = std::max(best, -obj.gamma * x * x + lit + dark + jumps);
                            }
                        }
                        next[node] = v0 + dt * (best - obj.r * v0);
                    }
                }
            }
        }
        std::swap(cur, next);
    }
    g.v = cur;
    return g;
}

}  // namespace lobliq::testing
