#include "lobliq/reports.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lobliq {

namespace {

// Width of the boundary band contaminated by face-clamped jump destinations.
// The clamp bias decays geometrically as it propagates inward, one
// interpolation cell (or one max-jump reach, when marks span several cells)
// per backward read; four layers push it below the smallest policy margins
// met in the bundled scenarios.
double contamination_band(double max_reach, double h) {
    return 4.0 * std::max(max_reach, h);
}

double mark_reach(const ModelSpec& model, JumpChannel c, double coord_scale) {
    if (model.channel(c).intensity == 0.0) return 0.0;
    const double z = model.channel(c).marks.hi();
    return model.family == ModelFamily::GeometricLevy ? z * coord_scale : z;
}

}  // namespace

InteriorMask::InteriorMask(const ModelSpec& model, const Axis& /*x*/, const Axis& s,
                           const Axis& d) {
    s_ok_.assign(s.size(), 1);
    d_ok_.assign(d.size(), 1);

    const double h_s = s.size() > 1 ? s.min_spacing() : 0.0;
    const double s_down = mark_reach(model, JumpChannel::BidDown, s.hi());
    const double s_up = mark_reach(model, JumpChannel::BidUp, s.hi());
    const double band_s_lo = s_down > 0.0 ? contamination_band(s_down, h_s) : 0.0;
    const double band_s_hi = s_up > 0.0 ? contamination_band(s_up, h_s) : 0.0;
    for (int j = 0; j < s.size(); ++j) {
        const double eps = 1e-9 * (1.0 + std::fabs(s.hi()));
        if (s[j] < s.lo() + band_s_lo - eps || s[j] > s.hi() - band_s_hi + eps) s_ok_[j] = 0;
    }

    if (d.size() > 1) {
        const double h_d = d.min_spacing();
        const double d_down = std::max(mark_reach(model, JumpChannel::BidUp, d.hi()),
                                       mark_reach(model, JumpChannel::SpreadDown, d.hi()));
        const double d_up = std::max(mark_reach(model, JumpChannel::BidDown, d.hi()),
                                     mark_reach(model, JumpChannel::SpreadUp, d.hi()));
        const double band_d_lo = d_down > 0.0 ? contamination_band(d_down, h_d) : 0.0;
        const double band_d_hi = d_up > 0.0 ? contamination_band(d_up, h_d) : 0.0;
        for (int l = 0; l < d.size(); ++l) {
            const double eps = 1e-9 * (1.0 + std::fabs(d.hi()));
            if (d[l] < d.lo() + band_d_lo - eps || d[l] > d.hi() - band_d_hi + eps)
                d_ok_[l] = 0;
        }
    }
}

int InteriorMask::count_s() const {
    return static_cast<int>(std::count(s_ok_.begin(), s_ok_.end(), 1));
}
int InteriorMask::count_d() const {
    return static_cast<int>(std::count(d_ok_.begin(), d_ok_.end(), 1));
}

BLReport check_bertsimas_lo(const PolicyGrid& solved, const ModelSpec& model,
                            const ObjectiveSpec& obj) {
    if (obj.gamma != 0.0)
        throw std::invalid_argument("check_bertsimas_lo needs a risk-neutral objective (gamma = 0)");
    if (model.mu_b != 0.0 || model.mu_delta != 0.0)
        throw std::invalid_argument("check_bertsimas_lo needs zero permanent impact");

    BLReport rep;
    rep.classification = classify_martingale(model);
    if (rep.classification == MartingaleClass::Neither) {
        // State-dependent drift: label at the centre of the policy box.
        MarketState centre;
        centre.x = 0.5 * solved.nu_star.x.hi();
        centre.s_b = 0.5 * (solved.nu_star.s.lo() + solved.nu_star.s.hi());
        centre.delta = 0.5 * (solved.nu_star.d.lo() + solved.nu_star.d.hi());
        rep.classification = classify_martingale(model, centre);
    }

    const Field4& nu = solved.nu_star;
    const InteriorMask mask(model, nu.x, nu.s, nu.d);
    if (mask.count_s() == 0 || mask.count_d() == 0)
        throw std::invalid_argument("check_bertsimas_lo: no interior (s, d) nodes; widen the grid");

    const double horizon = nu.t.hi();
    const double level_floor = 1e-6 * std::max(solved.control_cap, 1.0);

    for (int k = 0; k < nu.t.size(); ++k) {
        for (int i = 1; i < nu.x.size(); ++i) {
            double vmin = 0.0, vmax = 0.0, mean = 0.0;
            int n = 0;
            for (int j = 0; j < nu.s.size(); ++j) {
                if (!mask.ok_s(j)) continue;
                for (int l = 0; l < nu.d.size(); ++l) {
                    if (!mask.ok_d(l)) continue;
                    const double v = nu.at(k, i, j, l);
                    if (n == 0) vmin = vmax = v;
                    vmin = std::min(vmin, v);
                    vmax = std::max(vmax, v);
                    mean += v;
                    ++n;
                }
            }
            if (n == 0) continue;
            mean /= n;
            const double rel = (vmax - vmin) / std::max(std::fabs(mean), level_floor);
            if (rel > rep.max_rel_variation) {
                rep.max_rel_variation = rel;
                std::ostringstream os;
                os << "t=" << nu.t[k] << " x=" << nu.x[i] << " nu*=[" << vmin << "," << vmax
                   << "]";
                rep.worst_slice = os.str();
            }
            const double profile = nu.x[i] / (horizon - nu.t[k] + 1.0);
            const double dev = std::fabs(mean - profile) / std::max(profile, level_floor);
            rep.profile_max_rel_dev = std::max(rep.profile_max_rel_dev, dev);
        }
    }
    rep.flat = rep.max_rel_variation <= rep.threshold;
    return rep;
}

KSReport check_kratz_schoeneborn(const PolicyGrid& solved, const ModelSpec& model,
                                 const ObjectiveSpec& obj) {
    (void)obj;
    if (solved.eta_star.d.size() != 1 || solved.eta_star.d[0] != 0.0)
        throw std::invalid_argument("check_kratz_schoeneborn needs the spread grid pinned at 0");
    if (model.dark_fill.marks.kind() != MarkDist::Kind::PointMass ||
        model.dark_fill.marks.hi() != 1.0)
        throw std::invalid_argument("check_kratz_schoeneborn needs complete fills (z^w = 1)");
    if (classify_martingale(model) != MartingaleClass::Martingale)
        throw std::invalid_argument("check_kratz_schoeneborn needs a martingale bid");

    KSReport rep;
    const Field4& eta = solved.eta_star;
    const Field4& nu = solved.nu_star;
    const InteriorMask mask(model, eta.x, eta.s, eta.d);

    long long full = 0, total = 0;
    for (int k = 0; k < eta.t.size(); ++k) {
        for (int i = 1; i < eta.x.size(); ++i) {
            const double cap = std::min(solved.control_cap, eta.x[i]);
            const double step = cap / (solved.spec.n_eta - 1);
            for (int j = 0; j < eta.s.size(); ++j) {
                if (!mask.ok_s(j)) continue;
                ++total;
                if (eta.at(k, i, j, 0) >= cap - 0.5 * step) ++full;
                rep.max_nu = std::max(rep.max_nu, nu.at(k, i, j, 0));
            }
        }
    }
    rep.full_posting_fraction = total > 0 ? static_cast<double>(full) / total : 0.0;
    rep.full_posting = (full == total);

    long long mono_ok = 0, mono_total = 0;
    for (int k = 0; k < nu.t.size(); ++k) {
        for (int j = 0; j < nu.s.size(); ++j) {
            if (!mask.ok_s(j)) continue;
            for (int i = 2; i < nu.x.size(); ++i) {
                ++mono_total;
                if (nu.at(k, i, j, 0) >= nu.at(k, i - 1, j, 0) - 1e-9) ++mono_ok;
            }
        }
    }
    rep.nu_nondecreasing_fraction =
        mono_total > 0 ? static_cast<double>(mono_ok) / mono_total : 1.0;
    return rep;
}

RoundtripReport roundtrip_analysis(const PolicyGrid& solved, const ModelSpec& model) {
    RoundtripReport rep;
    const Field4& eta = solved.eta_star;
    const InteriorMask mask(model, eta.x, eta.s, eta.d);

    for (int k = 0; k < eta.t.size(); ++k) {
        for (int i = 1; i < eta.x.size(); ++i) {
            const double cap = std::min(solved.control_cap, eta.x[i]);
            if (cap <= 0.0) continue;
            const double step = cap / (solved.spec.n_eta - 1);
            for (int j = 0; j < eta.s.size(); ++j) {
                if (!mask.ok_s(j)) continue;
                for (int l = 0; l < eta.d.size(); ++l) {
                    if (!mask.ok_d(l)) continue;
                    ++rep.interior_nodes;
                    const double v = eta.at(k, i, j, l);
                    if (v < cap - 0.5 * step) {
                        ++rep.underposted_nodes;
                        if (rep.exemplars.size() < 16)
                            rep.exemplars.push_back(
                                {eta.t[k], eta.x[i], eta.s[j], eta.d[l], v, cap});
                    }
                }
            }
        }
    }
    rep.underposting_fraction =
        rep.interior_nodes > 0
            ? static_cast<double>(rep.underposted_nodes) / rep.interior_nodes
            : 0.0;
    return rep;
}

namespace {

MonotonicityReport ordering_over_interior(
    const Field4& low, const Field4& high, const InteriorMask& mask,
    const std::string& label, double tol) {
    MonotonicityReport rep;
    rep.label = label;
    for (int k = 0; k < low.t.size(); ++k) {
        for (int i = 1; i < low.x.size(); ++i) {
            for (int j = 0; j < low.s.size(); ++j) {
                if (!mask.ok_s(j)) continue;
                for (int l = 0; l < low.d.size(); ++l) {
                    if (!mask.ok_d(l)) continue;
                    ++rep.compared;
                    const double lo = low.at(k, i, j, l), hi = high.at(k, i, j, l);
                    if (hi < lo - tol) {
                        ++rep.violations;
                        rep.max_violation = std::max(rep.max_violation, lo - hi);
                        if (rep.exemplars.size() < 8) {
                            std::ostringstream os;
                            os << "t=" << low.t[k] << " x=" << low.x[i] << " s=" << low.s[j]
                               << " d=" << low.d[l] << " low=" << lo << " high=" << hi;
                            rep.exemplars.push_back(os.str());
                        }
                    }
                }
            }
        }
    }
    rep.violation_fraction =
        rep.compared > 0 ? static_cast<double>(rep.violations) / rep.compared : 0.0;
    return rep;
}

}  // namespace

MonotonicityReport compare_controls(const PolicyGrid& low, const PolicyGrid& high,
                                    bool nu_component, const ModelSpec& model,
                                    const std::string& label, double tol) {
    const Field4& fl = nu_component ? low.nu_star : low.eta_star;
    const Field4& fh = nu_component ? high.nu_star : high.eta_star;
    if (fl.size() != fh.size())
        throw std::invalid_argument("compare_controls: grids have different shapes");
    const InteriorMask mask(model, fl.x, fl.s, fl.d);
    return ordering_over_interior(fl, fh, mask, label, tol);
}

MonotonicityReport time_monotonicity(const PolicyGrid& solved, bool nu_component,
                                     const ModelSpec& model, const std::string& label,
                                     double tol) {
    const Field4& f = nu_component ? solved.nu_star : solved.eta_star;
    const InteriorMask mask(model, f.x, f.s, f.d);
    MonotonicityReport rep;
    rep.label = label;
    for (int k = 1; k < f.t.size(); ++k) {
        for (int i = 1; i < f.x.size(); ++i) {
            for (int j = 0; j < f.s.size(); ++j) {
                if (!mask.ok_s(j)) continue;
                for (int l = 0; l < f.d.size(); ++l) {
                    if (!mask.ok_d(l)) continue;
                    ++rep.compared;
                    const double earlier = f.at(k - 1, i, j, l);
                    const double later = f.at(k, i, j, l);
                    if (later < earlier - tol) {
                        ++rep.violations;
                        rep.max_violation = std::max(rep.max_violation, earlier - later);
                        if (rep.exemplars.size() < 8) {
                            std::ostringstream os;
                            os << "t=" << f.t[k] << " x=" << f.x[i] << " s=" << f.s[j]
                               << " d=" << f.d[l] << " earlier=" << earlier
                               << " later=" << later;
                            rep.exemplars.push_back(os.str());
                        }
                    }
                }
            }
        }
    }
    rep.violation_fraction =
        rep.compared > 0 ? static_cast<double>(rep.violations) / rep.compared : 0.0;
    return rep;
}

OrderingReport compare_values(const ValueGrid& lower, const ValueGrid& upper, double tol) {
    if (lower.u.size() != upper.u.size())
        throw std::invalid_argument("compare_values: grids have different shapes");
    OrderingReport rep;
    for (size_t n = 0; n < lower.u.data.size(); ++n) {
        ++rep.compared;
        const double lo = lower.u.data[n], hi = upper.u.data[n];
        if (lo > hi + tol) {
            ++rep.violations;
            rep.max_violation = std::max(rep.max_violation, lo - hi);
        }
    }
    return rep;
}

}  // namespace lobliq
