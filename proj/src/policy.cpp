#include "lobliq/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lobliq {

PolicyFn::PolicyFn(std::shared_ptr<const PolicyGrid> grid, Interp mode)
    : grid_(std::move(grid)), mode_(mode) {
    if (!grid_) throw std::invalid_argument("PolicyFn needs a policy grid");
}

namespace {

double sample_field(const Field4& f, PolicyFn::Interp mode, double t, double x, double s,
                    double d) {
    if (mode == PolicyFn::Interp::Nearest) {
        auto pick = [](const Axis::Location& loc) { return loc.frac < 0.5 ? loc.cell : loc.cell + 1; };
        const int k = std::min(pick(f.t.locate(t)), f.t.size() - 1);
        const int i = std::min(pick(f.x.locate(x)), f.x.size() - 1);
        const int j = std::min(pick(f.s.locate(s)), f.s.size() - 1);
        const int l = std::min(pick(f.d.locate(d)), f.d.size() - 1);
        return f.at(k, i, j, l);
    }
    return interp_field(f, t, x, s, d);
}

}  // namespace

ControlPair PolicyFn::operator()(double t, const MarketState& state) const {
    const PolicyGrid& g = *grid_;
    ControlPair c;
    c.nu = sample_field(g.nu_star, mode_, t, state.x, state.s_b, state.delta);
    c.eta = sample_field(g.eta_star, mode_, t, state.x, state.s_b, state.delta);
    c.nu = std::clamp(c.nu, 0.0, g.control_cap);
    c.eta = std::clamp(c.eta, 0.0, std::min(g.control_cap, state.x));
    return c;
}

double path_objective(const ObjectiveSpec& obj, const PathRecord& path) {
    return terminal_reward(obj, path.last()) - obj.gamma * path.x2_integral;
}

Estimate evaluate_policy(const ModelSpec& model, const ObjectiveSpec& obj,
                         const PolicyCallback& policy, const MarketState& start,
                         const SimConfig& config) {
    if (obj.r != 0.0)
        throw std::invalid_argument("evaluate_policy supports the undiscounted objective (r = 0)");
    const auto paths = simulate_paths(model, policy, start, config);
    double mean = 0.0;
    for (const auto& p : paths) mean += path_objective(obj, p);
    mean /= static_cast<double>(paths.size());
    double var = 0.0;
    for (const auto& p : paths) {
        const double d = path_objective(obj, p) - mean;
        var += d * d;
    }
    var = paths.size() > 1 ? var / (static_cast<double>(paths.size()) - 1.0) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(paths.size()))};
}

}  // namespace lobliq
