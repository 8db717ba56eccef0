// policy.hpp - extracted-policy interpolation and Monte Carlo evaluation.
#ifndef LOBLIQ_POLICY_HPP
#define LOBLIQ_POLICY_HPP

#include <memory>

#include "lobliq/grid.hpp"
#include "lobliq/objective.hpp"
#include "lobliq/pathsim.hpp"

namespace lobliq {

/// Callable view over a PolicyGrid. Query coordinates are clamped to the
/// grid box and the returned pair always satisfies nu in [0, N] and
/// eta <= min(N, x) at the query state.
class PolicyFn {
public:
    enum class Interp { Nearest, Multilinear };

    PolicyFn(std::shared_ptr<const PolicyGrid> grid, Interp mode = Interp::Multilinear);

    ControlPair operator()(double t, const MarketState& state) const;

    const PolicyGrid& grid() const { return *grid_; }

private:
    std::shared_ptr<const PolicyGrid> grid_;
    Interp mode_;
};

/// Monte Carlo estimate of the objective
/// E[ W(T) + (S^b(T) - alpha X(T)) X(T) - gamma int X^2 du ] under a policy,
/// with fills at the dark channel's event times.
Estimate evaluate_policy(const ModelSpec& model, const ObjectiveSpec& obj,
                         const PolicyCallback& policy, const MarketState& start,
                         const SimConfig& config);

/// Objective realized on one simulated path.
double path_objective(const ObjectiveSpec& obj, const PathRecord& path);

}  // namespace lobliq

#endif
