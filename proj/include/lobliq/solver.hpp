// solver.hpp - backward explicit upwind solver for the liquidation HJB PIDE.
#ifndef LOBLIQ_SOLVER_HPP
#define LOBLIQ_SOLVER_HPP

#include <stdexcept>
#include <string>

#include "lobliq/grid.hpp"
#include "lobliq/model.hpp"
#include "lobliq/objective.hpp"

namespace lobliq {

/// Explicit step exceeds the monotonicity bound and substepping was pinned.
class StabilityError : public std::runtime_error {
public:
    StabilityError(const std::string& msg, double max_dt)
        : std::runtime_error(msg), max_admissible_dt(max_dt) {}
    double max_admissible_dt;
};

struct SolveDiagnostics {
    double dt_slice = 0.0;        ///< stored-slice time step
    double dt_substep = 0.0;      ///< internal explicit step actually used
    int substeps_per_slice = 1;
    double dt_stable = 0.0;       ///< max admissible explicit step
    double cfl_ratio = 0.0;       ///< dt_substep / dt_stable (<= 1)
    long long jump_clamp_events = 0;  ///< off-grid jump destinations clamped to a face
    double max_residual = 0.0;    ///< filled by discrete_residual
};

struct SolveResult {
    ValueGrid value;
    PolicyGrid policy;
    SolveDiagnostics diagnostics;
};

/// Marches the reduced value u backward from u(T, x, s, d) = (s - alpha x) x
/// with explicit Euler substeps, first-order upwind drift differences and
/// quadrature jump expectations. The x = 0 face is absorbed (u = 0, controls
/// 0: trading stops when the inventory is depleted). With r > 0 cash flows
/// are folded at the per-substep discount factor (1 - r dt).
///
/// nu is maximized in closed form (piecewise-quadratic vertex) unless
/// spec.n_nu >= 2 requests a grid search; eta is searched on a grid over
/// [0, min(N, x)]. Ties break to the smallest control. Node updates within a
/// substep are independent, so results do not depend on n_threads.
SolveResult solve_backward(const ModelSpec& model, const ObjectiveSpec& obj,
                           const GridSpec& spec, int n_threads = 0);

/// lambda * E_mark[u(post-jump node) - u(node)] for one channel at stored
/// slice k, node (i, j, l). The dark channel executes control.eta at the
/// mid-price. Off-grid destinations interpolate with face clamping.
double apply_jump_operator(const ValueGrid& value, const ModelSpec& model,
                           const ObjectiveSpec& obj, int k, int i, int j, int l,
                           JumpChannel channel, const ControlPair& control = {});

struct HamiltonianResult {
    ControlPair control;
    double value;  ///< total sup-Hamiltonian: reward + drift + jump terms
};

/// Optimal (nu*, eta*) and the Hamiltonian value at stored slice k.
HamiltonianResult optimize_hamiltonian(const ValueGrid& value, const ModelSpec& model,
                                       const ObjectiveSpec& obj, int k, int i, int j, int l);

/// Max |HJB residual| of a solved grid over interior nodes: the stored
/// solution is plugged into the slice-level discretization with the
/// Hamiltonian evaluated on the earlier slice, which measures the O(dt + h)
/// consistency error instead of trivially reproducing the recursion.
double discrete_residual(const ValueGrid& value, const ModelSpec& model,
                         const ObjectiveSpec& obj, int n_threads = 0);

}  // namespace lobliq

#endif
