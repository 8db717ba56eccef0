// reports.hpp - structural checks on solved policies and value grids.
#ifndef LOBLIQ_REPORTS_HPP
#define LOBLIQ_REPORTS_HPP

#include <string>
#include <vector>

#include "lobliq/grid.hpp"
#include "lobliq/objective.hpp"
#include "lobliq/pathsim.hpp"

namespace lobliq {

/// Marks the nodes whose jump destinations stay on the grid, per axis.
/// Face-adjacent layers reached by clamped jumps are excluded from the
/// policy-structure metrics so that boundary artifacts do not contaminate
/// them; the x = 0 face is always excluded (controls are pinned there).
class InteriorMask {
public:
    InteriorMask(const ModelSpec& model, const Axis& x, const Axis& s, const Axis& d);
    bool ok_x(int i) const { return i >= 1; }
    bool ok_s(int j) const { return s_ok_[j] != 0; }
    bool ok_d(int l) const { return d_ok_[l] != 0; }
    bool ok(int i, int j, int l) const { return ok_x(i) && ok_s(j) && ok_d(l); }
    int count_s() const;
    int count_d() const;

private:
    std::vector<char> s_ok_, d_ok_;
};

/// Flatness of the lit rate across the book state, plus the deviation from
/// the constant-rate profile x / (T - t + 1). Under a risk-neutral objective
/// with a martingale bid and no permanent impact the rate is independent of
/// (s_b, delta); book-state drift reintroduces the dependence.
struct BLReport {
    MartingaleClass classification = MartingaleClass::Neither;
    double max_rel_variation = 0.0;  ///< worst (max-min)/level of nu* over interior (s,d)
    double threshold = 0.05;
    bool flat = false;
    double profile_max_rel_dev = 0.0;  ///< vs x/(T-t+1); reported, not gated
    std::string worst_slice;
};

/// Requires gamma = 0 and zero permanent impact; throws otherwise.
BLReport check_bertsimas_lo(const PolicyGrid& solved, const ModelSpec& model,
                            const ObjectiveSpec& obj);

/// Single-asset full-posting limit: spread pinned at zero, complete fills
/// (unit point-mass marks) and a martingale bid. The optimal policy posts the
/// whole remaining inventory in the dark pool; the lit rate is small and
/// increases with inventory.
struct KSReport {
    double full_posting_fraction = 0.0;  ///< interior nodes with eta* = min(N, x)
    bool full_posting = false;
    double nu_nondecreasing_fraction = 0.0;  ///< in x, over interior (t, s) lines
    double max_nu = 0.0;
};

/// Throws when the grid/model is not in the limit setup.
KSReport check_kratz_schoeneborn(const PolicyGrid& solved, const ModelSpec& model,
                                 const ObjectiveSpec& obj);

struct RoundtripExemplar {
    double t, x, s, d;
    double eta_star, cap;
};

/// Nodes where posting the full feasible quantity in the dark pool is not
/// optimal. A strictly positive fraction substantiates that roundtrips are
/// not always beneficial.
struct RoundtripReport {
    long long interior_nodes = 0;
    long long underposted_nodes = 0;
    double underposting_fraction = 0.0;
    std::vector<RoundtripExemplar> exemplars;  // first few, for inspection
};

RoundtripReport roundtrip_analysis(const PolicyGrid& solved, const ModelSpec& model);

/// Node-wise ordering check between two same-shape control grids
/// (high >= low - tol over the interior), or along the time axis of one grid.
struct MonotonicityReport {
    std::string label;
    long long compared = 0;
    long long violations = 0;
    double violation_fraction = 0.0;
    double max_violation = 0.0;  // control units
    std::vector<std::string> exemplars;
};

MonotonicityReport compare_controls(const PolicyGrid& low, const PolicyGrid& high,
                                    bool nu_component, const ModelSpec& model,
                                    const std::string& label, double tol = 1e-9);

/// Controls non-decreasing in t at fixed (x, s, d).
MonotonicityReport time_monotonicity(const PolicyGrid& solved, bool nu_component,
                                     const ModelSpec& model, const std::string& label,
                                     double tol = 1e-9);

/// Node-wise value ordering lower.u <= upper.u + tol over the whole grid
/// (discrete comparison principle).
struct OrderingReport {
    long long compared = 0;
    long long violations = 0;
    double max_violation = 0.0;
};

OrderingReport compare_values(const ValueGrid& lower, const ValueGrid& upper,
                              double tol = 1e-9);

}  // namespace lobliq

#endif
