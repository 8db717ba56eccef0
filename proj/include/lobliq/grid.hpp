// grid.hpp - rectangular (t, x, s_b, delta) grids for the backward solver.
#ifndef LOBLIQ_GRID_HPP
#define LOBLIQ_GRID_HPP

#include <cstddef>
#include <vector>

namespace lobliq {

/// Monotone coordinate axis. Uniform axes get O(1) lookup; general monotone
/// node lists fall back to binary search.
class Axis {
public:
    Axis() = default;
    explicit Axis(std::vector<double> nodes);

    static Axis uniform(double lo, double hi, int n);
    /// Nodes {0, x_first, x_first*r, ..., hi}: geometric clustering toward 0,
    /// used to resolve the small-inventory region on wide inventory ranges.
    static Axis geometric_from_zero(double x_first, double hi, int n);

    int size() const { return static_cast<int>(nodes_.size()); }
    double operator[](int i) const { return nodes_[i]; }
    double lo() const { return nodes_.front(); }
    double hi() const { return nodes_.back(); }
    const std::vector<double>& nodes() const { return nodes_; }

    double spacing_left(int i) const { return i > 0 ? nodes_[i] - nodes_[i - 1] : 0.0; }
    double spacing_right(int i) const {
        return i + 1 < size() ? nodes_[i + 1] - nodes_[i] : 0.0;
    }
    double min_spacing() const;

    struct Location {
        int cell;       // left node index, in [0, size-2] (0 for singleton axes)
        double frac;    // interpolation fraction in [0, 1]
        bool clamped;   // query fell outside [lo, hi]
    };
    Location locate(double c) const;

private:
    std::vector<double> nodes_;
    bool uniform_ = false;
    double step_ = 0.0;
};

/// Discretization request: node counts, bounds and the control grid.
struct GridSpec {
    int n_t = 2, n_x = 2, n_s = 2, n_d = 2;
    double x_max = 0.0;            // inventory axis [0, x_max]
    double s_min = 0.0, s_max = 0.0;
    double d_max = 0.0;            // spread axis [0, d_max]; n_d == 1 pins delta at 0
    double x_first = 0.0;          // > 0: geometric inventory axis starting at x_first

    int n_nu = 0;    ///< 0: closed-form vertex search for nu; >= 2: grid search
    int n_eta = 9;   ///< dark posting candidates over [0, min(N, x)] per node

    int time_substeps = 0;  ///< 0 = auto from the stability bound; else fixed

    void validate() const;
    Axis make_t_axis(double horizon) const { return Axis::uniform(0.0, horizon, n_t); }
    Axis make_x_axis() const;
    Axis make_s_axis() const { return Axis::uniform(s_min, s_max, n_s); }
    Axis make_d_axis() const {
        return n_d == 1 ? Axis(std::vector<double>{0.0}) : Axis::uniform(0.0, d_max, n_d);
    }
};

/// Node-indexed scalar field over (t, x, s_b, delta), row-major in that order.
struct Field4 {
    Axis t, x, s, d;
    std::vector<double> data;

    void allocate() { data.assign(size(), 0.0); }
    size_t size() const {
        return static_cast<size_t>(t.size()) * x.size() * s.size() * d.size();
    }
    size_t slice_size() const {
        return static_cast<size_t>(x.size()) * s.size() * d.size();
    }
    size_t idx(int k, int i, int j, int l) const {
        return ((static_cast<size_t>(k) * x.size() + i) * s.size() + j) * d.size() + l;
    }
    double& at(int k, int i, int j, int l) { return data[idx(k, i, j, l)]; }
    double at(int k, int i, int j, int l) const { return data[idx(k, i, j, l)]; }
    const double* slice(int k) const { return data.data() + static_cast<size_t>(k) * slice_size(); }
    double* slice(int k) { return data.data() + static_cast<size_t>(k) * slice_size(); }
};

/// Multilinear interpolation of a field at a query point, clamped to the box.
double interp_field(const Field4& f, double t, double x, double s, double d);

/// Reduced value function u(t, x, s_b, delta); the full value is V = w + u.
struct ValueGrid {
    GridSpec spec;
    Field4 u;
};

/// Argmax controls at every node; ties broken to the smallest control.
struct PolicyGrid {
    GridSpec spec;
    Field4 nu_star;
    Field4 eta_star;
    double control_cap = 0.0;
};

}  // namespace lobliq

#endif
