#include "lobliq/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lobliq {

Axis::Axis(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw std::invalid_argument("axis needs at least one node");
    for (size_t i = 1; i < nodes_.size(); ++i)
        if (!(nodes_[i] > nodes_[i - 1]))
            throw std::invalid_argument("axis nodes must be strictly increasing");
    if (nodes_.size() >= 2) {
        step_ = nodes_[1] - nodes_[0];
        uniform_ = true;
        for (size_t i = 1; i + 1 < nodes_.size(); ++i) {
            if (std::fabs((nodes_[i + 1] - nodes_[i]) - step_) > 1e-9 * std::fabs(step_)) {
                uniform_ = false;
                break;
            }
        }
    }
}

Axis Axis::uniform(double lo, double hi, int n) {
    if (n < 2) throw std::invalid_argument("uniform axis needs n >= 2");
    if (!(hi > lo)) throw std::invalid_argument("uniform axis needs hi > lo");
    std::vector<double> nodes(n);
    for (int i = 0; i < n; ++i)
        nodes[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    nodes.back() = hi;
    return Axis(std::move(nodes));
}

Axis Axis::geometric_from_zero(double x_first, double hi, int n) {
    if (n < 3) throw std::invalid_argument("geometric axis needs n >= 3");
    if (!(x_first > 0.0) || !(hi > x_first))
        throw std::invalid_argument("geometric axis needs 0 < x_first < hi");
    std::vector<double> nodes(n);
    nodes[0] = 0.0;
    const double ratio = std::pow(hi / x_first, 1.0 / (n - 2));
    for (int i = 1; i < n; ++i) nodes[i] = x_first * std::pow(ratio, i - 1);
    nodes.back() = hi;
    return Axis(std::move(nodes));
}

double Axis::min_spacing() const {
    double m = std::numeric_limits<double>::infinity();
    for (size_t i = 1; i < nodes_.size(); ++i) m = std::min(m, nodes_[i] - nodes_[i - 1]);
    return m;
}

Axis::Location Axis::locate(double c) const {
    if (size() == 1) return {0, 0.0, std::fabs(c - nodes_[0]) > 1e-12};
    if (c <= nodes_.front())
        return {0, 0.0, c < nodes_.front() - 1e-12 * (1.0 + std::fabs(nodes_.front()))};
    if (c >= nodes_.back())
        return {size() - 2, 1.0, c > nodes_.back() + 1e-12 * (1.0 + std::fabs(nodes_.back()))};

    int cell;
    if (uniform_) {
        cell = static_cast<int>((c - nodes_.front()) / step_);
        cell = std::clamp(cell, 0, size() - 2);
        // Guard against rounding at cell boundaries.
        if (c < nodes_[cell]) --cell;
        else if (c > nodes_[cell + 1]) ++cell;
    } else {
        cell = static_cast<int>(std::upper_bound(nodes_.begin(), nodes_.end(), c) -
                                nodes_.begin()) - 1;
        cell = std::clamp(cell, 0, size() - 2);
    }
    const double h = nodes_[cell + 1] - nodes_[cell];
    return {cell, (c - nodes_[cell]) / h, false};
}

void GridSpec::validate() const {
    if (n_t < 2 || n_x < 2 || n_s < 2)
        throw std::invalid_argument("grid needs n_t, n_x, n_s >= 2");
    if (n_d < 1) throw std::invalid_argument("grid needs n_d >= 1");
    if (!(x_max > 0.0)) throw std::invalid_argument("grid needs x_max > 0");
    if (!(s_min >= 0.0) || !(s_max > s_min))
        throw std::invalid_argument("grid needs 0 <= s_min < s_max");
    if (n_d > 1 && !(d_max > 0.0)) throw std::invalid_argument("grid needs d_max > 0");
    if (x_first < 0.0 || x_first >= x_max)
        throw std::invalid_argument("grid needs 0 <= x_first < x_max");
    if (n_nu == 1 || n_nu < 0) throw std::invalid_argument("n_nu must be 0 or >= 2");
    if (n_eta < 2) throw std::invalid_argument("n_eta must be >= 2");
    if (time_substeps < 0) throw std::invalid_argument("time_substeps must be >= 0");
}

Axis GridSpec::make_x_axis() const {
    return x_first > 0.0 ? Axis::geometric_from_zero(x_first, x_max, n_x)
                         : Axis::uniform(0.0, x_max, n_x);
}

double interp_field(const Field4& f, double t, double x, double s, double d) {
    const auto lt = f.t.locate(t);
    const auto lx = f.x.locate(x);
    const auto ls = f.s.locate(s);
    const auto ld = f.d.locate(d);
    double acc = 0.0;
    for (int a = 0; a < 2; ++a) {
        const int k = std::min(lt.cell + a, f.t.size() - 1);
        const double wa = a == 0 ? 1.0 - lt.frac : lt.frac;
        if (wa == 0.0) continue;
        for (int b = 0; b < 2; ++b) {
            const int i = std::min(lx.cell + b, f.x.size() - 1);
            const double wb = b == 0 ? 1.0 - lx.frac : lx.frac;
            if (wb == 0.0) continue;
            for (int c = 0; c < 2; ++c) {
                const int j = std::min(ls.cell + c, f.s.size() - 1);
                const double wc = c == 0 ? 1.0 - ls.frac : ls.frac;
                if (wc == 0.0) continue;
                for (int e = 0; e < 2; ++e) {
                    const int l = std::min(ld.cell + e, f.d.size() - 1);
                    const double we = e == 0 ? 1.0 - ld.frac : ld.frac;
                    if (we == 0.0) continue;
                    acc += wa * wb * wc * we * f.at(k, i, j, l);
                }
            }
        }
    }
    return acc;
}

}  // namespace lobliq
