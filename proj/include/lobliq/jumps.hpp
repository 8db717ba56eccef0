// jumps.hpp - finite-activity jump specifications: intensity + bounded mark law.
#ifndef LOBLIQ_JUMPS_HPP
#define LOBLIQ_JUMPS_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace lobliq {

/// One quadrature/expectation node of a mark distribution.
struct MarkNode {
    double value;
    double weight;  // weights sum to 1
};

/// Bounded mark distribution for a compound Poisson channel.
/// Supported kinds: uniform(a,b), point mass, finite discrete list.
class MarkDist {
public:
    enum class Kind { Uniform, PointMass, Discrete };

    static MarkDist uniform(double a, double b) {
        if (!(std::isfinite(a) && std::isfinite(b)) || a > b)
            throw std::invalid_argument("uniform marks need finite a <= b");
        MarkDist d;
        d.kind_ = Kind::Uniform;
        d.a_ = a;
        d.b_ = b;
        return d;
    }

    static MarkDist point(double c) {
        if (!std::isfinite(c)) throw std::invalid_argument("point mass must be finite");
        MarkDist d;
        d.kind_ = Kind::PointMass;
        d.a_ = d.b_ = c;
        return d;
    }

    static MarkDist discrete(std::vector<std::pair<double, double>> atoms) {
        if (atoms.empty()) throw std::invalid_argument("discrete marks need at least one atom");
        double total = 0.0;
        for (auto& [v, p] : atoms) {
            if (!std::isfinite(v) || !(p >= 0.0))
                throw std::invalid_argument("discrete mark atoms need finite values and p >= 0");
            total += p;
        }
        if (std::fabs(total - 1.0) > 1e-12)
            throw std::invalid_argument("discrete mark probabilities must sum to 1 (within 1e-12)");
        MarkDist d;
        d.kind_ = Kind::Discrete;
        d.atoms_ = std::move(atoms);
        d.a_ = d.b_ = d.atoms_.front().first;
        for (auto& [v, p] : d.atoms_) {
            d.a_ = std::min(d.a_, v);
            d.b_ = std::max(d.b_, v);
        }
        return d;
    }

    Kind kind() const { return kind_; }
    double lo() const { return a_; }
    double hi() const { return b_; }

    double mean() const {
        switch (kind_) {
            case Kind::Uniform: return 0.5 * (a_ + b_);
            case Kind::PointMass: return a_;
            case Kind::Discrete: {
                double m = 0.0;
                for (auto& [v, p] : atoms_) m += v * p;
                return m;
            }
        }
        return 0.0;
    }

    double mean_sq() const {
        switch (kind_) {
            case Kind::Uniform: return (a_ * a_ + a_ * b_ + b_ * b_) / 3.0;
            case Kind::PointMass: return a_ * a_;
            case Kind::Discrete: {
                double m = 0.0;
                for (auto& [v, p] : atoms_) m += v * v * p;
                return m;
            }
        }
        return 0.0;
    }

    /// Inverse-CDF sample from a uniform draw in [0,1).
    double sample(double u01) const {
        switch (kind_) {
            case Kind::Uniform: return a_ + (b_ - a_) * u01;
            case Kind::PointMass: return a_;
            case Kind::Discrete: {
                double acc = 0.0;
                for (auto& [v, p] : atoms_) {
                    acc += p;
                    if (u01 < acc) return v;
                }
                return atoms_.back().first;
            }
        }
        return a_;
    }

    bool contains(double mark, double tol = 1e-12) const {
        return mark >= a_ - tol && mark <= b_ + tol;
    }

    /// Expectation nodes. Uniform laws use 8-node Gauss-Legendre (the
    /// integrands met in the solver are piecewise-multilinear in the mark,
    /// which 8 nodes over-resolve); atoms are exact.
    std::vector<MarkNode> quadrature() const;

private:
    Kind kind_ = Kind::PointMass;
    double a_ = 0.0, b_ = 0.0;
    std::vector<std::pair<double, double>> atoms_;
};

inline std::vector<MarkNode> MarkDist::quadrature() const {
    // 8-point Gauss-Legendre abscissas/weights on [-1,1].
    static constexpr double gl_x[8] = {
        -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
        -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
        0.7966664774136267,  0.9602898564975363};
    static constexpr double gl_w[8] = {
        0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
        0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
        0.2223810344533745, 0.1012285362903763};

    std::vector<MarkNode> nodes;
    switch (kind_) {
        case Kind::Uniform: {
            if (b_ == a_) {
                nodes.push_back({a_, 1.0});
                break;
            }
            const double mid = 0.5 * (a_ + b_), half = 0.5 * (b_ - a_);
            nodes.reserve(8);
            for (int i = 0; i < 8; ++i)
                nodes.push_back({mid + half * gl_x[i], 0.5 * gl_w[i]});
            break;
        }
        case Kind::PointMass:
            nodes.push_back({a_, 1.0});
            break;
        case Kind::Discrete:
            nodes.reserve(atoms_.size());
            for (auto& [v, p] : atoms_) nodes.push_back({v, p});
            break;
    }
    return nodes;
}

/// Compound Poisson channel: arrival intensity plus mark law.
struct JumpSpec {
    double intensity = 0.0;  ///< events per second, >= 0
    MarkDist marks = MarkDist::point(0.0);

    void validate() const {
        if (!(intensity >= 0.0) || !std::isfinite(intensity))
            throw std::invalid_argument("jump intensity must be finite and >= 0");
    }

    static JumpSpec off() { return JumpSpec{0.0, MarkDist::point(0.0)}; }
};

}  // namespace lobliq

#endif
