// objective.hpp - liquidation reward functional.
#ifndef LOBLIQ_OBJECTIVE_HPP
#define LOBLIQ_OBJECTIVE_HPP

#include <cmath>
#include <stdexcept>
#include <string>

#include "lobliq/market.hpp"

namespace lobliq {

/// Objective: maximize E[ W(T) + (S^b(T) - alpha X(T)) X(T) - gamma int X^2 du ],
/// optionally discounted at rate r.
struct ObjectiveSpec {
    double gamma = 0.0;  ///< running inventory penalty, >= 0
    double alpha = 1.0;  ///< terminal inventory penalty, > 0
    double r = 0.0;      ///< discount rate, >= 0

    void validate() const {
        if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
        if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
        if (!(r >= 0.0)) throw std::invalid_argument("r must be >= 0");
    }
};

inline double terminal_reward(const ObjectiveSpec& obj, const MarketState& s) {
    return s.w + (s.s_b - obj.alpha * s.x) * s.x;
}

inline double running_reward(const ObjectiveSpec& obj, const MarketState& s) {
    return -obj.gamma * s.x * s.x;
}

/// Cash-free parts, used on the reduced grid where V = w + u.
inline double terminal_reward_reduced(const ObjectiveSpec& obj, double x, double s_b) {
    return (s_b - obj.alpha * x) * x;
}
inline double running_reward_reduced(const ObjectiveSpec& obj, double x) {
    return -obj.gamma * x * x;
}

/// Whether the cash dimension drops out of the value function.
///
/// With r = 0 the terminal reward is w plus a cash-free part and cash enters
/// the dynamics additively, so V(t,x,s_b,delta,w) = w + u(t,x,s_b,delta) and
/// the solver runs on the reduced 4-D grid. With r > 0 the plain translation
/// breaks; the solver still runs reduced but folds cash flows at the
/// discounted per-step factor, and the certificate reports "no reduction".
struct CashReduction {
    bool reduced = false;
    std::string reason;
};

inline CashReduction reduce_cash_dimension(const ObjectiveSpec& obj) {
    if (obj.r == 0.0)
        return {true, "terminal reward linear in cash and r = 0: V = w + u"};
    return {false, "no reduction: r > 0 discounts cash flows; solver folds cash at the discounted rate"};
}

}  // namespace lobliq

#endif
