// market.hpp - state and control vectors for the lit/dark liquidation problem.
#ifndef LOBLIQ_MARKET_HPP
#define LOBLIQ_MARKET_HPP

#include <cmath>
#include <stdexcept>

namespace lobliq {

/// Full market state (t, x, s_b, delta, w).
///
/// Invariants: x in [0, X], s_b >= 0, delta >= 0, so the derived quotes
/// satisfy bid <= mid <= ask at all times.
struct MarketState {
    double t = 0.0;      ///< time in seconds
    double x = 0.0;      ///< inventory, shares
    double s_b = 0.0;    ///< best bid, currency
    double delta = 0.0;  ///< bid-ask spread, currency
    double w = 0.0;      ///< cash, currency (any sign)

    bool finite() const {
        return std::isfinite(t) && std::isfinite(x) && std::isfinite(s_b) &&
               std::isfinite(delta) && std::isfinite(w);
    }
};

/// Selling rate in the lit pool and posted quantity in the dark pool.
/// Both live in the compact box [0, N]; eta is additionally capped at the
/// current inventory when a policy is evaluated.
struct ControlPair {
    double nu = 0.0;   ///< lit selling rate, shares/second
    double eta = 0.0;  ///< dark-pool posting, shares
};

inline double ask_price(const MarketState& s) { return s.s_b + s.delta; }

/// Dark-pool execution price: bid plus half the spread.
inline double mid_price(const MarketState& s) { return s.s_b + 0.5 * s.delta; }

inline void validate_state(const MarketState& s) {
    if (!s.finite()) throw std::invalid_argument("market state has non-finite entries");
    if (s.x < 0.0) throw std::invalid_argument("inventory must be non-negative");
    if (s.s_b < 0.0) throw std::invalid_argument("best bid must be non-negative");
    if (s.delta < 0.0) throw std::invalid_argument("spread must be non-negative");
}

}  // namespace lobliq

#endif
