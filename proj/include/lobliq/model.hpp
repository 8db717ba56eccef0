// model.hpp - price/spread model families, drifts and jump maps.
#ifndef LOBLIQ_MODEL_HPP
#define LOBLIQ_MODEL_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <string>

#include "lobliq/jumps.hpp"
#include "lobliq/market.hpp"

namespace lobliq {

enum class ModelFamily { MeanReverting, GeometricLevy, Custom };

/// The five jump channels driving the system.
enum class JumpChannel : int {
    BidUp = 0,      ///< limit buy orders improving the bid; spread narrows
    BidDown = 1,    ///< market sells walking the book / ask-side repricing; spread widens
    SpreadUp = 2,   ///< ask-side activity widening the spread
    SpreadDown = 3, ///< ask-side activity narrowing the spread
    DarkFill = 4,   ///< dark-pool execution of the posted quantity
};
inline constexpr int kNumChannels = 5;
inline constexpr std::array<JumpChannel, kNumChannels> kAllChannels = {
    JumpChannel::BidUp, JumpChannel::BidDown, JumpChannel::SpreadUp,
    JumpChannel::SpreadDown, JumpChannel::DarkFill};

const char* channel_name(JumpChannel c);

/// Per-axis drift rates of the state under a given control.
struct DriftRates {
    double ds_b = 0.0;
    double ddelta = 0.0;
    double dx = 0.0;
    double dw = 0.0;
};

/// User-supplied dynamics for the Custom family. Both callbacks must be pure
/// and thread-safe; jumps stay finite-activity with bounded marks, described
/// by the same five JumpSpec channels as the built-in families.
struct CustomDynamics {
    std::function<DriftRates(const MarketState&, const ControlPair&)> drift;
    // Post-jump (s_b, delta) for the four price channels; dark fills are
    // handled generically (mid-price execution) and never reach this hook.
    std::function<std::pair<double, double>(const MarketState&, JumpChannel, double)> jump;
};

/// Model parameters: drift coefficients, impact slopes, jump channels and
/// the trading box (horizon, inventory cap, control cap).
struct ModelSpec {
    ModelFamily family = ModelFamily::MeanReverting;

    // Mean-reverting family only.
    double kappa_b = 0.0;     ///< bid mean-reversion speed, 1/s
    double kappa_delta = 0.0; ///< spread mean-reversion speed, 1/s
    double s_bar = 0.0;       ///< long-run bid level
    double delta_bar = 0.0;   ///< long-run spread level

    // Permanent impact. MR drift form: currency*s/share. Geometric relative
    // form: 1/(share/s) of proportional displacement.
    double mu_b = 0.0;
    double mu_delta = 0.0;

    double beta = 0.0;  ///< temporary impact slope, currency*s/share

    JumpSpec jumps_bid_up;
    JumpSpec jumps_bid_down;
    JumpSpec jumps_spread_up;
    JumpSpec jumps_spread_down;
    JumpSpec dark_fill;  ///< executed-fraction marks supported on [0,1]

    double horizon = 60.0;        ///< T, seconds
    double inventory_cap = 0.0;   ///< X, shares
    double control_cap = 0.0;     ///< N, shares/s and shares

    CustomDynamics custom;  // Custom family only

    const JumpSpec& channel(JumpChannel c) const;
    void validate() const;
};

/// Counts clamp events applied to keep s_b, delta (and inventory) feasible.
struct ClampStats {
    long long count = 0;
};

/// State drift under (nu, eta). Pure; rejects non-finite inputs.
DriftRates drift(const ModelSpec& model, const MarketState& state, const ControlPair& control);

/// Post-jump state for one channel and mark. The dark channel needs the
/// pending control (posted eta executes fractionally at the mid-price).
/// Negative s_b/delta (and, defensively, inventory) are clamped at zero and
/// counted in `stats` when provided.
MarketState jump_map(const ModelSpec& model, const MarketState& state, JumpChannel channel,
                     double mark, const ControlPair& control = {}, ClampStats* stats = nullptr);

/// Expected instantaneous bid drift at nu = 0 (mean reversion plus the
/// compensated jump rates), used by the martingale classification.
double expected_bid_drift(const ModelSpec& model, const MarketState& state);

}  // namespace lobliq

#endif
