#include "lobliq/model.hpp"

#include <cmath>
#include <stdexcept>

namespace lobliq {

const char* channel_name(JumpChannel c) {
    switch (c) {
        case JumpChannel::BidUp: return "bid_up";
        case JumpChannel::BidDown: return "bid_down";
        case JumpChannel::SpreadUp: return "spread_up";
        case JumpChannel::SpreadDown: return "spread_down";
        case JumpChannel::DarkFill: return "dark_fill";
    }
    return "unknown";
}

const JumpSpec& ModelSpec::channel(JumpChannel c) const {
    switch (c) {
        case JumpChannel::BidUp: return jumps_bid_up;
        case JumpChannel::BidDown: return jumps_bid_down;
        case JumpChannel::SpreadUp: return jumps_spread_up;
        case JumpChannel::SpreadDown: return jumps_spread_down;
        case JumpChannel::DarkFill: return dark_fill;
    }
    throw std::invalid_argument("unknown jump channel");
}

void ModelSpec::validate() const {
    auto nonneg = [](double v, const char* name) {
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument(std::string(name) + " must be finite and >= 0");
    };
    nonneg(kappa_b, "kappa_b");
    nonneg(kappa_delta, "kappa_delta");
    nonneg(s_bar, "s_bar");
    nonneg(delta_bar, "delta_bar");
    nonneg(beta, "beta");
    nonneg(horizon, "horizon");
    nonneg(inventory_cap, "inventory_cap");
    nonneg(control_cap, "control_cap");
    if (horizon <= 0.0) throw std::invalid_argument("horizon must be > 0");

    for (JumpChannel c : kAllChannels) channel(c).validate();

    // Dark-pool marks are executed fractions of the posted order.
    if (dark_fill.marks.lo() < -1e-12 || dark_fill.marks.hi() > 1.0 + 1e-12)
        throw std::invalid_argument("dark_fill marks must be supported on [0,1]");

    if (family == ModelFamily::MeanReverting || family == ModelFamily::GeometricLevy) {
        for (JumpChannel c : {JumpChannel::BidUp, JumpChannel::BidDown, JumpChannel::SpreadUp,
                              JumpChannel::SpreadDown}) {
            if (channel(c).marks.lo() < -1e-12)
                throw std::invalid_argument("price/spread marks must be non-negative");
        }
    }
    if (family == ModelFamily::GeometricLevy) {
        // Proportional moves need marks < 1 to keep s_b, delta strictly positive.
        for (JumpChannel c : {JumpChannel::BidUp, JumpChannel::BidDown, JumpChannel::SpreadUp,
                              JumpChannel::SpreadDown}) {
            if (channel(c).marks.hi() >= 1.0)
                throw std::invalid_argument("geometric family marks must lie in [0,1)");
        }
    }
    if (family == ModelFamily::Custom) {
        if (!custom.drift || !custom.jump)
            throw std::invalid_argument("custom family needs drift and jump callbacks");
    }
}

DriftRates drift(const ModelSpec& model, const MarketState& state, const ControlPair& control) {
    if (!state.finite() || !std::isfinite(control.nu) || !std::isfinite(control.eta))
        throw std::invalid_argument("drift: non-finite state or control");

    DriftRates d;
    switch (model.family) {
        case ModelFamily::MeanReverting:
            d.ds_b = model.kappa_b * (model.s_bar - state.s_b - model.mu_b * control.nu);
            d.ddelta = model.kappa_delta * (model.delta_bar - state.delta + model.mu_delta * control.nu);
            break;
        case ModelFamily::GeometricLevy:
            d.ds_b = -model.mu_b * control.nu * state.s_b;
            d.ddelta = model.mu_delta * control.nu * state.delta;
            break;
        case ModelFamily::Custom: {
            d = model.custom.drift(state, control);
            break;
        }
    }
    d.dx = -control.nu;
    d.dw = control.nu * (state.s_b - model.beta * control.nu);
    return d;
}

namespace {

double clamp_floor(double v, ClampStats* stats) {
    if (v < 0.0) {
        if (stats) ++stats->count;
        return 0.0;
    }
    return v;
}

}  // namespace

MarketState jump_map(const ModelSpec& model, const MarketState& state, JumpChannel channel,
                     double mark, const ControlPair& control, ClampStats* stats) {
    if (!state.finite() || !std::isfinite(mark))
        throw std::invalid_argument("jump_map: non-finite state or mark");
    if (!model.channel(channel).marks.contains(mark))
        throw std::invalid_argument("jump_map: mark outside the channel's support");

    MarketState out = state;

    if (channel == JumpChannel::DarkFill) {
        // Executed quantity eta*z leaves the book untouched and trades at mid.
        const double executed = control.eta * mark;
        out.w += executed * mid_price(state);
        out.x = clamp_floor(state.x - executed, stats);
        return out;
    }

    double s = state.s_b, d = state.delta;
    switch (model.family) {
        case ModelFamily::MeanReverting:
            switch (channel) {
                case JumpChannel::BidUp: s += mark; d -= mark; break;
                case JumpChannel::BidDown: s -= mark; d += mark; break;
                case JumpChannel::SpreadUp: d += mark; break;
                case JumpChannel::SpreadDown: d -= mark; break;
                default: break;
            }
            break;
        case ModelFamily::GeometricLevy:
            switch (channel) {
                case JumpChannel::BidUp: s *= (1.0 + mark); d *= (1.0 - mark); break;
                case JumpChannel::BidDown: s *= (1.0 - mark); d *= (1.0 + mark); break;
                case JumpChannel::SpreadUp: d *= (1.0 + mark); break;
                case JumpChannel::SpreadDown: d *= (1.0 - mark); break;
                default: break;
            }
            break;
        case ModelFamily::Custom: {
            auto [ns, nd] = model.custom.jump(state, channel, mark);
            s = ns;
            d = nd;
            break;
        }
    }
    out.s_b = clamp_floor(s, stats);
    out.delta = clamp_floor(d, stats);
    return out;
}

double expected_bid_drift(const ModelSpec& model, const MarketState& state) {
    const double jump_rate = model.jumps_bid_up.intensity * model.jumps_bid_up.marks.mean() -
                             model.jumps_bid_down.intensity * model.jumps_bid_down.marks.mean();
    switch (model.family) {
        case ModelFamily::MeanReverting:
            return model.kappa_b * (model.s_bar - state.s_b) + jump_rate;
        case ModelFamily::GeometricLevy:
            return state.s_b * jump_rate;
        case ModelFamily::Custom:
            return model.custom.drift(state, ControlPair{}).ds_b + jump_rate;
    }
    return 0.0;
}

}  // namespace lobliq
