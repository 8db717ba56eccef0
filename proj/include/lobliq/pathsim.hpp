// pathsim.hpp - exact-event Monte Carlo of the coupled (S^b, Delta, X, W) system.
#ifndef LOBLIQ_PATHSIM_HPP
#define LOBLIQ_PATHSIM_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "lobliq/model.hpp"

namespace lobliq {

/// Maps (t, state) to the control in force. Implementations must respect the
/// feasibility cap eta <= min(N, x).
using PolicyCallback = std::function<ControlPair(double t, const MarketState&)>;

enum class ForcedFillMode { None, Draw, Full };

struct SimConfig {
    int n_paths = 1;
    double dt_max = 0.05;       ///< max drift-integration step, seconds
    uint64_t seed = 0;
    double record_every = 0.5;  ///< output sampling interval, >= dt_max
    int n_threads = 0;          ///< 0 = hardware concurrency

    // Figure-style override: replace the Poisson dark-fill clock by fixed
    // event times. Draw samples the executed fraction from the model's mark
    // law; Full executes the whole posting; None never executes.
    std::vector<double> forced_fill_times;
    ForcedFillMode forced_fill_mode = ForcedFillMode::None;

    void validate() const;
};

struct Fill {
    double time;
    double posted_eta;
    double executed_fraction;  ///< the mark z^w
};

/// One simulated path: states sampled on the recording grid plus at every
/// jump time, with enough bookkeeping to audit cash and event statistics.
struct PathRecord {
    std::vector<double> times;           // strictly increasing
    std::vector<MarketState> states;
    std::vector<ControlPair> controls;   // control in force at each sample
    std::vector<Fill> fills;
    std::array<long long, kNumChannels> event_counts{};
    long long clamp_events = 0;
    double tau = 0.0;          ///< inventory-depletion time (= horizon if never hit)
    double x2_integral = 0.0;  ///< int_0^tau X^2 du, accumulated exactly per segment

    const MarketState& initial() const { return states.front(); }
    const MarketState& last() const { return states.back(); }
};

/// Simulates n_paths independent paths from `start` up to model.horizon.
/// Jump times are drawn exactly per channel (exponential inter-arrivals);
/// drift is integrated between events with explicit steps <= dt_max. Paths
/// stop trading at tau = first time x <= 0. Bit-reproducible given
/// (seed, config, model, policy), independent of thread count.
std::vector<PathRecord> simulate_paths(const ModelSpec& model, const PolicyCallback& policy,
                                       const MarketState& start, const SimConfig& config);

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo moment estimates of S^b at horizon h, for p = 1, 2.
struct MomentReport {
    double h = 0.0;
    int n_paths = 0;
    Estimate mean_bid;                   // E[S^b(h)]
    std::array<Estimate, 2> abs_dev;     // E|S^b(h) - s^b|^p
    std::array<Estimate, 2> sup_dev;     // E[sup_{u<=h} |S^b(u) - s^b|^p]
};

/// Requires every path to reach h; uses the last sample at or before h for
/// the fixed-time moments and all samples up to h for the running sup.
MomentReport estimate_moments(const std::vector<PathRecord>& paths, double h);

enum class MartingaleClass { Submartingale, Martingale, Supermartingale, Neither };

const char* martingale_class_name(MartingaleClass c);

/// Classification of the bid process at nu = 0 at the given state, from the
/// mean-reversion pull plus the compensated jump rates. For kappa_b > 0 the
/// label is local to the state.
MartingaleClass classify_martingale(const ModelSpec& model, const MarketState& state,
                                    double tol = 1e-12);

/// Model-level label; Neither when the sign varies with the state
/// (mean-reverting family with kappa_b > 0).
MartingaleClass classify_martingale(const ModelSpec& model, double tol = 1e-12);

/// Chi-square goodness-of-fit p-value of observed per-path event counts
/// against Poisson(lambda * T); bins with expected count < 5 are pooled.
double poisson_count_pvalue(const std::vector<long long>& counts, double lambda_T);

}  // namespace lobliq

#endif
