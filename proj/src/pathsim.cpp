#include "lobliq/pathsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <boost/math/special_functions/gamma.hpp>

#include "lobliq/rng.hpp"

namespace lobliq {

void SimConfig::validate() const {
    if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
    if (!(dt_max > 0.0)) throw std::invalid_argument("dt_max must be > 0");
    if (!(record_every >= dt_max))
        throw std::invalid_argument("record_every must be >= dt_max");
    if (!forced_fill_times.empty() &&
        !std::is_sorted(forced_fill_times.begin(), forced_fill_times.end()))
        throw std::invalid_argument("forced_fill_times must be sorted");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ControlPair cap_control(const ModelSpec& model, const MarketState& s, ControlPair c) {
    c.nu = std::clamp(c.nu, 0.0, model.control_cap);
    c.eta = std::clamp(c.eta, 0.0, std::min(model.control_cap, s.x));
    return c;
}

class PathRunner {
public:
    PathRunner(const ModelSpec& model, const PolicyCallback& policy, const MarketState& start,
               const SimConfig& cfg, int path_index)
        : model_(model), policy_(policy), cfg_(cfg), path_index_(path_index) {
        state_ = start;
        state_.t = start.t;
        for (int c = 0; c < kNumChannels; ++c)
            streams_.emplace_back(cfg.seed, static_cast<uint64_t>(path_index),
                                  static_cast<uint64_t>(c));
        stopped_ = state_.x <= 0.0;
        rec_.tau = stopped_ ? state_.t : model.horizon;
    }

    PathRecord run() {
        const double T = model_.horizon;
        const double t0 = state_.t;

        std::array<double, kNumChannels> next_event;
        for (int c = 0; c < kNumChannels; ++c) next_event[c] = t0 + draw_gap(c);
        if (forced_dark()) {
            forced_idx_ = 0;
            next_event[dark_idx()] = next_forced_time();
        }

        record_sample(t0);
        long long rec_k = 1;

        double t = t0;
        while (t < T) {
            const int c_min = static_cast<int>(
                std::min_element(next_event.begin(), next_event.end()) - next_event.begin());
            const double t_rec = t0 + static_cast<double>(rec_k) * cfg_.record_every;
            double t_next = std::min({next_event[c_min], t_rec, T});
            t_next = std::max(t_next, t);

            integrate_drift(t, t_next);
            t = t_next;

            if (t == next_event[c_min] && t < T) {
                apply_event(static_cast<JumpChannel>(c_min), t);
                next_event[c_min] = (c_min == dark_idx() && forced_dark())
                                        ? next_forced_time()
                                        : t + draw_gap(c_min);
                record_sample(t);
            } else if (t == t_rec && t < T) {
                record_sample(t);
                ++rec_k;
            }
        }
        record_sample(T);
        if (!state_.finite())
            throw std::runtime_error("simulate_paths: non-finite state on path " +
                                     std::to_string(path_index_) + " at t = " + std::to_string(t));
        return std::move(rec_);
    }

private:
    int dark_idx() const { return static_cast<int>(JumpChannel::DarkFill); }
    bool forced_dark() const { return cfg_.forced_fill_mode != ForcedFillMode::None; }

    double next_forced_time() {
        while (forced_idx_ < cfg_.forced_fill_times.size()) {
            double ft = cfg_.forced_fill_times[forced_idx_];
            if (ft > state_.t) return ft;
            ++forced_idx_;
        }
        return kInf;
    }

    double draw_gap(int c) {
        if (c == dark_idx() && forced_dark()) return kInf;
        return streams_[c].next_exp(model_.channel(static_cast<JumpChannel>(c)).intensity);
    }

    ControlPair current_control(double t) {
        if (stopped_) return {0.0, 0.0};
        MarketState q = state_;
        q.t = t;
        return cap_control(model_, q, policy_(t, q));
    }

    // Explicit Euler over [a, b] in equal substeps <= dt_max, cutting the step
    // that would drive inventory through zero so that x hits 0 exactly.
    void integrate_drift(double a, double b) {
        if (b <= a) return;
        const int n = std::max(1, static_cast<int>(std::ceil((b - a) / cfg_.dt_max - 1e-9)));
        double t_prev = a;
        for (int i = 1; i <= n; ++i) {
            double t_i = a + (b - a) * static_cast<double>(i) / n;
            double h = t_i - t_prev;
            ControlPair ctrl = current_control(t_prev);
            DriftRates d = drift(model_, state_, ctrl);

            if (!stopped_ && ctrl.nu > 0.0 && state_.x + h * d.dx <= 0.0) {
                const double h_star = state_.x / ctrl.nu;
                euler_step(h_star, ctrl, d);
                state_.x = 0.0;
                stop(t_prev + h_star);
                // Remainder of the substep with trading off.
                ctrl = ControlPair{0.0, 0.0};
                d = drift(model_, state_, ctrl);
                euler_step(h - h_star, ctrl, d);
            } else {
                euler_step(h, ctrl, d);
            }
            state_.t = t_i;
            t_prev = t_i;
        }
    }

    void euler_step(double h, const ControlPair& ctrl, const DriftRates& d) {
        if (h <= 0.0) return;
        const double x0 = state_.x;
        const double x1 = x0 + h * d.dx;
        if (!stopped_) rec_.x2_integral += h * (x0 * x0 + x0 * x1 + x1 * x1) / 3.0;
        state_.x = x1;
        state_.w += h * d.dw;
        double s = state_.s_b + h * d.ds_b;
        double dl = state_.delta + h * d.ddelta;
        if (s < 0.0) { s = 0.0; ++clamps_.count; }
        if (dl < 0.0) { dl = 0.0; ++clamps_.count; }
        state_.s_b = s;
        state_.delta = dl;
    }

    void apply_event(JumpChannel channel, double t) {
        const int c = static_cast<int>(channel);
        ++rec_.event_counts[c];
        state_.t = t;

        double mark;
        if (channel == JumpChannel::DarkFill && forced_dark()) {
            mark = (cfg_.forced_fill_mode == ForcedFillMode::Full)
                       ? 1.0
                       : model_.dark_fill.marks.sample(streams_[c].next_unit());
            ++forced_idx_;
        } else {
            mark = model_.channel(channel).marks.sample(streams_[c].next_unit());
        }

        ControlPair ctrl = current_control(t);  // left limit: pre-jump state
        if (channel == JumpChannel::DarkFill) {
            if (ctrl.eta > 0.0) rec_.fills.push_back({t, ctrl.eta, mark});
            state_ = jump_map(model_, state_, channel, mark, ctrl, &clamps_);
            if (!stopped_ && state_.x <= 0.0) {
                state_.x = 0.0;
                stop(t);
            }
        } else {
            state_ = jump_map(model_, state_, channel, mark, ctrl, &clamps_);
        }
    }

    void stop(double tau) {
        stopped_ = true;
        rec_.tau = tau;
    }

    void record_sample(double t) {
        if (!rec_.times.empty() && t <= rec_.times.back()) return;
        state_.t = t;
        rec_.times.push_back(t);
        rec_.states.push_back(state_);
        rec_.controls.push_back(current_control(t));
        rec_.clamp_events = clamps_.count;
    }

    const ModelSpec& model_;
    const PolicyCallback& policy_;
    const SimConfig& cfg_;
    int path_index_;
    MarketState state_;
    std::vector<CounterRng> streams_;
    PathRecord rec_;
    ClampStats clamps_;
    bool stopped_ = false;
    size_t forced_idx_ = 0;
};

}  // namespace

std::vector<PathRecord> simulate_paths(const ModelSpec& model, const PolicyCallback& policy,
                                       const MarketState& start, const SimConfig& config) {
    model.validate();
    config.validate();
    validate_state(start);
    if (start.x > model.inventory_cap + 1e-9)
        throw std::invalid_argument("start inventory exceeds the inventory cap");

    std::vector<PathRecord> out(config.n_paths);
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&](int lo, int hi) {
        try {
            for (int p = lo; p < hi; ++p)
                out[p] = PathRunner(model, policy, start, config, p).run();
        } catch (...) {
            std::lock_guard<std::mutex> lk(error_mutex);
            if (!error) error = std::current_exception();
        }
    };

    int n_threads = config.n_threads > 0
                        ? config.n_threads
                        : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::clamp(n_threads, 1, config.n_paths);
    if (n_threads == 1) {
        worker(0, config.n_paths);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (config.n_paths + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            int lo = t * chunk, hi = std::min(config.n_paths, lo + chunk);
            if (lo < hi) pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    return out;
}

namespace {

Estimate mean_se(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double m = 0.0;
    for (double v : xs) m += v;
    m /= n;
    double var = 0.0;
    for (double v : xs) var += (v - m) * (v - m);
    var = xs.size() > 1 ? var / (n - 1.0) : 0.0;
    return {m, std::sqrt(var / n)};
}

}  // namespace

MomentReport estimate_moments(const std::vector<PathRecord>& paths, double h) {
    if (paths.empty()) throw std::invalid_argument("estimate_moments: empty path set");

    MomentReport rep;
    rep.h = h;
    rep.n_paths = static_cast<int>(paths.size());

    std::vector<double> bid_h, dev1, dev2, sup1, sup2;
    for (const auto& p : paths) {
        const double s0 = p.initial().s_b;
        const double t0 = p.times.front();
        if (p.times.back() + 1e-9 < t0 + h)
            throw std::invalid_argument("estimate_moments: paths end before the horizon h");

        double s_at_h = s0, sup_abs = 0.0;
        for (size_t i = 0; i < p.times.size(); ++i) {
            if (p.times[i] > t0 + h + 1e-12) break;
            s_at_h = p.states[i].s_b;
            sup_abs = std::max(sup_abs, std::fabs(p.states[i].s_b - s0));
        }
        bid_h.push_back(s_at_h);
        dev1.push_back(std::fabs(s_at_h - s0));
        dev2.push_back((s_at_h - s0) * (s_at_h - s0));
        sup1.push_back(sup_abs);
        sup2.push_back(sup_abs * sup_abs);
    }
    rep.mean_bid = mean_se(bid_h);
    rep.abs_dev[0] = mean_se(dev1);
    rep.abs_dev[1] = mean_se(dev2);
    rep.sup_dev[0] = mean_se(sup1);
    rep.sup_dev[1] = mean_se(sup2);
    return rep;
}

const char* martingale_class_name(MartingaleClass c) {
    switch (c) {
        case MartingaleClass::Submartingale: return "submartingale";
        case MartingaleClass::Martingale: return "martingale";
        case MartingaleClass::Supermartingale: return "supermartingale";
        case MartingaleClass::Neither: return "neither";
    }
    return "unknown";
}

MartingaleClass classify_martingale(const ModelSpec& model, const MarketState& state, double tol) {
    const double m = expected_bid_drift(model, state);
    if (m > tol) return MartingaleClass::Submartingale;
    if (m < -tol) return MartingaleClass::Supermartingale;
    return MartingaleClass::Martingale;
}

MartingaleClass classify_martingale(const ModelSpec& model, double tol) {
    // A model-level label needs a state-independent drift sign.
    if (model.family == ModelFamily::MeanReverting && model.kappa_b > 0.0)
        return MartingaleClass::Neither;
    if (model.family == ModelFamily::Custom) return MartingaleClass::Neither;
    MarketState ref;
    ref.s_b = (model.family == ModelFamily::GeometricLevy) ? 1.0 : model.s_bar;
    return classify_martingale(model, ref, tol);
}

double poisson_count_pvalue(const std::vector<long long>& counts, double lambda_T) {
    if (counts.empty()) throw std::invalid_argument("poisson_count_pvalue: no counts");
    if (lambda_T <= 0.0) {
        for (long long c : counts)
            if (c != 0) return 0.0;
        return 1.0;
    }

    const double n = static_cast<double>(counts.size());
    const int k_max = static_cast<int>(std::ceil(lambda_T + 10.0 * std::sqrt(lambda_T) + 10.0));

    // Poisson pmf by upward recursion.
    std::vector<double> pmf(k_max + 1);
    pmf[0] = std::exp(-lambda_T);
    for (int k = 1; k <= k_max; ++k) pmf[k] = pmf[k - 1] * lambda_T / k;

    std::vector<double> observed(k_max + 2, 0.0);
    for (long long c : counts) observed[std::min<long long>(c, k_max + 1)] += 1.0;
    std::vector<double> expected(k_max + 2, 0.0);
    double tail = 1.0;
    for (int k = 0; k <= k_max; ++k) {
        expected[k] = n * pmf[k];
        tail -= pmf[k];
    }
    expected[k_max + 1] = n * std::max(tail, 0.0);

    // Pool adjacent cells until every bin has expected count >= 5.
    std::vector<double> obs_b, exp_b;
    double o_acc = 0.0, e_acc = 0.0;
    for (size_t k = 0; k < expected.size(); ++k) {
        o_acc += observed[k];
        e_acc += expected[k];
        if (e_acc >= 5.0) {
            obs_b.push_back(o_acc);
            exp_b.push_back(e_acc);
            o_acc = e_acc = 0.0;
        }
    }
    if (e_acc > 0.0 || o_acc > 0.0) {
        if (obs_b.empty()) {
            obs_b.push_back(o_acc);
            exp_b.push_back(e_acc);
        } else {
            obs_b.back() += o_acc;
            exp_b.back() += e_acc;
        }
    }
    if (obs_b.size() < 2) return 1.0;

    double chi2 = 0.0;
    for (size_t i = 0; i < obs_b.size(); ++i) {
        const double d = obs_b[i] - exp_b[i];
        chi2 += d * d / exp_b[i];
    }
    const double dof = static_cast<double>(obs_b.size()) - 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * chi2);
}

}  // namespace lobliq
