#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "uavsim/common.hpp"
#include "uavsim/rng.hpp"

namespace uavsim {

/// On/off activation pattern over the station set.
struct SelectionState {
    std::uint32_t mask = 0;
    int n_stations = 0;

    bool active(int i) const { return (mask >> i) & 1u; }
    int active_count() const { return __builtin_popcount(mask); }
    bool none_active() const { return mask == 0; }
    SelectionState with_toggled(int i) const {
        SelectionState s = *this;
        s.mask ^= (1u << i);
        return s;
    }
    static SelectionState all_on(int n) {
        return {n >= 32 ? 0xffffffffu : ((1u << n) - 1u), n};
    }
    static SelectionState all_off(int n) { return {0u, n}; }
};

enum class Objective { P1, P2, P3 };

inline const char* to_string(Objective o) {
    switch (o) {
        case Objective::P1: return "P1";
        case Objective::P2: return "P2";
        case Objective::P3: return "P3";
    }
    return "?";
}

struct RewardConfig {
    double c0 = 10.0;     // constant baseline
    double tau_e = 1.0;   // error weight
    double tau_r = 0.1;   // resource weight
    Objective objective = Objective::P1;
    double mse_cap = 1.0;  // M_max, P3 only [m^2]

    void validate() const {
        if (tau_e < 0.0 || tau_r < 0.0) throw InputError("RewardConfig: weights must be >= 0");
        if (objective == Objective::P3 && mse_cap <= 0.0)
            throw InputError("RewardConfig: mse_cap must be > 0 under P3");
    }
};

/// Penalty assessed under P3 when any UAV's MSE breaches the cap.
constexpr double kP3CapPenalty = 100.0;

/// Scalar reward for a selection outcome. P1 uses the first UAV's MSE, P2
/// the sum over UAVs, P3 only the station count plus a cap penalty.
inline double reward(const std::vector<double>& mse_per_uav, int active_count,
                     const RewardConfig& cfg) {
    if (mse_per_uav.empty()) throw InputError("reward: mse list must be non-empty");
    if (active_count < 0) throw InputError("reward: active_count must be >= 0");
    cfg.validate();
    switch (cfg.objective) {
        case Objective::P1:
            return cfg.c0 - cfg.tau_e * mse_per_uav.front() - cfg.tau_r * active_count;
        case Objective::P2: {
            double sum = 0.0;
            for (double m : mse_per_uav) sum += m;
            return cfg.c0 - cfg.tau_e * sum - cfg.tau_r * active_count;
        }
        case Objective::P3: {
            bool breached = false;
            for (double m : mse_per_uav)
                if (m >= cfg.mse_cap) breached = true;
            return cfg.c0 - cfg.tau_r * active_count - (breached ? kP3CapPenalty : 0.0);
        }
    }
    return 0.0;
}

/// Fuzzy C-Means over a scalar RMSE distribution; discretizes localization
/// quality into coarse performance states. Centroids are kept ascending, so
/// index 0 is the best (lowest-error) state.
struct ErrorStateModel {
    std::vector<double> centroids;                 // ascending [m]
    std::vector<std::vector<double>> memberships;  // per training sample
    int state_count = 0;

    int state_of(double rmse) const {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < state_count; ++i) {
            const double d = std::abs(rmse - centroids[static_cast<std::size_t>(i)]);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }
};

inline ErrorStateModel fcm_states(const std::vector<double>& rmse_samples, int state_count,
                                  double fuzzifier) {
    if (state_count < 1) throw InputError("fcm_states: state_count must be >= 1");
    if (static_cast<int>(rmse_samples.size()) < state_count)
        throw InputError("fcm_states: need at least state_count samples");
    if (fuzzifier <= 1.0) throw InputError("fcm_states: fuzzifier must be > 1");

    std::vector<double> sorted = rmse_samples;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.back() - sorted.front() < 1e-15)
        throw ComputeError("fcm_states: degenerate sample set, all values identical");

    const std::size_t n = rmse_samples.size();
    const int c = state_count;
    std::vector<double> centroids(static_cast<std::size_t>(c));
    for (int j = 0; j < c; ++j) {
        const std::size_t q = static_cast<std::size_t>((j + 0.5) / c * (n - 1));
        centroids[static_cast<std::size_t>(j)] = sorted[q];
    }

    std::vector<std::vector<double>> u(n, std::vector<double>(static_cast<std::size_t>(c), 0.0));
    const double expo = 2.0 / (fuzzifier - 1.0);
    for (int iter = 0; iter < 500; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            int exact = -1;
            for (int j = 0; j < c; ++j)
                if (std::abs(rmse_samples[i] - centroids[static_cast<std::size_t>(j)]) < 1e-15)
                    exact = j;
            if (exact >= 0) {
                for (int j = 0; j < c; ++j) u[i][static_cast<std::size_t>(j)] = (j == exact) ? 1.0 : 0.0;
                continue;
            }
            for (int j = 0; j < c; ++j) {
                const double dj = std::abs(rmse_samples[i] - centroids[static_cast<std::size_t>(j)]);
                double denom = 0.0;
                for (int k = 0; k < c; ++k) {
                    const double dk = std::abs(rmse_samples[i] - centroids[static_cast<std::size_t>(k)]);
                    denom += std::pow(dj / dk, expo);
                }
                u[i][static_cast<std::size_t>(j)] = 1.0 / denom;
            }
        }
        double shift = 0.0;
        for (int j = 0; j < c; ++j) {
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double w = std::pow(u[i][static_cast<std::size_t>(j)], fuzzifier);
                num += w * rmse_samples[i];
                den += w;
            }
            const double next = num / den;
            shift = std::max(shift, std::abs(next - centroids[static_cast<std::size_t>(j)]));
            centroids[static_cast<std::size_t>(j)] = next;
        }
        if (shift < 1e-6) break;
    }

    // sort states by centroid and reorder memberships to match
    std::vector<int> order(static_cast<std::size_t>(c));
    for (int j = 0; j < c; ++j) order[static_cast<std::size_t>(j)] = j;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return centroids[static_cast<std::size_t>(a)] < centroids[static_cast<std::size_t>(b)];
    });
    ErrorStateModel model;
    model.state_count = c;
    model.centroids.resize(static_cast<std::size_t>(c));
    for (int j = 0; j < c; ++j)
        model.centroids[static_cast<std::size_t>(j)] = centroids[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
    model.memberships.assign(n, std::vector<double>(static_cast<std::size_t>(c)));
    for (std::size_t i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j)
            model.memberships[i][static_cast<std::size_t>(j)] = u[i][static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
    return model;
}

/// How selection states map onto Q-table rows.
enum class StateEncoding {
    Binary,      // the activation bitmask itself
    ErrorState,  // FCM error-state index crossed with the active count
};

struct EpisodeStats {
    int episode = 0;
    double reward = 0.0;
    double epsilon = 0.0;
    int active_count = 0;
    double max_q_delta = 0.0;  // largest Q-table change during the episode
};

/// Tabular policy over selection states. Actions 0..N-1 toggle one station,
/// action N terminates the episode.
struct QPolicy {
    int n_stations = 0;
    int n_states = 0;
    int n_actions = 0;
    StateEncoding encoding = StateEncoding::Binary;
    double learning_rate = 0.1;
    double discount = 0.9;
    double epsilon = 0.01;  // value at the end of training
    double step_penalty = 0.05;
    std::vector<double> q;  // row-major (state, action)
    std::vector<EpisodeStats> episode_log;
    ErrorStateModel error_model;  // only used under ErrorState encoding

    double& q_at(int s, int a) { return q[static_cast<std::size_t>(s) * n_actions + a]; }
    double q_at(int s, int a) const { return q[static_cast<std::size_t>(s) * n_actions + a]; }

    int stop_action() const { return n_stations; }

    double max_q(int s) const {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < n_actions; ++a) best = std::max(best, q_at(s, a));
        return best;
    }
};

/// One tabular Q-learning backup.
inline void q_update(QPolicy& policy, int state, int action, double r, int next_state) {
    double& q = policy.q_at(state, action);
    q += policy.learning_rate * (r + policy.discount * policy.max_q(next_state) - q);
}

/// Environment contract: per-UAV MSE achieved by the fusion pipeline for a
/// given activation pattern. Must return a huge MSE (not throw) when no
/// station is active.
using SelectionEnv = std::function<std::vector<double>(const SelectionState&)>;

struct TrainOptions {
    double learning_rate = 0.1;
    double discount = 0.9;
    double epsilon_start = 0.3;
    double epsilon_end = 0.01;
    double step_penalty = 0.05;
    int max_steps_per_episode = 0;  // 0: defaults to 2 * n_stations
    StateEncoding encoding = StateEncoding::Binary;
    ErrorStateModel error_model;  // required for ErrorState encoding
};

namespace detail {

inline int encode_state(const QPolicy& policy, const SelectionState& s,
                        const std::vector<double>& mse) {
    if (policy.encoding == StateEncoding::Binary) return static_cast<int>(s.mask);
    double sum = 0.0;
    for (double m : mse) sum += m;
    const double rmse = std::sqrt(sum / static_cast<double>(mse.size()));
    const int err_state = policy.error_model.state_of(rmse);
    return err_state * (policy.n_stations + 1) + s.active_count();
}

}  // namespace detail

/// Epsilon-greedy Q-learning over station subsets. Each step toggles one
/// station or terminates; toggles cost a small penalty and termination pays
/// the current state's reward, so the learned policy walks to a high-reward
/// subset and stops. Deterministic given the seed.
inline QPolicy train(const SelectionEnv& env, int n_stations, const RewardConfig& cfg,
                     int episodes, std::uint64_t rng_seed, const TrainOptions& opt = {}) {
    cfg.validate();
    if (n_stations < 1 || n_stations > 20) throw InputError("train: n_stations out of range");
    if (episodes < 0) throw InputError("train: episodes must be >= 0");

    QPolicy policy;
    policy.n_stations = n_stations;
    policy.n_actions = n_stations + 1;
    policy.encoding = opt.encoding;
    policy.learning_rate = opt.learning_rate;
    policy.discount = opt.discount;
    policy.step_penalty = opt.step_penalty;
    policy.error_model = opt.error_model;
    policy.n_states = (opt.encoding == StateEncoding::Binary)
                          ? (1 << n_stations)
                          : opt.error_model.state_count * (n_stations + 1);
    if (policy.n_states < 1) throw InputError("train: empty state space");
    policy.q.assign(static_cast<std::size_t>(policy.n_states) * policy.n_actions, 0.0);
    policy.epsilon = episodes > 0 ? opt.epsilon_end : opt.epsilon_start;

    const int max_steps = opt.max_steps_per_episode > 0 ? opt.max_steps_per_episode
                                                        : 2 * n_stations;
    const bool forbid_all_off = cfg.objective == Objective::P3;
    CounterRng rng(derive_seed(rng_seed, 0x714cu));

    for (int ep = 0; ep < episodes; ++ep) {
        const double eps = episodes > 1
                               ? opt.epsilon_start +
                                     (opt.epsilon_end - opt.epsilon_start) * ep / (episodes - 1)
                               : opt.epsilon_start;
        SelectionState s{static_cast<std::uint32_t>(
                             rng.uniform_int(forbid_all_off ? 1 : 0, (1 << n_stations) - 1)),
                         n_stations};
        std::vector<double> mse = env(s);
        int s_code = detail::encode_state(policy, s, mse);
        double episode_return = 0.0;
        double max_delta = 0.0;

        for (int step = 0; step < max_steps; ++step) {
            // collect allowed actions
            int allowed[33];
            int n_allowed = 0;
            for (int a = 0; a < n_stations; ++a) {
                if (forbid_all_off && s.with_toggled(a).none_active()) continue;
                allowed[n_allowed++] = a;
            }
            if (!s.none_active()) allowed[n_allowed++] = policy.stop_action();

            int action;
            if (rng.uniform() < eps) {
                action = allowed[rng.uniform_int(0, n_allowed - 1)];
            } else {
                action = allowed[0];
                double best = policy.q_at(s_code, allowed[0]);
                for (int i = 1; i < n_allowed; ++i) {
                    const double v = policy.q_at(s_code, allowed[i]);
                    if (v > best) {
                        best = v;
                        action = allowed[i];
                    }
                }
            }

            if (action == policy.stop_action()) {
                const double r = reward(mse, s.active_count(), cfg);
                double& q = policy.q_at(s_code, action);
                const double before = q;
                q += policy.learning_rate * (r - q);  // terminal: no bootstrap
                max_delta = std::max(max_delta, std::abs(q - before));
                episode_return += r;
                break;
            }

            const SelectionState s_next = s.with_toggled(action);
            const std::vector<double> mse_next = env(s_next);
            const int s_next_code = detail::encode_state(policy, s_next, mse_next);
            const double before = policy.q_at(s_code, action);
            q_update(policy, s_code, action, -opt.step_penalty, s_next_code);
            max_delta = std::max(max_delta, std::abs(policy.q_at(s_code, action) - before));
            episode_return -= opt.step_penalty;
            s = s_next;
            mse = mse_next;
            s_code = s_next_code;
        }
        policy.episode_log.push_back({ep, episode_return, eps, s.active_count(), max_delta});
    }
    return policy;
}

/// Greedy rollout under a trained policy; returns the state where the policy
/// terminates (or the best stop-valued state visited if the step cap hits).
inline SelectionState greedy_rollout(const QPolicy& policy, const SelectionEnv& env,
                                     SelectionState start, int max_steps = 0) {
    const int n = policy.n_stations;
    const int cap = max_steps > 0 ? max_steps : 3 * n;
    SelectionState s = start;
    SelectionState best = s;
    double best_stop_q = -std::numeric_limits<double>::infinity();

    for (int step = 0; step < cap; ++step) {
        const std::vector<double> mse = env(s);
        const int s_code = detail::encode_state(policy, s, mse);
        if (!s.none_active() && policy.q_at(s_code, policy.stop_action()) > best_stop_q) {
            best_stop_q = policy.q_at(s_code, policy.stop_action());
            best = s;
        }
        int action = -1;
        double best_q = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < policy.n_actions; ++a) {
            if (a == policy.stop_action() && s.none_active()) continue;
            const double v = policy.q_at(s_code, a);
            if (v > best_q) {
                best_q = v;
                action = a;
            }
        }
        if (action == policy.stop_action() || action < 0) return s;
        s = s.with_toggled(action);
    }
    return best;
}

/// Minimum-station selection under an error cap: greedy rollout that tracks
/// every visited state satisfying the cap and returns the smallest one. The
/// returned state is re-verified against the cap before returning.
inline SelectionState select_p3(const QPolicy& policy, const SelectionEnv& env,
                                const RewardConfig& cfg) {
    if (cfg.objective != Objective::P3) throw InputError("select_p3: objective must be P3");
    cfg.validate();
    const int n = policy.n_stations;
    const auto satisfies = [&](const std::vector<double>& mse) {
        for (double m : mse)
            if (!(m < cfg.mse_cap)) return false;
        return !mse.empty();
    };

    SelectionState s = SelectionState::all_off(n);
    bool found = false;
    SelectionState best{};
    int best_rs = n + 1;
    double best_mse = std::numeric_limits<double>::infinity();

    const int cap = 3 * n;
    for (int step = 0; step < cap; ++step) {
        // choose greedily among toggles (and stop once something is active)
        std::vector<double> mse = env(s);
        if (!s.none_active()) {
            if (satisfies(mse) && s.active_count() < best_rs) {
                best = s;
                best_rs = s.active_count();
                found = true;
            }
            double worst = 0.0;
            for (double m : mse) worst = std::max(worst, m);
            best_mse = std::min(best_mse, worst);
        }
        const int s_code = detail::encode_state(policy, s, mse);
        int action = -1;
        double best_q = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < policy.n_actions; ++a) {
            if (a < n && s.with_toggled(a).none_active()) continue;
            if (a == policy.stop_action() && s.none_active()) continue;
            const double v = policy.q_at(s_code, a);
            if (v > best_q) {
                best_q = v;
                action = a;
            }
        }
        if (action == policy.stop_action() || action < 0) break;
        s = s.with_toggled(action);
    }

    if (!found) {
        // fall back to the full set before declaring infeasibility
        const SelectionState all = SelectionState::all_on(n);
        const std::vector<double> mse = env(all);
        if (satisfies(mse)) {
            best = all;
            found = true;
        } else {
            double worst = 0.0;
            for (double m : mse) worst = std::max(worst, m);
            best_mse = std::min(best_mse, worst);
            throw ComputeError("select_p3: cap " + std::to_string(cfg.mse_cap) +
                               " m^2 infeasible, best achieved MSE " + std::to_string(best_mse) +
                               " m^2");
        }
    }
    if (!satisfies(env(best)))
        throw ComputeError("select_p3: returned state fails the cap on re-evaluation");
    return best;
}

}  // namespace uavsim
