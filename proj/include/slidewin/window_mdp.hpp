#pragma once

#include "slidewin/filtering.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace slidewin {

inline constexpr std::uint64_t kDefaultStateCap = 10'000'000;

/// Finite approximate belief MDP obtained by freezing the predictor N steps
/// back at z*. State space = window codes (see WindowCodec).
///
/// Flat layouts: posterior [code][x], cost [code][u], obs_kernel [code][u][y].
struct WindowMdp {
    std::size_t N = 0;
    std::size_t n_states = 0, n_obs = 0, n_actions = 0;
    Belief z_star;
    WindowCodec codec{1, 1, 0};
    std::vector<double> posteriors;
    std::vector<std::uint8_t> reachable;
    std::vector<double> costs;
    std::vector<double> obs_kernel;

    std::size_t size() const noexcept { return static_cast<std::size_t>(codec.size()); }
    std::span<const double> posterior(std::size_t code) const {
        return {posteriors.data() + code * n_states, n_states};
    }
    double cost(std::size_t code, std::size_t u) const { return costs[code * n_actions + u]; }
    std::span<const double> next_obs(std::size_t code, std::size_t u) const {
        return {obs_kernel.data() + (code * n_actions + u) * n_obs, n_obs};
    }
    std::size_t successor(std::size_t code, std::size_t u, std::size_t y) const {
        return static_cast<std::size_t>(codec.successor(code, u, y));
    }
    std::size_t unreachable_count() const;
};

/// Enumerates every window code, runs the filter from z* over it and tabulates
/// the expected stage cost and next-observation law. Windows with zero
/// likelihood under z* keep z* as posterior and are marked unreachable.
/// Throws CapacityError when the code count exceeds `state_cap`.
WindowMdp build_window_mdp(const FinitePomdp& model, std::size_t N, const Belief& z_star,
                           std::uint64_t state_cap = kDefaultStateCap);

enum class PolicySource { ValueIteration, QLearning, Custom };
std::string to_string(PolicySource s);

struct WindowPolicy {
    std::vector<std::size_t> actions;  // per window code
    std::size_t N = 0;
    PolicySource source = PolicySource::Custom;
};

struct ValueIterationResult {
    std::vector<double> values;        // J per code
    std::vector<double> q;             // [code][u]
    WindowPolicy policy;
    long iterations = 0;
    double residual = 0.0;             // sup |J_k - J_{k-1}| at the last sweep
    std::vector<double> sweep_deltas;  // sup-norm change per sweep
};

/// Q(I,u) = c(I,u) + beta * sum_y P(y|I,u) J(succ(I,u,y)).
std::vector<double> q_from_values(const WindowMdp& wm, std::span<const double> values, double beta);

/// Greedy policy over a [code][u] table; ties go to the lowest action index.
WindowPolicy greedy_policy(std::span<const double> q, std::size_t n_actions, std::size_t N,
                           PolicySource source);

/// Value iteration from J = 0. Stops once the sweep change is at most
/// tol (1 - beta) / (2 beta), which leaves the iterate within tol of the
/// fixed point in sup norm. Throws ConvergenceError after max_iter sweeps.
ValueIterationResult value_iteration(const WindowMdp& wm, double beta, double tol = 1e-10,
                                     long max_iter = 100000);

/// Exact value of running `pol` on the true model: the fixed point of
/// V(x,I) = c(x,a) + beta sum_{x',y'} T(x'|x,a) Q(y'|x') V(x', succ(I,a,y')),
/// a = pol(I), on the (state, window) product chain. Layout [code][x].
struct PolicyEvaluation {
    std::vector<double> values;
    std::size_t n_states = 0;
    long iterations = 0;
    double residual = 0.0;

    double at(std::size_t x, std::size_t code) const { return values[code * n_states + x]; }
};

PolicyEvaluation evaluate_window_policy(const FinitePomdp& model, const WindowMdp& wm,
                                        const WindowPolicy& pol, double tol = 1e-10,
                                        long max_iter = 100000);

/// Joint law of (X_N, I_0^N) when X_0 ~ prior and the first N actions are
/// drawn i.i.d. from `exploration`. Layout [code][x]; sums to 1.
std::vector<double> initial_window_distribution(const FinitePomdp& model, std::size_t N,
                                                const Belief& prior,
                                                std::span<const double> exploration);

/// sum_{x,I} D(x,I) V(x,I).
double expected_value(std::span<const double> joint, const PolicyEvaluation& ev);

nlohmann::json window_mdp_to_json(const WindowMdp& wm);
nlohmann::json policy_to_json(const WindowPolicy& pol, std::size_t n_obs, std::size_t n_actions);
WindowPolicy policy_from_json(const nlohmann::json& j);

} // namespace slidewin
