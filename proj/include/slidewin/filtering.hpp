#pragma once

#include "slidewin/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace slidewin {

/// The last N+1 observations and N actions, stored oldest first:
/// obs = (y_{t-N}, ..., y_t), actions = (u_{t-N}, ..., u_{t-1}).
struct WindowState {
    std::vector<std::size_t> obs;
    std::vector<std::size_t> actions;

    std::size_t length() const noexcept { return actions.size(); }
    friend bool operator==(const WindowState&, const WindowState&) = default;
};

/// Canonical integer encoding of window states. The code is a mixed-radix
/// number whose most significant digits are the observations (base n_obs,
/// oldest first) followed by the actions (base n_actions, oldest first).
/// It is a bijection onto [0, n_obs^(N+1) * n_actions^N).
class WindowCodec {
public:
    WindowCodec(std::size_t n_obs, std::size_t n_actions, std::size_t N);

    std::size_t window() const noexcept { return N_; }
    std::size_t n_obs() const noexcept { return n_obs_; }
    std::size_t n_actions() const noexcept { return n_actions_; }
    std::uint64_t size() const noexcept { return obs_span_ * act_span_; }

    std::uint64_t encode(const WindowState& w) const;
    WindowState decode(std::uint64_t code) const;

    /// Shift-in transition: drop the oldest observation and action, append
    /// action u and next observation y.
    std::uint64_t successor(std::uint64_t code, std::size_t u, std::size_t y) const;

    /// Number of codes for the given sizes, or nullopt on 64-bit overflow.
    static std::optional<std::uint64_t> count(std::size_t n_obs, std::size_t n_actions,
                                              std::size_t N);

private:
    std::size_t n_obs_, n_actions_, N_;
    std::uint64_t obs_span_ = 1;  // n_obs^(N+1)
    std::uint64_t act_span_ = 1;  // n_actions^N
    std::uint64_t obs_drop_ = 1;  // n_obs^N
    std::uint64_t act_drop_ = 1;  // n_actions^(N-1), unused when N = 0
};

/// out[x'] = sum_x T(x'|x,u) z[x].
Belief predictor_step(const FinitePomdp& m, const Belief& z, std::size_t u);

/// Bayes update with observation y. `belief` is empty when the observation
/// has probability zero under the predictor; such branches carry no weight.
struct MeasurementResult {
    std::optional<Belief> belief;
    double likelihood = 0.0;
    bool possible() const noexcept { return belief.has_value(); }
};

MeasurementResult measurement_update(const FinitePomdp& m, const Belief& z_pred, std::size_t y);

/// Runs the filter over a window starting from `prior`, which is read as the
/// predictor of X_{t-N} before y_{t-N} is seen. `path_likelihood` is the
/// product of the N+1 observation likelihoods, i.e. P^prior(y-seq | u-seq).
struct WindowPosterior {
    std::optional<Belief> belief;
    double path_likelihood = 0.0;
    bool defined() const noexcept { return belief.has_value(); }
};

WindowPosterior window_posterior(const FinitePomdp& m, const Belief& prior, const WindowState& w);

/// Distribution of the next observation: sum_x' Q(y'|x') sum_x T(x'|x,u) z[x].
std::vector<double> next_obs_distribution(const FinitePomdp& m, const Belief& z_post, std::size_t u);

/// Full filter step: predictor_step followed by measurement_update.
MeasurementResult filter_step(const FinitePomdp& m, const Belief& z, std::size_t u, std::size_t y);

} // namespace slidewin
