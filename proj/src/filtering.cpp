#include "slidewin/filtering.hpp"

#include "slidewin/error.hpp"

#include <limits>

namespace slidewin {

namespace {

bool mul_overflows(std::uint64_t a, std::uint64_t b) {
    return b != 0 && a > std::numeric_limits<std::uint64_t>::max() / b;
}

std::optional<std::uint64_t> checked_pow(std::uint64_t base, std::size_t exp) {
    std::uint64_t r = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        if (mul_overflows(r, base)) return std::nullopt;
        r *= base;
    }
    return r;
}

} // namespace

std::optional<std::uint64_t> WindowCodec::count(std::size_t n_obs, std::size_t n_actions,
                                                std::size_t N) {
    const auto o = checked_pow(n_obs, N + 1);
    const auto a = checked_pow(n_actions, N);
    if (!o || !a || mul_overflows(*o, *a)) return std::nullopt;
    return *o * *a;
}

WindowCodec::WindowCodec(std::size_t n_obs, std::size_t n_actions, std::size_t N)
    : n_obs_(n_obs), n_actions_(n_actions), N_(N) {
    if (n_obs == 0 || n_actions == 0) throw ModelError("WindowCodec: empty alphabet");
    if (!count(n_obs, n_actions, N)) throw CapacityError("WindowCodec: code space overflows 64 bits");
    obs_span_ = *checked_pow(n_obs, N + 1);
    act_span_ = *checked_pow(n_actions, N);
    obs_drop_ = *checked_pow(n_obs, N);
    act_drop_ = N > 0 ? *checked_pow(n_actions, N - 1) : 1;
}

std::uint64_t WindowCodec::encode(const WindowState& w) const {
    if (w.obs.size() != N_ + 1 || w.actions.size() != N_)
        throw ModelError("WindowCodec::encode: window has the wrong length");
    std::uint64_t obs_part = 0, act_part = 0;
    for (std::size_t y : w.obs) {
        if (y >= n_obs_) throw ModelError("WindowCodec::encode: observation out of range");
        obs_part = obs_part * n_obs_ + y;
    }
    for (std::size_t u : w.actions) {
        if (u >= n_actions_) throw ModelError("WindowCodec::encode: action out of range");
        act_part = act_part * n_actions_ + u;
    }
    return obs_part * act_span_ + act_part;
}

WindowState WindowCodec::decode(std::uint64_t code) const {
    if (code >= size()) throw ModelError("WindowCodec::decode: code out of range");
    WindowState w;
    w.obs.resize(N_ + 1);
    w.actions.resize(N_);
    std::uint64_t obs_part = code / act_span_, act_part = code % act_span_;
    for (std::size_t k = N_ + 1; k-- > 0;) {
        w.obs[k] = static_cast<std::size_t>(obs_part % n_obs_);
        obs_part /= n_obs_;
    }
    for (std::size_t k = N_; k-- > 0;) {
        w.actions[k] = static_cast<std::size_t>(act_part % n_actions_);
        act_part /= n_actions_;
    }
    return w;
}

std::uint64_t WindowCodec::successor(std::uint64_t code, std::size_t u, std::size_t y) const {
    const std::uint64_t obs_part = code / act_span_, act_part = code % act_span_;
    const std::uint64_t next_obs = (obs_part % obs_drop_) * n_obs_ + y;
    const std::uint64_t next_act = N_ == 0 ? 0 : (act_part % act_drop_) * n_actions_ + u;
    return next_obs * act_span_ + next_act;
}

Belief predictor_step(const FinitePomdp& m, const Belief& z, std::size_t u) {
    if (u >= m.n_actions) throw ModelError("predictor_step: action out of range");
    if (z.size() != m.n_states) throw ModelError("predictor_step: belief has the wrong size");
    std::vector<double> out(m.n_states, 0.0);
    const Matrix& k = m.transition[u];
    for (std::size_t x = 0; x < m.n_states; ++x) {
        const double w = z[x];
        if (w == 0.0) continue;
        for (std::size_t x2 = 0; x2 < m.n_states; ++x2) out[x2] += w * k(x, x2);
    }
    return Belief(std::move(out));
}

MeasurementResult measurement_update(const FinitePomdp& m, const Belief& z_pred, std::size_t y) {
    if (y >= m.n_obs) throw ModelError("measurement_update: observation out of range");
    if (z_pred.size() != m.n_states) throw ModelError("measurement_update: belief has the wrong size");
    std::vector<double> out(m.n_states);
    double like = 0.0;
    for (std::size_t x = 0; x < m.n_states; ++x) {
        out[x] = m.Q(x, y) * z_pred[x];
        like += out[x];
    }
    MeasurementResult r;
    r.likelihood = like;
    if (like > 0.0) r.belief = Belief(std::move(out));
    return r;
}

MeasurementResult filter_step(const FinitePomdp& m, const Belief& z, std::size_t u, std::size_t y) {
    return measurement_update(m, predictor_step(m, z, u), y);
}

WindowPosterior window_posterior(const FinitePomdp& m, const Belief& prior, const WindowState& w) {
    if (w.obs.size() != w.actions.size() + 1)
        throw ModelError("window_posterior: need one more observation than actions");
    WindowPosterior out;
    auto step = measurement_update(m, prior, w.obs[0]);
    double like = step.likelihood;
    for (std::size_t k = 1; k < w.obs.size() && step.possible(); ++k) {
        step = filter_step(m, *step.belief, w.actions[k - 1], w.obs[k]);
        like *= step.likelihood;
    }
    if (!step.possible()) return out;
    out.belief = std::move(step.belief);
    out.path_likelihood = like;
    return out;
}

std::vector<double> next_obs_distribution(const FinitePomdp& m, const Belief& z_post, std::size_t u) {
    const Belief pred = predictor_step(m, z_post, u);
    std::vector<double> out(m.n_obs, 0.0);
    for (std::size_t x = 0; x < m.n_states; ++x)
        for (std::size_t y = 0; y < m.n_obs; ++y) out[y] += m.Q(x, y) * pred[x];
    return out;
}

} // namespace slidewin
