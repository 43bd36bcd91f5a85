#include "slidewin/qlearning.hpp"

#include "slidewin/error.hpp"

#include <algorithm>
#include <cmath>

namespace slidewin {

using nlohmann::json;

namespace {

std::vector<double> checked_exploration(const FinitePomdp& model, std::span<const double> e) {
    if (e.empty()) return std::vector<double>(model.n_actions, 1.0 / static_cast<double>(model.n_actions));
    if (e.size() != model.n_actions) throw ModelError("exploration: one probability per action required");
    double s = 0.0;
    for (double p : e) {
        if (!(p > 0.0) || !std::isfinite(p))
            throw ModelError("exploration: every action needs positive probability");
        s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ModelError("exploration: probabilities must sum to 1");
    return {e.begin(), e.end()};
}

} // namespace

WindowSimulator::WindowSimulator(const FinitePomdp& model, std::size_t N, const Belief& prior,
                                 std::span<const double> exploration, Philox4x32 rng)
    : model_(model), codec_(model.n_obs, model.n_actions, N),
      exploration_(checked_exploration(model, exploration)), rng_(rng) {
    if (prior.size() != model.n_states) throw ModelError("WindowSimulator: prior has the wrong size");
    WindowState w;
    x_ = rng_.categorical(prior.probs());
    w.obs.push_back(rng_.categorical(model_.observation.row(x_)));
    for (std::size_t k = 0; k < N; ++k) {
        const std::size_t u = rng_.categorical(exploration_);
        x_ = rng_.categorical(model_.transition[u].row(x_));
        w.actions.push_back(u);
        w.obs.push_back(rng_.categorical(model_.observation.row(x_)));
    }
    code_ = static_cast<std::size_t>(codec_.encode(w));
}

Transition WindowSimulator::step() { return step(rng_.categorical(exploration_)); }

Transition WindowSimulator::step(std::size_t u) {
    if (u >= model_.n_actions) throw ModelError("WindowSimulator: action out of range");
    Transition t;
    t.code = code_;
    t.action = u;
    t.cost = model_.c(x_, u);
    x_ = rng_.categorical(model_.transition[u].row(x_));
    const std::size_t y = rng_.categorical(model_.observation.row(x_));
    code_ = static_cast<std::size_t>(codec_.successor(code_, u, y));
    t.next_code = code_;
    return t;
}

std::vector<Transition> simulate(const FinitePomdp& model, std::size_t N, const Belief& prior,
                                 std::span<const double> exploration, std::size_t steps,
                                 std::uint64_t seed) {
    WindowSimulator sim(model, N, prior, exploration, Philox4x32(seed));
    std::vector<Transition> out;
    out.reserve(steps);
    for (std::size_t i = 0; i < steps; ++i) out.push_back(sim.step());
    return out;
}

QLearningResult run_q_learning(const FinitePomdp& model, const WindowMdp& wm,
                               const QLearningOptions& opts,
                               std::optional<std::span<const double>> reference_q) {
    if (opts.steps < 1) throw ModelError("run_q_learning: steps must be at least 1");
    if (wm.n_states != model.n_states || wm.n_obs != model.n_obs || wm.n_actions != model.n_actions)
        throw ModelError("run_q_learning: window MDP does not match the model");
    const double beta = model.discount;
    const std::size_t S = wm.size(), nu = model.n_actions;

    QLearningResult r;
    QTable& t = r.table;
    t.N = wm.N;
    t.n_actions = nu;
    t.seed = opts.seed;
    t.steps = opts.steps;
    t.q.assign(S * nu, 0.0);
    t.visits.assign(S * nu, 0);
    std::vector<double> cost_mean(S * nu, 0.0);

    WindowSimulator sim(model, wm.N, wm.z_star, opts.exploration, Philox4x32(opts.seed));
    for (std::uint64_t step = 0; step < opts.steps; ++step) {
        const Transition tr = sim.step();
        const std::size_t k = tr.code * nu + tr.action;
        const std::uint64_t n = ++t.visits[k];
        double c;
        if (opts.cost == CostSignal::Model) {
            c = wm.cost(tr.code, tr.action);
        } else {
            cost_mean[k] += (tr.cost - cost_mean[k]) / static_cast<double>(n);
            c = cost_mean[k];
        }
        const auto next = t.q.begin() + tr.next_code * nu;
        const double target = c + beta * *std::min_element(next, next + nu);
        const double rate = 1.0 / (1.0 + static_cast<double>(n));
        t.q[k] = (1.0 - rate) * t.q[k] + rate * target;
    }

    r.policy = greedy_policy(t.q, nu, wm.N, PolicySource::QLearning);

    auto& d = r.diagnostics;
    d.starved_pairs = static_cast<std::size_t>(std::count(t.visits.begin(), t.visits.end(), 0u));
    d.min_visits = *std::min_element(t.visits.begin(), t.visits.end());
    std::vector<double> vmin(S);
    for (std::size_t code = 0; code < S; ++code)
        vmin[code] = *std::min_element(t.q.begin() + code * nu, t.q.begin() + (code + 1) * nu);
    const auto backup = q_from_values(wm, vmin, beta);
    for (std::size_t i = 0; i < backup.size(); ++i)
        d.bellman_residual = std::max(d.bellman_residual, std::abs(backup[i] - t.q[i]));
    if (reference_q) {
        if (reference_q->size() != t.q.size()) throw ModelError("run_q_learning: reference size mismatch");
        double gap = 0.0;
        for (std::size_t i = 0; i < t.q.size(); ++i) gap = std::max(gap, std::abs((*reference_q)[i] - t.q[i]));
        d.gap_to_reference = gap;
    }
    return r;
}

CostEstimate estimate_costs_online(const FinitePomdp& model, std::size_t N,
                                   std::span<const Transition> trajectory) {
    const WindowCodec codec(model.n_obs, model.n_actions, N);
    const std::size_t nu = model.n_actions;
    CostEstimate e;
    e.n_actions = nu;
    e.mean.assign(static_cast<std::size_t>(codec.size()) * nu, 0.0);
    e.count.assign(e.mean.size(), 0);
    for (const Transition& tr : trajectory) {
        if (tr.code >= codec.size() || tr.action >= nu)
            throw ModelError("estimate_costs_online: transition out of range");
        const std::size_t k = tr.code * nu + tr.action;
        e.mean[k] += (tr.cost - e.mean[k]) / static_cast<double>(++e.count[k]);
    }
    return e;
}

json qtable_to_json(const QTable& t) {
    json q = json::array();
    for (std::size_t code = 0; code * t.n_actions < t.q.size(); ++code) {
        q.push_back({{"code", code},
                     {"q", std::vector<double>(t.q.begin() + code * t.n_actions,
                                               t.q.begin() + (code + 1) * t.n_actions)},
                     {"visits", std::vector<std::uint64_t>(t.visits.begin() + code * t.n_actions,
                                                           t.visits.begin() + (code + 1) * t.n_actions)}});
    }
    return json{{"N", t.N}, {"num_actions", t.n_actions}, {"seed", t.seed}, {"steps", t.steps}, {"table", q}};
}

} // namespace slidewin
