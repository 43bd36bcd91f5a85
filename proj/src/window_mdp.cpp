#include "slidewin/window_mdp.hpp"

#include "slidewin/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace slidewin {

using nlohmann::json;

std::size_t WindowMdp::unreachable_count() const {
    return static_cast<std::size_t>(std::count(reachable.begin(), reachable.end(), 0));
}

WindowMdp build_window_mdp(const FinitePomdp& model, std::size_t N, const Belief& z_star,
                           std::uint64_t state_cap) {
    if (z_star.size() != model.n_states) throw ModelError("build_window_mdp: z* has the wrong size");
    const auto count = WindowCodec::count(model.n_obs, model.n_actions, N);
    if (!count || *count > state_cap)
        throw CapacityError("build_window_mdp: window N=" + std::to_string(N) +
                            " exceeds the state cap of " + std::to_string(state_cap));

    WindowMdp wm;
    wm.N = N;
    wm.n_states = model.n_states;
    wm.n_obs = model.n_obs;
    wm.n_actions = model.n_actions;
    wm.z_star = z_star;
    wm.codec = WindowCodec(model.n_obs, model.n_actions, N);

    const std::size_t S = wm.size(), nx = model.n_states, nu = model.n_actions, ny = model.n_obs;
    wm.posteriors.resize(S * nx);
    wm.reachable.assign(S, 0);
    wm.costs.resize(S * nu);
    wm.obs_kernel.resize(S * nu * ny);

    for (std::size_t code = 0; code < S; ++code) {
        const WindowPosterior wp = window_posterior(model, z_star, wm.codec.decode(code));
        const Belief& post = wp.defined() ? *wp.belief : z_star;
        wm.reachable[code] = wp.defined() ? 1 : 0;
        std::copy(post.vector().begin(), post.vector().end(), wm.posteriors.begin() + code * nx);
        for (std::size_t u = 0; u < nu; ++u) {
            double c = 0.0;
            for (std::size_t x = 0; x < nx; ++x) c += model.c(x, u) * post[x];
            wm.costs[code * nu + u] = c;
            const auto py = next_obs_distribution(model, post, u);
            std::copy(py.begin(), py.end(), wm.obs_kernel.begin() + (code * nu + u) * ny);
        }
    }
    return wm;
}

std::string to_string(PolicySource s) {
    switch (s) {
    case PolicySource::ValueIteration: return "value-iteration";
    case PolicySource::QLearning: return "q-learning";
    case PolicySource::Custom: return "custom";
    }
    return "custom";
}

namespace {

PolicySource source_from_string(const std::string& s) {
    if (s == "value-iteration") return PolicySource::ValueIteration;
    if (s == "q-learning") return PolicySource::QLearning;
    if (s == "custom") return PolicySource::Custom;
    throw ModelError("policy: unknown provenance '" + s + "'");
}

double sup_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void check_discount(double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw ModelError("discount must lie in (0,1)");
}

} // namespace

std::vector<double> q_from_values(const WindowMdp& wm, std::span<const double> values, double beta) {
    const std::size_t S = wm.size(), nu = wm.n_actions, ny = wm.n_obs;
    std::vector<double> q(S * nu);
    for (std::size_t code = 0; code < S; ++code)
        for (std::size_t u = 0; u < nu; ++u) {
            const auto py = wm.next_obs(code, u);
            double cont = 0.0;
            for (std::size_t y = 0; y < ny; ++y)
                if (py[y] > 0.0) cont += py[y] * values[wm.successor(code, u, y)];
            q[code * nu + u] = wm.cost(code, u) + beta * cont;
        }
    return q;
}

WindowPolicy greedy_policy(std::span<const double> q, std::size_t n_actions, std::size_t N,
                           PolicySource source) {
    WindowPolicy pol;
    pol.N = N;
    pol.source = source;
    const std::size_t S = q.size() / n_actions;
    pol.actions.resize(S);
    for (std::size_t code = 0; code < S; ++code) {
        std::size_t best = 0;
        for (std::size_t u = 1; u < n_actions; ++u)
            if (q[code * n_actions + u] < q[code * n_actions + best]) best = u;
        pol.actions[code] = best;
    }
    return pol;
}

ValueIterationResult value_iteration(const WindowMdp& wm, double beta, double tol, long max_iter) {
    check_discount(beta);
    if (!(tol > 0.0)) throw ModelError("value_iteration: tol must be positive");
    const double stop = tol * (1.0 - beta) / (2.0 * beta);
    const std::size_t S = wm.size(), nu = wm.n_actions;

    ValueIterationResult r;
    std::vector<double> J(S, 0.0), next(S);
    for (long it = 1; it <= max_iter; ++it) {
        const auto q = q_from_values(wm, J, beta);
        for (std::size_t code = 0; code < S; ++code)
            next[code] = *std::min_element(q.begin() + code * nu, q.begin() + (code + 1) * nu);
        const double delta = sup_diff(next, J);
        J.swap(next);
        r.sweep_deltas.push_back(delta);
        r.iterations = it;
        r.residual = delta;
        if (delta <= stop) {
            r.values = std::move(J);
            r.q = q_from_values(wm, r.values, beta);
            r.policy = greedy_policy(r.q, nu, wm.N, PolicySource::ValueIteration);
            return r;
        }
    }
    throw ConvergenceError("value_iteration did not converge", r.residual, r.iterations);
}

PolicyEvaluation evaluate_window_policy(const FinitePomdp& model, const WindowMdp& wm,
                                        const WindowPolicy& pol, double tol, long max_iter) {
    check_discount(model.discount);
    const double beta = model.discount;
    const std::size_t S = wm.size(), nx = model.n_states, ny = model.n_obs;
    if (pol.actions.size() != S) throw ModelError("evaluate_window_policy: policy size mismatch");
    for (std::size_t a : pol.actions)
        if (a >= model.n_actions) throw ModelError("evaluate_window_policy: action out of range");

    // P(x', y' | x, u) = T(x'|x,u) Q(y'|x'), precomputed per action.
    std::vector<double> joint(model.n_actions * nx * nx * ny);
    for (std::size_t u = 0; u < model.n_actions; ++u)
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t x2 = 0; x2 < nx; ++x2)
                for (std::size_t y = 0; y < ny; ++y)
                    joint[((u * nx + x) * nx + x2) * ny + y] = model.T(u, x, x2) * model.Q(x2, y);

    const double stop = tol * (1.0 - beta) / (2.0 * beta);
    PolicyEvaluation ev;
    ev.n_states = nx;
    std::vector<double> V(S * nx, 0.0), next(S * nx);
    for (long it = 1; it <= max_iter; ++it) {
        for (std::size_t code = 0; code < S; ++code) {
            const std::size_t a = pol.actions[code];
            for (std::size_t x = 0; x < nx; ++x) {
                double cont = 0.0;
                const double* p = &joint[(a * nx + x) * nx * ny];
                for (std::size_t y = 0; y < ny; ++y) {
                    const std::size_t succ = wm.successor(code, a, y);
                    for (std::size_t x2 = 0; x2 < nx; ++x2) cont += p[x2 * ny + y] * V[succ * nx + x2];
                }
                next[code * nx + x] = model.c(x, a) + beta * cont;
            }
        }
        const double delta = sup_diff(next, V);
        V.swap(next);
        ev.iterations = it;
        ev.residual = delta;
        if (delta <= stop) {
            ev.values = std::move(V);
            return ev;
        }
    }
    throw ConvergenceError("evaluate_window_policy did not converge", ev.residual, ev.iterations);
}

std::vector<double> initial_window_distribution(const FinitePomdp& model, std::size_t N,
                                                const Belief& prior,
                                                std::span<const double> exploration) {
    if (exploration.size() != model.n_actions)
        throw ModelError("initial_window_distribution: exploration has the wrong size");
    for (double p : exploration)
        if (!(p > 0.0)) throw ModelError("initial_window_distribution: exploration must be positive");
    const WindowCodec codec(model.n_obs, model.n_actions, N);
    const std::size_t nx = model.n_states;
    std::vector<double> out(static_cast<std::size_t>(codec.size()) * nx, 0.0);

    WindowState w;
    w.obs.resize(N + 1);
    w.actions.resize(N);
    // mass[x] = P(X_k = x, y_0..y_k, u_0..u_{k-1}) before y_k is folded in.
    std::function<void(std::size_t, const std::vector<double>&)> visit =
        [&](std::size_t k, const std::vector<double>& mass) {
            for (std::size_t y = 0; y < model.n_obs; ++y) {
                std::vector<double> seen(nx);
                double total = 0.0;
                for (std::size_t x = 0; x < nx; ++x) {
                    seen[x] = mass[x] * model.Q(x, y);
                    total += seen[x];
                }
                if (total <= 0.0) continue;
                w.obs[k] = y;
                if (k == N) {
                    const std::size_t code = static_cast<std::size_t>(codec.encode(w));
                    std::copy(seen.begin(), seen.end(), out.begin() + code * nx);
                    continue;
                }
                for (std::size_t u = 0; u < model.n_actions; ++u) {
                    w.actions[k] = u;
                    std::vector<double> moved(nx, 0.0);
                    for (std::size_t x = 0; x < nx; ++x) {
                        const double m = seen[x] * exploration[u];
                        if (m == 0.0) continue;
                        for (std::size_t x2 = 0; x2 < nx; ++x2) moved[x2] += m * model.T(u, x, x2);
                    }
                    visit(k + 1, moved);
                }
            }
        };
    const double esum = [&] {
        double s = 0.0;
        for (double p : exploration) s += p;
        return s;
    }();
    if (std::abs(esum - 1.0) > 1e-9)
        throw ModelError("initial_window_distribution: exploration must sum to 1");
    visit(0, prior.vector());
    return out;
}

double expected_value(std::span<const double> joint, const PolicyEvaluation& ev) {
    if (joint.size() != ev.values.size()) throw ModelError("expected_value: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < joint.size(); ++i) s += joint[i] * ev.values[i];
    return s;
}

namespace {

const char* kDecodeNote =
    "window code = obs_part * n_actions^N + act_part; obs_part is the base-n_obs number "
    "y_{t-N}..y_t (oldest digit most significant), act_part the base-n_actions number "
    "u_{t-N}..u_{t-1}";

} // namespace

json window_mdp_to_json(const WindowMdp& wm) {
    json states = json::array();
    for (std::size_t code = 0; code < wm.size(); ++code) {
        json costs = json::array(), kern = json::array();
        for (std::size_t u = 0; u < wm.n_actions; ++u) {
            costs.push_back(wm.cost(code, u));
            const auto py = wm.next_obs(code, u);
            kern.push_back(std::vector<double>(py.begin(), py.end()));
        }
        const auto post = wm.posterior(code);
        states.push_back({{"code", code},
                          {"reachable", wm.reachable[code] != 0},
                          {"posterior", std::vector<double>(post.begin(), post.end())},
                          {"cost", costs},
                          {"next_obs", kern}});
    }
    return json{{"decode", kDecodeNote},
                {"N", wm.N},
                {"num_states", wm.n_states},
                {"num_obs", wm.n_obs},
                {"num_actions", wm.n_actions},
                {"z_star", wm.z_star.vector()},
                {"states", states}};
}

json policy_to_json(const WindowPolicy& pol, std::size_t n_obs, std::size_t n_actions) {
    return json{{"decode", kDecodeNote},
                {"N", pol.N},
                {"num_obs", n_obs},
                {"num_actions", n_actions},
                {"provenance", to_string(pol.source)},
                {"actions", pol.actions}};
}

WindowPolicy policy_from_json(const json& j) {
    WindowPolicy pol;
    try {
        pol.N = j.at("N").get<std::size_t>();
        pol.source = source_from_string(j.value("provenance", std::string("custom")));
        pol.actions = j.at("actions").get<std::vector<std::size_t>>();
        const auto n_obs = j.at("num_obs").get<std::size_t>();
        const auto n_actions = j.at("num_actions").get<std::size_t>();
        const auto count = WindowCodec::count(n_obs, n_actions, pol.N);
        if (!count || *count != pol.actions.size())
            throw ModelError("policy: action table does not match the window size");
        for (std::size_t a : pol.actions)
            if (a >= n_actions) throw ModelError("policy: action out of range");
    } catch (const json::exception& e) {
        throw ModelError(std::string("policy: ") + e.what());
    }
    return pol;
}

} // namespace slidewin
