#include "slidewin/builders.hpp"
#include "slidewin/error.hpp"
#include "slidewin/window_mdp.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

using namespace slidewin;
using doctest::Approx;

namespace {

FinitePomdp case1() { return build_machine_repair(0.3, 0.3, 0.3, 2, 1, 0.8); }

Belief half() { return Belief({0.5, 0.5}); }

// Policy evaluation on the window MDP by a dense linear solve.
Eigen::VectorXd solve_policy_values(const WindowMdp& wm, const WindowPolicy& pol, double beta) {
    const auto S = static_cast<Eigen::Index>(wm.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(S, S);
    Eigen::VectorXd b(S);
    for (Eigen::Index i = 0; i < S; ++i) {
        const std::size_t code = static_cast<std::size_t>(i), u = pol.actions[code];
        b(i) = wm.cost(code, u);
        const auto py = wm.next_obs(code, u);
        for (std::size_t y = 0; y < wm.n_obs; ++y)
            A(i, static_cast<Eigen::Index>(wm.successor(code, u, y))) -= beta * py[y];
    }
    return A.partialPivLu().solve(b);
}

// Fully observed MDP optimal values by a long value iteration.
std::vector<double> mdp_values(const FinitePomdp& m) {
    std::vector<double> V(m.n_states, 0.0);
    for (int it = 0; it < 5000; ++it) {
        std::vector<double> next(m.n_states);
        for (std::size_t x = 0; x < m.n_states; ++x) {
            double best = 1e300;
            for (std::size_t u = 0; u < m.n_actions; ++u) {
                double q = m.c(x, u);
                for (std::size_t x2 = 0; x2 < m.n_states; ++x2) q += m.discount * m.T(u, x, x2) * V[x2];
                best = std::min(best, q);
            }
            next[x] = best;
        }
        V = next;
    }
    return V;
}

} // namespace

TEST_CASE("N = 0 window MDP on machine repair") {
    const auto m = case1();
    const auto wm = build_window_mdp(m, 0, half());
    REQUIRE(wm.size() == 2);
    CHECK(wm.posterior(0)[0] == Approx(0.7));
    CHECK(wm.posterior(1)[1] == Approx(0.7));
    CHECK(wm.cost(0, 0) == Approx(0.7 * 1 + 0.3 * 0));
    CHECK(wm.cost(1, 1) == Approx(0.3 * 3 + 0.7 * 2));
    CHECK(wm.unreachable_count() == 0);
}

TEST_CASE("window MDP sizes and successor semantics") {
    const auto e1 = build_example1(0.1);
    const Belief z(std::vector<double>(4, 0.25));
    const auto wm = build_window_mdp(e1, 1, z);
    CHECK(wm.size() == 8);
    const std::size_t code = static_cast<std::size_t>(wm.codec.encode({{0, 1}, {0}}));
    CHECK(wm.codec.decode(wm.successor(code, 1, 0)) == WindowState{{1, 0}, {1}});
    CHECK_THROWS_AS(build_window_mdp(e1, 6, z, 100), CapacityError);
}

TEST_CASE("window MDP tables are stochastic and bounded") {
    for (const auto& m : {case1(), build_example1(0.2), build_example3(0.3)}) {
        const auto wm = build_window_mdp(m, 2, Belief::uniform(m.n_states));
        double cinf = 0.0;
        for (double c : m.cost.data()) cinf = std::max(cinf, std::abs(c));
        for (std::size_t code = 0; code < wm.size(); ++code)
            for (std::size_t u = 0; u < m.n_actions; ++u) {
                double s = 0.0;
                for (double p : wm.next_obs(code, u)) s += p;
                CHECK(s == Approx(1.0).epsilon(1e-12));
                CHECK(std::abs(wm.cost(code, u)) <= cinf + 1e-12);
            }
    }
}

TEST_CASE("unreachable windows default to z* and are flagged") {
    auto m = case1();
    m.observation = testing_support::identity(2);
    const auto wm = build_window_mdp(m, 1, half());
    const std::size_t bad = static_cast<std::size_t>(wm.codec.encode({{0, 1}, {0}}));
    CHECK(wm.reachable[bad] == 0);
    CHECK(wm.posterior(bad)[0] == 0.5);
    CHECK(wm.unreachable_count() >= 1);
}

TEST_CASE("value iteration on zero and constant costs") {
    auto m = build_example3(0.3);
    m.cost = Matrix(3, 2, 0.0);
    auto vi = value_iteration(build_window_mdp(m, 1, Belief::uniform(3)), 0.8, 1e-10);
    for (double v : vi.values) CHECK(v == 0.0);
    for (auto a : vi.policy.actions) CHECK(a == 0);

    m.cost = Matrix(3, 2, 1.7);
    vi = value_iteration(build_window_mdp(m, 2, Belief::uniform(3)), 0.8, 1e-10);
    for (double v : vi.values) CHECK(std::abs(v - 1.7 / 0.2) <= 1e-10);
}

TEST_CASE("value iteration matches the linear solve of its greedy policy") {
    const auto m = case1();
    for (std::size_t N : {1u, 2u, 3u}) {
        const auto wm = build_window_mdp(m, N, half());
        const auto vi = value_iteration(wm, 0.8, 1e-10);
        const Eigen::VectorXd v = solve_policy_values(wm, vi.policy, 0.8);
        for (std::size_t i = 0; i < wm.size(); ++i) CHECK(std::abs(v(static_cast<Eigen::Index>(i)) - vi.values[i]) <= 1e-9);
    }
}

TEST_CASE("value iteration is a beta contraction with a tol-accurate fixed point") {
    std::mt19937_64 g(41);
    for (int t = 0; t < 10; ++t) {
        const auto m = testing_support::random_model(g, 3, 2, 3);
        const double beta = 0.5 + 0.04 * t;
        const auto wm = build_window_mdp(m, 2, Belief::uniform(3));
        const double tol = 1e-9;
        const auto vi = value_iteration(wm, beta, tol);
        for (std::size_t k = 1; k < vi.sweep_deltas.size(); ++k)
            CHECK(vi.sweep_deltas[k] <= beta * vi.sweep_deltas[k - 1] + 1e-14);
        std::vector<double> minq(wm.size());
        for (std::size_t c = 0; c < wm.size(); ++c)
            minq[c] = *std::min_element(vi.q.begin() + c * 3, vi.q.begin() + c * 3 + 3);
        for (std::size_t c = 0; c < wm.size(); ++c) CHECK(std::abs(minq[c] - vi.values[c]) <= tol);
        CHECK_THROWS_AS(value_iteration(wm, beta, 1e-12, 3), ConvergenceError);
    }
}

TEST_CASE("greedy policy breaks ties toward the lowest action") {
    const std::vector<double> q{1.0, 0.5, 0.5, 0.2, 0.2, 0.3};
    const auto p = greedy_policy(q, 3, 0, PolicySource::Custom);
    CHECK(p.actions == std::vector<std::size_t>{1, 0});
}

TEST_CASE("product chain evaluation of zero cost is zero") {
    auto m = case1();
    m.cost = Matrix(2, 2, 0.0);
    const auto wm = build_window_mdp(m, 1, half());
    const auto ev = evaluate_window_policy(m, wm, value_iteration(wm, 0.8).policy);
    for (double v : ev.values) CHECK(v == 0.0);
}

TEST_CASE("noiseless channel: the N = 1 window policy is fully-observed optimal") {
    for (auto [k, t] : {std::pair{0.3, 0.3}, std::pair{0.4, 0.4}, std::pair{0.9, 0.1}}) {
        for (double R : {0.2, 2.0}) {
            auto m = build_machine_repair(0.3, k, t, R, 1, 0.8);
            m.observation = testing_support::identity(2);
            const auto wm = build_window_mdp(m, 1, Belief({0.5, 0.5}));
            const double tol = 1e-10;
            const auto vi = value_iteration(wm, 0.8, tol);
            const auto ev = evaluate_window_policy(m, wm, vi.policy, tol);
            const auto V = mdp_values(m);
            for (std::size_t code = 0; code < wm.size(); ++code) {
                if (!wm.reachable[code]) continue;
                const std::size_t x = wm.codec.decode(code).obs.back();
                CHECK(std::abs(ev.at(x, code) - V[x]) <= 2 * tol);
                CHECK(std::abs(vi.values[code] - V[x]) <= tol);
            }
        }
    }
}

TEST_CASE("product chain evaluation agrees with Monte Carlo rollouts") {
    const auto m = case1();
    const std::size_t N = 2;
    const auto wm = build_window_mdp(m, N, half());
    // an irregular window-dependent policy, so that no symmetry hides errors
    WindowPolicy pol;
    pol.N = N;
    for (std::size_t c = 0; c < wm.size(); ++c) pol.actions.push_back(c % 3 == 0 ? 1 : 0);
    const auto ev = evaluate_window_policy(m, wm, pol, 1e-10);
    const std::vector<double> expl{0.5, 0.5};
    const auto D = initial_window_distribution(m, N, half(), expl);
    const double exact = expected_value(D, ev);

    const double tol = 1e-4;
    const auto mc = testing_support::rollout_window_policy(m, N, pol.actions, half().probs(), expl, 100000, 42, tol);
    CHECK(std::abs(mc.mean - exact) <= 3 * mc.se + tol);
}

TEST_CASE("initial window distribution") {
    const auto m = case1();
    const std::vector<double> expl{0.5, 0.5};
    const Belief prior({0.2, 0.8});
    const auto D0 = initial_window_distribution(m, 0, prior, expl);
    for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t x = 0; x < 2; ++x) CHECK(D0[y * 2 + x] == Approx(prior[x] * m.Q(x, y)).epsilon(1e-15));

    const auto D2 = initial_window_distribution(m, 2, prior, expl);
    double s = 0.0;
    for (double p : D2) s += p;
    CHECK(std::abs(s - 1.0) <= 1e-12);

    const std::vector<double> zero{1.0, 0.0};
    CHECK_THROWS_AS(initial_window_distribution(m, 1, prior, zero), ModelError);
}

TEST_CASE("initial window marginal over states follows the averaged chain toward z*") {
    const auto m = build_machine_repair(0.2, 0.4, 0.4, 2, 1, 0.8);
    const std::vector<double> expl{0.5, 0.5};
    const Belief prior = Belief::dirac(2, 0);
    Eigen::Matrix2d P;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) P(i, j) = 0.5 * (m.T(0, i, j) + m.T(1, i, j));
    double prev_err = 1.0;
    for (std::size_t N : {2u, 6u, 10u}) {
        const auto D = initial_window_distribution(m, N, prior, expl);
        double mx[2] = {0, 0};
        for (std::size_t i = 0; i < D.size(); ++i) mx[i % 2] += D[i];
        Eigen::RowVector2d mu(1.0, 0.0);
        for (std::size_t k = 0; k < N; ++k) mu = mu * P;
        CHECK(std::abs(mx[0] - mu(0)) <= 1e-12);
        const double err = std::abs(mx[0] - 0.5);
        CHECK(err < prev_err);
        prev_err = err;
    }
    CHECK(prev_err < 5e-3);
}

TEST_CASE("window MDP and policy JSON") {
    const auto m = case1();
    const auto wm = build_window_mdp(m, 1, half());
    const auto j = window_mdp_to_json(wm);
    CHECK(j.at("decode").get<std::string>().find("oldest") != std::string::npos);
    CHECK(j.at("states").size() == wm.size());
    const auto vi = value_iteration(wm, 0.8);
    const auto pj = policy_to_json(vi.policy, 2, 2);
    const auto back = policy_from_json(pj);
    CHECK(back.actions == vi.policy.actions);
    CHECK(back.source == PolicySource::ValueIteration);
    auto broken = pj;
    broken["actions"].push_back(0);
    CHECK_THROWS_AS(policy_from_json(broken), ModelError);
}
