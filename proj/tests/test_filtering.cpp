#include "slidewin/builders.hpp"
#include "slidewin/error.hpp"
#include "slidewin/filtering.hpp"
#include "slidewin/metrics.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

using namespace slidewin;
using doctest::Approx;

namespace {

void check_close(const Belief& b, std::initializer_list<double> want, double tol = 1e-12) {
    REQUIRE(b.size() == want.size());
    std::size_t i = 0;
    for (double w : want) CHECK(std::abs(b[i++] - w) <= tol);
}

} // namespace

TEST_CASE("window codec is a bijection with oldest-first digits") {
    const WindowCodec c(2, 3, 2);
    CHECK(c.size() == 8u * 9u);
    std::vector<bool> seen(c.size(), false);
    for (std::uint64_t code = 0; code < c.size(); ++code) {
        const WindowState w = c.decode(code);
        CHECK(c.encode(w) == code);
        seen[code] = true;
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
    // most significant digit is the oldest observation
    CHECK(c.encode({{1, 0, 0}, {0, 0}}) == 4u * 9u);
    CHECK(c.encode({{0, 0, 0}, {1, 0}}) == 3u);
    CHECK_THROWS_AS(c.encode({{0, 0}, {0, 0}}), ModelError);
    CHECK_THROWS_AS(c.encode({{0, 0, 2}, {0, 0}}), ModelError);
    CHECK_THROWS_AS(c.decode(c.size()), ModelError);
}

TEST_CASE("window successor shifts in the new action and observation") {
    const WindowCodec c(2, 2, 1);
    const auto code = c.encode({{0, 1}, {0}});
    CHECK(c.decode(c.successor(code, 1, 0)) == WindowState{{1, 0}, {1}});
    const WindowCodec c3(3, 2, 3);
    for (std::uint64_t k = 0; k < c3.size(); ++k) {
        const WindowState w = c3.decode(k);
        for (std::size_t u = 0; u < 2; ++u)
            for (std::size_t y = 0; y < 3; ++y) {
                WindowState want{{w.obs[1], w.obs[2], w.obs[3], y}, {w.actions[1], w.actions[2], u}};
                REQUIRE(c3.decode(c3.successor(k, u, y)) == want);
            }
    }
    const WindowCodec c0(3, 2, 0);
    CHECK(c0.decode(c0.successor(1, 1, 2)) == WindowState{{2}, {}});
}

TEST_CASE("window codec detects 64-bit overflow") {
    CHECK_FALSE(WindowCodec::count(1000, 1000, 10).has_value());
    CHECK(WindowCodec::count(2, 2, 3).value() == 16u * 8u);
    CHECK_THROWS_AS(WindowCodec(1000, 1000, 10), CapacityError);
}

TEST_CASE("predictor step") {
    auto m = build_machine_repair(0.3, 0.3, 0.3, 2, 1, 0.8);
    check_close(predictor_step(m, Belief({1.0, 0.0}), 1), {0.7, 0.3});
    const auto e3 = build_example3(0.3);
    check_close(predictor_step(e3, Belief::uniform(3), 0), {4.0 / 9, 1.0 / 3, 2.0 / 9});
    m.transition[0] = testing_support::identity(2);
    check_close(predictor_step(m, Belief::dirac(2, 1), 0), {0.0, 1.0});
    CHECK_THROWS_AS(predictor_step(m, Belief::uniform(2), 2), ModelError);
}

TEST_CASE("measurement update") {
    auto m = build_machine_repair(0.3, 0.3, 0.3, 2, 1, 0.8);
    const auto r = measurement_update(m, Belief::dirac(2, 0), 1);
    REQUIRE(r.possible());
    check_close(*r.belief, {1.0, 0.0});
    CHECK(r.likelihood == Approx(0.3));

    const double eps = 0.1;
    const auto e1 = build_example1(eps);
    const auto u = measurement_update(e1, Belief::uniform(4), 0);
    CHECK(u.likelihood == Approx(0.5).epsilon(1e-14));
    check_close(*u.belief, {(1 - eps) / 2, (1 - eps) / 2, eps / 2, eps / 2});

    m.observation = testing_support::identity(2);
    const auto n = measurement_update(m, Belief({0.4, 0.6}), 1);
    check_close(*n.belief, {0.0, 1.0});
    const auto z = measurement_update(m, Belief::dirac(2, 0), 1);
    CHECK_FALSE(z.possible());
    CHECK(z.likelihood == 0.0);
}

TEST_CASE("window posterior with N = 0 is a single measurement update") {
    const auto m = build_example1(0.2);
    for (std::size_t y = 0; y < 2; ++y) {
        const Belief prior({0.1, 0.2, 0.3, 0.4});
        const auto a = window_posterior(m, prior, {{y}, {}});
        const auto b = measurement_update(m, prior, y);
        CHECK(*a.belief == *b.belief);
        CHECK(a.path_likelihood == b.likelihood);
    }
}

TEST_CASE("window posterior two-step hand computation on machine repair") {
    // z* = (1/2, 1/2); y = 1 gives (3/10, 7/10) with likelihood 1/2; no repair
    // gives (51/100, 49/100); y = 1 again gives (153, 343)/496 with likelihood 496/1000.
    const auto m = build_machine_repair(0.3, 0.3, 0.3, 2, 1, 0.8);
    const auto r = window_posterior(m, Belief({0.5, 0.5}), {{1, 1}, {0}});
    REQUIRE(r.defined());
    check_close(*r.belief, {153.0 / 496, 343.0 / 496}, 1e-14);
    CHECK(r.path_likelihood == Approx(0.5 * 0.496).epsilon(1e-14));
}

TEST_CASE("window posterior flags impossible windows") {
    auto m = build_machine_repair(0.3, 0.3, 0.3, 2, 1, 0.8);
    m.observation = testing_support::identity(2);
    // broken machine without repair cannot be seen working
    const auto r = window_posterior(m, Belief::uniform(2), {{0, 1}, {0}});
    CHECK_FALSE(r.defined());
    CHECK(r.path_likelihood == 0.0);
    CHECK_THROWS_AS(window_posterior(m, Belief::uniform(2), {{0, 1}, {}}), ModelError);
}

TEST_CASE("window posterior is equivariant under state relabeling") {
    std::mt19937_64 g(31);
    for (int t = 0; t < 30; ++t) {
        auto m = testing_support::random_model(g, 4, 3, 2);
        if (t % 2) {
            m.n_obs = 4;
            m.observation = testing_support::identity(4);
        }
        std::vector<std::size_t> perm(4);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), g);
        const auto pm = permute_states(m, perm);
        const auto prior_v = testing_support::random_simplex(g, 4);
        std::vector<double> pprior(4);
        for (std::size_t i = 0; i < 4; ++i) pprior[i] = prior_v[perm[i]];
        const WindowCodec c(m.n_obs, 2, 2);
        for (std::uint64_t k = 0; k < c.size(); ++k) {
            const auto a = window_posterior(m, Belief(prior_v), c.decode(k));
            const auto b = window_posterior(pm, Belief(pprior), c.decode(k));
            REQUIRE(a.defined() == b.defined());
            if (!a.defined()) continue;
            CHECK(a.path_likelihood == Approx(b.path_likelihood).epsilon(1e-12));
            for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs((*b.belief)[i] - (*a.belief)[perm[i]]) < 1e-12);
        }
    }
}

TEST_CASE("next observation distribution") {
    const auto m = build_machine_repair(0.3, 0.3, 0.3, 2, 1, 0.8);
    const auto d = next_obs_distribution(m, Belief({1.0, 0.0}), 0);
    CHECK(d[0] == Approx(0.7));
    CHECK(d[1] == Approx(0.3));

    auto flat = build_example1(0.1);
    for (std::size_t x = 0; x < 4; ++x) flat.observation(x, 0) = flat.observation(x, 1) = 0.5;
    const auto f = next_obs_distribution(flat, Belief({0.7, 0.1, 0.1, 0.1}), 1);
    CHECK(f[0] == Approx(0.5));

    std::mt19937_64 g(32);
    for (int t = 0; t < 50; ++t) {
        const auto r = testing_support::random_model(g, 3, 4, 2);
        const Belief z(testing_support::random_simplex(g, 3));
        const auto got = next_obs_distribution(r, z, t % 2);
        const auto pred = predictor_step(r, z, t % 2);
        const auto want = push_forward(pred.probs(), r.observation);
        double s = 0.0;
        for (std::size_t y = 0; y < 4; ++y) {
            CHECK(got[y] == Approx(want[y]).epsilon(1e-14));
            s += got[y];
        }
        CHECK(s == Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("path likelihoods over all observation sequences sum to one") {
    std::mt19937_64 g(33);
    for (std::size_t nx = 2; nx <= 4; ++nx)
        for (std::size_t N = 0; N <= 4; ++N) {
            const auto m = testing_support::random_model(g, nx, 2, 2);
            const Belief prior(testing_support::random_simplex(g, nx));
            const WindowCodec c(2, 2, N);
            const std::uint64_t n_obs_seqs = 1ull << (N + 1), n_act_seqs = 1ull << N;
            for (std::uint64_t a = 0; a < n_act_seqs; ++a) {
                double total = 0.0;
                for (std::uint64_t o = 0; o < n_obs_seqs; ++o) {
                    const auto r = window_posterior(m, prior, c.decode(o * n_act_seqs + a));
                    total += r.path_likelihood;
                    if (r.defined()) {
                        double s = 0.0;
                        for (double p : r.belief->probs()) s += p;
                        CHECK(std::abs(s - 1.0) <= 1e-12);
                    }
                }
                CHECK(std::abs(total - 1.0) <= 1e-12);
            }
        }
}

TEST_CASE("window posterior from the running predictor reproduces the running filter") {
    std::mt19937_64 g(34);
    for (int run = 0; run < 20; ++run) {
        const auto m = testing_support::random_model(g, 3, 2, 2, 0.05);
        const std::size_t N = 1 + run % 4;
        std::discrete_distribution<std::size_t> pick_u({0.5, 0.5});
        std::vector<Belief> predictors;  // predictor of X_t before y_t
        std::vector<std::size_t> ys, us;
        Belief pred = Belief::uniform(3);
        std::size_t x = g() % 3;
        Belief filt;
        for (std::size_t t = 0; t < 25; ++t) {
            predictors.push_back(pred);
            const std::vector<double> qrow(m.observation.row(x).begin(), m.observation.row(x).end());
            const std::size_t y = std::discrete_distribution<std::size_t>(qrow.begin(), qrow.end())(g);
            ys.push_back(y);
            filt = *measurement_update(m, pred, y).belief;
            if (t >= N) {
                WindowState w;
                w.obs.assign(ys.end() - static_cast<long>(N) - 1, ys.end());
                w.actions.assign(us.end() - static_cast<long>(N), us.end());
                const auto r = window_posterior(m, predictors[t - N], w);
                for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs((*r.belief)[i] - filt[i]) < 1e-12);
            }
            const std::size_t u = pick_u(g);
            us.push_back(u);
            const std::vector<double> trow(m.transition[u].row(x).begin(), m.transition[u].row(x).end());
            x = std::discrete_distribution<std::size_t>(trow.begin(), trow.end())(g);
            pred = predictor_step(m, filt, u);
        }
    }
}

TEST_CASE("filter step contracts the Hilbert metric on example 3") {
    const double eps = 0.3;
    const auto m = build_example3(eps);
    std::mt19937_64 g(35);
    for (std::size_t u = 0; u < 2; ++u) {
        const double eu = mixing_coefficient(m.transition[u]).epsilon;
        const double a = eu * eu * eps;
        const double r = (1 - a) / (1 + a);
        for (std::size_t y = 0; y < 2; ++y)
            for (int t = 0; t < 500; ++t) {
                const Belief mu(testing_support::random_simplex(g, 3, 0.01));
                const Belief nu(testing_support::random_simplex(g, 3, 0.01));
                const auto fm = filter_step(m, mu, u, y), fn = filter_step(m, nu, u, y);
                CHECK(hilbert_metric(fm.belief->probs(), fn.belief->probs()) <=
                      r * hilbert_metric(mu.probs(), nu.probs()) + 1e-12);
            }
    }
}
