#include "slidewin/builders.hpp"

#include "slidewin/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace slidewin {

namespace {

void require_open_unit(double v, const char* name) {
    if (!(v > 0.0 && v < 1.0))
        throw ModelError(std::string(name) + " must lie in (0,1), got " + std::to_string(v));
}

Matrix two_letter_channel(const std::vector<int>& emits_one, double eps) {
    Matrix q(emits_one.size(), 2);
    for (std::size_t x = 0; x < emits_one.size(); ++x) {
        q(x, emits_one[x] ? 1 : 0) = 1.0 - eps;
        q(x, emits_one[x] ? 0 : 1) = eps;
    }
    return q;
}

Matrix default_cost(std::size_t n, std::size_t k) {
    Matrix c(n, k);
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t u = 0; u < k; ++u)
            c(x, u) = static_cast<double>(x) / static_cast<double>(n - 1) + 0.25 * static_cast<double>(u);
    return c;
}

} // namespace

FinitePomdp build_machine_repair(double eps, double kappa, double theta, double R, double E,
                                 double beta) {
    require_open_unit(eps, "eps");
    require_open_unit(kappa, "kappa");
    require_open_unit(theta, "theta");
    require_open_unit(beta, "beta");
    if (!(R >= 0.0) || !(E >= 0.0)) throw ModelError("R and E must be nonnegative");

    FinitePomdp m;
    m.name = "machine_repair";
    m.n_states = m.n_obs = m.n_actions = 2;
    // u = 0: no repair
    m.transition.push_back(Matrix::from_rows({{1.0, 0.0}, {theta, 1.0 - theta}}));
    // u = 1: repair
    m.transition.push_back(Matrix::from_rows({{1.0 - kappa, kappa}, {0.0, 1.0}}));
    m.observation = Matrix::from_rows({{1.0 - eps, eps}, {eps, 1.0 - eps}});
    m.cost = Matrix::from_rows({{E, R + E}, {0.0, R}});
    m.discount = beta;
    m.metric = discrete_metric(2);
    return m;
}

FinitePomdp build_example1(double eps, double beta, std::optional<Matrix> cost) {
    if (!(eps > 0.0 && eps < 0.5)) throw ModelError("example 1 requires eps in (0, 1/2)");
    require_open_unit(beta, "beta");
    FinitePomdp m;
    m.name = "example1";
    m.n_states = 4;
    m.n_obs = 2;
    m.n_actions = 2;
    m.transition.push_back(Matrix::from_rows({{1.0 / 2, 1.0 / 3, 1.0 / 6, 0.0},
                                              {0.0, 1.0 / 2, 1.0 / 6, 1.0 / 3},
                                              {1.0 / 2, 1.0 / 6, 0.0, 1.0 / 3},
                                              {1.0 / 3, 1.0 / 3, 1.0 / 3, 0.0}}));
    m.transition.push_back(Matrix::from_rows({{1.0 / 3, 1.0 / 2, 1.0 / 6, 0.0},
                                              {0.0, 1.0 / 3, 1.0 / 2, 1.0 / 6},
                                              {1.0 / 2, 1.0 / 3, 0.0, 1.0 / 6},
                                              {1.0 / 3, 1.0 / 3, 1.0 / 3, 0.0}}));
    m.observation = two_letter_channel({0, 0, 1, 1}, eps);
    m.cost = cost ? *cost : default_cost(4, 2);
    m.discount = beta;
    m.metric = discrete_metric(4);
    return m;
}

FinitePomdp build_example3(double eps, double beta, std::optional<Matrix> cost) {
    if (!(eps > 0.0 && eps < 0.5)) throw ModelError("example 3 requires eps in (0, 1/2)");
    require_open_unit(beta, "beta");
    FinitePomdp m;
    m.name = "example3";
    m.n_states = 3;
    m.n_obs = 2;
    m.n_actions = 2;
    m.transition.push_back(Matrix::from_rows({{1.0 / 2, 1.0 / 3, 1.0 / 6},
                                              {1.0 / 3, 1.0 / 2, 1.0 / 6},
                                              {1.0 / 2, 1.0 / 6, 1.0 / 3}}));
    m.transition.push_back(Matrix::from_rows({{1.0 / 3, 1.0 / 2, 1.0 / 6},
                                              {1.0 / 6, 1.0 / 3, 1.0 / 2},
                                              {2.0 / 3, 1.0 / 6, 1.0 / 6}}));
    m.observation = two_letter_channel({0, 0, 1}, eps);
    m.cost = cost ? *cost : default_cost(3, 2);
    m.discount = beta;
    m.metric = discrete_metric(3);
    return m;
}

FinitePomdp build_example(int id, double eps, double beta) {
    switch (id) {
    case 1: return build_example1(eps, beta);
    case 3: return build_example3(eps, beta);
    default: throw ModelError("unknown example id " + std::to_string(id) + " (expected 1 or 3)");
    }
}

double normal_cdf(double x) {
    // Abramowitz & Stegun 26.2.17.
    constexpr double p = 0.2316419;
    constexpr double b1 = 0.319381530, b2 = -0.356563782, b3 = 1.781477937,
                     b4 = -1.821255978, b5 = 1.330274429;
    const double ax = std::abs(x);
    const double t = 1.0 / (1.0 + p * ax);
    const double pdf = std::exp(-0.5 * ax * ax) / std::sqrt(2.0 * std::numbers::pi);
    const double tail = pdf * t * (b1 + t * (b2 + t * (b3 + t * (b4 + t * b5))));
    return x >= 0.0 ? 1.0 - tail : tail;
}

double example2_continuous_alpha(double sigma) {
    return std::numbers::sqrt2 / (sigma * std::sqrt(std::numbers::pi));
}

FinitePomdp build_example2(const Example2Options& o) {
    if (!(o.sigma > 0.0)) throw ModelError("example 2 requires sigma > 0");
    if (o.grid_size < 2) throw ModelError("example 2 requires grid_size >= 2");
    if (o.p < 1) throw ModelError("example 2 requires p >= 1");
    require_open_unit(o.beta, "beta");

    const std::size_t g = o.grid_size;
    const double h = 1.0 / static_cast<double>(g);
    std::vector<double> mid(g);
    for (std::size_t i = 0; i < g; ++i) mid[i] = (static_cast<double>(i) + 0.5) * h;

    FinitePomdp m;
    m.name = "example2";
    m.n_states = g;
    m.n_actions = o.p + 1;
    for (std::size_t u = 0; u <= o.p; ++u) {
        Matrix k(g, g);
        for (std::size_t x = 0; x < g; ++x) {
            const double mean = mid[x] + static_cast<double>(u);
            const double norm = normal_cdf((1.0 - mean) / o.sigma) - normal_cdf((0.0 - mean) / o.sigma);
            double total = 0.0;
            if (norm > 1e-9) {
                for (std::size_t j = 0; j < g; ++j) {
                    const double lo = static_cast<double>(j) * h, hi = lo + h;
                    k(x, j) = std::max(0.0, normal_cdf((hi - mean) / o.sigma) -
                                                normal_cdf((lo - mean) / o.sigma)) / norm;
                    total += k(x, j);
                }
            } else {
                // Far tail: the CDF difference loses all precision, so weight
                // cells by the density at their midpoints relative to the nearest one.
                const double ref = mid[g - 1];
                for (std::size_t j = 0; j < g; ++j) {
                    const double a = (mid[j] - mean) / o.sigma, b = (ref - mean) / o.sigma;
                    k(x, j) = std::exp(-0.5 * (a * a - b * b));
                    total += k(x, j);
                }
            }
            for (std::size_t j = 0; j < g; ++j) k(x, j) /= total;
        }
        m.transition.push_back(std::move(k));
    }

    if (o.observation) {
        if (o.observation->rows() != g) throw ModelError("example 2 channel must have grid_size rows");
        m.observation = *o.observation;
    } else {
        if (!(o.channel_eps >= 0.0 && o.channel_eps <= 0.5))
            throw ModelError("example 2 channel eps must lie in [0, 1/2]");
        std::vector<int> emits(g);
        for (std::size_t i = 0; i < g; ++i) emits[i] = mid[i] > 0.5 ? 1 : 0;
        m.observation = two_letter_channel(emits, o.channel_eps);
    }
    m.n_obs = m.observation.cols();

    m.cost = Matrix(g, m.n_actions);
    for (std::size_t x = 0; x < g; ++x)
        for (std::size_t u = 0; u < m.n_actions; ++u) m.cost(x, u) = mid[x] - static_cast<double>(u);
    m.discount = o.beta;
    m.metric = Matrix(g, g);
    for (std::size_t i = 0; i < g; ++i)
        for (std::size_t j = 0; j < g; ++j) m.metric(i, j) = std::abs(mid[i] - mid[j]);
    return m;
}

} // namespace slidewin
