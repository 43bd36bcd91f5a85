#pragma once

#include "slidewin/matrix.hpp"
#include "slidewin/model.hpp"

#include <random>
#include <vector>

namespace testing_support {

inline std::vector<double> random_simplex(std::mt19937_64& g, std::size_t n, double floor = 0.0) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> v(n);
    double s = 0.0;
    for (double& x : v) {
        x = e(g) + floor;
        s += x;
    }
    for (double& x : v) x /= s;
    return v;
}

// Random probability vector with some entries forced to zero.
inline std::vector<double> random_sparse_simplex(std::mt19937_64& g, std::size_t n) {
    std::bernoulli_distribution keep(0.6);
    std::vector<double> v = random_simplex(g, n);
    bool any = false;
    for (double& x : v) {
        if (!keep(g)) x = 0.0;
        any = any || x > 0.0;
    }
    if (!any) v[g() % n] = 1.0;
    double s = 0.0;
    for (double x : v) s += x;
    for (double& x : v) x /= s;
    return v;
}

inline slidewin::Matrix random_kernel(std::mt19937_64& g, std::size_t rows, std::size_t cols,
                                      double floor = 0.0) {
    slidewin::Matrix k(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto r = random_simplex(g, cols, floor);
        for (std::size_t j = 0; j < cols; ++j) k(i, j) = r[j];
    }
    return k;
}

inline slidewin::FinitePomdp random_model(std::mt19937_64& g, std::size_t nx, std::size_t ny,
                                          std::size_t nu, double floor = 0.0) {
    slidewin::FinitePomdp m;
    m.name = "random";
    m.n_states = nx;
    m.n_obs = ny;
    m.n_actions = nu;
    for (std::size_t u = 0; u < nu; ++u) m.transition.push_back(random_kernel(g, nx, nx, floor));
    m.observation = random_kernel(g, nx, ny, floor);
    std::uniform_real_distribution<double> c(0.0, 1.0);
    m.cost = slidewin::Matrix(nx, nu);
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t u = 0; u < nu; ++u) m.cost(x, u) = c(g);
    m.discount = 0.8;
    m.metric = slidewin::discrete_metric(nx);
    return m;
}

inline slidewin::Matrix identity(std::size_t n) {
    slidewin::Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

} // namespace testing_support
