#pragma once

#include "slidewin/model.hpp"

#include <optional>

namespace slidewin {

/// Machine repair problem. State/observation/action sets are {0, 1};
/// x = 1 means the machine works, u = 1 means it is being repaired.
///
///   P(x'=1 | x=0, u=1) = kappa     (repair succeeds)
///   P(x'=0 | x=1, u=0) = theta     (breakdown)
///   P(x'=0 | x=0, u=0) = 1         (a broken machine stays broken)
///   P(x'=1 | x=1, u=1) = 1         (a machine under repair keeps working)
///   P(y != x) = eps
///
/// Cost: c(0,0) = E, c(0,1) = R + E, c(1,0) = 0, c(1,1) = R.
FinitePomdp build_machine_repair(double eps, double kappa, double theta, double R, double E,
                                 double beta);

/// Four-state example with two actions and a two-letter channel whose
/// Dobrushin coefficient is 2 eps. `cost` defaults to c(x,u) = x/3 + u/4.
FinitePomdp build_example1(double eps, double beta = 0.8,
                           std::optional<Matrix> cost = std::nullopt);

/// Three-state example whose kernels are mixing (coefficients sqrt(1/3) and
/// 1/2) and whose channel is bounded below by eps. `cost` defaults to
/// c(x,u) = x/2 + u/4.
FinitePomdp build_example3(double eps, double beta = 0.8,
                           std::optional<Matrix> cost = std::nullopt);

/// Dispatches to build_example1 / build_example3. Throws ModelError for any
/// other id.
FinitePomdp build_example(int id, double eps, double beta = 0.8);

struct Example2Options {
    double sigma = 1.0;
    std::size_t grid_size = 20;
    std::size_t p = 1;  // actions are {0, ..., p}
    double beta = 0.8;
    double channel_eps = 0.1;
    std::optional<Matrix> observation;  // overrides the threshold channel
};

/// Grid discretization of the truncated-Gaussian random walk on [0, 1]:
/// T(.|x,u) is N(x+u, sigma^2) restricted to [0, 1], integrated over
/// `grid_size` uniform cells with midpoint representatives. Cost x - u,
/// metric |x - x'| on midpoints. The default channel reports whether the
/// state exceeds 1/2, flipped with probability channel_eps.
FinitePomdp build_example2(const Example2Options& opts);

/// TV-Lipschitz constant of the continuous kernel: sqrt(2) / (sigma sqrt(pi)).
double example2_continuous_alpha(double sigma);

/// Standard normal CDF, Abramowitz-Stegun 26.2.17 (absolute error < 7.5e-8).
double normal_cdf(double x);

} // namespace slidewin
