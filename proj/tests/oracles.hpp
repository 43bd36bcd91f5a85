#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls the library code it checks.

#include "slidewin/matrix.hpp"
#include "slidewin/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace testing_support {

using slidewin::Matrix;

// Partition-based definition of the Dobrushin coefficient: min over row pairs
// and over all partitions {A_i} of the columns of sum_i min(K(x,A_i), K(y,A_i)).
inline double dobrushin_by_partitions(const Matrix& k) {
    const std::size_t n = k.cols();
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> block(n, 0);
    // enumerate set partitions via restricted growth strings
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t blocks) {
        if (i == n) {
            for (std::size_t x = 0; x < k.rows(); ++x)
                for (std::size_t y = x + 1; y < k.rows(); ++y) {
                    double s = 0.0;
                    for (std::size_t b = 0; b < blocks; ++b) {
                        double mx = 0.0, my = 0.0;
                        for (std::size_t j = 0; j < n; ++j)
                            if (block[j] == b) {
                                mx += k(x, j);
                                my += k(y, j);
                            }
                        s += std::min(mx, my);
                    }
                    best = std::min(best, s);
                }
            return;
        }
        for (std::size_t b = 0; b <= blocks; ++b) {
            block[i] = b;
            rec(i + 1, std::max(blocks, b + 1));
        }
    };
    rec(0, 0);
    return k.rows() < 2 ? 1.0 : best;
}

// Largest eps for a given reference measure, checking every subset A.
inline double mixing_eps_for(const Matrix& k, const std::vector<double>& lambda) {
    const std::size_t n = k.cols();
    double eps = std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        double la = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (mask >> j & 1u) la += lambda[j];
        for (std::size_t x = 0; x < k.rows(); ++x) {
            double ka = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (mask >> j & 1u) ka += k(x, j);
            if (la <= 0.0 || ka <= 0.0) return 0.0;
            eps = std::min({eps, ka / la, la / ka});
        }
    }
    return eps;
}

// Coarse grid over each lambda_j followed by coordinate pattern search in log space.
inline double mixing_grid_search(const Matrix& k) {
    const std::size_t n = k.cols();
    std::vector<double> lo(n), hi(n);
    for (std::size_t j = 0; j < n; ++j) {
        lo[j] = hi[j] = k(0, j);
        for (std::size_t x = 1; x < k.rows(); ++x) {
            lo[j] = std::min(lo[j], k(x, j));
            hi[j] = std::max(hi[j], k(x, j));
        }
    }
    const int G = 9;
    std::vector<double> lam(n), best_lam(n);
    double best = -1.0;
    std::vector<int> idx(n, 0);
    while (true) {
        for (std::size_t j = 0; j < n; ++j) lam[j] = lo[j] + (hi[j] - lo[j]) * idx[j] / (G - 1);
        const double e = mixing_eps_for(k, lam);
        if (e > best) {
            best = e;
            best_lam = lam;
        }
        std::size_t j = 0;
        while (j < n && ++idx[j] == G) idx[j++] = 0;
        if (j == n) break;
    }
    double step = 0.5;
    while (step > 1e-8) {
        bool improved = false;
        for (std::size_t j = 0; j < n; ++j)
            for (double dir : {1.0, -1.0}) {
                auto trial = best_lam;
                trial[j] *= std::exp(dir * step);
                const double e = mixing_eps_for(k, trial);
                if (e > best) {
                    best = e;
                    best_lam = trial;
                    improved = true;
                }
            }
        if (!improved) step /= 2;
    }
    return best;
}

inline std::vector<double> normalized(std::vector<double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    for (double& x : v) x /= s;
    return v;
}


struct MonteCarlo {
    double mean = 0.0;
    double se = 0.0;
};

// Discounted cost of a window policy estimated by rollouts of the true POMDP.
// The window is filled by N exploration steps from X_0 ~ prior, then the
// policy (indexed by oldest-first window code) runs for a horizon that leaves
// at most `truncation` of discounted cost.
inline MonteCarlo rollout_window_policy(const slidewin::FinitePomdp& m, std::size_t N,
                                        const std::vector<std::size_t>& actions,
                                        std::span<const double> prior, std::span<const double> expl,
                                        int episodes, std::uint64_t seed, double truncation) {
    double cinf = 0.0;
    for (double c : m.cost.data()) cinf = std::max(cinf, std::abs(c));
    const int H = cinf == 0.0 ? 1
                              : static_cast<int>(std::ceil(std::log(truncation * (1 - m.discount) / cinf) /
                                                           std::log(m.discount)));
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto draw = [&](std::span<const double> p) {
        const double r = U(g);
        double acc = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            acc += p[i];
            if (r < acc) return i;
        }
        return p.size() - 1;
    };
    auto encode = [&](const std::vector<std::size_t>& ys, const std::vector<std::size_t>& us) {
        std::size_t code = 0;
        for (std::size_t y : ys) code = code * m.n_obs + y;
        for (std::size_t u : us) code = code * m.n_actions + u;
        return code;
    };
    double sum = 0.0, sum2 = 0.0;
    for (int e = 0; e < episodes; ++e) {
        std::size_t x = draw(prior);
        std::vector<std::size_t> ys{draw(m.observation.row(x))}, us;
        for (std::size_t k = 0; k < N; ++k) {
            const std::size_t u = draw(expl);
            x = draw(m.transition[u].row(x));
            us.push_back(u);
            ys.push_back(draw(m.observation.row(x)));
        }
        double ret = 0.0, disc = 1.0;
        for (int t = 0; t < H; ++t) {
            const std::size_t u = actions[encode(ys, us)];
            ret += disc * m.c(x, u);
            disc *= m.discount;
            x = draw(m.transition[u].row(x));
            ys.erase(ys.begin());
            ys.push_back(draw(m.observation.row(x)));
            if (N > 0) {
                us.erase(us.begin());
                us.push_back(u);
            }
        }
        sum += ret;
        sum2 += ret * ret;
    }
    MonteCarlo out;
    out.mean = sum / episodes;
    out.se = std::sqrt(std::max(0.0, sum2 / episodes - out.mean * out.mean) / episodes);
    return out;
}

} // namespace testing_support
