#include "slidewin/metrics.hpp"

#include "slidewin/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace slidewin {

double tv_distance(std::span<const double> mu, std::span<const double> nu) {
    if (mu.size() != nu.size()) throw ModelError("tv_distance: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) s += std::abs(mu[i] - nu[i]);
    return s;
}

namespace {

constexpr double kMassTol = 1e-15;
constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

double transport_w1(std::span<const double> mu, std::span<const double> nu, const Matrix& d) {
    const std::size_t n = mu.size();
    if (nu.size() != n || d.rows() != n || d.cols() != n)
        throw ModelError("transport_w1: size mismatch");

    // Node layout: sources 0..n-1, sinks n..2n-1.
    std::vector<double> supply(n), demand(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double common = std::min(mu[i], nu[i]);
        supply[i] = std::max(0.0, mu[i] - common);
        demand[i] = std::max(0.0, nu[i] - common);
    }
    Matrix flow(n, n);
    std::vector<double> dist(2 * n);
    std::vector<long> pred(2 * n);

    const long max_augment = static_cast<long>(4 * n * n + 16);
    for (long iter = 0; iter < max_augment; ++iter) {
        bool any_supply = false;
        for (std::size_t i = 0; i < n; ++i) {
            dist[i] = supply[i] > kMassTol ? 0.0 : kInf;
            any_supply = any_supply || supply[i] > kMassTol;
            pred[i] = -1;
        }
        if (!any_supply) break;
        for (std::size_t j = 0; j < n; ++j) {
            dist[n + j] = kInf;
            pred[n + j] = -1;
        }

        // Bellman-Ford on the residual bipartite graph.
        for (std::size_t pass = 0; pass < 2 * n; ++pass) {
            bool changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                if (dist[i] == kInf) continue;
                for (std::size_t j = 0; j < n; ++j) {
                    const double cand = dist[i] + d(i, j);
                    if (cand < dist[n + j] - 1e-15) {
                        dist[n + j] = cand;
                        pred[n + j] = static_cast<long>(i);
                        changed = true;
                    }
                }
            }
            for (std::size_t j = 0; j < n; ++j) {
                if (dist[n + j] == kInf) continue;
                for (std::size_t i = 0; i < n; ++i) {
                    if (flow(i, j) <= kMassTol) continue;
                    const double cand = dist[n + j] - d(i, j);
                    if (cand < dist[i] - 1e-15) {
                        dist[i] = cand;
                        pred[i] = static_cast<long>(n + j);
                        changed = true;
                    }
                }
            }
            if (!changed) break;
        }

        std::size_t best = n;
        for (std::size_t j = 0; j < n; ++j)
            if (demand[j] > kMassTol && dist[n + j] < kInf &&
                (best == n || dist[n + j] < dist[n + best]))
                best = j;
        if (best == n) break;

        // Walk back to the source to find the bottleneck.
        double push = demand[best];
        long node = static_cast<long>(n + best);
        while (true) {
            const long p = pred[node];
            if (p < 0) {
                push = std::min(push, supply[static_cast<std::size_t>(node)]);
                break;
            }
            if (node < static_cast<long>(n)) {  // reverse arc sink p -> source node
                push = std::min(push, flow(static_cast<std::size_t>(node),
                                           static_cast<std::size_t>(p) - n));
            }
            node = p;
        }
        node = static_cast<long>(n + best);
        while (true) {
            const long p = pred[node];
            if (p < 0) {
                supply[static_cast<std::size_t>(node)] -= push;
                break;
            }
            if (node >= static_cast<long>(n)) {
                flow(static_cast<std::size_t>(p), static_cast<std::size_t>(node) - n) += push;
            } else {
                flow(static_cast<std::size_t>(node), static_cast<std::size_t>(p) - n) -= push;
            }
            node = p;
        }
        demand[best] -= push;
    }

    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) cost += std::max(0.0, flow(i, j)) * d(i, j);
    return cost;
}

GroundMetric::GroundMetric(Matrix metric) : metric_(std::move(metric)) {
    const std::size_t n = metric_.rows();
    for (double v : metric_.data()) diameter_ = std::max(diameter_, v);
    if (n <= 1) {
        kind_ = Kind::Discrete;
        return;
    }
    const double tol = 1e-12 * std::max(1.0, diameter_);

    bool discrete = true;
    for (std::size_t i = 0; i < n && discrete; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && std::abs(metric_(i, j) - diameter_) > tol) {
                discrete = false;
                break;
            }
    if (discrete) {
        kind_ = Kind::Discrete;
        return;
    }

    // The point farthest from any point is an endpoint of the line.
    std::size_t end = 0;
    for (std::size_t j = 1; j < n; ++j)
        if (metric_(0, j) > metric_(0, end)) end = j;
    std::vector<double> coord(n);
    for (std::size_t j = 0; j < n; ++j) coord[j] = metric_(end, j);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (std::abs(std::abs(coord[i] - coord[j]) - metric_(i, j)) > tol) return;

    kind_ = Kind::Line;
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::sort(order_.begin(), order_.end(),
              [&](std::size_t a, std::size_t b) { return coord[a] < coord[b]; });
    coordinate_.resize(n);
    for (std::size_t k = 0; k < n; ++k) coordinate_[k] = coord[order_[k]];
}

double GroundMetric::w1(std::span<const double> mu, std::span<const double> nu) const {
    switch (kind_) {
    case Kind::Discrete:
        return 0.5 * diameter_ * tv_distance(mu, nu);
    case Kind::Line: {
        if (mu.size() != order_.size() || nu.size() != order_.size())
            throw ModelError("w1: length mismatch");
        double cdf_gap = 0.0, total = 0.0;
        for (std::size_t k = 0; k + 1 < order_.size(); ++k) {
            cdf_gap += mu[order_[k]] - nu[order_[k]];
            total += std::abs(cdf_gap) * (coordinate_[k + 1] - coordinate_[k]);
        }
        return total;
    }
    case Kind::General:
        break;
    }
    return transport_w1(mu, nu, metric_);
}

double w1_distance(std::span<const double> mu, std::span<const double> nu, const Matrix& metric) {
    return GroundMetric(metric).w1(mu, nu);
}

double dobrushin(const Matrix& kernel) {
    for (std::size_t i = 0; i < kernel.rows(); ++i) {
        double s = 0.0;
        for (double v : kernel.row(i)) {
            if (v < 0.0 || !std::isfinite(v)) throw ModelError("dobrushin: invalid kernel entry");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-9) throw ModelError("dobrushin: kernel row is not stochastic");
    }
    double delta = 1.0;
    for (std::size_t x = 0; x < kernel.rows(); ++x)
        for (std::size_t x2 = x + 1; x2 < kernel.rows(); ++x2) {
            double overlap = 0.0;
            for (std::size_t j = 0; j < kernel.cols(); ++j)
                overlap += std::min(kernel(x, j), kernel(x2, j));
            delta = std::min(delta, overlap);
        }
    return std::clamp(delta, 0.0, 1.0);
}

double hilbert_metric(std::span<const double> mu, std::span<const double> nu) {
    if (mu.size() != nu.size()) throw ModelError("hilbert_metric: length mismatch");
    constexpr double kSupportTol = 1e-14;
    double max_ratio = 0.0, min_ratio = kInf;
    bool any = false;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (mu[i] < 0.0 || nu[i] < 0.0) throw ModelError("hilbert_metric: negative entry");
        const bool in_mu = mu[i] >= kSupportTol;
        const bool in_nu = nu[i] >= kSupportTol;
        if (in_mu != in_nu) return kInf;
        if (!in_mu) continue;
        any = true;
        const double r = mu[i] / nu[i];
        max_ratio = std::max(max_ratio, r);
        min_ratio = std::min(min_ratio, r);
    }
    if (!any) return 0.0;
    return std::log(max_ratio / min_ratio);
}

MixingCoefficient mixing_coefficient(const Matrix& kernel) {
    MixingCoefficient out;
    out.reference.assign(kernel.cols(), 0.0);
    double eps2 = 1.0;
    for (std::size_t j = 0; j < kernel.cols(); ++j) {
        double lo = kInf, hi = 0.0;
        for (std::size_t x = 0; x < kernel.rows(); ++x) {
            lo = std::min(lo, kernel(x, j));
            hi = std::max(hi, kernel(x, j));
        }
        if (hi <= 0.0) continue;
        out.reference[j] = std::sqrt(lo * hi);
        eps2 = std::min(eps2, lo / hi);
    }
    out.epsilon = std::sqrt(eps2);
    return out;
}

std::vector<double> push_forward(std::span<const double> mu, const Matrix& kernel) {
    if (mu.size() != kernel.rows()) throw ModelError("push_forward: size mismatch");
    std::vector<double> out(kernel.cols(), 0.0);
    for (std::size_t i = 0; i < kernel.rows(); ++i) {
        if (mu[i] == 0.0) continue;
        for (std::size_t j = 0; j < kernel.cols(); ++j) out[j] += mu[i] * kernel(i, j);
    }
    return out;
}

} // namespace slidewin
