#include "slidewin/model.hpp"

#include "slidewin/error.hpp"
#include "slidewin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace slidewin {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols()) throw ModelError("ragged matrix rows");
        std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
    std::vector<std::vector<double>> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i].assign(row(i).begin(), row(i).end());
    return out;
}

Belief::Belief(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw ModelError("belief over an empty state set");
    for (double& p : probs_) {
        if (!std::isfinite(p)) throw ModelError("belief has a non-finite entry");
        if (p < 0.0) {
            if (p < -1e-15) throw ModelError("belief has a negative entry");
            p = 0.0;
        }
    }
    const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
    if (!(total > 0.0)) throw ModelError("belief has zero total mass");
    for (double& p : probs_) p /= total;
}

Belief Belief::uniform(std::size_t n) { return Belief(std::vector<double>(n, 1.0)); }

Belief Belief::dirac(std::size_t n, std::size_t at) {
    std::vector<double> v(n, 0.0);
    v.at(at) = 1.0;
    return Belief(std::move(v));
}

Matrix discrete_metric(std::size_t n) {
    Matrix d(n, n, 1.0);
    for (std::size_t i = 0; i < n; ++i) d(i, i) = 0.0;
    return d;
}

namespace {

constexpr double kRowTol = 1e-12;

void check_stochastic_rows(const Matrix& m, const std::string& tensor,
                           std::optional<std::size_t> action, std::vector<Violation>& out) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double sum = 0.0;
        bool bad_entry = false;
        for (double v : m.row(i)) {
            if (!std::isfinite(v) || v < 0.0 || v > 1.0) bad_entry = true;
            sum += v;
        }
        std::vector<std::size_t> idx;
        if (action) idx.push_back(*action);
        idx.push_back(i);
        if (bad_entry) {
            out.push_back({tensor, idx, 0.0, "entry outside [0,1] or not finite"});
        }
        if (!(std::abs(sum - 1.0) <= kRowTol)) {
            std::ostringstream msg;
            msg << "row sums to " << sum;
            out.push_back({tensor, idx, sum - 1.0, msg.str()});
        }
    }
}

} // namespace

std::vector<Violation> validate(const FinitePomdp& m) {
    std::vector<Violation> out;
    const std::size_t n = m.n_states;
    if (n == 0 || m.n_obs == 0 || m.n_actions == 0) {
        out.push_back({"shape", {}, 0.0, "empty state, observation or action set"});
        return out;
    }
    if (m.transition.size() != m.n_actions) {
        out.push_back({"transition", {}, 0.0, "one kernel per action required"});
        return out;
    }
    for (std::size_t u = 0; u < m.n_actions; ++u) {
        if (m.transition[u].rows() != n || m.transition[u].cols() != n) {
            out.push_back({"transition", {u}, 0.0, "kernel must be n_states x n_states"});
            return out;
        }
    }
    if (m.observation.rows() != n || m.observation.cols() != m.n_obs) {
        out.push_back({"observation", {}, 0.0, "channel must be n_states x n_obs"});
        return out;
    }
    if (m.cost.rows() != n || m.cost.cols() != m.n_actions) {
        out.push_back({"cost", {}, 0.0, "cost must be n_states x n_actions"});
        return out;
    }
    if (m.metric.rows() != n || m.metric.cols() != n) {
        out.push_back({"metric", {}, 0.0, "metric must be n_states x n_states"});
        return out;
    }

    for (std::size_t u = 0; u < m.n_actions; ++u)
        check_stochastic_rows(m.transition[u], "transition", u, out);
    check_stochastic_rows(m.observation, "observation", std::nullopt, out);

    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t u = 0; u < m.n_actions; ++u)
            if (!std::isfinite(m.cost(x, u)))
                out.push_back({"cost", {x, u}, 0.0, "cost is not finite"});

    if (!(m.discount > 0.0 && m.discount < 1.0))
        out.push_back({"discount", {}, m.discount, "discount must lie in (0,1)"});

    const Matrix& d = m.metric;
    for (std::size_t i = 0; i < n; ++i) {
        if (d(i, i) != 0.0) out.push_back({"metric", {i, i}, d(i, i), "nonzero diagonal"});
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(d(i, j)) || d(i, j) < 0.0)
                out.push_back({"metric", {i, j}, d(i, j), "negative or non-finite distance"});
            if (i != j && d(i, j) == 0.0)
                out.push_back({"metric", {i, j}, 0.0, "distinct states at distance zero"});
            if (i < j && std::abs(d(i, j) - d(j, i)) > 1e-12)
                out.push_back({"metric", {i, j}, d(i, j) - d(j, i), "not symmetric"});
        }
    }
    if (n <= 64) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k) {
                    const double excess = d(i, k) - d(i, j) - d(j, k);
                    if (excess > 1e-12)
                        out.push_back({"metric", {i, j, k}, excess, "triangle inequality fails"});
                }
    }
    return out;
}

void require_valid(const FinitePomdp& model) {
    const auto violations = validate(model);
    if (violations.empty()) return;
    const auto& v = violations.front();
    std::ostringstream msg;
    msg << "invalid model '" << model.name << "': " << v.tensor;
    if (!v.index.empty()) {
        msg << '[';
        for (std::size_t k = 0; k < v.index.size(); ++k) msg << (k ? "," : "") << v.index[k];
        msg << ']';
    }
    msg << ": " << v.message;
    if (violations.size() > 1) msg << " (+" << violations.size() - 1 << " more)";
    throw ModelError(msg.str());
}

ModelConstants compute_constants(const FinitePomdp& m) {
    if (m.n_states < 1) throw ModelError("compute_constants: model has no states");
    ModelConstants k;
    const std::size_t n = m.n_states;
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t u = 0; u < m.n_actions; ++u)
            k.c_inf = std::max(k.c_inf, std::abs(m.c(x, u)));
        for (std::size_t x2 = 0; x2 < n; ++x2) {
            k.D = std::max(k.D, m.d(x, x2));
            if (x2 == x) continue;
            const double dist = m.d(x, x2);
            for (std::size_t u = 0; u < m.n_actions; ++u) {
                const double tv = tv_distance(m.transition[u].row(x), m.transition[u].row(x2));
                k.alpha = std::max(k.alpha, tv / dist);
                k.K1 = std::max(k.K1, std::abs(m.c(x, u) - m.c(x2, u)) / dist);
            }
        }
    }
    return k;
}

Belief stationary_distribution(const FinitePomdp& m, std::span<const double> exploration) {
    const std::size_t n = m.n_states;
    if (exploration.size() != m.n_actions)
        throw ModelError("exploration distribution has the wrong length");
    Matrix P(n, n);
    for (std::size_t u = 0; u < m.n_actions; ++u)
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t x2 = 0; x2 < n; ++x2) P(x, x2) += exploration[u] * m.T(u, x, x2);

    // Rows of A: (P^T - I) with the last equation replaced by sum(pi) = 1.
    Matrix A(n, n + 1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) A(i, j) = P(j, i) - (i == j ? 1.0 : 0.0);
    for (std::size_t j = 0; j < n; ++j) A(n - 1, j) = 1.0;
    A(n - 1, n) = 1.0;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(A(r, col)) > std::abs(A(pivot, col))) pivot = r;
        if (std::abs(A(pivot, col)) < 1e-13)
            throw ModelError("stationary distribution is not unique (reducible chain)");
        if (pivot != col)
            for (std::size_t j = 0; j <= n; ++j) std::swap(A(pivot, j), A(col, j));
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = A(r, col) / A(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j <= n; ++j) A(r, j) -= f * A(col, j);
        }
    }
    std::vector<double> pi(n);
    for (std::size_t i = 0; i < n; ++i) pi[i] = A(i, n) / A(i, i);
    for (double& p : pi)
        if (p < 0.0 && p > -1e-12) p = 0.0;
    return Belief(std::move(pi));
}

FinitePomdp permute_states(const FinitePomdp& m, std::span<const std::size_t> perm) {
    const std::size_t n = m.n_states;
    if (perm.size() != n) throw ModelError("permutation has the wrong length");
    FinitePomdp out = m;
    for (std::size_t u = 0; u < m.n_actions; ++u)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                out.transition[u](i, j) = m.transition[u](perm[i], perm[j]);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t y = 0; y < m.n_obs; ++y) out.observation(i, y) = m.observation(perm[i], y);
        for (std::size_t u = 0; u < m.n_actions; ++u) out.cost(i, u) = m.cost(perm[i], u);
        for (std::size_t j = 0; j < n; ++j) out.metric(i, j) = m.metric(perm[i], perm[j]);
    }
    return out;
}

} // namespace slidewin
