#pragma once

#include "slidewin/matrix.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace slidewin {

/// Probability vector over the hidden states. Used for filters, predictors,
/// priors and the fixed reference predictor z*.
class Belief {
public:
    Belief() = default;

    /// Validates and normalizes `probs`. Entries down to -1e-15 are clamped
    /// to zero; anything more negative, non-finite, or a zero total throws
    /// ModelError.
    explicit Belief(std::vector<double> probs);

    static Belief uniform(std::size_t n);
    static Belief dirac(std::size_t n, std::size_t at);

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    std::span<const double> probs() const noexcept { return probs_; }
    const std::vector<double>& vector() const noexcept { return probs_; }

    friend bool operator==(const Belief&, const Belief&) = default;

private:
    std::vector<double> probs_;
};

/// Finite POMDP: per-action transition kernels, observation channel, stage
/// cost, discount and a ground metric on the state space.
///
/// Layout: transition[u](x, x') = T(x'|x,u), observation(x, y) = Q(y|x),
/// cost(x, u) = c(x,u), metric(x, x') = d(x,x').
struct FinitePomdp {
    std::string name;
    std::size_t n_states = 0;
    std::size_t n_obs = 0;
    std::size_t n_actions = 0;
    std::vector<Matrix> transition;
    Matrix observation;
    Matrix cost;
    double discount = 0.9;
    Matrix metric;

    double T(std::size_t u, std::size_t x, std::size_t x2) const { return transition[u](x, x2); }
    double Q(std::size_t x, std::size_t y) const { return observation(x, y); }
    double c(std::size_t x, std::size_t u) const { return cost(x, u); }
    double d(std::size_t x, std::size_t x2) const { return metric(x, x2); }
};

/// 0/1 metric on n points.
Matrix discrete_metric(std::size_t n);

/// One invariant violation found by validate().
struct Violation {
    std::string tensor;              // "transition", "observation", "metric", "discount", ...
    std::vector<std::size_t> index;  // e.g. {action, from_state}
    double residual = 0.0;
    std::string message;
};

/// Checks every model invariant: stochastic rows, discount in (0,1), metric
/// axioms (triangle inequality checked exhaustively when n_states <= 64).
/// Returns an empty list iff the model is valid.
std::vector<Violation> validate(const FinitePomdp& model);

/// Throws ModelError describing the first violation, if any.
void require_valid(const FinitePomdp& model);

/// Lipschitz-type constants of the model with respect to its metric.
struct ModelConstants {
    double D = 0.0;      // metric diameter
    double alpha = 0.0;  // TV-Lipschitz constant of the transition kernel
    double K1 = 0.0;     // Lipschitz constant of the stage cost
    double c_inf = 0.0;  // sup-norm of the cost
};

ModelConstants compute_constants(const FinitePomdp& model);

/// Stationary distribution of the state process when actions are drawn
/// i.i.d. from `exploration`. Solved directly from pi (P - I) = 0, sum(pi) = 1
/// on the averaged kernel P; throws ModelError when it is not unique.
Belief stationary_distribution(const FinitePomdp& model, std::span<const double> exploration);

/// Applies a state relabeling: new state i corresponds to old state perm[i].
FinitePomdp permute_states(const FinitePomdp& model, std::span<const std::size_t> perm);

} // namespace slidewin
