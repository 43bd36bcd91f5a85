#pragma once

#include "slidewin/rng.hpp"
#include "slidewin/window_mdp.hpp"

#include <json.hpp>

#include <optional>

namespace slidewin {

/// One simulated step after the window is full.
struct Transition {
    std::size_t code = 0;       // window before the action
    std::size_t action = 0;
    double cost = 0.0;          // realized c(x, u)
    std::size_t next_code = 0;  // window after the next observation
};

/// Simulates the true POMDP from X_0 ~ prior with i.i.d. exploration actions
/// and maintains the sliding window. The first N steps only fill the window.
class WindowSimulator {
public:
    WindowSimulator(const FinitePomdp& model, std::size_t N, const Belief& prior,
                    std::span<const double> exploration, Philox4x32 rng);

    std::size_t code() const noexcept { return code_; }
    std::size_t state() const noexcept { return x_; }

    Transition step();
    Transition step(std::size_t u);

private:
    const FinitePomdp& model_;
    WindowCodec codec_;
    std::vector<double> exploration_;
    Philox4x32 rng_;
    std::size_t x_ = 0;
    std::size_t code_ = 0;
};

std::vector<Transition> simulate(const FinitePomdp& model, std::size_t N, const Belief& prior,
                                 std::span<const double> exploration, std::size_t steps,
                                 std::uint64_t seed);

struct QTable {
    std::size_t N = 0;
    std::size_t n_actions = 0;
    std::uint64_t seed = 0;
    std::uint64_t steps = 0;
    std::vector<double> q;              // [code][u]
    std::vector<std::uint64_t> visits;  // [code][u]
};

enum class CostSignal {
    Model,   // exact window cost from the WindowMdp
    Online,  // running average of realized stage costs
};

struct QLearningOptions {
    std::uint64_t steps = 1'000'000;
    std::uint64_t seed = 0;
    std::vector<double> exploration;  // empty means uniform
    CostSignal cost = CostSignal::Model;
};

struct QLearningDiagnostics {
    std::size_t starved_pairs = 0;  // (I,u) pairs never visited
    std::uint64_t min_visits = 0;
    double bellman_residual = 0.0;  // sup |Q - (c + beta E min Q')| on the window MDP
    std::optional<double> gap_to_reference;
};

struct QLearningResult {
    QTable table;
    WindowPolicy policy;
    QLearningDiagnostics diagnostics;
};

/// Tabular Q-learning on window states. The n-th visit to (I,u) uses the
/// rate 1/(1+n); Q starts at 0. The process starts from X_0 ~ wm.z_star.
/// `reference_q` (layout [code][u]) is only used for the reported gap.
QLearningResult run_q_learning(const FinitePomdp& model, const WindowMdp& wm,
                               const QLearningOptions& opts,
                               std::optional<std::span<const double>> reference_q = std::nullopt);

/// Running mean of realized stage costs per (I,u).
struct CostEstimate {
    std::size_t n_actions = 0;
    std::vector<double> mean;           // [code][u], 0 where unvisited
    std::vector<std::uint64_t> count;   // [code][u]

    bool visited(std::size_t code, std::size_t u) const { return count[code * n_actions + u] > 0; }
};

CostEstimate estimate_costs_online(const FinitePomdp& model, std::size_t N,
                                   std::span<const Transition> trajectory);

nlohmann::json qtable_to_json(const QTable& t);

} // namespace slidewin
