#pragma once

#include "slidewin/filtering.hpp"

#include <json.hpp>

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace slidewin {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Finite stand-in for the sup over priors.
struct PriorSet {
    std::vector<Belief> priors;
    std::vector<std::string> labels;
    std::string description;
};

/// Dirac measures on every state, optionally with the uniform prior and z*.
PriorSet make_prior_set(std::size_t n_states, bool uniform, const std::optional<Belief>& z_star);

/// Vertices, uniform and z*.
PriorSet default_prior_set(std::size_t n_states, const Belief& z_star);

/// Empirical filter-stability terms for one window length. Every quantity is
/// a max over the prior set and all open-loop action sequences u_0..u_{N-1}.
///
///   LN_w1          sum_y P^z(y|u) W1(psi(z,I), psi(z*,I)) over windows possible under z and z*
///   LTV_N          max TV(psi(z,I), psi(z*,I)) over windows possible under both
///   L_TV_expected  sum_y P^z(y|u) TV(psi(z,I), psi(z*,I)), same support as LN_w1
///
/// Windows possible under z but not under z* are kept out of LN_w1. Their
/// W1 mass against z* (the default posterior for such windows) is reported
/// in LN_w1_unreachable.
struct EmpiricalTerms {
    std::size_t N = 0;
    double LN_w1 = 0.0;
    double LTV_N = 0.0;
    double L_TV_expected = 0.0;
    double LN_w1_unreachable = 0.0;
    std::size_t worst_prior = 0;            // argmax of LN_w1
    std::vector<std::size_t> worst_actions; // argmax of LN_w1
    std::uint64_t leaves = 0;               // (prior, u-seq, y-seq) triples visited
};

inline constexpr std::uint64_t kDefaultSequenceCap = 200'000'000;

/// Throws CapacityError when |priors| * n_actions^N * n_obs^(N+1) exceeds `cap`.
/// Action sequences are split across `jobs` threads; totals do not depend on it.
EmpiricalTerms empirical_terms(const FinitePomdp& model, std::size_t N, const Belief& z_star,
                               const PriorSet& priors, std::uint64_t cap = kDefaultSequenceCap,
                               unsigned jobs = 1);

double empirical_LN_w1(const FinitePomdp& model, std::size_t N, const Belief& z_star,
                       const PriorSet& priors);
double empirical_LTV_uniform(const FinitePomdp& model, std::size_t N, const Belief& z_star,
                             const PriorSet& priors);

/// (D/2) * rate^N with rate = alpha D (2 - delta_Q) / 2.
struct GeometricBound {
    double rate = 0.0;
    double prefactor = 0.0;
    double bound = 0.0;
    bool contracting = false;
};

GeometricBound bound_w1_geometric(const ModelConstants& k, double delta_q, std::size_t N);

/// Hilbert-metric route: r = max_u (1 - eps_u^2 eps) / (1 + eps_u^2 eps) with
/// eps the smallest channel entry and eps_u the mixing coefficient of T_u;
/// K = (2 / log 3) * max h(Z_1, Z_1*) over the prior set and all one-step
/// histories (y_0, u_0, y_1). bound = r^(N-1) K for N >= 1.
struct HilbertBound {
    bool applicable = false;
    std::string reason;
    double obs_epsilon = 0.0;
    std::vector<double> action_epsilon;
    double r = kNaN;
    double K = kNaN;

    double at(std::size_t N) const;  // NaN when not applicable or N = 0
};

HilbertBound bound_hilbert(const FinitePomdp& model, const Belief& z_star, const PriorSet& priors);

struct LossBound {
    bool applicable = false;
    double value_loss = kNaN;
    double policy_loss = kNaN;
    std::string note;
};

/// Closed form from the geometric rate:
/// value (K1 (1-beta) + alpha beta |c|) (D/2) rate^N, policy twice that.
LossBound loss_bound_geometric(const ModelConstants& k, double beta, double delta_q, std::size_t N);

/// Series form (K1 + alpha beta |c| / (1-beta)) S, policy twice that, with
/// S = sum_{t<=T} beta^t L_t + beta^(T+1) L_T / (1-beta); the last entry of
/// `L` is taken to hold for every later t.
LossBound loss_bound_series(const ModelConstants& k, double beta, std::span<const double> L);

/// 2 |c| / (1-beta)^2 * r^(N-1) K on the value function; no policy form.
LossBound loss_bound_hilbert(double c_inf, double beta, const HilbertBound& h, std::size_t N);

/// alpha_z = (3 - 2 delta(Q)) (1 - delta~(T)). When delta~ is not supplied it
/// is replaced by min_u dobrushin(T_u).
struct UniformTvConstant {
    double alpha_z = 0.0;
    double delta_q = 0.0;
    double delta_t = 0.0;
    bool delta_t_supplied = false;
};

UniformTvConstant uniform_tv_constant(const FinitePomdp& model, std::optional<double> delta_t = std::nullopt);

/// value ((alpha_z-1) beta + 1) / ((1-beta)^2 (1 - alpha_z beta)) |c| L,
/// policy 2 (1 + (alpha_z-1) beta) / ((1-beta)^3 (1 - alpha_z beta)) |c| L;
/// applicable only when alpha_z beta < 1.
LossBound loss_bound_uniform_tv(double c_inf, double beta, double alpha_z, double ltv);

struct AssumptionCheck {
    std::string name;
    bool passed = false;
    std::string witness;
};

struct StabilityReport {
    std::size_t N = 0;
    EmpiricalTerms terms;
    ModelConstants constants;
    double delta_q = 0.0;
    GeometricBound geometric;
    HilbertBound hilbert;
    double bound_hilbert = kNaN;
    LossBound loss_geometric;
    LossBound loss_hilbert;
    LossBound loss_uniform_tv;
    std::string prior_set;
    std::vector<AssumptionCheck> checks;
};

StabilityReport stability_report(const FinitePomdp& model, std::size_t N, const Belief& z_star,
                                 const PriorSet& priors, unsigned jobs = 1,
                                 std::uint64_t cap = kDefaultSequenceCap);

nlohmann::json report_to_json(const StabilityReport& r);

} // namespace slidewin
