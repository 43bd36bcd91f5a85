#pragma once

#include "slidewin/qlearning.hpp"
#include "slidewin/stability.hpp"
#include "slidewin/window_mdp.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace slidewin {

/// Flat JSON experiment configuration. Keys:
///
///   case            label written to the CSV (default: model name)
///   model           machine_repair | example1 | example2 | example3 | file
///   model_path      JSON model file, required when model = file
///   eps kappa theta R E beta       machine-repair parameters
///   sigma grid_size p channel_eps  example-2 parameters (eps is used by examples 1 and 3)
///   N_list          nonempty ascending list of window lengths
///   z_star          "stationary" | "uniform" | [probabilities]
///   initial_prior   "z_star" | "uniform" | [probabilities]; prior of X_0 for J~
///   exploration     [probabilities] or omitted for uniform
///   prior_set       "default" | "vertices" | "vertices+uniform"
///   j_star          "min" (smallest J~ over N_list) or a number
///   tol             value-iteration tolerance
///   qlearning_steps 0 disables Q-learning
///   qlearning_seeds number of seeds, run with base seed + k
///   seed            base seed
///   state_cap sequence_cap          enumeration guards
///   out_dir         output directory
///
/// Unknown keys are rejected.
struct ExperimentConfig {
    std::string case_name;
    std::string model = "machine_repair";
    std::filesystem::path model_path;
    double eps = 0.3, kappa = 0.3, theta = 0.3, R = 2.0, E = 1.0, beta = 0.8;
    double sigma = 1.0;
    std::size_t grid_size = 20, p = 1;
    double channel_eps = 0.1;
    std::vector<std::size_t> N_list;
    std::variant<std::string, std::vector<double>> z_star = std::string("stationary");
    std::variant<std::string, std::vector<double>> initial_prior = std::string("z_star");
    std::vector<double> exploration;
    std::string prior_set = "default";
    std::optional<double> j_star;  // nullopt means min over N_list
    double tol = 1e-10;
    std::uint64_t qlearning_steps = 0;
    std::size_t qlearning_seeds = 1;
    std::uint64_t seed = 0;
    std::uint64_t state_cap = kDefaultStateCap;
    std::uint64_t sequence_cap = kDefaultSequenceCap;
    std::filesystem::path out_dir = "out";
};

/// Throws ConfigError naming the offending key.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Model, z*, initial prior, exploration and prior set resolved from a config.
struct ResolvedSetup {
    FinitePomdp model;
    Belief z_star;
    Belief initial_prior;
    std::vector<double> exploration;
    PriorSet priors;
};

ResolvedSetup resolve(const ExperimentConfig& cfg);

inline constexpr const char* kCsvHeader =
    "case,N,j_tilde,j_star_est,error,LN_w1,LTV_N,bound_w1,bound_hilbert,rate,qlearn_gap,status";

struct ExperimentRow {
    std::string case_name;
    std::size_t N = 0;
    double j_tilde = kNaN;
    double j_star_est = kNaN;
    double error = kNaN;
    double LN_w1 = kNaN;
    double LTV_N = kNaN;
    double bound_w1 = kNaN;
    double bound_hilbert = kNaN;
    double rate = kNaN;
    double qlearn_gap = kNaN;  // median over seeds
    std::string status = "ok";

    std::optional<StabilityReport> report;
    std::vector<double> qlearn_gaps;
    std::vector<bool> qlearn_policy_match;
    long vi_iterations = 0;
    bool nonconverged = false;
};

struct ExperimentResult {
    std::vector<ExperimentRow> rows;
    bool nonconverged = false;
};

/// Runs every N in N_list (up to `jobs` at a time); rows come back in N order.
ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned jobs = 1);

std::string format_number(double v);  // %.12g, "nan" for non-finite
void write_csv(const std::vector<ExperimentRow>& rows, std::ostream& out);
nlohmann::json experiment_to_json(const ExperimentConfig& cfg, const ExperimentResult& res);

/// Per-N value-iteration solution and exact evaluation.
struct SolveRecord {
    std::size_t N = 0;
    ValueIterationResult vi;
    double j_tilde = kNaN;
    std::size_t unreachable_windows = 0;
};

SolveRecord solve_window(const ResolvedSetup& s, std::size_t N, const ExperimentConfig& cfg);

} // namespace slidewin
