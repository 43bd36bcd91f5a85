// Command-line front end: validate, solve, qlearn, stability, experiment.

#include "slidewin/error.hpp"
#include "slidewin/experiment.hpp"
#include "slidewin/model_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace slidewin;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNonConvergence = 3;

struct Options {
    std::string config;
    std::string model;
    std::string out;
    unsigned jobs = 1;
    std::optional<std::uint64_t> seed;
};

ExperimentConfig load(const Options& o) {
    if (o.config.empty()) throw ConfigError("--config", "is required");
    ExperimentConfig cfg = load_config(o.config);
    if (!o.out.empty()) cfg.out_dir = o.out;
    if (o.seed) cfg.seed = *o.seed;
    return cfg;
}

fs::path prepare_out(const ExperimentConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw ConfigError("out_dir", "cannot create " + cfg.out_dir.string() + ": " + ec.message());
    return cfg.out_dir;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("out_dir", "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

int cmd_validate(const Options& o) {
    fs::path path = o.model;
    if (path.empty()) {
        const ExperimentConfig cfg = load(o);
        if (cfg.model != "file") {
            resolve(cfg);
            std::cout << "builtin model '" << cfg.model << "' is valid\n";
            return kExitOk;
        }
        path = cfg.model_path;
    }
    std::ifstream in(path);
    if (!in) throw ConfigError("--model", "cannot open " + path.string());
    FinitePomdp m;
    try {
        m = load_model(path);
    } catch (const ModelError& e) {
        std::cout << "invalid: " << e.what() << '\n';
        return kExitConfig;
    }
    const ModelConstants k = compute_constants(m);
    std::cout << "valid: " << m.name << " (" << m.n_states << " states, " << m.n_obs << " observations, "
              << m.n_actions << " actions)\n"
              << "D=" << format_number(k.D) << " alpha=" << format_number(k.alpha)
              << " K1=" << format_number(k.K1) << " c_inf=" << format_number(k.c_inf) << '\n';
    return kExitOk;
}

int cmd_solve(const Options& o) {
    const ExperimentConfig cfg = load(o);
    const ResolvedSetup s = resolve(cfg);
    const fs::path dir = prepare_out(cfg);
    json out = json::array();
    for (std::size_t N : cfg.N_list) {
        const SolveRecord r = solve_window(s, N, cfg);
        out.push_back({{"N", N},
                       {"j_tilde", r.j_tilde},
                       {"sweeps", r.vi.iterations},
                       {"unreachable_windows", r.unreachable_windows},
                       {"values", r.vi.values},
                       {"policy", policy_to_json(r.vi.policy, s.model.n_obs, s.model.n_actions)}});
        std::cout << "N=" << N << " J~=" << format_number(r.j_tilde) << " sweeps=" << r.vi.iterations << '\n';
    }
    write_json(dir / (cfg.case_name + "_solve.json"), out);
    return kExitOk;
}

int cmd_qlearn(const Options& o) {
    const ExperimentConfig cfg = load(o);
    const ResolvedSetup s = resolve(cfg);
    const fs::path dir = prepare_out(cfg);
    const std::uint64_t steps = cfg.qlearning_steps > 0 ? cfg.qlearning_steps : 1'000'000;
    for (std::size_t N : cfg.N_list) {
        const WindowMdp wm = build_window_mdp(s.model, N, s.z_star, cfg.state_cap);
        const ValueIterationResult vi = value_iteration(wm, s.model.discount, cfg.tol);
        for (std::size_t k = 0; k < std::max<std::size_t>(1, cfg.qlearning_seeds); ++k) {
            QLearningOptions qo;
            qo.steps = steps;
            qo.seed = cfg.seed + k;
            qo.exploration = s.exploration;
            const auto r = run_q_learning(s.model, wm, qo, std::span<const double>(vi.q));
            json j = qtable_to_json(r.table);
            j["policy"] = policy_to_json(r.policy, s.model.n_obs, s.model.n_actions);
            j["diagnostics"] = {{"starved_pairs", r.diagnostics.starved_pairs},
                                {"min_visits", r.diagnostics.min_visits},
                                {"bellman_residual", r.diagnostics.bellman_residual},
                                {"gap_to_value_iteration", *r.diagnostics.gap_to_reference},
                                {"policy_matches_value_iteration", r.policy.actions == vi.policy.actions}};
            write_json(dir / (cfg.case_name + "_qlearn_N" + std::to_string(N) + "_seed" +
                              std::to_string(qo.seed) + ".json"),
                       j);
            std::cout << "N=" << N << " seed=" << qo.seed
                      << " gap=" << format_number(*r.diagnostics.gap_to_reference)
                      << " starved=" << r.diagnostics.starved_pairs << '\n';
        }
    }
    return kExitOk;
}

int cmd_stability(const Options& o) {
    const ExperimentConfig cfg = load(o);
    const ResolvedSetup s = resolve(cfg);
    const fs::path dir = prepare_out(cfg);
    json out = json::array();
    for (std::size_t N : cfg.N_list) {
        const StabilityReport r = stability_report(s.model, N, s.z_star, s.priors, o.jobs, cfg.sequence_cap);
        out.push_back(report_to_json(r));
        std::cout << "N=" << N << " LN_w1=" << format_number(r.terms.LN_w1)
                  << " LTV_N=" << format_number(r.terms.LTV_N)
                  << " bound_w1=" << format_number(r.geometric.bound)
                  << " bound_hilbert=" << format_number(r.bound_hilbert) << '\n';
    }
    write_json(dir / (cfg.case_name + "_stability.json"), out);
    return kExitOk;
}

int cmd_experiment(const Options& o) {
    const ExperimentConfig cfg = load(o);
    const fs::path dir = prepare_out(cfg);
    const ExperimentResult res = run_experiment(cfg, o.jobs);
    std::ofstream csv(dir / (cfg.case_name + ".csv"));
    if (!csv) throw ConfigError("out_dir", "cannot write the CSV");
    write_csv(res.rows, csv);
    write_json(dir / (cfg.case_name + ".json"), experiment_to_json(cfg, res));
    write_csv(res.rows, std::cout);
    return res.nonconverged ? kExitNonConvergence : kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sliding-window POMDP approximation toolkit"};
    app.require_subcommand(1);
    Options o;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "flat JSON experiment config");
        sub->add_option("--out", o.out, "output directory (overrides out_dir)");
        sub->add_option("--jobs", o.jobs, "parallel work items")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "base seed (overrides seed)");
    };
    auto* validate = app.add_subcommand("validate", "check a model file");
    add_common(validate);
    validate->add_option("--model", o.model, "JSON model file");
    auto* solve = app.add_subcommand("solve", "value iteration and exact evaluation per N");
    add_common(solve);
    auto* qlearn = app.add_subcommand("qlearn", "tabular Q-learning per N and seed");
    add_common(qlearn);
    auto* stability = app.add_subcommand("stability", "empirical stability terms and bounds per N");
    add_common(stability);
    auto* experiment = app.add_subcommand("experiment", "full study, CSV plus JSON sidecar");
    add_common(experiment);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }
    for (auto* sub : app.get_subcommands())
        if (sub->count("--seed")) o.seed = seed;

    try {
        if (*validate) return cmd_validate(o);
        if (*solve) return cmd_solve(o);
        if (*qlearn) return cmd_qlearn(o);
        if (*stability) return cmd_stability(o);
        if (*experiment) return cmd_experiment(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ModelError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const CapacityError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ConvergenceError& e) {
        std::cerr << "non-convergence: " << e.what() << '\n';
        return kExitNonConvergence;
    }
    return kExitConfig;
}
