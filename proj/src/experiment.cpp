#include "slidewin/experiment.hpp"

#include "slidewin/builders.hpp"
#include "slidewin/error.hpp"
#include "slidewin/metrics.hpp"
#include "slidewin/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <ostream>
#include <set>

namespace slidewin {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownKeys = {
    "case", "model", "model_path", "eps", "kappa", "theta", "R", "E", "beta", "sigma",
    "grid_size", "p", "channel_eps", "N_list", "z_star", "initial_prior", "exploration",
    "prior_set", "j_star", "tol", "qlearning_steps", "qlearning_seeds", "seed", "state_cap",
    "sequence_cap", "out_dir"};

template <class T>
T get(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(key, "has the wrong type");
    }
}

double get_number(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(key, "must be a number");
    const double v = j[key].get<double>();
    if (!std::isfinite(v)) throw ConfigError(key, "must be finite");
    return v;
}

std::uint64_t get_count(const json& j, const std::string& key, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer() || j[key].get<long long>() < 0)
        throw ConfigError(key, "must be a nonnegative integer");
    return j[key].get<std::uint64_t>();
}

std::variant<std::string, std::vector<double>> get_distribution(const json& j, const std::string& key,
                                                                std::variant<std::string, std::vector<double>> fallback) {
    if (!j.contains(key)) return fallback;
    if (j[key].is_string()) return j[key].get<std::string>();
    if (j[key].is_array()) {
        std::vector<double> v;
        for (const auto& e : j[key]) {
            if (!e.is_number()) throw ConfigError(key, "entries must be numbers");
            v.push_back(e.get<double>());
        }
        return v;
    }
    throw ConfigError(key, "must be a string or an array of probabilities");
}

Belief belief_from(const std::vector<double>& v, std::size_t n, const std::string& key) {
    if (v.size() != n) throw ConfigError(key, "needs " + std::to_string(n) + " entries");
    try {
        return Belief(v);
    } catch (const ModelError& e) {
        throw ConfigError(key, e.what());
    }
}

double median(std::vector<double> v) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

} // namespace

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!kKnownKeys.count(key)) throw ConfigError(key, "unknown key");

    ExperimentConfig c;
    c.model = get<std::string>(j, "model", c.model);
    if (c.model != "machine_repair" && c.model != "example1" && c.model != "example2" &&
        c.model != "example3" && c.model != "file")
        throw ConfigError("model", "unknown model '" + c.model + "'");
    c.case_name = get<std::string>(j, "case", c.model);
    c.model_path = get<std::string>(j, "model_path", "");
    c.eps = get_number(j, "eps", c.eps);
    c.kappa = get_number(j, "kappa", c.kappa);
    c.theta = get_number(j, "theta", c.theta);
    c.R = get_number(j, "R", c.R);
    c.E = get_number(j, "E", c.E);
    c.beta = get_number(j, "beta", c.beta);
    c.sigma = get_number(j, "sigma", c.sigma);
    c.grid_size = static_cast<std::size_t>(get_count(j, "grid_size", c.grid_size));
    c.p = static_cast<std::size_t>(get_count(j, "p", c.p));
    c.channel_eps = get_number(j, "channel_eps", c.channel_eps);

    if (!j.contains("N_list")) throw ConfigError("N_list", "is required");
    if (!j["N_list"].is_array()) throw ConfigError("N_list", "must be an array");
    for (const auto& e : j["N_list"]) {
        if (!e.is_number_integer() || e.get<long long>() < 0)
            throw ConfigError("N_list", "entries must be nonnegative integers");
        c.N_list.push_back(e.get<std::size_t>());
    }
    if (c.N_list.empty()) throw ConfigError("N_list", "must not be empty");
    for (std::size_t i = 1; i < c.N_list.size(); ++i)
        if (c.N_list[i] <= c.N_list[i - 1]) throw ConfigError("N_list", "must be strictly ascending");

    c.z_star = get_distribution(j, "z_star", c.z_star);
    c.initial_prior = get_distribution(j, "initial_prior", c.initial_prior);
    if (const auto* mode = std::get_if<std::string>(&c.z_star); mode && *mode != "stationary" && *mode != "uniform")
        throw ConfigError("z_star", "must be stationary, uniform or a probability vector");
    if (const auto* mode = std::get_if<std::string>(&c.initial_prior); mode && *mode != "z_star" && *mode != "uniform")
        throw ConfigError("initial_prior", "must be z_star, uniform or a probability vector");
    if (j.contains("exploration")) {
        const auto e = get_distribution(j, "exploration", std::vector<double>{});
        if (!std::holds_alternative<std::vector<double>>(e)) throw ConfigError("exploration", "must be an array");
        c.exploration = std::get<std::vector<double>>(e);
    }
    c.prior_set = get<std::string>(j, "prior_set", c.prior_set);
    if (c.prior_set != "default" && c.prior_set != "vertices" && c.prior_set != "vertices+uniform")
        throw ConfigError("prior_set", "must be default, vertices or vertices+uniform");
    if (j.contains("j_star")) {
        if (j["j_star"].is_string()) {
            if (j["j_star"].get<std::string>() != "min") throw ConfigError("j_star", "must be \"min\" or a number");
        } else {
            c.j_star = get_number(j, "j_star", 0.0);
        }
    }
    c.tol = get_number(j, "tol", c.tol);
    if (!(c.tol > 0.0)) throw ConfigError("tol", "must be positive");
    c.qlearning_steps = get_count(j, "qlearning_steps", c.qlearning_steps);
    c.qlearning_seeds = static_cast<std::size_t>(get_count(j, "qlearning_seeds", c.qlearning_seeds));
    c.seed = get_count(j, "seed", c.seed);
    c.state_cap = get_count(j, "state_cap", c.state_cap);
    c.sequence_cap = get_count(j, "sequence_cap", c.sequence_cap);
    c.out_dir = get<std::string>(j, "out_dir", c.out_dir.string());
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open " + path.string());
    try {
        return config_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
    }
}

ResolvedSetup resolve(const ExperimentConfig& c) {
    ResolvedSetup s;
    try {
        if (c.model == "machine_repair")
            s.model = build_machine_repair(c.eps, c.kappa, c.theta, c.R, c.E, c.beta);
        else if (c.model == "example1")
            s.model = build_example1(c.eps, c.beta);
        else if (c.model == "example3")
            s.model = build_example3(c.eps, c.beta);
        else if (c.model == "example2")
            s.model = build_example2({c.sigma, c.grid_size, c.p, c.beta, c.channel_eps, std::nullopt});
        else if (c.model == "file") {
            if (c.model_path.empty()) throw ConfigError("model_path", "is required when model = file");
            if (!std::filesystem::exists(c.model_path)) throw ConfigError("model_path", "file does not exist");
            s.model = load_model(c.model_path);
        } else
            throw ConfigError("model", "unknown model '" + c.model + "'");
    } catch (const ModelError& e) {
        throw ConfigError(c.model == "file" ? "model_path" : "model", e.what());
    }
    const std::size_t n = s.model.n_states;

    s.exploration = c.exploration.empty()
                        ? std::vector<double>(s.model.n_actions, 1.0 / static_cast<double>(s.model.n_actions))
                        : c.exploration;
    if (s.exploration.size() != s.model.n_actions) throw ConfigError("exploration", "needs one entry per action");
    double esum = 0.0;
    for (double p : s.exploration) {
        if (!(p > 0.0)) throw ConfigError("exploration", "every action needs positive probability");
        esum += p;
    }
    if (std::abs(esum - 1.0) > 1e-9) throw ConfigError("exploration", "must sum to 1");

    if (const auto* mode = std::get_if<std::string>(&c.z_star)) {
        if (*mode == "stationary") {
            try {
                s.z_star = stationary_distribution(s.model, s.exploration);
            } catch (const ModelError& e) {
                throw ConfigError("z_star", e.what());
            }
        } else if (*mode == "uniform") {
            s.z_star = Belief::uniform(n);
        } else {
            throw ConfigError("z_star", "must be stationary, uniform or a probability vector");
        }
    } else {
        s.z_star = belief_from(std::get<std::vector<double>>(c.z_star), n, "z_star");
    }

    if (const auto* mode = std::get_if<std::string>(&c.initial_prior)) {
        if (*mode == "z_star") s.initial_prior = s.z_star;
        else if (*mode == "uniform") s.initial_prior = Belief::uniform(n);
        else throw ConfigError("initial_prior", "must be z_star, uniform or a probability vector");
    } else {
        s.initial_prior = belief_from(std::get<std::vector<double>>(c.initial_prior), n, "initial_prior");
    }

    if (c.prior_set == "vertices") s.priors = make_prior_set(n, false, std::nullopt);
    else if (c.prior_set == "vertices+uniform") s.priors = make_prior_set(n, true, std::nullopt);
    else s.priors = default_prior_set(n, s.z_star);
    return s;
}

SolveRecord solve_window(const ResolvedSetup& s, std::size_t N, const ExperimentConfig& cfg) {
    SolveRecord rec;
    rec.N = N;
    const WindowMdp wm = build_window_mdp(s.model, N, s.z_star, cfg.state_cap);
    rec.unreachable_windows = wm.unreachable_count();
    rec.vi = value_iteration(wm, s.model.discount, cfg.tol);
    const PolicyEvaluation ev = evaluate_window_policy(s.model, wm, rec.vi.policy, cfg.tol);
    const auto D = initial_window_distribution(s.model, N, s.initial_prior, s.exploration);
    rec.j_tilde = expected_value(D, ev);
    return rec;
}

namespace {

ExperimentRow run_one(const ResolvedSetup& s, const ExperimentConfig& cfg, std::size_t N) {
    ExperimentRow row;
    row.case_name = cfg.case_name;
    row.N = N;
    try {
        const WindowMdp wm = build_window_mdp(s.model, N, s.z_star, cfg.state_cap);
        const ValueIterationResult vi = value_iteration(wm, s.model.discount, cfg.tol);
        row.vi_iterations = vi.iterations;
        const PolicyEvaluation ev = evaluate_window_policy(s.model, wm, vi.policy, cfg.tol);
        const auto D = initial_window_distribution(s.model, N, s.initial_prior, s.exploration);
        row.j_tilde = expected_value(D, ev);

        for (std::size_t k = 0; k < cfg.qlearning_seeds && cfg.qlearning_steps > 0; ++k) {
            QLearningOptions o;
            o.steps = cfg.qlearning_steps;
            o.seed = cfg.seed + k;
            o.exploration = s.exploration;
            const auto q = run_q_learning(s.model, wm, o, std::span<const double>(vi.q));
            row.qlearn_gaps.push_back(*q.diagnostics.gap_to_reference);
            row.qlearn_policy_match.push_back(q.policy.actions == vi.policy.actions);
        }
        row.qlearn_gap = median(row.qlearn_gaps);

        StabilityReport rep = stability_report(s.model, N, s.z_star, s.priors, 1, cfg.sequence_cap);
        row.LN_w1 = rep.terms.LN_w1;
        row.LTV_N = rep.terms.LTV_N;
        row.bound_w1 = rep.geometric.bound;
        row.bound_hilbert = rep.bound_hilbert;
        row.rate = rep.geometric.rate;
        row.report = std::move(rep);
    } catch (const ConvergenceError& e) {
        row.status = "nonconverged";
        row.nonconverged = true;
    } catch (const CapacityError& e) {
        row.status = "capacity";
    }
    return row;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned jobs) {
    const ResolvedSetup s = resolve(cfg);
    ExperimentResult res;
    res.rows.resize(cfg.N_list.size());
    jobs = std::max(1u, jobs);
    for (std::size_t start = 0; start < cfg.N_list.size(); start += jobs) {
        std::vector<std::future<ExperimentRow>> batch;
        const std::size_t end = std::min(cfg.N_list.size(), start + jobs);
        for (std::size_t i = start; i < end; ++i)
            batch.push_back(std::async(jobs == 1 ? std::launch::deferred : std::launch::async,
                                       run_one, std::cref(s), std::cref(cfg), cfg.N_list[i]));
        for (std::size_t i = start; i < end; ++i) res.rows[i] = batch[i - start].get();
    }

    double j_star = kNaN;
    if (cfg.j_star) {
        j_star = *cfg.j_star;
    } else {
        for (const auto& r : res.rows)
            if (std::isfinite(r.j_tilde)) j_star = std::isfinite(j_star) ? std::min(j_star, r.j_tilde) : r.j_tilde;
    }
    for (auto& r : res.rows) {
        r.j_star_est = j_star;
        if (std::isfinite(r.j_tilde) && std::isfinite(j_star)) r.error = r.j_tilde - j_star;
        res.nonconverged = res.nonconverged || r.nonconverged;
    }
    return res;
}

std::string format_number(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_csv(const std::vector<ExperimentRow>& rows, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.case_name << ',' << r.N << ',' << format_number(r.j_tilde) << ','
            << format_number(r.j_star_est) << ',' << format_number(r.error) << ','
            << format_number(r.LN_w1) << ',' << format_number(r.LTV_N) << ','
            << format_number(r.bound_w1) << ',' << format_number(r.bound_hilbert) << ','
            << format_number(r.rate) << ',' << format_number(r.qlearn_gap) << ',' << r.status << '\n';
    }
}

json experiment_to_json(const ExperimentConfig& cfg, const ExperimentResult& res) {
    json rows = json::array();
    for (const auto& r : res.rows) {
        json q = json::array();
        for (std::size_t k = 0; k < r.qlearn_gaps.size(); ++k)
            q.push_back({{"seed", cfg.seed + k}, {"gap", r.qlearn_gaps[k]},
                         {"policy_matches_value_iteration", static_cast<bool>(r.qlearn_policy_match[k])}});
        rows.push_back({{"N", r.N},
                        {"status", r.status},
                        {"j_tilde", std::isfinite(r.j_tilde) ? json(r.j_tilde) : json(nullptr)},
                        {"value_iteration_sweeps", r.vi_iterations},
                        {"qlearning", q},
                        {"stability", r.report ? report_to_json(*r.report) : json(nullptr)}});
    }
    return json{{"case", cfg.case_name},
                {"model", cfg.model},
                {"N_list", cfg.N_list},
                {"j_star_mode", cfg.j_star ? "fixed" : "min"},
                {"scaling", "all values unscaled"},
                {"rows", rows}};
}

} // namespace slidewin
