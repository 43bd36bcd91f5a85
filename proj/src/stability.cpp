#include "slidewin/stability.hpp"

#include "slidewin/error.hpp"
#include "slidewin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace slidewin {

using nlohmann::json;

PriorSet make_prior_set(std::size_t n_states, bool uniform, const std::optional<Belief>& z_star) {
    PriorSet ps;
    for (std::size_t x = 0; x < n_states; ++x) {
        ps.priors.push_back(Belief::dirac(n_states, x));
        ps.labels.push_back("dirac" + std::to_string(x));
    }
    ps.description = "vertices";
    if (uniform) {
        ps.priors.push_back(Belief::uniform(n_states));
        ps.labels.push_back("uniform");
        ps.description += "+uniform";
    }
    if (z_star) {
        ps.priors.push_back(*z_star);
        ps.labels.push_back("z_star");
        ps.description += "+z_star";
    }
    return ps;
}

PriorSet default_prior_set(std::size_t n_states, const Belief& z_star) {
    return make_prior_set(n_states, true, z_star);
}

namespace {

struct BranchTotals {
    double w1 = 0.0;
    double tv_expected = 0.0;
    double tv_max = 0.0;
    double unreachable = 0.0;
    std::uint64_t leaves = 0;
};

// Runs the filters from a prior and from z* side by side over every
// observation sequence for one fixed action sequence.
class PairWalker {
public:
    PairWalker(const FinitePomdp& m, const GroundMetric& gm, const Belief& z_star,
               const std::vector<std::size_t>& actions)
        : m_(m), gm_(gm), zs_(z_star), actions_(actions), N_(actions.size()) {}

    BranchTotals run(const Belief& prior) {
        out_ = {};
        walk(0, prior.vector(), 1.0, zs_.vector(), 1.0);
        return out_;
    }

private:
    void walk(std::size_t k, const std::vector<double>& a, double la, const std::vector<double>& b,
              double lb) {
        const std::size_t nx = m_.n_states;
        std::vector<double> pa(nx), pb(nx);
        for (std::size_t y = 0; y < m_.n_obs; ++y) {
            double sa = 0.0, sb = 0.0;
            for (std::size_t x = 0; x < nx; ++x) {
                pa[x] = a[x] * m_.Q(x, y);
                sa += pa[x];
                pb[x] = lb > 0.0 ? b[x] * m_.Q(x, y) : 0.0;
                sb += pb[x];
            }
            if (sa <= 0.0) continue;
            for (double& v : pa) v /= sa;
            if (sb > 0.0)
                for (double& v : pb) v /= sb;
            const double la2 = la * sa, lb2 = sb > 0.0 ? lb * sb : 0.0;
            if (k == N_) {
                leaf(pa, la2, pb, lb2);
                continue;
            }
            const Matrix& T = m_.transition[actions_[k]];
            walk(k + 1, push_forward(pa, T), la2, lb2 > 0.0 ? push_forward(pb, T) : pb, lb2);
        }
    }

    void leaf(const std::vector<double>& a, double la, const std::vector<double>& b, double lb) {
        ++out_.leaves;
        if (lb > 0.0) {
            const double tv = tv_distance(a, b);
            out_.w1 += la * gm_.w1(a, b);
            out_.tv_expected += la * tv;
            out_.tv_max = std::max(out_.tv_max, tv);
        } else {
            out_.unreachable += la * gm_.w1(a, zs_.probs());
        }
    }

    const FinitePomdp& m_;
    const GroundMetric& gm_;
    const Belief& zs_;
    const std::vector<std::size_t>& actions_;
    std::size_t N_;
    BranchTotals out_;
};

std::vector<std::size_t> action_digits(std::uint64_t idx, std::size_t n_actions, std::size_t N) {
    std::vector<std::size_t> u(N);
    for (std::size_t k = N; k-- > 0;) {
        u[k] = static_cast<std::size_t>(idx % n_actions);
        idx /= n_actions;
    }
    return u;
}

} // namespace

EmpiricalTerms empirical_terms(const FinitePomdp& model, std::size_t N, const Belief& z_star,
                               const PriorSet& priors, std::uint64_t cap, unsigned jobs) {
    if (priors.priors.empty()) throw ModelError("empirical_terms: prior set is empty");
    if (z_star.size() != model.n_states) throw ModelError("empirical_terms: z* has the wrong size");
    for (const Belief& p : priors.priors)
        if (p.size() != model.n_states) throw ModelError("empirical_terms: prior has the wrong size");
    const auto count = WindowCodec::count(model.n_obs, model.n_actions, N);
    const std::uint64_t np = priors.priors.size();
    if (!count || *count > cap / np)
        throw CapacityError("empirical_terms: N=" + std::to_string(N) + " exceeds the sequence cap of " +
                            std::to_string(cap));

    std::uint64_t n_seq = 1;
    for (std::size_t k = 0; k < N; ++k) n_seq *= model.n_actions;
    const std::size_t tasks = static_cast<std::size_t>(np * n_seq);
    std::vector<BranchTotals> results(tasks);
    const GroundMetric gm(model.metric);

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            const auto actions = action_digits(t % n_seq, model.n_actions, N);
            PairWalker walker(model, gm, z_star, actions);
            results[t] = walker.run(priors.priors[t / n_seq]);
        }
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(tasks)));
    if (jobs == 1) {
        work(0, tasks);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (tasks + jobs - 1) / jobs;
        for (unsigned j = 0; j < jobs; ++j) {
            const std::size_t b = j * chunk, e = std::min(tasks, b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
        for (auto& th : pool) th.join();
    }

    EmpiricalTerms out;
    out.N = N;
    std::size_t best = 0;
    for (std::size_t t = 0; t < tasks; ++t) {
        const BranchTotals& r = results[t];
        if (r.w1 > out.LN_w1) {
            out.LN_w1 = r.w1;
            best = t;
        }
        out.LTV_N = std::max(out.LTV_N, r.tv_max);
        out.L_TV_expected = std::max(out.L_TV_expected, r.tv_expected);
        out.LN_w1_unreachable = std::max(out.LN_w1_unreachable, r.unreachable);
        out.leaves += r.leaves;
    }
    out.worst_prior = best / n_seq;
    out.worst_actions = action_digits(best % n_seq, model.n_actions, N);
    return out;
}

double empirical_LN_w1(const FinitePomdp& model, std::size_t N, const Belief& z_star,
                       const PriorSet& priors) {
    return empirical_terms(model, N, z_star, priors).LN_w1;
}

double empirical_LTV_uniform(const FinitePomdp& model, std::size_t N, const Belief& z_star,
                             const PriorSet& priors) {
    return empirical_terms(model, N, z_star, priors).LTV_N;
}

GeometricBound bound_w1_geometric(const ModelConstants& k, double delta_q, std::size_t N) {
    if (!(delta_q >= 0.0 && delta_q <= 1.0)) throw ModelError("bound_w1_geometric: delta(Q) must lie in [0,1]");
    GeometricBound g;
    g.rate = k.alpha * k.D * (2.0 - delta_q) / 2.0;
    g.prefactor = k.D / 2.0;
    g.bound = g.prefactor * std::pow(g.rate, static_cast<double>(N));
    g.contracting = g.rate < 1.0;
    return g;
}

double HilbertBound::at(std::size_t N) const {
    if (!applicable || N == 0) return kNaN;
    return std::pow(r, static_cast<double>(N - 1)) * K;
}

HilbertBound bound_hilbert(const FinitePomdp& model, const Belief& z_star, const PriorSet& priors) {
    HilbertBound h;
    h.obs_epsilon = *std::min_element(model.observation.data().begin(), model.observation.data().end());
    for (const Matrix& t : model.transition) h.action_epsilon.push_back(mixing_coefficient(t).epsilon);

    std::ostringstream why;
    if (!(h.obs_epsilon > 0.0)) why << "observation channel has a zero entry; ";
    for (std::size_t u = 0; u < h.action_epsilon.size(); ++u)
        if (!(h.action_epsilon[u] > 0.0)) why << "transition kernel " << u << " is not mixing; ";
    h.reason = why.str();
    if (!h.reason.empty()) {
        h.reason.resize(h.reason.size() - 2);
        return h;
    }

    h.applicable = true;
    h.r = 0.0;
    for (double eu : h.action_epsilon) {
        const double a = eu * eu * h.obs_epsilon;
        h.r = std::max(h.r, (1.0 - a) / (1.0 + a));
    }
    double sup_h = 0.0;
    WindowState w{{0, 0}, {0}};
    for (const Belief& prior : priors.priors)
        for (std::size_t y0 = 0; y0 < model.n_obs; ++y0)
            for (std::size_t u0 = 0; u0 < model.n_actions; ++u0)
                for (std::size_t y1 = 0; y1 < model.n_obs; ++y1) {
                    w.obs = {y0, y1};
                    w.actions = {u0};
                    const auto a = window_posterior(model, prior, w);
                    const auto b = window_posterior(model, z_star, w);
                    if (!a.defined() || !b.defined()) continue;
                    sup_h = std::max(sup_h, hilbert_metric(a.belief->probs(), b.belief->probs()));
                }
    h.K = 2.0 / std::log(3.0) * sup_h;
    return h;
}

LossBound loss_bound_geometric(const ModelConstants& k, double beta, double delta_q, std::size_t N) {
    const GeometricBound g = bound_w1_geometric(k, delta_q, N);
    LossBound lb;
    lb.applicable = true;
    lb.value_loss = (k.K1 * (1.0 - beta) + k.alpha * beta * k.c_inf) * g.bound;
    lb.policy_loss = 2.0 * lb.value_loss;
    if (!g.contracting) lb.note = "rate >= 1, bound does not decay";
    return lb;
}

LossBound loss_bound_series(const ModelConstants& k, double beta, std::span<const double> L) {
    LossBound lb;
    if (L.empty()) {
        lb.note = "empty series";
        return lb;
    }
    double s = 0.0, bt = 1.0;
    for (double l : L) {
        s += bt * l;
        bt *= beta;
    }
    s += bt * L.back() / (1.0 - beta);
    lb.applicable = true;
    lb.value_loss = (k.K1 + k.alpha * beta * k.c_inf / (1.0 - beta)) * s;
    lb.policy_loss = 2.0 * lb.value_loss;
    return lb;
}

LossBound loss_bound_hilbert(double c_inf, double beta, const HilbertBound& h, std::size_t N) {
    LossBound lb;
    if (!h.applicable) {
        lb.note = h.reason;
        return lb;
    }
    if (N == 0) {
        lb.note = "defined for N >= 1";
        return lb;
    }
    lb.applicable = true;
    lb.value_loss = 2.0 * c_inf / ((1.0 - beta) * (1.0 - beta)) * h.at(N);
    return lb;
}

UniformTvConstant uniform_tv_constant(const FinitePomdp& model, std::optional<double> delta_t) {
    UniformTvConstant u;
    u.delta_q = dobrushin(model.observation);
    if (delta_t) {
        u.delta_t = *delta_t;
        u.delta_t_supplied = true;
    } else {
        u.delta_t = 1.0;
        for (const Matrix& t : model.transition) u.delta_t = std::min(u.delta_t, dobrushin(t));
    }
    u.alpha_z = (3.0 - 2.0 * u.delta_q) * (1.0 - u.delta_t);
    return u;
}

LossBound loss_bound_uniform_tv(double c_inf, double beta, double alpha_z, double ltv) {
    LossBound lb;
    if (!(alpha_z * beta < 1.0)) {
        lb.note = "alpha_z * beta >= 1";
        return lb;
    }
    const double om = 1.0 - beta, den = 1.0 - alpha_z * beta;
    lb.applicable = true;
    lb.value_loss = ((alpha_z - 1.0) * beta + 1.0) / (om * om * den) * c_inf * ltv;
    lb.policy_loss = 2.0 * (1.0 + (alpha_z - 1.0) * beta) / (om * om * om * den) * c_inf * ltv;
    return lb;
}

namespace {

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(12);
    s << v;
    return s.str();
}

} // namespace

StabilityReport stability_report(const FinitePomdp& model, std::size_t N, const Belief& z_star,
                                 const PriorSet& priors, unsigned jobs, std::uint64_t cap) {
    StabilityReport r;
    r.N = N;
    r.prior_set = priors.description;
    r.terms = empirical_terms(model, N, z_star, priors, cap, jobs);
    r.constants = compute_constants(model);
    r.delta_q = dobrushin(model.observation);
    r.geometric = bound_w1_geometric(r.constants, r.delta_q, N);
    r.hilbert = bound_hilbert(model, z_star, priors);
    r.bound_hilbert = r.hilbert.at(N);
    r.loss_geometric = loss_bound_geometric(r.constants, model.discount, r.delta_q, N);
    r.loss_hilbert = loss_bound_hilbert(r.constants.c_inf, model.discount, r.hilbert, N);
    const UniformTvConstant utv = uniform_tv_constant(model);
    r.loss_uniform_tv = loss_bound_uniform_tv(r.constants.c_inf, model.discount, utv.alpha_z, r.terms.LTV_N);

    r.checks.push_back({"w1-geometric-rate-below-one", r.geometric.contracting,
                        "rate=" + fmt(r.geometric.rate) + " alpha=" + fmt(r.constants.alpha) +
                            " D=" + fmt(r.constants.D) + " delta_Q=" + fmt(r.delta_q)});
    std::string mix = "eps=" + fmt(r.hilbert.obs_epsilon);
    for (std::size_t u = 0; u < r.hilbert.action_epsilon.size(); ++u)
        mix += " eps_u" + std::to_string(u) + "=" + fmt(r.hilbert.action_epsilon[u]);
    if (!r.hilbert.applicable) mix += " (" + r.hilbert.reason + ")";
    r.checks.push_back({"hilbert-mixing-kernels-and-channel", r.hilbert.applicable, mix});
    r.checks.push_back({"uniform-tv-alpha_z-beta-below-one", utv.alpha_z * model.discount < 1.0,
                        "alpha_z=" + fmt(utv.alpha_z) + " delta_T=" + fmt(utv.delta_t) +
                            (utv.delta_t_supplied ? " (supplied)" : " (min_u dobrushin stand-in)")});
    r.checks.push_back({"windows-possible-under-z_star", r.terms.LN_w1_unreachable == 0.0,
                        "unreachable W1 mass=" + fmt(r.terms.LN_w1_unreachable)});
    return r;
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json loss_json(const LossBound& l) {
    return json{{"applicable", l.applicable}, {"value_loss", num(l.value_loss)},
                {"policy_loss", num(l.policy_loss)}, {"note", l.note}};
}

} // namespace

json report_to_json(const StabilityReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"witness", c.witness}});
    return json{
        {"N", r.N},
        {"prior_set", r.prior_set},
        {"LN_w1", r.terms.LN_w1},
        {"LTV_N", r.terms.LTV_N},
        {"L_TV_expected", r.terms.L_TV_expected},
        {"LN_w1_unreachable", r.terms.LN_w1_unreachable},
        {"worst_prior", r.terms.worst_prior},
        {"worst_actions", r.terms.worst_actions},
        {"sequences", r.terms.leaves},
        {"constants", {{"D", r.constants.D}, {"alpha", r.constants.alpha}, {"K1", r.constants.K1},
                       {"c_inf", r.constants.c_inf}, {"delta_Q", r.delta_q}}},
        {"bound_w1", {{"rate", r.geometric.rate}, {"prefactor", r.geometric.prefactor},
                      {"bound", r.geometric.bound}, {"contracting", r.geometric.contracting}}},
        {"bound_hilbert", {{"applicable", r.hilbert.applicable}, {"reason", r.hilbert.reason},
                           {"r", num(r.hilbert.r)}, {"K", num(r.hilbert.K)},
                           {"bound", num(r.bound_hilbert)}}},
        {"loss_w1_closed_form", loss_json(r.loss_geometric)},
        {"loss_hilbert", loss_json(r.loss_hilbert)},
        {"loss_uniform_tv", loss_json(r.loss_uniform_tv)},
        {"assumption_checks", checks}};
}

} // namespace slidewin
