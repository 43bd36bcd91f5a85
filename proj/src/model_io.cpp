#include "slidewin/model_io.hpp"

#include "slidewin/error.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

namespace slidewin {

using nlohmann::json;

namespace {

constexpr double kRenormTol = 1e-9;

double finite_number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ModelError(where + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ModelError(where + ": non-finite number");
    return d;
}

Matrix read_matrix(const json& j, std::size_t rows, std::size_t cols, const std::string& where) {
    if (!j.is_array() || j.size() != rows)
        throw ModelError(where + ": expected " + std::to_string(rows) + " rows");
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const json& r = j[i];
        if (!r.is_array() || r.size() != cols)
            throw ModelError(where + "[" + std::to_string(i) + "]: expected " +
                             std::to_string(cols) + " entries");
        for (std::size_t k = 0; k < cols; ++k)
            m(i, k) = finite_number(r[k], where + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
    }
    return m;
}

void renormalize_rows(Matrix& m, const std::string& where) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto row = m.row(i);
        const double s = std::accumulate(row.begin(), row.end(), 0.0);
        if (std::abs(s - 1.0) > kRenormTol)
            throw ModelError(where + "[" + std::to_string(i) + "]: row sums to " + std::to_string(s));
        for (double& v : row) v /= s;
    }
}

std::size_t read_count(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() < 1)
        throw ModelError(std::string("model: '") + key + "' must be a positive integer");
    return j[key].get<std::size_t>();
}

} // namespace

FinitePomdp model_from_json(const json& j) {
    if (!j.is_object()) throw ModelError("model: expected a JSON object");
    FinitePomdp m;
    m.name = j.value("name", std::string("unnamed"));
    m.n_states = read_count(j, "num_states");
    m.n_obs = read_count(j, "num_obs");
    m.n_actions = read_count(j, "num_actions");

    for (const char* key : {"transition", "observation", "cost", "discount"})
        if (!j.contains(key)) throw ModelError(std::string("model: missing '") + key + "'");

    const json& t = j["transition"];
    if (!t.is_array() || t.size() != m.n_actions)
        throw ModelError("transition: expected one kernel per action");
    for (std::size_t u = 0; u < m.n_actions; ++u) {
        const std::string where = "transition[" + std::to_string(u) + "]";
        Matrix k = read_matrix(t[u], m.n_states, m.n_states, where);
        renormalize_rows(k, where);
        m.transition.push_back(std::move(k));
    }
    m.observation = read_matrix(j["observation"], m.n_states, m.n_obs, "observation");
    renormalize_rows(m.observation, "observation");
    m.cost = read_matrix(j["cost"], m.n_states, m.n_actions, "cost");
    m.discount = finite_number(j["discount"], "discount");
    if (j.contains("metric") && !j["metric"].is_null())
        m.metric = read_matrix(j["metric"], m.n_states, m.n_states, "metric");
    else
        m.metric = discrete_metric(m.n_states);
    require_valid(m);
    return m;
}

json model_to_json(const FinitePomdp& m) {
    json t = json::array();
    for (const auto& k : m.transition) t.push_back(k.to_rows());
    return json{{"name", m.name},
                {"num_states", m.n_states},
                {"num_obs", m.n_obs},
                {"num_actions", m.n_actions},
                {"transition", t},
                {"observation", m.observation.to_rows()},
                {"cost", m.cost.to_rows()},
                {"discount", m.discount},
                {"metric", m.metric.to_rows()}};
}

FinitePomdp load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ModelError("model file " + path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

void save_model(const FinitePomdp& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ModelError("cannot write model file " + path.string());
    out << model_to_json(model).dump(2) << '\n';
}

} // namespace slidewin
