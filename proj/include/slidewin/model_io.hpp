#pragma once

#include "slidewin/model.hpp"

#include <filesystem>
#include <json.hpp>

namespace slidewin {

/// JSON model format:
///
///   { "name": str, "num_states": n, "num_obs": m, "num_actions": k,
///     "transition": [k][n][n], "observation": [n][m], "cost": [n][k],
///     "discount": b, "metric": [n][n] (optional, discrete metric if absent) }
///
/// Rows whose sum is off by at most 1e-9 are renormalized; larger residuals,
/// shape mismatches and non-finite numbers throw ModelError.
FinitePomdp model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const FinitePomdp& model);

FinitePomdp load_model(const std::filesystem::path& path);
void save_model(const FinitePomdp& model, const std::filesystem::path& path);

} // namespace slidewin
