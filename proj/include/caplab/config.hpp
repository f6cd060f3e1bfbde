#pragma once

// Scenario files. Only the keys below are accepted; a misspelt key is an
// error rather than a silently ignored setting.
//
//   {
//     "params": {"r": 1, "K": 100, "m": 0.001, "d": 0.2, "sigma": 0.09},
//     "x0": {"u": 50, "v": 10},
//     "horizon": 500, "dt": 0.01, "scheme": "milstein",
//     "n_paths": 100, "seed": 20240101, "record_stride": 1,
//     "outputs": "out/fig1"
//   }
//
// Everything except "params" is optional and falls back to the defaults in
// ScenarioConfig.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "caplab/errors.hpp"
#include "caplab/integrators.hpp"
#include "caplab/io.hpp"
#include "caplab/model.hpp"

namespace caplab {

struct ScenarioConfig {
    ModelParams params{1.0, 100.0, 0.001, 0.2, 0.09};
    State x0{50.0, 10.0};
    double horizon = 500.0;
    double dt = 0.01;
    Scheme scheme = Scheme::Milstein;
    std::size_t n_paths = 100;
    std::uint64_t seed = 20240101;
    std::size_t record_stride = 1;
    std::filesystem::path outputs = "out";

    void validate() const
    {
        if (!(x0.u >= 0.0) || !(x0.v >= 0.0) || !std::isfinite(x0.u) || !std::isfinite(x0.v))
            throw ConfigError("x0 must be finite and nonnegative");
        step_count(horizon, dt);
        if (n_paths == 0) throw ConfigError("n_paths must be >= 1");
        if (record_stride == 0) throw ConfigError("record_stride must be >= 1");
    }
};

namespace detail {
inline std::uint64_t unsigned_at(const json& j, const char* key)
{
    const auto& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ConfigError(std::string("'") + key + "' must be a nonnegative integer");
    return v.get<std::uint64_t>();
}
} // namespace detail

inline ScenarioConfig config_from_json(const json& j)
{
    detail::reject_unknown_keys(
        j, {"params", "x0", "horizon", "dt", "scheme", "n_paths", "seed", "record_stride", "outputs"}, "config");
    if (!j.contains("params")) throw ConfigError("config: missing key 'params'");

    ScenarioConfig cfg;
    cfg.params = params_from_json(j.at("params"));
    if (j.contains("x0")) {
        const auto& x = j.at("x0");
        detail::reject_unknown_keys(x, {"u", "v"}, "x0");
        cfg.x0 = {detail::number_at(x, "u", "x0"), detail::number_at(x, "v", "x0")};
    }
    if (j.contains("horizon")) cfg.horizon = detail::number_at(j, "horizon", "config");
    if (j.contains("dt")) cfg.dt = detail::number_at(j, "dt", "config");
    if (j.contains("scheme")) {
        if (!j.at("scheme").is_string()) throw ConfigError("'scheme' must be a string");
        cfg.scheme = parse_scheme(j.at("scheme").get<std::string>());
    }
    if (j.contains("n_paths")) cfg.n_paths = detail::unsigned_at(j, "n_paths");
    if (j.contains("seed")) cfg.seed = detail::unsigned_at(j, "seed");
    if (j.contains("record_stride")) cfg.record_stride = detail::unsigned_at(j, "record_stride");
    if (j.contains("outputs")) {
        if (!j.at("outputs").is_string()) throw ConfigError("'outputs' must be a string");
        cfg.outputs = j.at("outputs").get<std::string>();
    }
    cfg.validate();
    return cfg;
}

inline json to_json(const ScenarioConfig& cfg)
{
    return {{"params", to_json(cfg.params)},
            {"x0", {{"u", cfg.x0.u}, {"v", cfg.x0.v}}},
            {"horizon", cfg.horizon},
            {"dt", cfg.dt},
            {"scheme", std::string(to_string(cfg.scheme))},
            {"n_paths", cfg.n_paths},
            {"seed", cfg.seed},
            {"record_stride", cfg.record_stride},
            {"outputs", cfg.outputs.string()}};
}

inline ScenarioConfig load_config(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + file.string() + ": " + e.what());
    }
    return config_from_json(j);
}

} // namespace caplab
