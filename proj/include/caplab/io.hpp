#pragma once

// CSV and JSON serialization. Numbers are written in the shortest decimal
// form that reads back to the same double.

#include <charconv>
#include <cmath>
#include <ostream>
#include <initializer_list>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "caplab/analysis.hpp"
#include "caplab/errors.hpp"
#include "caplab/integrators.hpp"
#include "caplab/model.hpp"

namespace caplab {

using json = nlohmann::json;

inline std::string format_double(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, res.ptr};
}

// ---------------------------------------------------------------------------
// CSV

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj)
{
    os << "t,u,v,clamped\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        os << format_double(traj.times[k]) << ',' << format_double(traj.states[k].u) << ','
           << format_double(traj.states[k].v) << ',' << (traj.clamped[k] ? 1 : 0) << '\n';
    }
}

inline void write_ensemble_csv(std::ostream& os, const EnsembleStats& stats)
{
    os << "t,u_mean,u_std,u_q05,u_q50,u_q95,v_mean,v_std,v_q05,v_q50,v_q95\n";
    auto row = [&](const Moments& m, std::size_t k) {
        os << format_double(m.mean[k]) << ',' << format_double(m.stddev[k]) << ',' << format_double(m.q05[k])
           << ',' << format_double(m.q50[k]) << ',' << format_double(m.q95[k]);
    };
    for (std::size_t k = 0; k < stats.times.size(); ++k) {
        os << format_double(stats.times[k]) << ',';
        row(stats.u, k);
        os << ',';
        row(stats.v, k);
        os << '\n';
    }
}

/// Cells that failed carry "error" in both classification columns.
inline void write_regime_csv(std::ostream& os, std::span<const RegimeCell> cells)
{
    os << "m,sigma,predicted,observed,v_time_avg\n";
    for (const auto& c : cells) {
        os << format_double(c.m) << ',' << format_double(c.sigma) << ',';
        if (c.error || !c.predicted)
            os << "error,error," << format_double(std::nan("")) << '\n';
        else
            os << to_string(*c.predicted) << ',' << to_string(c.observed) << ',' << format_double(c.v_time_avg)
               << '\n';
    }
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {
inline void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                                std::string_view where)
{
    if (!obj.is_object()) throw ConfigError(std::string(where) + ": expected a JSON object");
    const std::set<std::string_view> keys(allowed);
    for (const auto& [key, value] : obj.items())
        if (!keys.contains(key)) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
}

inline double number_at(const json& obj, const char* key, std::string_view where)
{
    const auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(std::string(where) + ": missing key '" + key + "'");
    if (!it->is_number()) throw ConfigError(std::string(where) + ": '" + key + "' must be a number");
    return it->get<double>();
}
} // namespace detail

inline json to_json(const ModelParams& p)
{
    return {{"r", p.r()}, {"K", p.K()}, {"m", p.m()}, {"d", p.d()}, {"sigma", p.sigma()}};
}

inline ModelParams params_from_json(const json& j)
{
    constexpr std::string_view where = "params";
    detail::reject_unknown_keys(j, {"r", "K", "m", "d", "sigma"}, where);
    return {detail::number_at(j, "r", where), detail::number_at(j, "K", where), detail::number_at(j, "m", where),
            detail::number_at(j, "d", where), detail::number_at(j, "sigma", where)};
}

inline json to_json(const RegimeReport& rep)
{
    json j;
    j["extinction_index"] = rep.extinction_index;
    j["r0s"] = rep.r0s;
    j["m_minus_r_over_K"] = rep.m_minus_r_over_K;
    j["persistence_floor"] = rep.persistence_floor ? json(*rep.persistence_floor) : json(nullptr);
    j["ultimate_bound"] = rep.ultimate_bound;
    j["classification"] = std::string(to_string(rep.classification));
    j["conflict"] = rep.conflict;
    return j;
}

inline json to_json(const StrongOrderReport& rep)
{
    json levels = json::array();
    for (const auto& l : rep.levels) levels.push_back({{"level", l.level}, {"dt", l.dt}, {"error", l.error}});
    return {{"scheme", std::string(to_string(rep.scheme))},
            {"slope", rep.slope},
            {"residual", rep.residual},
            {"dt_fine", rep.dt_fine},
            {"levels", levels}};
}

} // namespace caplab
