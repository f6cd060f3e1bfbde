#pragma once

// Subcommands of the caplab CLI. Each returns a process exit code:
//   0 success, 2 configuration error, 3 domain error, 4 numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "caplab/caplab.hpp"

namespace caplab::cli {

enum ExitCode : int { Ok = 0, ConfigFailure = 2, DomainFailure = 3, NumericalFailure = 4 };

struct CommonOptions {
    std::filesystem::path config;
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<std::string> scheme;
    unsigned workers = 0;
    bool quiet = false;
};

struct ConvergenceOptions {
    int levels = 5;
    int first_level = 4;
};

struct SweepOptions {
    std::vector<double> m_grid;
    std::vector<double> sigma_grid;
};

/// Loads the config and applies command-line overrides.
inline ScenarioConfig resolve(const CommonOptions& opts)
{
    ScenarioConfig cfg = load_config(opts.config);
    if (opts.out) cfg.outputs = *opts.out;
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.paths) cfg.n_paths = *opts.paths;
    if (opts.scheme) cfg.scheme = parse_scheme(*opts.scheme);
    cfg.validate();
    return cfg;
}

inline std::ofstream open_output(const ScenarioConfig& cfg, const std::string& name)
{
    std::error_code ec;
    std::filesystem::create_directories(cfg.outputs, ec);
    if (ec) throw ConfigError("cannot create output directory " + cfg.outputs.string() + ": " + ec.message());
    const auto file = cfg.outputs / name;
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + file.string());
    return out;
}

inline void emit(const CommonOptions& opts, const json& j)
{
    if (!opts.quiet) std::cout << j.dump(2) << '\n';
}

/// Maps the library's exception types onto exit codes.
inline int guarded(const std::function<void()>& body)
{
    try {
        body();
        return Ok;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return ConfigFailure;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return DomainFailure;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return NumericalFailure;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return ConfigFailure;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return NumericalFailure;
    }
}

inline int run_thresholds(const CommonOptions& opts)
{
    return guarded([&] {
        const auto cfg = resolve(opts);
        const json report = to_json(classify_regime(cfg.params));
        open_output(cfg, "thresholds.json") << report.dump(2) << '\n';
        emit(opts, report);
    });
}

inline int run_simulate(const CommonOptions& opts)
{
    return guarded([&] {
        const auto cfg = resolve(opts);
        const std::size_t n = step_count(cfg.horizon, cfg.dt);
        const SimulateOptions sim{cfg.record_stride};
        const BrownianPath path = generate(cfg.seed, 0, cfg.dt, n);
        const Trajectory stochastic = simulate(cfg.scheme, cfg.params, cfg.x0, cfg.horizon, cfg.dt, &path, sim);
        const Trajectory deterministic =
            simulate(Scheme::RK4Deterministic, cfg.params, cfg.x0, cfg.horizon, cfg.dt, nullptr, sim);

        auto s_out = open_output(cfg, "stochastic.csv");
        write_trajectory_csv(s_out, stochastic);
        auto d_out = open_output(cfg, "deterministic.csv");
        write_trajectory_csv(d_out, deterministic);

        emit(opts, {{"scheme", std::string(to_string(cfg.scheme))},
                    {"steps", n},
                    {"stochastic_terminal", {{"u", stochastic.terminal().u}, {"v", stochastic.terminal().v}}},
                    {"deterministic_terminal", {{"u", deterministic.terminal().u}, {"v", deterministic.terminal().v}}},
                    {"clamp_count", stochastic.clamp_count()},
                    {"v_time_average", time_average(stochastic, Component::V)}});
    });
}

inline int run_ensemble(const CommonOptions& opts)
{
    return guarded([&] {
        const auto cfg = resolve(opts);
        const auto stats = ensemble(cfg.params, cfg.scheme, cfg.x0, cfg.horizon, cfg.dt, cfg.n_paths, cfg.seed,
                                    {cfg.record_stride, opts.workers});
        auto out = open_output(cfg, "ensemble.csv");
        write_ensemble_csv(out, stats);
        emit(opts, {{"n_paths", stats.n_paths},
                    {"clamp_rate", stats.clamp_rate},
                    {"u_mean_final", stats.u.mean.back()},
                    {"v_mean_final", stats.v.mean.back()}});
    });
}

/// The config's dt is the reference step; rungs are dt * 2^L.
inline int run_convergence(const CommonOptions& opts, const ConvergenceOptions& conv)
{
    return guarded([&] {
        const auto cfg = resolve(opts);
        const auto rep = strong_order(cfg.params, cfg.scheme, cfg.x0, cfg.horizon, cfg.dt, conv.levels,
                                      cfg.n_paths, cfg.seed, {conv.first_level, opts.workers});
        const json j = to_json(rep);
        open_output(cfg, "convergence.json") << j.dump(2) << '\n';
        emit(opts, j);
    });
}

inline int run_sweep(const CommonOptions& opts, const SweepOptions& sweep)
{
    return guarded([&] {
        const auto cfg = resolve(opts);
        SweepConfig sc;
        sc.x0 = cfg.x0;
        sc.horizon = cfg.horizon;
        sc.dt = cfg.dt;
        sc.scheme = cfg.scheme;
        sc.n_paths = cfg.n_paths;
        sc.seed = cfg.seed;
        sc.record_stride = cfg.record_stride;
        sc.workers = opts.workers;
        const auto cells = regime_map(cfg.params, sweep.m_grid, sweep.sigma_grid, sc);
        auto out = open_output(cfg, "sweep.csv");
        write_regime_csv(out, cells);

        std::size_t failed = 0;
        for (const auto& c : cells) failed += c.error ? 1 : 0;
        emit(opts, {{"cells", cells.size()}, {"failed_cells", failed}});
    });
}

} // namespace caplab::cli
