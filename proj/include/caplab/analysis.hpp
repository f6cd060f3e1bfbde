#pragma once

// Trajectory diagnostics and Monte Carlo experiments.
//
// Parallel work is split over path indices; every reduction runs in
// path_index order afterwards, so results are bit-identical for any worker
// count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "caplab/brownian.hpp"
#include "caplab/errors.hpp"
#include "caplab/integrators.hpp"
#include "caplab/model.hpp"

namespace caplab {

enum class Component { U, V };

inline double component(const State& s, Component c) noexcept { return c == Component::U ? s.u : s.v; }

/// Runs fn(i) for i in [0, n) on up to `workers` threads (0 picks the
/// hardware concurrency). If any call throws, the exception from the
/// smallest index is rethrown after all threads finish.
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn)
{
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
    std::vector<std::exception_ptr> errors(n);
    auto body = [&](std::atomic<std::size_t>& next) {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::atomic<std::size_t> next{0};
    if (workers <= 1) {
        body(next);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back([&] { body(next); });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Time averages

/// <x>(T) = (1/T) * integral_0^T x(s) ds by the trapezoidal rule. Uses the
/// full-resolution integral when the trajectory carries one, otherwise the
/// recorded points.
inline double time_average(const Trajectory& traj, Component c)
{
    if (traj.times.size() < 2) throw ConfigError("time_average needs at least two recorded points");
    const double T = traj.times.back() - traj.times.front();
    if (!(T > 0.0)) throw ConfigError("time_average needs a positive horizon");
    if (traj.running_integral) return component(*traj.running_integral, c) / T;

    double integral = 0.0;
    for (std::size_t k = 1; k < traj.times.size(); ++k) {
        const double h = traj.times[k] - traj.times[k - 1];
        integral += 0.5 * h * (component(traj.states[k - 1], c) + component(traj.states[k], c));
    }
    return integral / T;
}

// ---------------------------------------------------------------------------
// Extinction detection

struct ExtinctionDetection {
    std::optional<double> time;
    bool insufficient_horizon = false;
};

/// Earliest recorded time tau with v(t) < threshold for every recorded t in
/// [tau, tau + window]. The window must end inside the recorded horizon.
inline ExtinctionDetection detect_extinction(const Trajectory& traj, double threshold, double window)
{
    if (!(threshold > 0.0)) throw ConfigError("detect_extinction: threshold must be > 0");
    if (!(window > 0.0)) throw ConfigError("detect_extinction: window must be > 0");
    ExtinctionDetection out;
    if (traj.times.empty() || window > traj.times.back() - traj.times.front()) {
        out.insufficient_horizon = true;
        return out;
    }
    const auto& t = traj.times;
    const std::size_t n = t.size();
    // below_until[i]: one past the last index of the below-threshold run
    // starting at i (equal to i when v(t_i) >= threshold).
    std::vector<std::size_t> below_until(n + 1, n);
    for (std::size_t i = n; i-- > 0;)
        below_until[i] = traj.states[i].v < threshold ? below_until[i + 1] : i;

    std::size_t last_in_window = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double end = t[i] + window;
        if (end > t.back()) break;
        last_in_window = std::max(last_in_window, i);
        while (last_in_window + 1 < n && t[last_in_window + 1] <= end) ++last_in_window;
        if (below_until[i] > last_in_window) {
            out.time = t[i];
            return out;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ensembles

struct Moments {
    std::vector<double> mean, stddev, q05, q50, q95;
};

struct PathSummary {
    std::uint64_t path_index = 0;
    State terminal;
    double u_time_average = 0.0;
    double v_time_average = 0.0;
    std::size_t clamp_count = 0;
    double max_total = 0.0; // max of u + v over recorded points
};

struct EnsembleStats {
    std::vector<double> times;
    Moments u, v;
    std::size_t n_paths = 0;
    double clamp_rate = 0.0;
    std::vector<PathSummary> paths;
};

/// Nearest-rank quantile of an ascending sample: element ceil(q n), 1-based.
inline double nearest_rank(std::span<const double> sorted, double q)
{
    const auto n = sorted.size();
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    return sorted[rank - 1];
}

struct EnsembleOptions {
    std::size_t record_stride = 1;
    unsigned workers = 1;
};

namespace detail {
inline void fill_moments(Moments& out, std::size_t k, std::vector<double>& column)
{
    // Moments about the first value: identical samples give exactly zero
    // spread and a mean equal to the common value.
    const double n = static_cast<double>(column.size());
    const double shift = column.front();
    double sum = 0.0;
    for (double x : column) sum += x - shift;
    const double offset = sum / n;
    double ss = 0.0;
    for (double x : column) ss += (x - shift - offset) * (x - shift - offset);
    out.mean[k] = shift + offset;
    out.stddev[k] = std::sqrt(ss / n);
    std::sort(column.begin(), column.end());
    out.q05[k] = nearest_rank(column, 0.05);
    out.q50[k] = nearest_rank(column, 0.50);
    out.q95[k] = nearest_rank(column, 0.95);
}

inline void resize_moments(Moments& m, std::size_t n)
{
    for (auto* v : {&m.mean, &m.stddev, &m.q05, &m.q50, &m.q95}) v->assign(n, 0.0);
}

inline Trajectory simulate_path(Scheme scheme, const ModelParams& p, const State& x0, double horizon,
                                double dt, std::uint64_t seed, std::uint64_t index, std::size_t stride)
{
    const std::size_t n = step_count(horizon, dt);
    if (!is_stochastic(scheme)) return simulate(scheme, p, x0, horizon, dt, nullptr, {stride});
    const BrownianPath path = generate(seed, index, dt, n);
    return simulate(scheme, p, x0, horizon, dt, &path, {stride});
}
} // namespace detail

/// Population standard deviation (divides by n_paths).
inline EnsembleStats ensemble(const ModelParams& p, Scheme scheme, const State& x0, double horizon,
                              double dt, std::size_t n_paths, std::uint64_t seed, EnsembleOptions opts = {})
{
    if (n_paths == 0) throw ConfigError("ensemble needs n_paths >= 1");
    step_count(horizon, dt);

    std::vector<std::vector<State>> records(n_paths);
    std::vector<std::vector<double>> times(n_paths);
    EnsembleStats out;
    out.n_paths = n_paths;
    out.paths.resize(n_paths);

    parallel_for(n_paths, opts.workers, [&](std::size_t i) {
        Trajectory traj;
        try {
            traj = detail::simulate_path(scheme, p, x0, horizon, dt, seed, i, opts.record_stride);
        } catch (const NumericalError& e) {
            throw NumericalError("path_index " + std::to_string(i) + ": " + e.what());
        }
        PathSummary& s = out.paths[i];
        s.path_index = i;
        s.terminal = traj.terminal();
        s.u_time_average = time_average(traj, Component::U);
        s.v_time_average = time_average(traj, Component::V);
        s.clamp_count = traj.clamp_count();
        for (const auto& st : traj.states) s.max_total = std::max(s.max_total, st.total());
        records[i] = std::move(traj.states);
        times[i] = std::move(traj.times);
    });

    out.times = std::move(times[0]);
    const std::size_t n_times = out.times.size();
    detail::resize_moments(out.u, n_times);
    detail::resize_moments(out.v, n_times);

    parallel_for(n_times, opts.workers, [&](std::size_t k) {
        std::vector<double> column(n_paths);
        for (std::size_t i = 0; i < n_paths; ++i) column[i] = records[i][k].u;
        detail::fill_moments(out.u, k, column);
        for (std::size_t i = 0; i < n_paths; ++i) column[i] = records[i][k].v;
        detail::fill_moments(out.v, k, column);
    });

    std::size_t clamped_paths = 0;
    for (const auto& s : out.paths) clamped_paths += s.clamp_count > 0 ? 1 : 0;
    out.clamp_rate = static_cast<double>(clamped_paths) / static_cast<double>(n_paths);
    return out;
}

// ---------------------------------------------------------------------------
// Strong convergence order

struct LevelError {
    int level = 0;
    double dt = 0.0;
    double error = 0.0;
};

struct StrongOrderReport {
    Scheme scheme = Scheme::EulerMaruyama;
    double slope = 0.0;
    double residual = 0.0; // RMS of log2 fit residuals
    double dt_fine = 0.0;
    std::vector<LevelError> levels;
};

struct StrongOrderOptions {
    int first_level = 1;
    unsigned workers = 1;
};

/// Least-squares line through (x, y); returns slope and RMS residual.
inline std::pair<double, double> fit_line(std::span<const double> x, std::span<const double> y)
{
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (my + slope * (x[i] - mx));
        ss += r * r;
    }
    return {slope, std::sqrt(ss / n)};
}

/// Coupled-path estimate of the strong order. Rungs are dt_fine * 2^L for
/// L = first_level, ..., first_level + levels - 1; each is driven by the
/// coarsened fine Brownian path and compared at the horizon against the same
/// scheme run at dt_fine. The error of a rung is the mean over paths of
/// |u - u_ref| + |v - v_ref|.
inline StrongOrderReport strong_order(const ModelParams& p, Scheme scheme, const State& x0, double horizon,
                                      double dt_fine, int levels, std::size_t n_paths, std::uint64_t seed,
                                      StrongOrderOptions opts = {})
{
    if (levels < 3) throw ConfigError("strong_order needs levels >= 3");
    if (opts.first_level < 1) throw ConfigError("strong_order needs first_level >= 1");
    if (n_paths == 0) throw ConfigError("strong_order needs n_paths >= 1");
    const int top = opts.first_level + levels - 1;
    if (top > 40) throw ConfigError("strong_order: too many levels");
    const std::size_t n_fine = step_count(horizon, dt_fine);
    const std::size_t coarsest = std::size_t{1} << top;
    if (n_fine % coarsest != 0)
        throw ConfigError("strong_order: dt_fine * 2^" + std::to_string(top) + " does not divide the horizon");

    // errors[i][j]: path i, rung j
    std::vector<std::vector<double>> errors(n_paths, std::vector<double>(levels));
    parallel_for(n_paths, opts.workers, [&](std::size_t i) {
        const BrownianPath fine = generate(seed, i, dt_fine, n_fine);
        const State ref = simulate(scheme, p, x0, horizon, dt_fine, &fine, {n_fine}).terminal();
        for (int j = 0; j < levels; ++j) {
            const std::size_t factor = std::size_t{1} << (opts.first_level + j);
            const BrownianPath coarse = coarsen(fine, factor);
            const double dt = coarse.dt();
            const State x = simulate(scheme, p, x0, horizon, dt, &coarse, {n_fine / factor}).terminal();
            errors[i][static_cast<std::size_t>(j)] = std::abs(x.u - ref.u) + std::abs(x.v - ref.v);
        }
    });

    StrongOrderReport rep;
    rep.scheme = scheme;
    rep.dt_fine = dt_fine;
    std::vector<double> xs, ys;
    for (int j = 0; j < levels; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n_paths; ++i) sum += errors[i][static_cast<std::size_t>(j)];
        const int L = opts.first_level + j;
        const double dt = dt_fine * std::ldexp(1.0, L);
        const double e = sum / static_cast<double>(n_paths);
        rep.levels.push_back({L, dt, e});
        if (!(e > 0.0) || !std::isfinite(e))
            throw NumericalError("strong_order: level " + std::to_string(L) + " has error " + std::to_string(e) +
                                 "; cannot take a logarithm");
        xs.push_back(std::log2(dt));
        ys.push_back(std::log2(e));
    }
    std::tie(rep.slope, rep.residual) = fit_line(xs, ys);
    return rep;
}

// ---------------------------------------------------------------------------
// Regime maps

enum class Observed { VExtinct, VPersists, Unclear };

inline std::string_view to_string(Observed o) noexcept
{
    switch (o) {
    case Observed::VExtinct: return "v_extinct";
    case Observed::VPersists: return "v_persists";
    case Observed::Unclear: return "unclear";
    }
    return "unclear";
}

struct RegimeCell {
    double m = 0.0;
    double sigma = 0.0;
    std::optional<Regime> predicted;
    Observed observed = Observed::Unclear;
    double v_time_avg = std::nan("");
    double v_terminal_mean = std::nan("");
    std::optional<std::string> error;
};

struct SweepConfig {
    State x0{50.0, 10.0};
    double horizon = 500.0;
    double dt = 0.01;
    Scheme scheme = Scheme::Milstein;
    std::size_t n_paths = 100;
    std::uint64_t seed = 20240101;
    std::size_t record_stride = 1;
    unsigned workers = 1;
    double extinct_threshold = 1e-2;
};

/// Threshold on the mean of <v> above which a cell counts as persisting:
/// half the theoretical floor when it exists, else 0.1.
inline double persistence_threshold(const ModelParams& p)
{
    const auto floor = persistence_floor(p);
    return floor ? 0.5 * *floor : 0.1;
}

inline std::vector<RegimeCell> regime_map(const ModelParams& base, std::span<const double> m_grid,
                                          std::span<const double> sigma_grid, const SweepConfig& cfg)
{
    if (m_grid.empty() || sigma_grid.empty()) throw ConfigError("regime_map: grids must be nonempty");
    std::vector<RegimeCell> cells;
    cells.reserve(m_grid.size() * sigma_grid.size());
    for (double m : m_grid) {
        for (double sigma : sigma_grid) {
            RegimeCell cell;
            cell.m = m;
            cell.sigma = sigma;
            try {
                const ModelParams p = base.with_m(m).with_sigma(sigma);
                cell.predicted = classify_regime(p).classification;
                const auto stats = ensemble(p, cfg.scheme, cfg.x0, cfg.horizon, cfg.dt, cfg.n_paths, cfg.seed,
                                            {cfg.record_stride, cfg.workers});
                double v_end = 0.0, v_avg = 0.0;
                for (const auto& s : stats.paths) {
                    v_end += s.terminal.v;
                    v_avg += s.v_time_average;
                }
                const double n = static_cast<double>(stats.n_paths);
                cell.v_terminal_mean = v_end / n;
                cell.v_time_avg = v_avg / n;
                if (cell.v_terminal_mean < cfg.extinct_threshold)
                    cell.observed = Observed::VExtinct;
                else if (cell.v_time_avg > persistence_threshold(p))
                    cell.observed = Observed::VPersists;
                else
                    cell.observed = Observed::Unclear;
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

} // namespace caplab
