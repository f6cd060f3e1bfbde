#pragma once

// Fixed-step integrators: classical RK4 for the deterministic system,
// Euler-Maruyama and Milstein for the stochastic one.
//
// Stochastic steps clamp a negative component to zero and report it. The
// noise enters u and v with opposite signs, so for both stochastic schemes
// the increment of u + v does not depend on dB.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "caplab/brownian.hpp"
#include "caplab/errors.hpp"
#include "caplab/model.hpp"

namespace caplab {

enum class Scheme { RK4Deterministic, EulerMaruyama, Milstein };

inline std::string_view to_string(Scheme s) noexcept
{
    switch (s) {
    case Scheme::RK4Deterministic: return "rk4";
    case Scheme::EulerMaruyama: return "euler_maruyama";
    case Scheme::Milstein: return "milstein";
    }
    return "rk4";
}

inline Scheme parse_scheme(std::string_view name)
{
    if (name == "rk4") return Scheme::RK4Deterministic;
    if (name == "euler_maruyama" || name == "em") return Scheme::EulerMaruyama;
    if (name == "milstein") return Scheme::Milstein;
    throw ConfigError("unknown scheme '" + std::string(name) + "' (expected rk4, euler_maruyama or milstein)");
}

inline bool is_stochastic(Scheme s) noexcept { return s != Scheme::RK4Deterministic; }

struct StepResult {
    State state;
    bool clamped = false;
};

inline State step_rk4(const State& s, double dt, const ModelParams& p)
{
    auto shifted = [&](const Rates& k, double h) { return State{s.u + h * k.u, s.v + h * k.v}; };
    const Rates k1 = drift(s, p);
    const Rates k2 = drift(shifted(k1, 0.5 * dt), p);
    const Rates k3 = drift(shifted(k2, 0.5 * dt), p);
    const Rates k4 = drift(shifted(k3, dt), p);
    State out{s.u + dt / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
              s.v + dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};

    // Round-off below zero is repaired; anything larger means dt is too big.
    const double tolerance = 1e-12 * (std::abs(s.u) + std::abs(s.v));
    for (double* x : {&out.u, &out.v}) {
        if (!std::isfinite(*x)) throw NumericalError("rk4: non-finite state; step size too large");
        if (*x < 0.0) {
            if (-*x >= tolerance) throw NumericalError("rk4: negative state; step size too large");
            *x = 0.0;
        }
    }
    return out;
}

namespace detail {
/// Noise-free change of u + v over one step.
inline double total_change(const State& s, double dt, const ModelParams& p) noexcept
{
    return dt * (p.r() * s.u * (1.0 - s.u / p.K()) - p.d() * s.v);
}

/// The smaller component takes its own increment; the larger one takes the
/// total change minus it, so u + v moves by the noise-free amount and a
/// component near zero keeps full relative precision.
inline StepResult apply_increment(const State& s, double du, double dv, double total) noexcept
{
    if (s.u <= s.v)
        dv = total - du;
    else
        du = total - dv;
    StepResult r{{s.u + du, s.v + dv}, false};
    if (r.state.u < 0.0) {
        r.state.u = 0.0;
        r.clamped = true;
    }
    if (r.state.v < 0.0) {
        r.state.v = 0.0;
        r.clamped = true;
    }
    return r;
}
} // namespace detail

inline StepResult step_em(const State& s, double dt, double dB, const ModelParams& p) noexcept
{
    // Per-capita forms: u and v factor out of their own increments.
    const double noise = p.sigma() * dB;
    const double du = s.u * (p.r() * (1.0 - s.u / p.K()) * dt - p.m() * s.v * dt - noise * s.v);
    const double dv = s.v * (p.m() * s.u * dt - p.d() * dt + noise * s.u);
    return detail::apply_increment(s, du, dv, detail::total_change(s, dt, p));
}

/// Correction added to u by the Milstein step; v receives its negation.
/// For b = (-sigma u v, sigma u v), (b . grad) b_u = sigma^2 u v (v - u).
inline double milstein_correction(const State& s, double dt, double dB, const ModelParams& p) noexcept
{
    const double sigma = p.sigma();
    return 0.5 * sigma * sigma * s.u * s.v * (s.v - s.u) * (dB * dB - dt);
}

inline StepResult step_milstein(const State& s, double dt, double dB, const ModelParams& p) noexcept
{
    const double noise = p.sigma() * dB;
    const double half_c = 0.5 * p.sigma() * p.sigma() * (s.v - s.u) * (dB * dB - dt);
    const double du = s.u * (p.r() * (1.0 - s.u / p.K()) * dt - p.m() * s.v * dt - noise * s.v + half_c * s.v);
    const double dv = s.v * (p.m() * s.u * dt - p.d() * dt + noise * s.u - half_c * s.u);
    return detail::apply_increment(s, du, dv, detail::total_change(s, dt, p));
}

struct SeedInfo {
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
};

struct Trajectory {
    Scheme scheme = Scheme::RK4Deterministic;
    ModelParams params{1.0, 1.0, 0.0, 1.0, 0.0};
    std::optional<SeedInfo> seed_info;
    double dt = 0.0;            // integration step
    std::size_t record_stride = 1;

    std::vector<double> times;  // recorded times, starting at 0
    std::vector<State> states;
    std::vector<bool> clamped;  // a clamp happened since the previous record

    std::vector<double> clamp_times; // every clamp, at full resolution

    // Trapezoidal integrals of u and v over [0, horizon] accumulated at every
    // integration step, independent of record_stride.
    std::optional<State> running_integral;

    std::size_t clamp_count() const noexcept { return clamp_times.size(); }
    double horizon() const noexcept { return times.empty() ? 0.0 : times.back(); }
    const State& terminal() const { return states.back(); }
};

struct SimulateOptions {
    std::size_t record_stride = 1;
};

/// Number of steps covering `horizon`; dt must divide it to 1e-9 relative.
inline std::size_t step_count(double horizon, double dt)
{
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be > 0");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be > 0");
    const double ratio = horizon / dt;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(n * dt - horizon) > 1e-9 * horizon)
        throw ConfigError("dt does not divide horizon into a whole number of steps");
    return static_cast<std::size_t>(n);
}

inline Trajectory simulate(Scheme scheme, const ModelParams& p, const State& x0, double horizon,
                           double dt, const BrownianPath* path = nullptr, SimulateOptions opts = {})
{
    const std::size_t n = step_count(horizon, dt);
    if (opts.record_stride == 0) throw ConfigError("record_stride must be >= 1");
    if (!(x0.u >= 0.0) || !(x0.v >= 0.0) || !std::isfinite(x0.u) || !std::isfinite(x0.v))
        throw ConfigError("initial state must be finite and nonnegative");
    if (is_stochastic(scheme)) {
        if (path == nullptr) throw ConfigError("stochastic scheme needs a Brownian path");
        if (std::abs(path->dt() - dt) > 1e-12 * dt)
            throw ConfigError("Brownian path dt does not match the integration dt");
        if (path->size() < n) throw ConfigError("Brownian path is shorter than the horizon");
    }

    Trajectory traj;
    traj.scheme = scheme;
    traj.params = p;
    traj.dt = dt;
    traj.record_stride = opts.record_stride;
    if (is_stochastic(scheme) && path != nullptr) traj.seed_info = SeedInfo{path->seed(), path->path_index()};

    const std::size_t n_records = n / opts.record_stride + 2;
    traj.times.reserve(n_records);
    traj.states.reserve(n_records);
    traj.clamped.reserve(n_records);

    State s = x0;
    State integral{0.0, 0.0};
    bool clamped_since_record = false;
    traj.times.push_back(0.0);
    traj.states.push_back(s);
    traj.clamped.push_back(false);

    for (std::size_t k = 0; k < n; ++k) {
        State next;
        bool clamped = false;
        switch (scheme) {
        case Scheme::RK4Deterministic: next = step_rk4(s, dt, p); break;
        case Scheme::EulerMaruyama: {
            const auto r = step_em(s, dt, path->increment(k), p);
            next = r.state;
            clamped = r.clamped;
            break;
        }
        case Scheme::Milstein: {
            const auto r = step_milstein(s, dt, path->increment(k), p);
            next = r.state;
            clamped = r.clamped;
            break;
        }
        }
        const double t = static_cast<double>(k + 1) * dt;
        if (!std::isfinite(next.u) || !std::isfinite(next.v))
            throw NumericalError(std::string(to_string(scheme)) + ": non-finite state at t = " +
                                 std::to_string(t));
        if (clamped) {
            traj.clamp_times.push_back(t);
            clamped_since_record = true;
        }
        integral.u += 0.5 * dt * (s.u + next.u);
        integral.v += 0.5 * dt * (s.v + next.v);
        s = next;

        if ((k + 1) % opts.record_stride == 0 || k + 1 == n) {
            traj.times.push_back(t);
            traj.states.push_back(s);
            traj.clamped.push_back(clamped_since_record);
            clamped_since_record = false;
        }
    }
    traj.running_integral = integral;
    return traj;
}

} // namespace caplab
