#pragma once

// Stochastic capital-labour model with logistic job growth:
//
//   du = [r u (1 - u/K) - m u v] dt - sigma u v dB
//   dv = [m u v - d v] dt          + sigma u v dB
//
// u counts free jobs, v the unemployed labour force. Everything in this
// header is a pure function of its arguments.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "caplab/errors.hpp"

namespace caplab {

/// The five model constants. r, K and d must be strictly positive; m and
/// sigma may be zero (m = 0 decouples the compartments, sigma = 0 is the
/// deterministic model).
class ModelParams {
public:
    ModelParams(double r, double K, double m, double d, double sigma)
        : r_(r), K_(K), m_(m), d_(d), sigma_(sigma)
    {
        auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
        auto nonneg = [](double x) { return std::isfinite(x) && x >= 0.0; };
        if (!positive(r_)) throw ConfigError("model parameter r must be finite and > 0");
        if (!positive(K_)) throw ConfigError("model parameter K must be finite and > 0");
        if (!nonneg(m_)) throw ConfigError("model parameter m must be finite and >= 0");
        if (!positive(d_)) throw ConfigError("model parameter d must be finite and > 0");
        if (!nonneg(sigma_)) throw ConfigError("model parameter sigma must be finite and >= 0");
    }

    double r() const noexcept { return r_; }
    double K() const noexcept { return K_; }
    double m() const noexcept { return m_; }
    double d() const noexcept { return d_; }
    double sigma() const noexcept { return sigma_; }

    /// min(r, d), the contraction rate of the total population u + v.
    double mu() const noexcept { return std::min(r_, d_); }

    ModelParams with_m(double m) const { return {r_, K_, m, d_, sigma_}; }
    ModelParams with_sigma(double sigma) const { return {r_, K_, m_, d_, sigma}; }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;

private:
    double r_, K_, m_, d_, sigma_;
};

struct State {
    double u = 0.0;
    double v = 0.0;

    double total() const noexcept { return u + v; }
    friend bool operator==(const State&, const State&) = default;
};

/// A pair of rates (du/dt, dv/dt) or diffusion coefficients.
struct Rates {
    double u = 0.0;
    double v = 0.0;
    friend bool operator==(const Rates&, const Rates&) = default;
};

inline Rates drift(const State& s, const ModelParams& p) noexcept
{
    const double filling = p.m() * s.u * s.v;
    return {p.r() * s.u * (1.0 - s.u / p.K()) - filling, filling - p.d() * s.v};
}

/// Both components are the same product with opposite sign, so they always
/// sum to exactly zero.
inline Rates diffusion(const State& s, const ModelParams& p) noexcept
{
    const double g = p.sigma() * s.u * s.v;
    return {-g, g};
}

namespace detail {
inline void require_noise(const ModelParams& p, std::string_view what)
{
    if (!(p.sigma() > 0.0))
        throw DomainError(std::string(what) + " is undefined for sigma = 0");
}
} // namespace detail

/// m^2 / (2 sigma^2) - d. Negative values imply almost-sure extinction of v.
inline double extinction_index(const ModelParams& p)
{
    detail::require_noise(p, "extinction index");
    return p.m() * p.m() / (2.0 * p.sigma() * p.sigma()) - p.d();
}

/// Stochastic reproduction threshold r/d - sigma^2 K^2 / (2d).
inline double r0s(const ModelParams& p) noexcept
{
    return p.r() / p.d() - p.sigma() * p.sigma() * p.K() * p.K() / (2.0 * p.d());
}

inline double m_minus_r_over_K(const ModelParams& p) noexcept { return p.m() - p.r() / p.K(); }

/// Lower bound on liminf of the running mean of v, d (R0s - 1) / (m + d).
/// Absent unless R0s > 1 and m > r/K.
inline std::optional<double> persistence_floor(const ModelParams& p) noexcept
{
    const double R = r0s(p);
    if (!(R > 1.0) || !(m_minus_r_over_K(p) > 0.0)) return std::nullopt;
    return p.d() * (R - 1.0) / (p.m() + p.d());
}

/// rK / min(r, d); limsup of each compartment is below this almost surely.
/// Evaluated as K * (r / mu) so that it is exactly K when mu = r.
inline double ultimate_bound(const ModelParams& p) noexcept { return p.K() * (p.r() / p.mu()); }

/// Positive root of the deterministic vector field, (d/m, (r/m)(1 - d/(mK))),
/// present only when d/m < K.
inline std::optional<State> interior_equilibrium(const ModelParams& p) noexcept
{
    if (!(p.m() > 0.0)) return std::nullopt;
    const double u = p.d() / p.m();
    if (!(u < p.K())) return std::nullopt;
    return State{u, (p.r() / p.m()) * (1.0 - u / p.K())};
}

enum class Regime { Extinction, Persistence, Indeterminate };

inline std::string_view to_string(Regime r) noexcept
{
    switch (r) {
    case Regime::Extinction: return "extinction";
    case Regime::Persistence: return "persistence";
    case Regime::Indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

struct RegimeReport {
    double extinction_index = 0.0;
    double r0s = 0.0;
    double m_minus_r_over_K = 0.0;
    std::optional<double> persistence_floor;
    double ultimate_bound = 0.0;
    Regime classification = Regime::Indeterminate;
    // Extinction and persistence conditions held at once; Extinction wins.
    bool conflict = false;
};

inline RegimeReport classify_regime(const ModelParams& p)
{
    RegimeReport rep;
    rep.extinction_index = extinction_index(p);
    rep.r0s = r0s(p);
    rep.m_minus_r_over_K = m_minus_r_over_K(p);
    rep.persistence_floor = persistence_floor(p);
    rep.ultimate_bound = ultimate_bound(p);

    const bool extinct = rep.extinction_index < 0.0;
    const bool persists = rep.persistence_floor.has_value();
    if (extinct) {
        rep.classification = Regime::Extinction;
        rep.conflict = persists;
    } else if (persists) {
        rep.classification = Regime::Persistence;
    } else {
        rep.classification = Regime::Indeterminate;
    }
    return rep;
}

} // namespace caplab
