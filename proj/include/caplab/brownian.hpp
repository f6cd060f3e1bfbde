#pragma once

// Reproducible Brownian paths.
//
// Path (seed, path_index) is drawn from a Philox4x32-10 counter-based
// generator keyed by the seed, with the path index in the upper half of the
// counter. Any path can be produced in isolation, so ensembles do not depend
// on worker count or scheduling. Normals come from Box-Muller on pairs of
// 53-bit uniforms; increment 2j uses the cosine branch of block j and
// increment 2j+1 the sine branch.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "caplab/errors.hpp"

namespace caplab {

namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline Counter round(const Counter& c, const Key& k) noexcept
{
    constexpr std::uint64_t M0 = 0xD2511F53u;
    constexpr std::uint64_t M1 = 0xCD9E8D57u;
    const std::uint64_t p0 = M0 * c[0];
    const std::uint64_t p1 = M1 * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

/// Philox4x32 with 10 rounds.
inline Counter philox4x32_10(Counter c, Key k) noexcept
{
    constexpr std::uint32_t W0 = 0x9E3779B9u;
    constexpr std::uint32_t W1 = 0xBB67AE85u;
    for (int i = 0; i < 10; ++i) {
        if (i > 0) {
            k[0] += W0;
            k[1] += W1;
        }
        c = round(c, k);
    }
    return c;
}

} // namespace philox

/// Standard normal pair for block `block` of stream (seed, path_index).
inline std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t path_index,
                                         std::uint64_t block) noexcept
{
    const philox::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    const philox::Counter ctr{static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                              static_cast<std::uint32_t>(path_index),
                              static_cast<std::uint32_t>(path_index >> 32)};
    const auto out = philox::philox4x32_10(ctr, key);
    const std::uint64_t a = (std::uint64_t{out[0]} << 32) | out[1];
    const std::uint64_t b = (std::uint64_t{out[2]} << 32) | out[3];
    constexpr double two_m53 = 0x1.0p-53;
    const double u1 = static_cast<double>((a >> 11) + 1) * two_m53; // (0, 1]
    const double u2 = static_cast<double>(b >> 11) * two_m53;       // [0, 1)
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

/// A sampled Brownian path B on the grid t_k = k dt, stored as the values
/// B(t_0) = 0, B(t_1), ..., B(t_n). Increments are differences of adjacent
/// values, so a coarsened path agrees with its parent exactly at every shared
/// grid point.
class BrownianPath {
public:
    BrownianPath(double dt, std::vector<double> points, std::uint64_t seed = 0,
                 std::uint64_t path_index = 0)
        : dt_(dt), points_(std::move(points)), seed_(seed), path_index_(path_index)
    {
        if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw ConfigError("Brownian path needs dt > 0");
        if (points_.size() < 2) throw ConfigError("Brownian path needs at least one increment");
        if (points_.front() != 0.0) throw ConfigError("Brownian path must start at B(0) = 0");
    }

    /// Builds a path by left-to-right summation of the given increments.
    static BrownianPath from_increments(double dt, std::span<const double> increments,
                                        std::uint64_t seed = 0, std::uint64_t path_index = 0)
    {
        std::vector<double> pts(increments.size() + 1, 0.0);
        for (std::size_t k = 0; k < increments.size(); ++k) pts[k + 1] = pts[k] + increments[k];
        return {dt, std::move(pts), seed, path_index};
    }

    double dt() const noexcept { return dt_; }
    std::size_t size() const noexcept { return points_.size() - 1; }
    double horizon() const noexcept { return static_cast<double>(size()) * dt_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t path_index() const noexcept { return path_index_; }

    double increment(std::size_t k) const noexcept { return points_[k + 1] - points_[k]; }
    double value(std::size_t k) const noexcept { return points_[k]; }
    std::span<const double> values() const noexcept { return points_; }

    std::vector<double> increments() const
    {
        std::vector<double> out(size());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = increment(k);
        return out;
    }

private:
    double dt_;
    std::vector<double> points_;
    std::uint64_t seed_;
    std::uint64_t path_index_;
};

inline BrownianPath generate(std::uint64_t seed, std::uint64_t path_index, double dt, std::size_t n_steps)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("generate: dt must be > 0");
    if (n_steps == 0) throw ConfigError("generate: n_steps must be >= 1");
    const double scale = std::sqrt(dt);
    std::vector<double> pts(n_steps + 1);
    pts[0] = 0.0;
    for (std::size_t k = 0; k < n_steps; k += 2) {
        const auto z = normal_pair(seed, path_index, k / 2);
        pts[k + 1] = pts[k] + scale * z[0];
        if (k + 1 < n_steps) pts[k + 2] = pts[k + 1] + scale * z[1];
    }
    return {dt, std::move(pts), seed, path_index};
}

/// Path with step factor*dt sampled at every factor-th grid point of `path`.
inline BrownianPath coarsen(const BrownianPath& path, std::size_t factor)
{
    if (factor == 0) throw ConfigError("coarsen: factor must be >= 1");
    if (path.size() % factor != 0)
        throw ConfigError("coarsen: factor " + std::to_string(factor) + " does not divide " +
                          std::to_string(path.size()) + " increments");
    if (factor == 1) return path;
    const auto fine = path.values();
    std::vector<double> pts(path.size() / factor + 1);
    for (std::size_t k = 0; k < pts.size(); ++k) pts[k] = fine[k * factor];
    return {path.dt() * static_cast<double>(factor), std::move(pts), path.seed(), path.path_index()};
}

// Binary dump: 32-byte little-endian header
//   [0,6) "BPATH1"  [6,8) zero  [8,16) dt f64  [16,20) n_steps u32
//   [20,28) seed u64  [28,32) path_index u32
// followed by n_steps increments as f64.

namespace detail {
template <class T>
void put_le(std::ostream& os, T value)
{
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<unsigned char, sizeof(T)> buf;
    std::memcpy(buf.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
    os.write(reinterpret_cast<const char*>(buf.data()), sizeof(T));
}

template <class T>
T get_le(std::istream& is)
{
    std::array<unsigned char, sizeof(T)> buf;
    if (!is.read(reinterpret_cast<char*>(buf.data()), sizeof(T)))
        throw ConfigError("BPATH1: truncated input");
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
    T value;
    std::memcpy(&value, buf.data(), sizeof(T));
    return value;
}
} // namespace detail

inline constexpr std::array<char, 6> bpath_magic{'B', 'P', 'A', 'T', 'H', '1'};

inline void write_binary(std::ostream& os, const BrownianPath& path)
{
    if (path.size() > UINT32_MAX || path.path_index() > UINT32_MAX)
        throw ConfigError("BPATH1: n_steps and path_index must fit in 32 bits");
    os.write(bpath_magic.data(), bpath_magic.size());
    detail::put_le<std::uint16_t>(os, 0);
    detail::put_le<double>(os, path.dt());
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(path.size()));
    detail::put_le<std::uint64_t>(os, path.seed());
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(path.path_index()));
    for (std::size_t k = 0; k < path.size(); ++k) detail::put_le<double>(os, path.increment(k));
}

inline BrownianPath read_binary(std::istream& is)
{
    std::array<char, 6> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != bpath_magic)
        throw ConfigError("BPATH1: bad magic");
    (void)detail::get_le<std::uint16_t>(is);
    const auto dt = detail::get_le<double>(is);
    const auto n = detail::get_le<std::uint32_t>(is);
    const auto seed = detail::get_le<std::uint64_t>(is);
    const auto index = detail::get_le<std::uint32_t>(is);
    std::vector<double> inc(n);
    for (auto& x : inc) x = detail::get_le<double>(is);
    return BrownianPath::from_increments(dt, inc, seed, index);
}

} // namespace caplab
