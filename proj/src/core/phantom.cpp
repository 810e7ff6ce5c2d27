#include "cbct/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace cbct {
namespace {

// Modified 3D Shepp-Logan: value, semi-axes (a, b, c), centre, Euler angles (deg).
struct Ellipsoid {
    double value, a, b, c, x0, y0, z0, phi, theta, psi;
};

constexpr std::array<Ellipsoid, 10> kSheppLogan{{
    {1.0, 0.6900, 0.920, 0.810, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.874, 0.780, 0.0, -0.0184, 0.0, 0.0, 0.0, 0.0},
    {-0.2, 0.1100, 0.310, 0.220, 0.22, 0.0, 0.0, -18.0, 0.0, 10.0},
    {-0.2, 0.1600, 0.410, 0.280, -0.22, 0.0, 0.0, 18.0, 0.0, 10.0},
    {0.1, 0.2100, 0.250, 0.410, 0.0, 0.35, -0.15, 0.0, 0.0, 0.0},
    {0.1, 0.0460, 0.046, 0.050, 0.0, 0.1, 0.25, 0.0, 0.0, 0.0},
    {0.1, 0.0460, 0.046, 0.050, 0.0, -0.1, 0.25, 0.0, 0.0, 0.0},
    {0.1, 0.0460, 0.023, 0.050, -0.08, -0.605, 0.0, 0.0, 0.0, 0.0},
    {0.1, 0.0230, 0.023, 0.020, 0.0, -0.606, 0.0, 0.0, 0.0, 0.0},
    {0.1, 0.0230, 0.046, 0.020, 0.06, -0.605, 0.0, 0.0, 0.0, 0.0},
}};

struct NormalizedCoords {
    double half_extent;
    const VolumeGrid& g;
    double x(int i) const { return (g.x_of(i) - g.origin[0]) / half_extent; }
    double y(int j) const { return (g.y_of(j) - g.origin[1]) / half_extent; }
    double z(int k) const { return (g.z_of(k) - g.origin[2]) / half_extent; }
};

NormalizedCoords coords_for(const VolumeGrid& g) {
    return {0.5 * std::max({g.nx, g.ny, g.nz}) * g.voxel_size, g};
}

void fill_ball(Volume& v, const NormalizedCoords& c) {
    const auto& g = v.grid();
    constexpr double r2 = 0.8 * 0.8;  // radius 0.4 of the full extent
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double x = c.x(i), y = c.y(j), z = c.z(k);
                if (x * x + y * y + z * z <= r2) v.at(i, j, k) = 1.0f;
            }
}

void fill_shepp_logan(Volume& v, const NormalizedCoords& c) {
    const auto& g = v.grid();
    std::vector<double> acc(static_cast<std::size_t>(g.voxel_count()), 0.0);
    for (const auto& e : kSheppLogan) {
        const double d2r = std::numbers::pi / 180.0;
        const double cphi = std::cos(e.phi * d2r), sphi = std::sin(e.phi * d2r);
        const double cth = std::cos(e.theta * d2r), sth = std::sin(e.theta * d2r);
        const double cpsi = std::cos(e.psi * d2r), spsi = std::sin(e.psi * d2r);
        // Rows of the z-x-z Euler rotation applied to the sample coordinate.
        const double r[3][3] = {
            {cpsi * cphi - cth * sphi * spsi, cpsi * sphi + cth * cphi * spsi, spsi * sth},
            {-spsi * cphi - cth * sphi * cpsi, -spsi * sphi + cth * cphi * cpsi, cpsi * sth},
            {sth * sphi, -sth * cphi, cth},
        };
        for (int k = 0; k < g.nz; ++k) {
            const double z = c.z(k);
            for (int j = 0; j < g.ny; ++j) {
                const double y = c.y(j);
                for (int i = 0; i < g.nx; ++i) {
                    const double x = c.x(i);
                    const double px = r[0][0] * x + r[0][1] * y + r[0][2] * z - e.x0;
                    const double py = r[1][0] * x + r[1][1] * y + r[1][2] * z - e.y0;
                    const double pz = r[2][0] * x + r[2][1] * y + r[2][2] * z - e.z0;
                    if (px * px / (e.a * e.a) + py * py / (e.b * e.b) + pz * pz / (e.c * e.c) <= 1.0) {
                        acc[static_cast<std::size_t>(g.index(i, j, k))] += e.value;
                    }
                }
            }
        }
    }
    double hi = 0.0;
    for (double a : acc) hi = std::max(hi, a);
    const double scale = hi > 0.0 ? 1.0 / hi : 1.0;
    for (std::size_t n = 0; n < acc.size(); ++n) {
        v[static_cast<std::int64_t>(n)] = static_cast<float>(std::clamp(acc[n] * scale, 0.0, 1.0));
    }
}

// Outer soft-tissue ball, a denser shell, an inner core and a few bright
// inclusions; radii and inclusion positions are jittered by the seed.
void fill_nested_shells(Volume& v, const NormalizedCoords& c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.04, 0.04);
    const double r_outer = 0.85 + jitter(rng);
    const double shell_in = 0.58 + jitter(rng);
    const double shell_out = shell_in + 0.10;
    const double r_core = 0.30 + jitter(rng);

    struct Inclusion {
        double x, y, z, r;
    };
    std::array<Inclusion, 3> inc{};
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (auto& b : inc) {
        const double az = 2.0 * std::numbers::pi * unit(rng);
        const double el = (unit(rng) - 0.5) * 0.8;
        const double rad = 0.40 + 0.08 * unit(rng);
        b = {rad * std::cos(az) * std::cos(el), rad * std::sin(az) * std::cos(el), rad * std::sin(el),
             0.07 + 0.04 * unit(rng)};
    }

    const auto& g = v.grid();
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double x = c.x(i), y = c.y(j), z = c.z(k);
                const double r = std::sqrt(x * x + y * y + z * z);
                double val = 0.0;
                if (r <= r_outer) val = 0.25;
                if (r >= shell_in && r <= shell_out) val = 0.6;
                if (r <= r_core) val = 0.45;
                for (const auto& b : inc) {
                    const double dx = x - b.x, dy = y - b.y, dz = z - b.z;
                    if (dx * dx + dy * dy + dz * dz <= b.r * b.r) val = 1.0;
                }
                v.at(i, j, k) = static_cast<float>(val);
            }
}

}  // namespace

PhantomKind parse_phantom_kind(std::string_view name) {
    if (name == "uniform_ball") return PhantomKind::UniformBall;
    if (name == "shepp_logan_3d") return PhantomKind::SheppLogan3d;
    if (name == "nested_shells") return PhantomKind::NestedShells;
    throw std::invalid_argument("unknown phantom kind '" + std::string(name) + "'");
}

std::string_view to_string(PhantomKind kind) {
    switch (kind) {
        case PhantomKind::UniformBall: return "uniform_ball";
        case PhantomKind::SheppLogan3d: return "shepp_logan_3d";
        case PhantomKind::NestedShells: return "nested_shells";
    }
    return "unknown";
}

Volume make_phantom(PhantomKind kind, const VolumeGrid& grid, std::uint64_t seed) {
    Volume v(grid);
    const auto c = coords_for(grid);
    switch (kind) {
        case PhantomKind::UniformBall: fill_ball(v, c); break;
        case PhantomKind::SheppLogan3d: fill_shepp_logan(v, c); break;
        case PhantomKind::NestedShells: fill_nested_shells(v, c, seed); break;
    }
    return v;
}

}  // namespace cbct
