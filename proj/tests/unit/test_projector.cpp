#include <gtest/gtest.h>

#include <cmath>

#include "cbct/phantom.hpp"
#include "cbct/projector.hpp"
#include "test_util.hpp"

using namespace cbct;

namespace {

double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

double norm(std::span<const float> a) { return std::sqrt(dot(a, a)); }

ScanGeometry small_geometry(int views = 8) { return make_circular_geometry(40, 60, 24, 24, 1.5, views, 360); }

ProjectionSet random_projections(const ScanGeometry& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> d(-1, 1);
    ProjectionSet p(g);
    for (auto& v : p.data()) v = d(rng);
    return p;
}

}  // namespace

TEST(Projector, ZeroVolumeGivesZeroProjections) {
    const auto p = forward_project(Volume(make_cubic_grid(16, 1.0)), small_geometry());
    for (float v : p.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Projector, ForwardIsLinear) {
    const auto grid = make_cubic_grid(16, 1.0);
    const Volume v = cbct_test::random_volume(grid, 3);
    const auto p1 = forward_project(v, small_geometry());
    const auto p2 = forward_project(scale_volume(v, 2.0f), small_geometry());
    for (std::int64_t i = 0; i < p1.size(); ++i) EXPECT_NEAR(p2.data()[i], 2.0f * p1.data()[i], 1e-5f * (1 + std::abs(p1.data()[i])));
}

TEST(Projector, CentralRayThroughBallHasChordLength) {
    const auto grid = make_cubic_grid(64, 1.0);
    const Volume ball = make_phantom(PhantomKind::UniformBall, grid, 0);
    // Odd detector so that one pixel centre lies on the source-axis ray.
    const auto g = make_circular_geometry(200, 300, 65, 65, 1.0, 4, 360);
    const auto p = forward_project(ball, g);
    const double chord = 2 * 0.4 * 64;
    for (int v = 0; v < 4; ++v) EXPECT_NEAR(p.at(v, 32, 32), chord, 0.02 * chord);
}

TEST(Projector, RayMissingGridContributesZero) {
    const auto grid = make_cubic_grid(8, 1.0);
    const Volume v(grid, 1.0f);
    const auto g = make_circular_geometry(40, 60, 3, 101, 1.5, 2, 360);
    const auto p = forward_project(v, g);
    EXPECT_EQ(p.at(0, 1, 0), 0.0f);
    EXPECT_EQ(p.at(0, 1, 100), 0.0f);
    EXPECT_GT(p.at(0, 1, 50), 0.0f);
}

TEST(Projector, AdjointIdentityOnRandomInstances) {
    const auto grid = make_cubic_grid(16, 1.0);
    const auto g = small_geometry();
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Volume x = cbct_test::random_volume(grid, 100 + s, -1, 1);
        const ProjectionSet y = random_projections(g, 200 + s);
        const auto ax = forward_project(x, g);
        const auto aty = back_project(y, grid);
        const double defect = std::abs(dot(ax.data(), y.data()) - dot(x.data(), aty.data())) /
                              (norm(ax.data()) * norm(y.data()));
        EXPECT_LE(defect, 1e-4) << "instance " << s;
    }
}

TEST(Projector, BackProjectionZeroAndLinear) {
    const auto grid = make_cubic_grid(16, 1.0);
    const auto g = small_geometry();
    const auto z = back_project(ProjectionSet(g), grid);
    for (float v : z.data()) EXPECT_EQ(v, 0.0f);

    const auto p1 = random_projections(g, 1), p2 = random_projections(g, 2);
    ProjectionSet sum(g);
    for (std::int64_t i = 0; i < sum.size(); ++i) sum.data()[i] = p1.data()[i] + p2.data()[i];
    const auto b1 = back_project(p1, grid), b2 = back_project(p2, grid), bs = back_project(sum, grid);
    for (std::int64_t i = 0; i < bs.size(); ++i) EXPECT_NEAR(bs[i], b1[i] + b2[i], 1e-4f * (1 + std::abs(bs[i])));
}

TEST(Projector, DeterministicAndPartitionInvariant) {
    const auto grid = make_cubic_grid(16, 1.0);
    const auto g = small_geometry(9);
    const auto p = random_projections(g, 5);
    const Volume x = cbct_test::random_volume(grid, 6);
    for (int threads : {1, 2, 3}) {
        ProjectorOptions o{threads};
        EXPECT_EQ(back_project(p, grid, o), back_project(p, grid, o));
        EXPECT_EQ(forward_project(x, g, o), forward_project(x, g, o));
    }
    const auto b1 = back_project(p, grid, {1});
    const auto b3 = back_project(p, grid, {3});
    const double scale = norm(b1.data()) / std::sqrt(static_cast<double>(b1.size()));
    for (std::int64_t i = 0; i < b1.size(); ++i) EXPECT_NEAR(b1[i], b3[i], 1e-6 * scale);
    EXPECT_EQ(forward_project(x, g, {1}), forward_project(x, g, {3}));
}
