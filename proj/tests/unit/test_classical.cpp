#include <gtest/gtest.h>

#include "cbct/classical.hpp"
#include "cbct/eval/metrics.hpp"
#include "cbct/phantom.hpp"
#include "test_util.hpp"

using namespace cbct;

namespace {

// Frozen from an oracle run of the fixture below (360 degrees, 180 views,
// 64^3 uniform ball, Ram-Lak): measured PSNR minus a 0.5 dB margin.
constexpr double kFullArcBallPsnrThreshold = 24.49;  // measured 24.9978 dB

struct BallFixture {
    VolumeGrid grid = make_cubic_grid(64, 1.0);
    Volume gt = make_phantom(PhantomKind::UniformBall, grid, 0);
    ProjectionSet full = forward_project(gt, make_desk_geometry(grid, 180, 360));
};

const BallFixture& ball() {
    static const BallFixture f;
    return f;
}

double psnr_vs_gt(const Volume& recon, const Volume& gt) { return eval::psnr(clamp_volume(recon, 0, 1), gt); }

}  // namespace

TEST(Fdk, ZeroProjectionsGiveZeroVolume) {
    const auto grid = make_cubic_grid(16, 1.0);
    const auto v = recon::fdk_reconstruct(ProjectionSet(make_desk_geometry(grid, 12, 360)), grid,
                                          recon::RampFilter::RamLak);
    for (float x : v.data()) EXPECT_EQ(x, 0.0f);
}

TEST(Fdk, LinearInProjections) {
    const auto grid = make_cubic_grid(16, 1.0);
    const auto g = make_desk_geometry(grid, 12, 360);
    const auto p1 = forward_project(cbct_test::random_volume(grid, 1), g);
    const auto p2 = forward_project(cbct_test::random_volume(grid, 2), g);
    ProjectionSet s(g);
    for (std::int64_t i = 0; i < s.size(); ++i) s.data()[i] = p1.data()[i] + p2.data()[i];
    for (auto f : {recon::RampFilter::RamLak, recon::RampFilter::HannRamLak}) {
        const auto a = recon::fdk_reconstruct(p1, grid, f), b = recon::fdk_reconstruct(p2, grid, f),
                   c = recon::fdk_reconstruct(s, grid, f);
        double num = 0, den = 0;
        for (std::int64_t i = 0; i < c.size(); ++i) {
            num += std::pow(c[i] - a[i] - b[i], 2);
            den += std::pow(c[i], 2);
        }
        EXPECT_LE(std::sqrt(num / den), 1e-5);
    }
}

TEST(Fdk, FewerThanTwoViewsThrows) {
    const auto grid = make_cubic_grid(8, 1.0);
    EXPECT_THROW(recon::fdk_reconstruct(ProjectionSet(make_desk_geometry(grid, 1, 360)), grid, recon::RampFilter::RamLak),
                 std::invalid_argument);
}

TEST(Fdk, FilterNames) {
    for (auto f : {recon::RampFilter::RamLak, recon::RampFilter::HannRamLak}) {
        EXPECT_EQ(recon::parse_ramp_filter(recon::to_string(f)), f);
    }
    EXPECT_THROW(recon::parse_ramp_filter("shepp_logan"), std::invalid_argument);
}

TEST(Fdk, FullArcBallAboveFrozenThreshold) {
    const auto& f = ball();
    const double full = psnr_vs_gt(recon::fdk_reconstruct(f.full, f.grid, recon::RampFilter::RamLak), f.gt);
    const double sparse =
        psnr_vs_gt(recon::fdk_reconstruct(subsample_views(f.full, 20), f.grid, recon::RampFilter::RamLak), f.gt);
    RecordProperty("psnr_full", std::to_string(full));
    RecordProperty("psnr_sparse", std::to_string(sparse));
    EXPECT_GE(full, kFullArcBallPsnrThreshold);
    EXPECT_LT(sparse, full);
}

TEST(Fdk, Deterministic) {
    const auto grid = make_cubic_grid(16, 1.0);
    const auto p = forward_project(cbct_test::random_volume(grid, 4), make_desk_geometry(grid, 10, 360));
    EXPECT_EQ(recon::fdk_reconstruct(p, grid, recon::RampFilter::HannRamLak),
              recon::fdk_reconstruct(p, grid, recon::RampFilter::HannRamLak));
}

TEST(Sirt, ZeroProjectionsStayZero) {
    const auto grid = make_cubic_grid(12, 1.0);
    const auto r = recon::sirt_reconstruct(ProjectionSet(make_desk_geometry(grid, 6, 360)), grid, 5);
    for (float x : r.volume.data()) EXPECT_EQ(x, 0.0f);
    ASSERT_EQ(r.residual.size(), 6u);
    ASSERT_EQ(r.weighted_residual.size(), 6u);
}

TEST(Sirt, ZeroIterationsThrows) {
    const auto grid = make_cubic_grid(8, 1.0);
    EXPECT_THROW(recon::sirt_reconstruct(ProjectionSet(make_desk_geometry(grid, 4, 360)), grid, 0),
                 std::invalid_argument);
}

TEST(Sirt, ResidualsNonIncreasingOnConsistentData) {
    const auto grid = make_cubic_grid(24, 1.0);
    const Volume gt = make_phantom(PhantomKind::UniformBall, grid, 0);
    const auto y = forward_project(gt, make_desk_geometry(grid, 12, 360));
    const auto r = recon::sirt_reconstruct(y, grid, 60);
    for (std::size_t k = 1; k < r.residual.size(); ++k) {
        EXPECT_LE(r.weighted_residual[k], r.weighted_residual[k - 1] * (1 + 1e-6)) << k;
        EXPECT_LE(r.residual[k], r.residual[k - 1] * (1 + 1e-6)) << k;
    }
    EXPECT_LT(r.residual.back(), 0.2 * r.residual.front());
    EXPECT_GE(r.volume.min_value(), 0.0f);
    EXPECT_EQ(r.volume, recon::sirt_reconstruct(y, grid, 60).volume);
}
