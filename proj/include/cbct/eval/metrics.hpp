#pragma once

#include <span>

#include "cbct/volume.hpp"

namespace cbct::eval {

/// 10 log10(range^2 / MSE); +infinity when the volumes are identical.
/// Throws ShapeError on differing grids, std::invalid_argument on range <= 0.
double psnr(const Volume& a, const Volume& b, double data_range = 1.0);
double psnr(std::span<const float> a, std::span<const float> b, double data_range = 1.0);

inline constexpr int kSsimWindow = 7;

/// Mean SSIM over every valid 7x7x7 uniform window (population statistics,
/// C1 = (0.01 R)^2, C2 = (0.03 R)^2). Throws ShapeError if a dimension is
/// shorter than the window.
double ssim(const Volume& a, const Volume& b, double data_range = 1.0);

/// One-sided Wilcoxon signed-rank test of H1: x tends to exceed y.
/// Zero differences are dropped; ties get average ranks. Exact null
/// distribution for n <= 20, normal approximation (continuity and tie
/// corrected) above. Throws std::invalid_argument if the lengths differ or
/// fewer than 5 non-zero differences remain.
double wilcoxon_one_sided(std::span<const double> x, std::span<const double> y);

inline constexpr int kWilcoxonExactMax = 20;
inline constexpr int kWilcoxonMinPairs = 5;

}  // namespace cbct::eval
