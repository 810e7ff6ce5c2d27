#pragma once

#include <cstdint>
#include <string_view>

#include "cbct/volume.hpp"

namespace cbct {

enum class PhantomKind { UniformBall, SheppLogan3d, NestedShells };

/// Parses "uniform_ball", "shepp_logan_3d" or "nested_shells".
PhantomKind parse_phantom_kind(std::string_view name);
std::string_view to_string(PhantomKind kind);

/// Deterministic test object with values in [0, 1].
///
/// Shapes live in normalized coordinates where the grid spans [-1, 1] along
/// its longest axis. uniform_ball and shepp_logan_3d ignore the seed.
Volume make_phantom(PhantomKind kind, const VolumeGrid& grid, std::uint64_t seed);

}  // namespace cbct
