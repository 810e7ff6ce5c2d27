#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cbct/geometry.hpp"

namespace cbct {

/// Voxel data on a VolumeGrid, x-fastest (index = x + nx * (y + ny * z)).
class Volume {
 public:
    Volume() = default;
    explicit Volume(VolumeGrid grid, float fill = 0.0f);
    Volume(VolumeGrid grid, std::vector<float> data);

    const VolumeGrid& grid() const { return grid_; }
    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

    float& at(int x, int y, int z) { return data_[grid_.index(x, y, z)]; }
    float at(int x, int y, int z) const { return data_[grid_.index(x, y, z)]; }
    float& operator[](std::int64_t i) { return data_[i]; }
    float operator[](std::int64_t i) const { return data_[i]; }

    bool all_finite() const;
    float max_value() const;
    float min_value() const;

    bool operator==(const Volume&) const = default;

 private:
    VolumeGrid grid_;
    std::vector<float> data_;
};

/// Stack of detector images, layout [view][row][col] with col fastest.
class ProjectionSet {
 public:
    ProjectionSet() = default;
    explicit ProjectionSet(ScanGeometry geometry, float fill = 0.0f);
    ProjectionSet(ScanGeometry geometry, std::vector<float> data);

    const ScanGeometry& geometry() const { return geometry_; }
    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

    std::span<const float> view(int v) const;
    std::span<float> view(int v);
    float& at(int v, int row, int col);
    float at(int v, int row, int col) const;

    bool all_finite() const;

    bool operator==(const ProjectionSet& o) const;

 private:
    ScanGeometry geometry_;
    std::vector<float> data_;
};

/// Keeps m of the n views, chosen at a uniform angular stride
/// (view floor(i * n / m) for i = 0..m-1). The arc is unchanged.
ProjectionSet subsample_views(const ProjectionSet& proj, int m);

/// Elementwise helpers used by the reconstruction and evaluation code.
Volume clamp_volume(const Volume& v, float lo, float hi);
Volume scale_volume(const Volume& v, float s);

}  // namespace cbct
