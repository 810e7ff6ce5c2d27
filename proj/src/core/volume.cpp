#include "cbct/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cbct/errors.hpp"

namespace cbct {

Volume::Volume(VolumeGrid grid, float fill) : grid_(grid) {
    grid_.validate();
    data_.assign(static_cast<std::size_t>(grid_.voxel_count()), fill);
}

Volume::Volume(VolumeGrid grid, std::vector<float> data) : grid_(grid), data_(std::move(data)) {
    grid_.validate();
    if (static_cast<std::int64_t>(data_.size()) != grid_.voxel_count()) {
        throw ShapeError("volume data has " + std::to_string(data_.size()) + " elements, grid needs " +
                         std::to_string(grid_.voxel_count()));
    }
}

bool Volume::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

float Volume::max_value() const { return data_.empty() ? 0.0f : *std::max_element(data_.begin(), data_.end()); }
float Volume::min_value() const { return data_.empty() ? 0.0f : *std::min_element(data_.begin(), data_.end()); }

ProjectionSet::ProjectionSet(ScanGeometry geometry, float fill) : geometry_(std::move(geometry)) {
    geometry_.validate();
    data_.assign(static_cast<std::size_t>(geometry_.pixels_per_view() * geometry_.n_views), fill);
}

ProjectionSet::ProjectionSet(ScanGeometry geometry, std::vector<float> data)
    : geometry_(std::move(geometry)), data_(std::move(data)) {
    geometry_.validate();
    if (static_cast<std::int64_t>(data_.size()) != geometry_.pixels_per_view() * geometry_.n_views) {
        throw ShapeError("projection data has " + std::to_string(data_.size()) +
                         " elements, geometry needs " +
                         std::to_string(geometry_.pixels_per_view() * geometry_.n_views));
    }
}

std::span<const float> ProjectionSet::view(int v) const {
    const auto n = geometry_.pixels_per_view();
    return std::span<const float>(data_).subspan(static_cast<std::size_t>(v * n), static_cast<std::size_t>(n));
}

std::span<float> ProjectionSet::view(int v) {
    const auto n = geometry_.pixels_per_view();
    return std::span<float>(data_).subspan(static_cast<std::size_t>(v * n), static_cast<std::size_t>(n));
}

float& ProjectionSet::at(int v, int row, int col) {
    return data_[(static_cast<std::size_t>(v) * geometry_.det_rows + row) * geometry_.det_cols + col];
}

float ProjectionSet::at(int v, int row, int col) const {
    return data_[(static_cast<std::size_t>(v) * geometry_.det_rows + row) * geometry_.det_cols + col];
}

bool ProjectionSet::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

bool ProjectionSet::operator==(const ProjectionSet& o) const {
    const auto& a = geometry_;
    const auto& b = o.geometry_;
    return a.sod == b.sod && a.sdd == b.sdd && a.det_rows == b.det_rows && a.det_cols == b.det_cols &&
           a.det_pitch == b.det_pitch && a.n_views == b.n_views && a.arc_deg == b.arc_deg &&
           a.view_angles == b.view_angles && data_ == o.data_;
}

ProjectionSet subsample_views(const ProjectionSet& proj, int m) {
    const ScanGeometry& g = proj.geometry();
    if (m < 1 || m > g.n_views) {
        throw std::out_of_range("subsample_views: m=" + std::to_string(m) + " outside [1, " +
                                std::to_string(g.n_views) + "]");
    }
    ScanGeometry sub = g;
    sub.n_views = m;
    sub.view_angles.resize(m);
    std::vector<float> data(static_cast<std::size_t>(g.pixels_per_view() * m));
    for (int i = 0; i < m; ++i) {
        const int src = static_cast<int>(std::int64_t{i} * g.n_views / m);
        sub.view_angles[i] = g.view_angles[src];
        const auto v = proj.view(src);
        std::copy(v.begin(), v.end(), data.begin() + static_cast<std::ptrdiff_t>(i * g.pixels_per_view()));
    }
    return ProjectionSet(std::move(sub), std::move(data));
}

Volume clamp_volume(const Volume& v, float lo, float hi) {
    Volume out = v;
    for (auto& x : out.data()) x = std::clamp(x, lo, hi);
    return out;
}

Volume scale_volume(const Volume& v, float s) {
    Volume out = v;
    for (auto& x : out.data()) x *= s;
    return out;
}

}  // namespace cbct
