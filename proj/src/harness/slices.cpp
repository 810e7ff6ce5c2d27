#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include "cbct/errors.hpp"
#include "cbct/harness/harness.hpp"

namespace cbct::harness {

SliceAxis parse_slice_axis(std::string_view s) {
    if (s == "x") return SliceAxis::x;
    if (s == "y") return SliceAxis::y;
    if (s == "z") return SliceAxis::z;
    throw std::invalid_argument("unknown slice axis '" + std::string(s) + "' (expected x, y or z)");
}

namespace {

char axis_char(SliceAxis a) { return a == SliceAxis::x ? 'x' : a == SliceAxis::y ? 'y' : 'z'; }

void write_png(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels, int width, int height) {
    std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!file) throw std::runtime_error("cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png: cannot allocate writer");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, info ? &info : nullptr);
        throw std::runtime_error("png: failed writing " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < height; ++r) {
        png_write_row(png, const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(r) * width));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

std::vector<std::uint8_t> slice_pixels(const Volume& v, SliceAxis axis, int index, const Volume* reference,
                                       int* width, int* height) {
    const auto& g = v.grid();
    const int extent = axis == SliceAxis::x ? g.nx : axis == SliceAxis::y ? g.ny : g.nz;
    if (index < 0 || index >= extent) {
        throw std::out_of_range("slice index " + std::to_string(index) + " outside [0, " + std::to_string(extent) +
                                ") on axis " + axis_char(axis));
    }
    if (reference && !(reference->grid() == g)) throw ShapeError("error map: volumes are on different grids");

    double err_max = 0.0;
    if (reference) {
        for (std::int64_t i = 0; i < v.size(); ++i) {
            err_max = std::max(err_max, std::abs(static_cast<double>(v[i]) - (*reference)[i]));
        }
    }
    const int w = axis == SliceAxis::x ? g.ny : g.nx;
    const int h = axis == SliceAxis::z ? g.ny : g.nz;
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            int x = c, y = r, z = index;
            if (axis == SliceAxis::y) y = index, z = r;
            if (axis == SliceAxis::x) x = index, y = c, z = r;
            double val = v.at(x, y, z);
            if (reference) {
                val = err_max > 0.0 ? std::abs(val - reference->at(x, y, z)) / err_max : 0.0;
            }
            val = std::clamp(val, 0.0, 1.0);
            px[static_cast<std::size_t>(r) * w + c] = static_cast<std::uint8_t>(std::lround(val * 255.0));
        }
    }
    *width = w;
    *height = h;
    return px;
}

std::vector<std::filesystem::path> export_slices(const Volume& v, SliceAxis axis, const std::vector<int>& indices,
                                                 const std::filesystem::path& out_dir, const Volume* reference,
                                                 const std::string& prefix) {
    std::vector<std::vector<std::uint8_t>> images;
    int w = 0, h = 0;
    for (int idx : indices) images.push_back(slice_pixels(v, axis, idx, reference, &w, &h));
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        auto path = out_dir / (prefix + "_" + axis_char(axis) + std::to_string(indices[i]) + ".png");
        write_png(path, images[i], w, h);
        written.push_back(path);
    }
    return written;
}

}  // namespace cbct::harness
