#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gstrim {

// Row-major interleaved image buffer, double precision.
struct Image {
    int width = 0, height = 0, channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c) : width(w), height(h), channels(c),
                                 data(static_cast<std::size_t>(w) * h * c, 0.0) {}

    double& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool empty() const { return data.empty(); }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

// Binary PPM (P6, 8-bit). Values clamped to [0,1] on write. Requires 3 channels.
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);

// Raw float map with a 16-byte header: magic "TGSF", u32 width, u32 height,
// u32 channels, then little-endian f32 data, row-major interleaved.
void write_tgsf(const std::string& path, const Image& img);
Image read_tgsf(const std::string& path);

}  // namespace gstrim
