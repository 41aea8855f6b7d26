#include "gstrim/image.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace gstrim {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

}  // namespace

void write_ppm(const std::string& path, const Image& img) {
    if (img.channels != 3) fail(path, "PPM output requires 3 channels");
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot open for writing");
    f << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double v = std::clamp(img.at(x, y, c), 0.0, 1.0);
                row[static_cast<std::size_t>(x) * 3 + c] =
                    static_cast<unsigned char>(v * 255.0 + 0.5);
            }
        }
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!f) fail(path, "write failed");
}

Image read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot open");
    std::string magic;
    f >> magic;
    if (magic != "P6") fail(path, "not a P6 PPM");
    auto next_token = [&]() {
        // Skip whitespace and '#' comments.
        std::string tok;
        for (;;) {
            f >> tok;
            if (!f) fail(path, "truncated header");
            if (tok[0] == '#') {
                std::string rest;
                std::getline(f, rest);
                continue;
            }
            return tok;
        }
    };
    int w = std::stoi(next_token());
    int h = std::stoi(next_token());
    int maxval = std::stoi(next_token());
    if (w <= 0 || h <= 0) fail(path, "bad dimensions");
    if (maxval != 255) fail(path, "only maxval 255 supported");
    f.get();  // single whitespace after maxval
    Image img(w, h, 3);
    std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * 3);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) fail(path, "truncated pixel data");
    for (std::size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i] / 255.0;
    return img;
}

void write_tgsf(const std::string& path, const Image& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot open for writing");
    f.write("TGSF", 4);
    std::uint32_t dims[3] = {static_cast<std::uint32_t>(img.width),
                             static_cast<std::uint32_t>(img.height),
                             static_cast<std::uint32_t>(img.channels)};
    f.write(reinterpret_cast<const char*>(dims), 12);
    std::vector<float> buf(img.data.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(img.data[i]);
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!f) fail(path, "write failed");
}

Image read_tgsf(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot open");
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "TGSF", 4) != 0) fail(path, "bad magic, expected TGSF");
    std::uint32_t dims[3];
    f.read(reinterpret_cast<char*>(dims), 12);
    if (!f) fail(path, "truncated header");
    if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0 || dims[2] > 16)
        fail(path, "implausible dimensions");
    Image img(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]));
    std::vector<float> buf(img.data.size());
    f.read(reinterpret_cast<char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!f) fail(path, "truncated pixel data");
    for (std::size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i];
    return img;
}

}  // namespace gstrim
