#include "gstrim/ply.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gstrim {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

const char* kSceneFields[] = {"x",     "y",     "z",      "scale_0", "scale_1", "scale_2",
                              "rot_0", "rot_1", "rot_2",  "rot_3",   "opacity", "f_dc_0",
                              "f_dc_1", "f_dc_2"};
constexpr int kBaseFieldCount = 14;

std::vector<float> gaussian_row(const Gaussian& g, bool dir_color) {
    std::vector<float> row = {
        static_cast<float>(g.position.x),   static_cast<float>(g.position.y),
        static_cast<float>(g.position.z),   static_cast<float>(g.log_scale.x),
        static_cast<float>(g.log_scale.y),  static_cast<float>(g.log_scale.z),
        static_cast<float>(g.rotation.w),   static_cast<float>(g.rotation.x),
        static_cast<float>(g.rotation.y),   static_cast<float>(g.rotation.z),
        static_cast<float>(g.opacity_logit), static_cast<float>(g.color_dc.x),
        static_cast<float>(g.color_dc.y),   static_cast<float>(g.color_dc.z)};
    if (dir_color)
        for (int j = 0; j < 3; ++j) {
            row.push_back(static_cast<float>(g.color_rest[j].x));
            row.push_back(static_cast<float>(g.color_rest[j].y));
            row.push_back(static_cast<float>(g.color_rest[j].z));
        }
    return row;
}

struct PlyHeader {
    bool binary = false;
    long long vertex_count = -1;
    std::vector<std::string> properties;  // names, all float32
    std::size_t data_offset = 0;
};

PlyHeader parse_header(const std::string& path, std::ifstream& f) {
    PlyHeader h;
    std::string line;
    if (!std::getline(f, line)) fail(path, "empty file");
    if (line == "ply\r") line = "ply";
    if (line != "ply") fail(path, "missing ply magic");
    bool in_vertex = false;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::string tok;
        ss >> tok;
        if (tok == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt == "binary_little_endian")
                h.binary = true;
            else if (fmt != "ascii")
                fail(path, "unsupported format " + fmt);
        } else if (tok == "element") {
            std::string name;
            long long count;
            ss >> name >> count;
            if (name == "vertex") {
                h.vertex_count = count;
                in_vertex = true;
            } else {
                if (count > 0) fail(path, name + ": only the vertex element is supported");
                in_vertex = false;
            }
        } else if (tok == "property" && in_vertex) {
            std::string type, name;
            ss >> type >> name;
            if (type != "float" && type != "float32")
                fail(path, "property " + name + ": only float properties supported");
            h.properties.push_back(name);
        } else if (tok == "end_header") {
            h.data_offset = static_cast<std::size_t>(f.tellg());
            return h;
        }
    }
    fail(path, "missing end_header");
}

std::vector<float> read_rows(const std::string& path, std::ifstream& f, const PlyHeader& h) {
    const std::size_t total = static_cast<std::size_t>(h.vertex_count) * h.properties.size();
    std::vector<float> values(total);
    if (h.binary) {
        f.read(reinterpret_cast<char*>(values.data()),
               static_cast<std::streamsize>(total * sizeof(float)));
        if (!f) fail(path, "truncated binary vertex data");
    } else {
        for (std::size_t i = 0; i < total; ++i)
            if (!(f >> values[i])) fail(path, "truncated ascii vertex data");
    }
    return values;
}

}  // namespace

void write_scene_ply(const std::string& path, const GaussianScene& scene, bool binary) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot open for writing");
    f << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
    f << "element vertex " << scene.size() << "\n";
    int fields = kBaseFieldCount;
    for (int i = 0; i < kBaseFieldCount; ++i) f << "property float " << kSceneFields[i] << "\n";
    if (scene.has_dir_color) {
        for (int i = 0; i < 9; ++i) f << "property float f_rest_" << i << "\n";
        fields += 9;
    }
    f << "end_header\n";
    char buf[32];
    for (const Gaussian& g : scene.gaussians) {
        std::vector<float> row = gaussian_row(g, scene.has_dir_color);
        if (binary) {
            f.write(reinterpret_cast<const char*>(row.data()),
                    static_cast<std::streamsize>(row.size() * sizeof(float)));
        } else {
            for (int i = 0; i < fields; ++i) {
                std::snprintf(buf, sizeof(buf), "%.9g", row[i]);
                f << buf << (i + 1 == fields ? '\n' : ' ');
            }
        }
    }
    if (!f) fail(path, "write failed");
}

SceneLoadResult read_scene_ply(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot open");
    PlyHeader h = parse_header(path, f);
    if (h.vertex_count <= 0) fail(path, "vertex: element missing or empty");

    std::map<std::string, int> index;
    for (std::size_t i = 0; i < h.properties.size(); ++i)
        index[h.properties[i]] = static_cast<int>(i);

    for (int i = 0; i < kBaseFieldCount; ++i)
        if (!index.count(kSceneFields[i])) fail(path, std::string(kSceneFields[i]) + ": field missing");

    SceneLoadResult out;
    int rest_count = 0;
    while (index.count("f_rest_" + std::to_string(rest_count))) ++rest_count;
    bool dir_color = rest_count >= 9;
    if (rest_count > 9)
        out.warnings.push_back("f_rest_9..f_rest_" + std::to_string(rest_count - 1) +
                               " ignored (only degree-1 color supported)");
    if (rest_count > 0 && rest_count < 9)
        out.warnings.push_back("incomplete f_rest block ignored (found " +
                               std::to_string(rest_count) + " of 9 fields)");

    std::vector<float> values = read_rows(path, f, h);
    const std::size_t stride = h.properties.size();

    out.scene.has_dir_color = dir_color;
    out.scene.gaussians.resize(static_cast<std::size_t>(h.vertex_count));
    auto col = [&](const char* name) { return index.at(name); };
    const int ix = col("x"), iy = col("y"), iz = col("z");
    const int is0 = col("scale_0"), is1 = col("scale_1"), is2 = col("scale_2");
    const int ir0 = col("rot_0"), ir1 = col("rot_1"), ir2 = col("rot_2"), ir3 = col("rot_3");
    const int io = col("opacity");
    const int ic0 = col("f_dc_0"), ic1 = col("f_dc_1"), ic2 = col("f_dc_2");
    int rest_cols[9];
    if (dir_color)
        for (int j = 0; j < 9; ++j) rest_cols[j] = index.at("f_rest_" + std::to_string(j));

    for (long long v = 0; v < h.vertex_count; ++v) {
        const float* row = values.data() + static_cast<std::size_t>(v) * stride;
        Gaussian& g = out.scene.gaussians[static_cast<std::size_t>(v)];
        g.position = {row[ix], row[iy], row[iz]};
        g.log_scale = {row[is0], row[is1], row[is2]};
        Quat q{row[ir0], row[ir1], row[ir2], row[ir3]};
        if (norm(q) <= 1e-6)
            fail(path, "rot_0..rot_3: quaternion not renormalizable at vertex " +
                           std::to_string(v));
        g.rotation = normalized(q);
        g.opacity_logit = row[io];
        g.color_dc = {row[ic0], row[ic1], row[ic2]};
        if (dir_color)
            for (int j = 0; j < 3; ++j)
                g.color_rest[j] = {row[rest_cols[j * 3]], row[rest_cols[j * 3 + 1]],
                                   row[rest_cols[j * 3 + 2]]};
    }
    out.scene.scene_extent = compute_scene_extent(out.scene.gaussians);
    return out;
}

void write_point_ply(const std::string& path, const PointCloud& points) {
    std::ofstream f(path);
    if (!f) fail(path, "cannot open for writing");
    f << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
    char buf[96];
    for (const Vec3& p : points) {
        std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", static_cast<float>(p.x),
                      static_cast<float>(p.y), static_cast<float>(p.z));
        f << buf;
    }
    if (!f) fail(path, "write failed");
}

PointCloud read_point_ply(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(path, "cannot open");
    PlyHeader h = parse_header(path, f);
    if (h.vertex_count < 0) fail(path, "vertex: element missing");
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < h.properties.size(); ++i)
        index[h.properties[i]] = static_cast<int>(i);
    for (const char* name : {"x", "y", "z"})
        if (!index.count(name)) fail(path, std::string(name) + ": field missing");

    std::vector<float> values = read_rows(path, f, h);
    const std::size_t stride = h.properties.size();
    PointCloud pts(static_cast<std::size_t>(h.vertex_count));
    const int ix = index["x"], iy = index["y"], iz = index["z"];
    for (std::size_t v = 0; v < pts.size(); ++v) {
        const float* row = values.data() + v * stride;
        pts[v] = {row[ix], row[iy], row[iz]};
        if (!std::isfinite(pts[v].x) || !std::isfinite(pts[v].y) || !std::isfinite(pts[v].z))
            fail(path, "x/y/z: non-finite coordinate at vertex " + std::to_string(v));
    }
    return pts;
}

}  // namespace gstrim
