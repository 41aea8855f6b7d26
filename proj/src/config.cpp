#include "gstrim/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace gstrim {

namespace {

std::string trim_ws(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error(path + ": cannot open config");
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return parse_string(ss.str());
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

ConfigFile ConfigFile::parse_string(const std::string& text) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim_ws(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim_ws(line.substr(0, eq));
        std::string value = trim_ws(line.substr(eq + 1));
        if (key.empty()) throw std::runtime_error("line " + std::to_string(lineno) + ": empty key");
        cfg.values_[key] = value;
    }
    return cfg;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
    touched_[key] = true;
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::runtime_error(key + ": not a number: " + it->second);
    }
}

int ConfigFile::get_int(const std::string& key, int fallback) const {
    touched_[key] = true;
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        int v = std::stoi(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::runtime_error(key + ": not an integer: " + it->second);
    }
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
    touched_[key] = true;
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
    touched_[key] = true;
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw std::runtime_error(key + ": not a bool: " + it->second);
}

std::vector<std::string> ConfigFile::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
        if (!touched_.count(k)) out.push_back(k);
    return out;
}

TrimConfig trim_config_from(const ConfigFile& cfg) {
    TrimConfig c;
    c.gamma = cfg.get_double("trim.gamma", c.gamma);
    c.top_k = cfg.get_int("trim.top_k", c.top_k);
    c.fraction = cfg.get_double("trim.fraction", c.fraction);
    c.interval = cfg.get_int("trim.interval", c.interval);
    std::string metric = cfg.get_string("trim.metric", "normalized");
    if (metric == "normalized")
        c.metric = TrimConfig::Metric::normalized;
    else if (metric == "unnormalized")
        c.metric = TrimConfig::Metric::unnormalized;
    else if (metric == "opacity")
        c.metric = TrimConfig::Metric::opacity_baseline;
    else
        throw std::runtime_error("trim.metric: unknown value " + metric);
    if (c.gamma < 0.0 || c.gamma > 1.0) throw std::runtime_error("trim.gamma: must be in [0,1]");
    if (c.fraction <= 0.0 || c.fraction >= 1.0)
        throw std::runtime_error("trim.fraction: must be in (0,1)");
    if (c.interval < 1) throw std::runtime_error("trim.interval: must be >= 1");
    if (c.top_k < 1) throw std::runtime_error("trim.top_k: must be >= 1");
    return c;
}

DensifyConfig densify_config_from(const ConfigFile& cfg, double scene_extent) {
    DensifyConfig c = DensifyConfig::for_extent(scene_extent);
    c.tau_s = cfg.get_double("densify.tau_s",
                             cfg.get_double("densify.tau_s_scale", 0.02) * scene_extent);
    c.split_k = cfg.get_int("densify.split_k", c.split_k);
    c.shrink_factor = cfg.get_double("densify.shrink_factor", c.shrink_factor);
    if (c.tau_s <= 0.0) throw std::runtime_error("densify.tau_s: must be > 0");
    if (c.split_k < 2) throw std::runtime_error("densify.split_k: must be >= 2");
    if (c.shrink_factor <= 1.0) throw std::runtime_error("densify.shrink_factor: must be > 1");
    return c;
}

NormalConfig normal_config_from(const ConfigFile& cfg) {
    NormalConfig c;
    c.window = cfg.get_int("normal.window", c.window);
    c.tangent_pairs = cfg.get_int("normal.tangent_pairs", c.tangent_pairs);
    c.alpha1 = cfg.get_double("loss.alpha1", c.alpha1);
    c.alpha2 = cfg.get_double("loss.alpha2", c.alpha2);
    if (c.window < 3 || c.window % 2 == 0)
        throw std::runtime_error("normal.window: must be odd and >= 3");
    if (c.alpha1 < 0.0 || c.alpha2 < 0.0)
        throw std::runtime_error("loss.alpha1/alpha2: must be >= 0");
    return c;
}

TrainConfig train_config_from(const ConfigFile& cfg) {
    TrainConfig c;
    c.iterations = cfg.get_int("train.iterations", c.iterations);
    c.densify_interval = cfg.get_int("densify.interval", c.densify_interval);
    c.log_interval = cfg.get_int("train.log_interval", c.log_interval);
    c.eval_interval = cfg.get_int("train.eval_interval", c.eval_interval);
    c.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", 0));
    c.enable_trim = cfg.get_bool("train.enable_trim", true);
    c.enable_densify = cfg.get_bool("train.enable_densify", true);
    c.lr_position = cfg.get_double("lr.position", c.lr_position);
    c.lr_position_final = cfg.get_double("lr.position_final", c.lr_position_final);
    c.lr_log_scale = cfg.get_double("lr.log_scale", c.lr_log_scale);
    c.lr_rotation = cfg.get_double("lr.rotation", c.lr_rotation);
    c.lr_opacity = cfg.get_double("lr.opacity", c.lr_opacity);
    c.lr_color = cfg.get_double("lr.color", c.lr_color);
    if (c.iterations < 1) throw std::runtime_error("train.iterations: must be >= 1");
    if (c.densify_interval < 1) throw std::runtime_error("densify.interval: must be >= 1");
    if (c.lr_position <= 0.0 || c.lr_log_scale <= 0.0 || c.lr_rotation <= 0.0 ||
        c.lr_opacity <= 0.0 || c.lr_color <= 0.0)
        throw std::runtime_error("lr.*: learning rates must be > 0");
    return c;
}

void save_cameras(const std::string& path, const std::vector<Camera>& cams) {
    nlohmann::json root;
    root["cameras"] = nlohmann::json::array();
    for (const Camera& c : cams) {
        nlohmann::json j;
        j["fx"] = c.fx;
        j["fy"] = c.fy;
        j["cx"] = c.cx;
        j["cy"] = c.cy;
        j["width"] = c.width;
        j["height"] = c.height;
        j["world_to_camera"] = c.world_to_camera_matrix();
        root["cameras"].push_back(j);
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f << root.dump(2) << "\n";
}

std::vector<Camera> load_cameras(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error(path + ": cannot open");
    nlohmann::json root;
    try {
        f >> root;
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": invalid JSON: " + e.what());
    }
    if (!root.contains("cameras") || !root["cameras"].is_array() || root["cameras"].empty())
        throw std::runtime_error(path + ": cameras: missing or empty array");

    std::vector<Camera> cams;
    for (const auto& j : root["cameras"]) {
        for (const char* key : {"fx", "fy", "cx", "cy", "width", "height", "world_to_camera"})
            if (!j.contains(key))
                throw std::runtime_error(path + ": " + key + ": field missing");
        auto mat = j["world_to_camera"];
        if (!mat.is_array() || mat.size() != 16)
            throw std::runtime_error(path + ": world_to_camera: expected 16 numbers");
        std::array<double, 16> m{};
        for (int i = 0; i < 16; ++i) m[i] = mat[i].get<double>();
        Camera c = Camera::from_world_to_camera(m, j["fx"].get<double>(), j["fy"].get<double>(),
                                                j["cx"].get<double>(), j["cy"].get<double>(),
                                                j["width"].get<int>(), j["height"].get<int>());
        if (c.fx <= 0.0 || c.fy <= 0.0)
            throw std::runtime_error(path + ": fx/fy: must be positive");
        if (c.width < 1 || c.height < 1)
            throw std::runtime_error(path + ": width/height: must be >= 1");
        // Orthonormality of the rotation block.
        Mat3 should_be_id = c.rotation * c.rotation.transposed();
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col)
                if (std::fabs(should_be_id(r, col) - (r == col ? 1.0 : 0.0)) > 1e-6)
                    throw std::runtime_error(path +
                                             ": world_to_camera: rotation block not orthonormal");
        cams.push_back(c);
    }
    return cams;
}

}  // namespace gstrim
