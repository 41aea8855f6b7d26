#pragma once

#include <map>
#include <string>
#include <vector>

#include "gstrim/densify.hpp"
#include "gstrim/georeg.hpp"
#include "gstrim/trim.hpp"
#include "gstrim/types.hpp"

namespace gstrim {

// Flat `key = value` text, '#' comments. Unknown keys are kept (and reported
// by the CLI) so typos do not silently fall back to defaults.
class ConfigFile {
public:
    ConfigFile() = default;
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_string(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // Keys present in the file but never queried.
    std::vector<std::string> unused_keys() const;

private:
    std::map<std::string, std::string> values_;
    mutable std::map<std::string, bool> touched_;
};

// Bundles of typed settings read from one config file. tau_s resolves against
// the scene extent unless densify.tau_s gives an absolute value.
TrimConfig trim_config_from(const ConfigFile& cfg);
DensifyConfig densify_config_from(const ConfigFile& cfg, double scene_extent);
NormalConfig normal_config_from(const ConfigFile& cfg);
TrainConfig train_config_from(const ConfigFile& cfg);

// Camera list serialization (JSON).
void save_cameras(const std::string& path, const std::vector<Camera>& cams);
std::vector<Camera> load_cameras(const std::string& path);

}  // namespace gstrim
