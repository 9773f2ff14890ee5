#ifndef PSF_CONFIG_HPP
#define PSF_CONFIG_HPP

#include <map>
#include <string>
#include <vector>

#include "psf/manipulations.hpp"
#include "psf/models.hpp"
#include "psf/nn/optim.hpp"
#include "psf/printscan.hpp"

namespace psf::harness {

// INI-style key-value file: [section] headers, key = value lines, '#'
// comments. Everything the experiments need lives in one file: manipulation
// defaults, printer profiles, and training hyperparameters.
struct KvFile {
    // section -> key -> value; the anonymous top section is "".
    std::map<std::string, std::map<std::string, std::string>> sections;

    static KvFile parse(const std::string& text);
    static KvFile load(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    int get_int(const std::string& section, const std::string& key, int fallback) const;
};

struct AppConfig {
    manip::Params manip_params;
    std::vector<printscan::PrinterProfile> profiles;
    // Base training parameters ([train] section over the built-in defaults).
    nn::TrainConfig train;
    // Raw file contents, kept so only keys actually present override the
    // per-family defaults.
    KvFile raw;

    static AppConfig defaults();
    static AppConfig from_file(const std::string& path);

    // family defaults <- [train] overrides <- [train <family>] overrides.
    nn::TrainConfig train_for(models::Family family) const;

    std::string serialize() const;
    void write(const std::string& path) const;

    // Lookup by name; "jpeg:<q>" builds a requantization-only chain on the fly.
    printscan::PrinterProfile profile(const std::string& name) const;
};

} // namespace psf::harness

#endif
