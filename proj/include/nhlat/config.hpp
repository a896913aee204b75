#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "nhlat/ensemble.hpp"

namespace nhlat {

// Flat view of a nested-section key = value config file; keys are
// "section.key". Later assignments win, so overrides are plain inserts.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_ini_text(const std::string& text);
KeyValues load_config_file(const std::filesystem::path& path);

// Everything a CLI run needs, resolved from defaults + file + overrides.
struct RunConfig {
    EnsembleConfig ensemble;           // ensemble.base is the evolution config
    double sweep_t_snapshot = 60.0;    // sweep: eta sampled at this time
    int sweep_stride = 1;              // every n-th eigenstate
    double corner_delta = 10.0;        // corner-weight decay length
    std::string out_dir = "out";
    std::string prefix = "run";

    nlohmann::json to_json() const;
};

RunConfig resolve_config(const KeyValues& kv);

// "section.key=value" strings (CLI --set) applied on top of a file/preset.
void apply_override(KeyValues& kv, const std::string& assignment);

// Embedded experiment presets: fig1, fig2, sm-s4, sm-s5, sm-s6, sm-s8,
// sm-s10, sm-eta-avg. Each maps to a default subcommand.
struct Preset {
    std::string ini;
    std::string default_command;  // spectrum | evolve | ensemble | theory | sweep
};

const std::map<std::string, Preset>& presets();

// Noise levels used throughout the figures: none, weak (1, 0.1), strong (5, 10).
void apply_noise_level(KeyValues& kv, const std::string& level);

} // namespace nhlat
