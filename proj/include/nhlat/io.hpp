#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "nhlat/dynamics.hpp"
#include "nhlat/ensemble.hpp"
#include "nhlat/lattice.hpp"

namespace nhlat {

// All file writes go through write_text_file: tmp file + rename, so partial
// outputs never appear under the final name.
void write_text_file(const std::filesystem::path& path, const std::string& content);

std::uint64_t fnv1a64(std::string_view bytes);
std::string file_hash_hex(const std::filesystem::path& path);

std::string spectrum_csv(const SpectralData& spec, const std::vector<double>& corner_weights);
std::string trajectory_csv(const TrajectoryRecord& rec);
std::string density_csv(const std::vector<double>& times, const Eigen::MatrixXd& rows);
std::string ensemble_csv(const EnsembleRecord& rec);
std::string estimator_csv(const EstimatorTable& table);
std::string kernel_csv(const std::vector<double>& times, const std::vector<double>& q);

// Minimal self-contained SVG plotting (no external assets).
struct SvgSeries {
    std::vector<double> x, y;
    std::string color = "#1f77b4";
    std::string label;
    bool scatter = false;
    std::vector<double> color_values;  // per-point colormap override (scatter)
};

struct SvgPlot {
    std::string title, xlabel, ylabel;
    std::vector<SvgSeries> series;
    std::vector<std::pair<double, std::string>> hlines;  // y, color
    std::string render(int width = 720, int height = 480) const;
};

// Sidecar describing one CLI run; written atomically next to the outputs.
struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::uint64_t master_seed = 0;
    std::vector<std::pair<std::string, std::string>> outputs;  // path, fnv1a64
    double wall_time_s = 0.0;

    void add_output(const std::filesystem::path& path);
    void write(const std::filesystem::path& path) const;
};

} // namespace nhlat
