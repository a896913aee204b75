#include "nhlat/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace nhlat {

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

} // namespace

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open for writing: " + tmp.string());
        os << content;
        if (!os) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed for " + path.string() + ": " + ec.message());
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string file_hash_hex(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read back for hashing: " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(buf.str());
    return os.str();
}

std::string spectrum_csv(const SpectralData& spec, const std::vector<double>& corner_weights) {
    std::ostringstream os;
    os << "index,re_E,im_E,corner_weight\n";
    for (Eigen::Index i = 0; i < spec.size(); ++i)
        os << i << ',' << fmt(spec.energies(i).real()) << ',' << fmt(spec.energies(i).imag())
           << ',' << fmt(corner_weights[static_cast<std::size_t>(i)]) << '\n';
    return os.str();
}

std::string trajectory_csv(const TrajectoryRecord& rec) {
    std::ostringstream os;
    os << "t,eta,epsilon,log_norm_phi_sq,log_norm_xi_sq\n";
    const bool pair = !rec.eta.empty();
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        os << fmt(rec.times[i]) << ',';
        if (pair)
            os << fmt(rec.eta[i]) << ',' << fmt(rec.epsilon[i]) << ','
               << fmt(rec.log_norm_phi_sq[i]) << ',' << fmt(rec.log_norm_xi_sq[i]);
        else
            os << "0,0," << fmt(rec.log_norm_psi_sq[i]) << ",-inf";
        os << '\n';
    }
    return os.str();
}

std::string density_csv(const std::vector<double>& times, const Eigen::MatrixXd& rows) {
    std::ostringstream os;
    os << "t";
    for (Eigen::Index j = 0; j < rows.cols(); ++j) os << ",site_" << (j + 1);
    os << '\n';
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        os << fmt(times[static_cast<std::size_t>(r)]);
        for (Eigen::Index j = 0; j < rows.cols(); ++j) os << ',' << fmt(rows(r, j));
        os << '\n';
    }
    return os.str();
}

std::string ensemble_csv(const EnsembleRecord& rec) {
    std::ostringstream os;
    os << "t,lambda_phi,lambda_xi,t_lambda_diff,eta_mean,eps_mean,estimator\n";
    const bool pair = !rec.mean_log_epsilon.empty();
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        const double t = rec.times[i];
        if (t <= 0.0) continue;
        if (pair) {
            const double lp = rec.log_norm_phi_sq.mean[i] / (2.0 * t);
            const double lx = rec.log_norm_xi_sq.mean[i] / (2.0 * t);
            os << fmt(t) << ',' << fmt(lp) << ',' << fmt(lx) << ',' << fmt(t * (lx - lp)) << ','
               << fmt(rec.eta.mean[i]) << ',' << fmt(rec.epsilon.mean[i]) << ','
               << fmt(std::exp(rec.mean_log_epsilon[i])) << '\n';
        } else {
            const double lp = rec.log_norm_psi_sq.mean[i] / (2.0 * t);
            os << fmt(t) << ',' << fmt(lp) << ",nan,nan,nan,nan,nan\n";
        }
    }
    return os.str();
}

std::string estimator_csv(const EstimatorTable& table) {
    std::ostringstream os;
    os << "t,eps_mean,estimator,eta_mean\n";
    for (std::size_t i = 0; i < table.times.size(); ++i)
        os << fmt(table.times[i]) << ',' << fmt(table.eps_mean[i]) << ','
           << fmt(table.estimator[i]) << ',' << fmt(table.eta_mean[i]) << '\n';
    return os.str();
}

std::string kernel_csv(const std::vector<double>& times, const std::vector<double>& q) {
    std::ostringstream os;
    os << "t,Q\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        os << fmt(times[i]) << ',' << fmt(q[i]) << '\n';
    return os.str();
}

void RunManifest::add_output(const std::filesystem::path& path) {
    outputs.emplace_back(path.string(), file_hash_hex(path));
}

void RunManifest::write(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = config;
    j["master_seed"] = master_seed;
    j["wall_time_s"] = wall_time_s;
    j["version"] = "nhlat 0.1.0";
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& [p, h] : outputs) outs.push_back({{"path", p}, {"fnv1a64", h}});
    j["outputs"] = outs;
    write_text_file(path, j.dump(2) + "\n");
}

namespace {

struct Extent {
    double lo = 0.0, hi = 1.0;
    void fit(double v) {
        if (!std::isfinite(v)) return;
        if (empty) {
            lo = hi = v;
            empty = false;
        } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void pad() {
        if (empty) return;
        if (lo == hi) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double m = 0.05 * (hi - lo);
        lo -= m;
        hi += m;
    }
    bool empty = true;
};

// small viridis-like ramp for value-colored scatters
std::string colormap(double t) {
    t = std::clamp(t, 0.0, 1.0);
    struct Stop {
        double p;
        int r, g, b;
    };
    static const Stop stops[] = {
        {0.0, 68, 1, 84}, {0.25, 59, 82, 139}, {0.5, 33, 145, 140}, {0.75, 94, 201, 98}, {1.0, 253, 231, 37}};
    for (int i = 0; i < 4; ++i) {
        if (t <= stops[i + 1].p) {
            const double f = (t - stops[i].p) / (stops[i + 1].p - stops[i].p);
            const int r = static_cast<int>(std::lround(stops[i].r + f * (stops[i + 1].r - stops[i].r)));
            const int g = static_cast<int>(std::lround(stops[i].g + f * (stops[i + 1].g - stops[i].g)));
            const int b = static_cast<int>(std::lround(stops[i].b + f * (stops[i + 1].b - stops[i].b)));
            std::ostringstream os;
            os << "rgb(" << r << ',' << g << ',' << b << ')';
            return os.str();
        }
    }
    return "rgb(253,231,37)";
}

std::string tick_label(double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
}

} // namespace

std::string SvgPlot::render(int width, int height) const {
    const double ml = 70, mr = 20, mt = 34, mb = 48;
    const double pw = width - ml - mr, ph = height - mt - mb;

    Extent ex, ey;
    for (const auto& s : series) {
        for (double v : s.x) ex.fit(v);
        for (double v : s.y) ey.fit(v);
    }
    for (const auto& [y, c] : hlines) ey.fit(y);
    ex.pad();
    ey.pad();
    auto px = [&](double v) { return ml + (v - ex.lo) / (ex.hi - ex.lo) * pw; };
    auto py = [&](double v) { return mt + ph - (v - ey.lo) / (ey.hi - ey.lo) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
       << title << "</text>\n";

    // axes box and ticks
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double fx = ex.lo + (ex.hi - ex.lo) * i / 5.0;
        const double fy = ey.lo + (ey.hi - ey.lo) * i / 5.0;
        os << "<line x1=\"" << px(fx) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(fx) << "\" y2=\""
           << mt + ph + 5 << "\" stroke=\"#333\"/>\n";
        os << "<text x=\"" << px(fx) << "\" y=\"" << mt + ph + 18
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(fx)
           << "</text>\n";
        os << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(fy) << "\" x2=\"" << ml << "\" y2=\"" << py(fy)
           << "\" stroke=\"#333\"/>\n";
        os << "<text x=\"" << ml - 8 << "\" y=\"" << py(fy) + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(fy)
           << "</text>\n";
    }
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 8
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xlabel << "</text>\n";
    os << "<text x=\"16\" y=\"" << mt + ph / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
       << mt + ph / 2 << ")\">" << ylabel << "</text>\n";

    for (const auto& [y, color] : hlines)
        os << "<line x1=\"" << ml << "\" y1=\"" << py(y) << "\" x2=\"" << ml + pw << "\" y2=\"" << py(y)
           << "\" stroke=\"" << color << "\" stroke-dasharray=\"6 4\"/>\n";

    double legend_y = mt + 14;
    for (const auto& s : series) {
        if (s.scatter) {
            Extent ec;
            for (double v : s.color_values) ec.fit(v);
            ec.pad();
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                std::string color = s.color;
                if (i < s.color_values.size())
                    color = colormap((s.color_values[i] - ec.lo) / (ec.hi - ec.lo));
                os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
                   << "\" r=\"3\" fill=\"" << color << "\"/>\n";
            }
        } else {
            os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
            }
            os << "\"/>\n";
        }
        if (!s.label.empty()) {
            os << "<rect x=\"" << ml + pw - 150 << "\" y=\"" << legend_y - 9
               << "\" width=\"12\" height=\"4\" fill=\"" << s.color << "\"/>\n";
            os << "<text x=\"" << ml + pw - 132 << "\" y=\"" << legend_y
               << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
            legend_y += 16;
        }
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace nhlat
