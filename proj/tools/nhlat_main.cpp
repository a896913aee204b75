// nhlat — command line front end: spectra, trajectories, ensembles, theory
// tables and the figure presets.

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "nhlat/config.hpp"
#include "nhlat/io.hpp"
#include "nhlat/theory.hpp"

namespace fs = std::filesystem;
using namespace nhlat;

namespace {

struct CommonArgs {
    std::string config_file;
    std::string preset_name;
    std::string noise_level;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::string prefix;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config_file, "config file (key = value sections)");
    cmd->add_option("-p,--preset", args.preset_name, "start from an embedded preset");
    cmd->add_option("--noise", args.noise_level, "noise level shortcut: none | weak | strong");
    cmd->add_option("-s,--set", args.overrides, "override entries, e.g. --set noise.sigma=10");
    cmd->add_option("-o,--out", args.out_dir, "output directory");
    cmd->add_option("--prefix", args.prefix, "output file prefix");
}

RunConfig build_config(const CommonArgs& args) {
    KeyValues kv;
    if (!args.preset_name.empty()) {
        const auto& table = presets();
        auto it = table.find(args.preset_name);
        if (it == table.end()) throw ConfigError("unknown preset: " + args.preset_name);
        kv = parse_ini_text(it->second.ini);
    }
    if (!args.config_file.empty()) {
        if (!fs::exists(args.config_file))
            throw ConfigError("config file not found: " + args.config_file);
        for (const auto& [k, v] : load_config_file(args.config_file)) kv[k] = v;
    }
    if (!args.noise_level.empty()) apply_noise_level(kv, args.noise_level);
    for (const std::string& ov : args.overrides) apply_override(kv, ov);
    RunConfig rc = resolve_config(kv);
    if (!args.out_dir.empty()) rc.out_dir = args.out_dir;
    if (!args.prefix.empty()) rc.prefix = args.prefix;
    return rc;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

fs::path out_path(const RunConfig& rc, const std::string& suffix) {
    return fs::path(rc.out_dir) / (rc.prefix + "_" + suffix);
}

void finish_manifest(RunManifest& manifest, const RunConfig& rc, const Stopwatch& clock) {
    manifest.config = rc.to_json();
    manifest.master_seed = rc.ensemble.master_seed;
    manifest.wall_time_s = clock.seconds();
    manifest.write(out_path(rc, "manifest.json"));
}

int cmd_spectrum(const CommonArgs& args, const std::string& color_by = "corner_weight") {
    Stopwatch clock;
    RunConfig rc = build_config(args);
    if (color_by != "corner_weight" && color_by != "im_E")
        throw ConfigError("spectrum: --color-by must be corner_weight or im_E");
    const EvolutionConfig& evo = rc.ensemble.base;

    const SpectralData spec = eigensystem(effective_h0(evo));
    std::vector<double> weights(static_cast<std::size_t>(spec.size()));
    for (Eigen::Index i = 0; i < spec.size(); ++i)
        weights[static_cast<std::size_t>(i)] = corner_weight(spec.right.col(i), rc.corner_delta);

    RunManifest manifest;
    manifest.command = "spectrum";
    const fs::path csv = out_path(rc, "spectrum.csv");
    write_text_file(csv, spectrum_csv(spec, weights));
    manifest.add_output(csv);

    SvgPlot plot;
    plot.title = "complex spectrum, colored by " + color_by;
    plot.xlabel = "Re E";
    plot.ylabel = "Im E";
    SvgSeries pts;
    pts.scatter = true;
    for (Eigen::Index i = 0; i < spec.size(); ++i) {
        pts.x.push_back(spec.energies(i).real());
        pts.y.push_back(spec.energies(i).imag());
        pts.color_values.push_back(color_by == "im_E" ? spec.energies(i).imag()
                                                      : weights[static_cast<std::size_t>(i)]);
    }
    plot.series.push_back(std::move(pts));
    const fs::path svg = out_path(rc, "spectrum.svg");
    write_text_file(svg, plot.render());
    manifest.add_output(svg);

    finish_manifest(manifest, rc, clock);
    std::cout << "spectrum: L=" << evo.L << ", max Im(E)=" << max_imag_energy(spec) << ", wrote "
              << csv.string() << "\n";
    return 0;
}

int cmd_evolve(const CommonArgs& args) {
    Stopwatch clock;
    RunConfig rc = build_config(args);
    const EvolutionConfig& evo = rc.ensemble.base;

    const bool pair = rc.ensemble.pair;
    PreparedEvolution prep(evo);
    const TrajectoryRecord rec =
        prep.run(Rng(seed_for(rc.ensemble.master_seed, 0)), pair);

    RunManifest manifest;
    manifest.command = "evolve";
    const fs::path csv = out_path(rc, "trajectory.csv");
    write_text_file(csv, trajectory_csv(rec));
    manifest.add_output(csv);

    if (rec.density_psi.size() > 0) {
        const fs::path dens = out_path(rc, "density.csv");
        write_text_file(dens, density_csv(rec.density_times, rec.density_psi));
        manifest.add_output(dens);
    }

    SvgPlot plot;
    plot.xlabel = "t";
    if (pair) {
        plot.title = "profile self-healing metric";
        plot.ylabel = "eta(t)";
        SvgSeries s;
        s.x = rec.times;
        s.y = rec.eta;
        s.label = "eta";
        plot.series.push_back(std::move(s));
    } else {
        plot.title = "finite-time Lyapunov exponent";
        plot.ylabel = "(1/t) ln ||psi||";
        SvgSeries s;
        for (std::size_t i = 0; i < rec.times.size(); ++i) {
            if (rec.times[i] <= 0.0) continue;
            s.x.push_back(rec.times[i]);
            s.y.push_back(rec.log_norm_psi_sq[i] / (2.0 * rec.times[i]));
        }
        s.label = "lambda_psi";
        plot.series.push_back(std::move(s));
        if (args.preset_name == "sm-s8") plot.hlines.push_back({-0.3549, "#555555"});
    }
    const fs::path svg = out_path(rc, "trajectory.svg");
    write_text_file(svg, plot.render());
    manifest.add_output(svg);

    finish_manifest(manifest, rc, clock);
    std::cout << "evolve: " << rec.times.size() << " samples, wrote " << csv.string() << "\n";
    return 0;
}

int cmd_ensemble(const CommonArgs& args) {
    Stopwatch clock;
    RunConfig rc = build_config(args);

    const EnsembleRecord rec = run_ensemble(rc.ensemble);

    RunManifest manifest;
    manifest.command = "ensemble";
    const fs::path csv = out_path(rc, "ensemble.csv");
    write_text_file(csv, ensemble_csv(rec));
    manifest.add_output(csv);

    nlohmann::json sidecar;
    sidecar["config"] = rc.to_json();
    sidecar["master_seed"] = rc.ensemble.master_seed;
    sidecar["n_realizations"] = rc.ensemble.n_realizations;
    sidecar["init_index"] = rec.init_index;
    sidecar["max_imag_e"] = rec.max_imag_e;
    sidecar["wall_time_s"] = clock.seconds();
    const fs::path side = out_path(rc, "ensemble.json");
    write_text_file(side, sidecar.dump(2) + "\n");
    manifest.add_output(side);

    if (rc.ensemble.pair) {
        const EstimatorTable table = estimator_comparison(rec);
        const fs::path est = out_path(rc, "estimator.csv");
        write_text_file(est, estimator_csv(table));
        manifest.add_output(est);

        const FtleSeries lp = rec.lambda_phi();
        const FtleSeries lx = rec.lambda_xi();
        SvgPlot lam;
        lam.title = "ensemble FTLEs";
        lam.xlabel = "t";
        lam.ylabel = "lambda(t)";
        SvgSeries sp{lp.times, lp.lambda, "#1f77b4", "lambda_phi", false, {}};
        SvgSeries sx{lx.times, lx.lambda, "#ff7f0e", "lambda_xi", false, {}};
        lam.series = {sp, sx};
        if (rec.max_imag_e != 0.0) lam.hlines.push_back({rec.max_imag_e, "#333333"});
        const fs::path lam_svg = out_path(rc, "ftle.svg");
        write_text_file(lam_svg, lam.render());
        manifest.add_output(lam_svg);

        SvgPlot diff;
        diff.title = "cumulative FTLE difference";
        diff.xlabel = "t";
        diff.ylabel = "t (lambda_xi - lambda_phi)";
        SvgSeries sd;
        sd.color = "#2ca02c";
        sd.label = "t dlambda";
        const std::vector<double> cum = cumulative_difference(lx, lp);
        sd.x = lx.times;
        sd.y = cum;
        diff.series.push_back(std::move(sd));
        diff.hlines.push_back({0.0, "#333333"});
        const fs::path diff_svg = out_path(rc, "tdiff.svg");
        write_text_file(diff_svg, diff.render());
        manifest.add_output(diff_svg);
    }

    if (rec.mean_density.size() > 0) {
        const fs::path dens = out_path(rc, "mean_density.csv");
        write_text_file(dens, density_csv(rec.density_times, rec.mean_density));
        manifest.add_output(dens);
    }
    if (rec.mean_coeff_sq.size() > 0) {
        std::ostringstream os;
        os << "t";
        for (int m : rec.track_modes) os << ",mode_" << m;
        os << '\n';
        for (std::size_t i = 0; i < rec.times.size(); ++i) {
            os << std::setprecision(17) << rec.times[i];
            for (Eigen::Index c = 0; c < rec.mean_coeff_sq.cols(); ++c)
                os << ',' << rec.mean_coeff_sq(static_cast<Eigen::Index>(i), c);
            os << '\n';
        }
        const fs::path coeff = out_path(rc, "coefficients.csv");
        write_text_file(coeff, os.str());
        manifest.add_output(coeff);
    }

    finish_manifest(manifest, rc, clock);
    std::cout << "ensemble: " << rc.ensemble.n_realizations << " realizations, wrote "
              << csv.string() << "\n";
    return 0;
}

int cmd_theory(const CommonArgs& args, bool as_csv, const std::string& kernel_table = "") {
    Stopwatch clock;
    RunConfig rc = build_config(args);
    const EvolutionConfig& evo = rc.ensemble.base;

    const TransportCoefficients tc = transport_coefficients(evo.model);
    const double xi = correlation_length(evo.model);

    double q_inf = std::numeric_limits<double>::quiet_NaN();
    if (std::holds_alternative<OUParams>(evo.noise))
        q_inf = kernel_q_infinity(make_noise_law(std::get<OUParams>(evo.noise)));
    else if (std::holds_alternative<WhiteNoiseParams>(evo.noise))
        q_inf = kernel_q_infinity(make_noise_law(std::get<WhiteNoiseParams>(evo.noise)));

    const bool have_q = std::isfinite(q_inf);
    const double lam_obc_inf =
        have_q ? lambda_infty_obc(tc, q_inf, std::numeric_limits<double>::infinity()) : 0.0;
    const double lam_obc_l = have_q ? lambda_infty_obc(tc, q_inf, evo.L) : 0.0;
    const double lam_pbc = have_q ? lambda_infty_pbc(tc, q_inf) : 0.0;

    std::ostringstream os;
    if (as_csv) {
        os << "quantity,value\n";
        os << "S_bar," << std::setprecision(10) << tc.s_bar << "\n";
        os << "v_bar," << tc.v_bar << "\n";
        os << "D_bar," << tc.d_bar << "\n";
        os << "xi," << xi << "\n";
        if (have_q) {
            os << "Q_inf," << q_inf << "\n";
            os << "lambda_inf_obc," << lam_obc_inf << "\n";
            os << "lambda_inf_obc_L" << evo.L << "," << lam_obc_l << "\n";
            os << "lambda_inf_pbc," << lam_pbc << "\n";
        }
    } else {
        os << std::left << std::setw(22) << "quantity" << "value\n";
        auto row = [&os](const std::string& name, double v, int prec = 6) {
            os << std::left << std::setw(22) << name << std::setprecision(prec) << v << "\n";
        };
        row("S_bar", tc.s_bar);
        row("v_bar", tc.v_bar);
        row("D_bar", tc.d_bar);
        os << std::left << std::setw(22) << "xi";
        if (std::isinf(xi))
            os << "inf (reciprocal hopping)\n";
        else
            os << std::setprecision(6) << xi << "\n";
        if (have_q) {
            row("Q_inf", q_inf);
            row("lambda_inf_obc", lam_obc_inf, 4);
            row("lambda_inf_obc_L" + std::to_string(evo.L), lam_obc_l, 4);
            row("lambda_inf_pbc", lam_pbc, 4);
        } else {
            os << "(no noise configured: Q(inf) and lambda_inf omitted)\n";
        }
    }
    std::cout << os.str();

    if (!kernel_table.empty()) {
        if (!have_q)
            throw ConfigError("theory: --kernel-table needs a noise law (set noise.kind)");
        const NoiseLaw law = std::holds_alternative<OUParams>(evo.noise)
                                 ? make_noise_law(std::get<OUParams>(evo.noise))
                                 : make_noise_law(std::get<WhiteNoiseParams>(evo.noise));
        std::vector<double> ts, qs;
        const double t_hi = 4.0 / law.tail_rate;
        for (int k = 0; k <= 200; ++k) {
            ts.push_back(t_hi * k / 200.0);
            qs.push_back(kernel_q(law, ts.back()));
        }
        write_text_file(kernel_table, kernel_csv(ts, qs));
        RunManifest manifest;
        manifest.command = "theory";
        manifest.add_output(kernel_table);
        manifest.config = rc.to_json();
        manifest.master_seed = rc.ensemble.master_seed;
        manifest.wall_time_s = clock.seconds();
        manifest.write(std::filesystem::path(kernel_table).string() + ".manifest.json");
    }
    return 0;
}

int cmd_sweep(const CommonArgs& args) {
    Stopwatch clock;
    RunConfig rc = build_config(args);
    EvolutionConfig evo = rc.ensemble.base;
    evo.t_max = rc.sweep_t_snapshot;

    const SpectralData spec = eigensystem(effective_h0(evo));
    const int L = static_cast<int>(spec.size());

    std::vector<int> indices;
    for (int i = 0; i < L; i += rc.sweep_stride) indices.push_back(i);

    std::vector<double> eta_at_t(indices.size(), 0.0);
    for (std::size_t pos = 0; pos < indices.size(); ++pos) {
        EnsembleConfig ec = rc.ensemble;
        ec.base = evo;
        ec.base.init.kind = InitState::Kind::EigenstateNearest;
        ec.base.init.e_target = spec.energies(indices[pos]);
        ec.base.sample_stride =
            std::max(1, static_cast<int>(std::llround(evo.t_max / evo.dt)));  // endpoint only
        ec.master_seed = rc.ensemble.master_seed + static_cast<std::uint64_t>(indices[pos]);
        const EnsembleRecord rec = run_ensemble(ec);
        eta_at_t[pos] = rec.eta.mean.back();
    }

    RunManifest manifest;
    manifest.command = "sweep";
    std::ostringstream os;
    os << "index,re_E,im_E,eta_at_T\n";
    for (std::size_t pos = 0; pos < indices.size(); ++pos) {
        const cxd e = spec.energies(indices[pos]);
        os << indices[pos] << ',' << std::setprecision(17) << e.real() << ',' << e.imag() << ','
           << eta_at_t[pos] << '\n';
    }
    const fs::path csv = out_path(rc, "sweep.csv");
    write_text_file(csv, os.str());
    manifest.add_output(csv);

    SvgPlot plot;
    plot.title = "spectrum colored by eta(T), T=" + std::to_string(rc.sweep_t_snapshot);
    plot.xlabel = "Re E";
    plot.ylabel = "Im E";
    SvgSeries pts;
    pts.scatter = true;
    for (std::size_t pos = 0; pos < indices.size(); ++pos) {
        pts.x.push_back(spec.energies(indices[pos]).real());
        pts.y.push_back(spec.energies(indices[pos]).imag());
        pts.color_values.push_back(eta_at_t[pos]);
    }
    plot.series.push_back(std::move(pts));
    const fs::path svg = out_path(rc, "sweep.svg");
    write_text_file(svg, plot.render());
    manifest.add_output(svg);

    finish_manifest(manifest, rc, clock);
    std::cout << "sweep: " << indices.size() << " eigenstates, wrote " << csv.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"noise-driven self-healing laboratory for 1D non-Hermitian lattices"};
    app.require_subcommand(1);

    CommonArgs spectrum_args, evolve_args, ensemble_args, theory_args, sweep_args, preset_args;
    bool theory_csv = false;
    std::string kernel_table;
    std::string color_by = "corner_weight";

    CLI::App* spectrum = app.add_subcommand("spectrum", "eigensystem + corner weights -> CSV/SVG");
    add_common(spectrum, spectrum_args);
    spectrum->add_option("--color-by", color_by, "scatter color column: corner_weight | im_E");
    CLI::App* evolve = app.add_subcommand("evolve", "one trajectory (pair if scattering enabled)");
    add_common(evolve, evolve_args);
    CLI::App* ensemble = app.add_subcommand("ensemble", "noise-averaged observables");
    add_common(ensemble, ensemble_args);
    CLI::App* theory = app.add_subcommand("theory", "transport coefficient and lambda_inf table");
    add_common(theory, theory_args);
    theory->add_flag("--csv", theory_csv, "emit CSV instead of aligned text");
    theory->add_option("--kernel-table", kernel_table,
                       "also write the noise kernel table t,Q to this file");
    CLI::App* sweep = app.add_subcommand("sweep", "eta snapshot over the whole spectrum");
    add_common(sweep, sweep_args);

    CLI::App* preset = app.add_subcommand("preset", "run an embedded preset end to end");
    std::string preset_name;
    preset->add_option("name", preset_name, "preset name (fig1, fig2, sm-s4 ... sm-eta-avg)")
        ->required();
    add_common(preset, preset_args);

    try {
        app.parse(argc, argv);
        if (spectrum->parsed()) return cmd_spectrum(spectrum_args, color_by);
        if (evolve->parsed()) return cmd_evolve(evolve_args);
        if (ensemble->parsed()) return cmd_ensemble(ensemble_args);
        if (theory->parsed()) return cmd_theory(theory_args, theory_csv, kernel_table);
        if (sweep->parsed()) return cmd_sweep(sweep_args);
        if (preset->parsed()) {
            preset_args.preset_name = preset_name;
            const auto& table = presets();
            auto it = table.find(preset_name);
            if (it == table.end()) throw ConfigError("unknown preset: " + preset_name);
            const std::string& cmd = it->second.default_command;
            if (cmd == "spectrum") return cmd_spectrum(preset_args);
            if (cmd == "evolve") return cmd_evolve(preset_args);
            if (cmd == "ensemble") return cmd_ensemble(preset_args);
            if (cmd == "sweep") return cmd_sweep(preset_args);
            throw ConfigError("preset has no runnable command: " + preset_name);
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
