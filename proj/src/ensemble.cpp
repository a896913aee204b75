#include "nhlat/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nhlat {

namespace {

// Per-realization sampled values, the unit merged by the reductions.
struct Contribution {
    std::vector<double> lphi, lxi, lpsi, eta, eps;
    Eigen::MatrixXd density;   // unnormalized <P_j> rows
    Eigen::MatrixXd coeff;     // samples x tracked modes
};

// Chan-merge (count, mean, M2) statistics over aligned sample grids.
struct Welford {
    long n = 0;
    std::vector<double> mean, m2;

    void init(std::size_t len) {
        mean.assign(len, 0.0);
        m2.assign(len, 0.0);
    }
    // -inf values occur legally (ln||xi||^2 before the scattering window);
    // the equality guards keep them from turning into NaN.
    void add(const std::vector<double>& x) {
        ++n;
        if (n == 1) {
            mean = x;
            return;
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] == mean[i]) continue;
            const double d = x[i] - mean[i];
            mean[i] += d / n;
            m2[i] += d * (x[i] - mean[i]);
        }
    }
    void merge(const Welford& other) {
        if (other.n == 0) return;
        if (n == 0) {
            *this = other;
            return;
        }
        const long na = n, nb = other.n;
        for (std::size_t i = 0; i < mean.size(); ++i) {
            if (other.mean[i] == mean[i]) {
                m2[i] += other.m2[i];
                continue;
            }
            const double d = other.mean[i] - mean[i];
            mean[i] += d * nb / (na + nb);
            m2[i] += other.m2[i] + d * d * static_cast<double>(na) * nb / (na + nb);
        }
        n = na + nb;
    }
};

struct Aggregate {
    Welford lphi, lxi, lpsi, eta, eps;
    Eigen::MatrixXd density_sum;
    Eigen::MatrixXd coeff_sum;
    long n = 0;

    void init(std::size_t len, Eigen::Index dens_rows, Eigen::Index dens_cols,
              Eigen::Index coeff_rows, Eigen::Index coeff_cols, bool pair) {
        lpsi.init(len);
        if (pair) {
            lphi.init(len);
            lxi.init(len);
            eta.init(len);
            eps.init(len);
        }
        density_sum = Eigen::MatrixXd::Zero(dens_rows, dens_cols);
        coeff_sum = Eigen::MatrixXd::Zero(coeff_rows, coeff_cols);
    }
    void add(const Contribution& c, bool pair) {
        ++n;
        lpsi.add(c.lpsi);
        if (pair) {
            lphi.add(c.lphi);
            lxi.add(c.lxi);
            eta.add(c.eta);
            eps.add(c.eps);
        }
        if (c.density.size() > 0) density_sum += c.density;
        if (c.coeff.size() > 0) coeff_sum += c.coeff;
    }
    void merge(const Aggregate& other, bool pair) {
        lpsi.merge(other.lpsi);
        if (pair) {
            lphi.merge(other.lphi);
            lxi.merge(other.lxi);
            eta.merge(other.eta);
            eps.merge(other.eps);
        }
        density_sum += other.density_sum;
        coeff_sum += other.coeff_sum;
        n += other.n;
    }
};

// Collects |C_m(t)|^2 rows for the tracked modes of one realization.
class CoeffTracker final : public PairSampleHook {
public:
    CoeffTracker(const SpectralData& spec, const std::vector<int>& modes, int init_index,
                 Eigen::MatrixXd& out)
        : spec_(spec), modes_(modes), init_index_(init_index), out_(out) {}

    void on_sample(int sample_pos, double t, const Eigen::VectorXcd& u,
                   const Eigen::VectorXcd& /*w*/, double log_scale) override {
        for (std::size_t c = 0; c < modes_.size(); ++c) {
            const int m = modes_[c];
            const cxd em = spec_.energies(m);
            const cxd proj = spec_.left.col(m).dot(u);
            if (m == init_index_) {
                // C_init enters through e^{iE t}<L|phi> - 1
                const cxd z = proj * std::exp(cxd{log_scale - em.imag() * t, em.real() * t});
                out_(sample_pos, static_cast<Eigen::Index>(c)) = std::norm(z - 1.0);
            } else {
                const double ln = 2.0 * log_scale + std::log(std::norm(proj)) - 2.0 * em.imag() * t;
                out_(sample_pos, static_cast<Eigen::Index>(c)) = std::exp(ln);
            }
        }
    }

private:
    const SpectralData& spec_;
    const std::vector<int>& modes_;
    int init_index_;
    Eigen::MatrixXd& out_;
};

Contribution run_one(const PreparedEvolution& prep, const EnsembleConfig& cfg,
                     std::uint64_t seed) {
    Contribution c;
    Eigen::MatrixXd coeff;
    const std::size_t n_samples = prep.sample_times().size();
    std::unique_ptr<CoeffTracker> tracker;
    if (!cfg.track_modes.empty()) {
        coeff.resize(static_cast<Eigen::Index>(n_samples),
                     static_cast<Eigen::Index>(cfg.track_modes.size()));
        tracker = std::make_unique<CoeffTracker>(*prep.spectrum(), cfg.track_modes,
                                                 prep.init_index(), coeff);
    }
    TrajectoryRecord rec = prep.run(Rng(seed), cfg.pair, tracker.get());
    c.lpsi = std::move(rec.log_norm_psi_sq);
    if (cfg.pair) {
        c.lphi = std::move(rec.log_norm_phi_sq);
        c.lxi = std::move(rec.log_norm_xi_sq);
        c.eta = std::move(rec.eta);
        c.eps = std::move(rec.epsilon);
    }
    if (rec.density_psi.size() > 0) {
        // unnormalized <P_j>: scale the unit-sum profile by the total norm
        c.density = rec.density_psi;
        for (Eigen::Index r = 0; r < c.density.rows(); ++r) {
            const double t = rec.density_times[static_cast<std::size_t>(r)];
            std::size_t pos = 0;
            for (std::size_t i = 0; i < rec.times.size(); ++i)
                if (rec.times[i] == t) pos = i;
            c.density.row(r) *= std::exp(c.lpsi[pos]);
        }
    }
    c.coeff = std::move(coeff);
    return c;
}

// Fixed-tree pairwise merge over [lo, hi); shape depends only on indices.
void reduce_tree(Aggregate& dst, std::vector<std::unique_ptr<Contribution>>& contribs,
                 std::size_t lo, std::size_t hi, bool pair) {
    if (hi - lo == 1) {
        dst.add(*contribs[lo], pair);
        contribs[lo].reset();
        return;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    Aggregate right = dst;  // copy the zeroed template shape
    right.n = 0;
    reduce_tree(dst, contribs, lo, mid, pair);
    reduce_tree(right, contribs, mid, hi, pair);
    dst.merge(right, pair);
}

EnsembleRecord finalize(const Aggregate& agg, const PreparedEvolution& prep,
                        const EnsembleConfig& cfg) {
    EnsembleRecord rec;
    rec.times = prep.sample_times();
    rec.n_realizations = cfg.n_realizations;
    rec.master_seed = cfg.master_seed;
    rec.init_index = prep.init_index();
    rec.config_used = cfg.base;
    rec.code_version = "nhlat 0.1.0";
    if (prep.spectrum()) rec.max_imag_e = max_imag_energy(*prep.spectrum());

    auto emit = [&](const Welford& w, SeriesStats& out) {
        out.mean = w.mean;
        out.variance.resize(w.m2.size());
        for (std::size_t i = 0; i < w.m2.size(); ++i)
            out.variance[i] = w.n > 0 ? w.m2[i] / w.n : 0.0;
    };
    emit(agg.lpsi, rec.log_norm_psi_sq);
    if (cfg.pair) {
        emit(agg.lphi, rec.log_norm_phi_sq);
        emit(agg.lxi, rec.log_norm_xi_sq);
        emit(agg.eta, rec.eta);
        emit(agg.eps, rec.epsilon);
        rec.mean_log_epsilon.resize(rec.times.size());
        for (std::size_t i = 0; i < rec.times.size(); ++i)
            rec.mean_log_epsilon[i] = rec.log_norm_xi_sq.mean[i] - rec.log_norm_phi_sq.mean[i];
    }
    if (agg.density_sum.size() > 0) {
        rec.mean_density = agg.density_sum / static_cast<double>(cfg.n_realizations);
        rec.density_times = cfg.base.density_times;
    }
    if (agg.coeff_sum.size() > 0) {
        rec.mean_coeff_sq = agg.coeff_sum / static_cast<double>(cfg.n_realizations);
        rec.track_modes = cfg.track_modes;
    }
    return rec;
}

EnsembleRecord run_impl(const EnsembleConfig& cfg, bool parallel) {
    cfg.validate();
    const bool need_spectrum = !cfg.track_modes.empty();
    PreparedEvolution prep(cfg.base, need_spectrum);
    if (need_spectrum && prep.init_index() < 0)
        throw ConfigError("ensemble: coefficient tracking requires an eigenstate initial state");
    for (int m : cfg.track_modes)
        if (m < 0 || m >= prep.config().L)
            throw ConfigError("ensemble: tracked mode index out of range");

    const std::size_t n_samples = prep.sample_times().size();
    const Eigen::Index dens_rows = static_cast<Eigen::Index>(cfg.base.density_times.size());
    const Eigen::Index coeff_cols = static_cast<Eigen::Index>(cfg.track_modes.size());
    Aggregate total;
    total.init(n_samples, dens_rows, dens_rows > 0 ? cfg.base.L : 0,
               coeff_cols > 0 ? static_cast<Eigen::Index>(n_samples) : 0, coeff_cols, cfg.pair);

    const int n = cfg.n_realizations;
    std::atomic<int> failures{0};
    std::string first_error;

#ifdef _OPENMP
    int requested = cfg.workers;
    if (requested <= 0) {
        // NHLAT_WORKERS overrides the OpenMP default when workers = auto
        if (const char* env = std::getenv("NHLAT_WORKERS")) requested = std::atoi(env);
        if (requested <= 0) requested = omp_get_max_threads();
    }
#else
    const int requested = 1;
    (void)parallel;
#endif

    if (cfg.reduction == Reduction::Deterministic) {
        std::vector<std::unique_ptr<Contribution>> contribs(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(parallel ? requested : 1)
#endif
        for (int i = 0; i < n; ++i) {
            try {
                contribs[i] = std::make_unique<Contribution>(
                    run_one(prep, cfg, seed_for(cfg.master_seed, static_cast<std::uint64_t>(i))));
            } catch (const std::exception& e) {
                if (failures.fetch_add(1) == 0) first_error = e.what();
            }
        }
        if (failures.load() > 0)
            throw PartialResultError("ensemble: " + std::to_string(failures.load()) +
                                         " realization(s) failed: " + first_error,
                                     n - failures.load());
        reduce_tree(total, contribs, 0, static_cast<std::size_t>(n), cfg.pair);
    } else {
        // arrival-order streaming into per-thread accumulators
        std::vector<Aggregate> partial;
#ifdef _OPENMP
        const int nt = parallel ? requested : 1;
#else
        const int nt = 1;
#endif
        partial.resize(nt);
        for (auto& p : partial) p = total;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(nt)
#endif
        for (int i = 0; i < n; ++i) {
#ifdef _OPENMP
            Aggregate& mine = partial[omp_get_thread_num()];
#else
            Aggregate& mine = partial[0];
#endif
            try {
                const Contribution c =
                    run_one(prep, cfg, seed_for(cfg.master_seed, static_cast<std::uint64_t>(i)));
                mine.add(c, cfg.pair);
            } catch (const std::exception& e) {
                if (failures.fetch_add(1) == 0) first_error = e.what();
            }
        }
        if (failures.load() > 0)
            throw PartialResultError("ensemble: " + std::to_string(failures.load()) +
                                         " realization(s) failed: " + first_error,
                                     n - failures.load());
        for (const auto& p : partial) total.merge(p, cfg.pair);
    }
    return finalize(total, prep, cfg);
}

FtleSeries lambda_from(const std::vector<double>& times, const std::vector<double>& mean_log,
                       FtleSeries::Source src) {
    FtleSeries s;
    s.source = src;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] <= 0.0) continue;
        s.times.push_back(times[i]);
        s.lambda.push_back(mean_log[i] / (2.0 * times[i]));
    }
    return s;
}

} // namespace

void EnsembleConfig::validate() const {
    base.validate();
    if (n_realizations < 1) throw ConfigError("ensemble: need at least one realization");
    if (workers < 0) throw ConfigError("ensemble: workers must be >= 0");
}

FtleSeries EnsembleRecord::lambda_phi() const {
    return lambda_from(times, log_norm_phi_sq.mean, FtleSeries::Source::Phi);
}
FtleSeries EnsembleRecord::lambda_xi() const {
    return lambda_from(times, log_norm_xi_sq.mean, FtleSeries::Source::Xi);
}
FtleSeries EnsembleRecord::lambda_psi() const {
    return lambda_from(times, log_norm_psi_sq.mean, FtleSeries::Source::Psi);
}

EnsembleRecord run_ensemble(const EnsembleConfig& config) { return run_impl(config, true); }

EnsembleRecord run_ensemble_serial(const EnsembleConfig& config) { return run_impl(config, false); }

EstimatorTable estimator_comparison(const EnsembleRecord& record) {
    if (record.mean_log_epsilon.empty())
        throw ConfigError("estimator_comparison: record has no pair metrics");
    EstimatorTable table;
    for (std::size_t i = 0; i < record.times.size(); ++i) {
        table.times.push_back(record.times[i]);
        table.eps_mean.push_back(record.epsilon.mean[i]);
        table.eta_mean.push_back(record.eta.mean[i]);
        // exp{2t(lambda_xi - lambda_phi)} = exp{<ln eps>}
        table.estimator.push_back(std::exp(record.mean_log_epsilon[i]));
        if (std::isfinite(table.estimator.back()))
            table.max_abs_gap =
                std::max(table.max_abs_gap, std::abs(table.eta_mean.back() - table.estimator.back()));
    }
    return table;
}

} // namespace nhlat
