#pragma once

#include <cstdint>
#include <vector>

#include "nhlat/dynamics.hpp"
#include "nhlat/metrics.hpp"

namespace nhlat {

// Deterministic: fixed-order pairwise merge over realization indices,
// bit-identical for any worker count. Fast: arrival-order streaming.
enum class Reduction { Deterministic, Fast };

struct EnsembleConfig {
    EvolutionConfig base;
    int n_realizations = 1;
    std::uint64_t master_seed = 1;
    Reduction reduction = Reduction::Deterministic;
    int workers = 0;                // 0 = library default
    bool pair = true;               // trajectory pairs vs single states
    std::vector<int> track_modes;   // ensemble <|C_m(t)|^2>; needs eigenstate init

    void validate() const;
};

struct SeriesStats {
    std::vector<double> mean;
    std::vector<double> variance;   // population variance (M2/n)
};

struct EnsembleRecord {
    std::vector<double> times;
    SeriesStats log_norm_phi_sq;
    SeriesStats log_norm_xi_sq;
    SeriesStats log_norm_psi_sq;
    SeriesStats eta;
    SeriesStats epsilon;
    std::vector<double> mean_log_epsilon;   // mean ln||xi||^2 - mean ln||phi||^2

    std::vector<double> density_times;
    Eigen::MatrixXd mean_density;           // <P_j(t)>, unnormalized, rows per time

    std::vector<int> track_modes;
    Eigen::MatrixXd mean_coeff_sq;          // samples x tracked modes

    int n_realizations = 0;
    std::uint64_t master_seed = 0;
    int init_index = -1;
    double max_imag_e = 0.0;                // max Im(E) of the spectrum when computed
    EvolutionConfig config_used;            // provenance: full configuration
    std::string code_version;

    FtleSeries lambda_phi() const;          // skips t = 0
    FtleSeries lambda_xi() const;
    FtleSeries lambda_psi() const;
};

// Thrown when some realizations failed; carries how many completed.
class PartialResultError : public NumericError {
public:
    PartialResultError(const std::string& msg, int completed)
        : NumericError(msg), completed_realizations(completed) {}
    int completed_realizations;
};

// Parallel ensemble runner (OpenMP over realizations).
EnsembleRecord run_ensemble(const EnsembleConfig& config);

// Serial reference path: identical reduction, no parallel region. Kept for
// testing and as the baseline of the ensemble benchmark.
EnsembleRecord run_ensemble_serial(const EnsembleConfig& config);

struct EstimatorTable {
    std::vector<double> times;
    std::vector<double> eps_mean;      // <epsilon>
    std::vector<double> estimator;     // exp{2t[lambda_xi - lambda_phi]}
    std::vector<double> eta_mean;      // <eta>
    double max_abs_gap = 0.0;          // max_t |<eta> - estimator|
};

EstimatorTable estimator_comparison(const EnsembleRecord& record);

} // namespace nhlat
