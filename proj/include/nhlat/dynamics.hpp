#pragma once

#include <Eigen/Dense>
#include <optional>
#include <variant>
#include <vector>

#include "nhlat/lattice.hpp"
#include "nhlat/noise.hpp"
#include "nhlat/state.hpp"

namespace nhlat {

enum class Integrator { Expm, Strang, Rk4 };

// Initial state selection.
struct InitState {
    enum class Kind { EigenstateNearest, DeltaSite, GaussianPacket };
    Kind kind = Kind::EigenstateNearest;
    cxd e_target{0.0, 0.0};   // EigenstateNearest
    int site = 1;             // DeltaSite, 1-based
    double center = 0.0;      // GaussianPacket
    double width = 5.0;       //   amplitude std-dev in sites
};

using NoiseSpec = std::variant<std::monostate, OUParams, WhiteNoiseParams>;

struct EvolutionConfig {
    HoppingModel model;
    int L = 100;
    BoundaryCondition bc = BoundaryCondition::OBC;
    std::optional<ScatteringWindow> scat;
    NoiseSpec noise;
    double onsite_loss = 0.0;        // uniform -i*kappa on the diagonal
    double dt = 0.1;
    double t_max = 100.0;
    int sample_stride = 1;
    Integrator integrator = Integrator::Strang;
    InitState init;
    std::vector<double> density_times;  // record |psi_j|^2 profiles near these times

    void validate() const;
};

// Sampled observables of one trajectory (or trajectory pair).
struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> log_norm_phi_sq;
    std::vector<double> log_norm_xi_sq;
    std::vector<double> log_norm_psi_sq;
    std::vector<double> eta;
    std::vector<double> epsilon;
    // one row per entry of density_times; profiles normalized to unit sum
    std::vector<double> density_times;
    Eigen::MatrixXd density_phi;
    Eigen::MatrixXd density_psi;
};

// One frozen-noise step: generator h_const (+ diag noise), or the cached
// propagator p_const = exp(-i h_const dt) for the Strang route.
struct StepOperator {
    const Eigen::MatrixXcd* h_const = nullptr;
    const Eigen::MatrixXcd* p_const = nullptr;
    double dt = 0.0;
    Integrator kind = Integrator::Strang;
};

ScaledState propagate_step(const ScaledState& state, const StepOperator& op,
                           const Eigen::VectorXd& noise_diag);

// Observer invoked at every recorded sample; u and w are the shared-frame
// vectors (w aliases u on single runs), log_scale the common amplitude.
class PairSampleHook {
public:
    virtual ~PairSampleHook();
    virtual void on_sample(int sample_pos, double t, const Eigen::VectorXcd& u,
                           const Eigen::VectorXcd& w, double log_scale) = 0;
};

// Everything shareable across noise realizations of one configuration:
// Hamiltonians, cached step propagators, spectrum, initial state, sampling
// plan. Immutable after construction; run() is safe to call concurrently.
class PreparedEvolution {
public:
    explicit PreparedEvolution(EvolutionConfig cfg, bool with_spectrum = false);

    const EvolutionConfig& config() const { return cfg_; }
    const SpectralData* spectrum() const { return spec_ ? &*spec_ : nullptr; }
    int init_index() const { return init_index_; }
    const Eigen::VectorXcd& initial_state() const { return init_vec_; }
    const Eigen::MatrixXcd& h_free() const { return h_free_; }
    const std::vector<double>& sample_times() const { return sample_times_; }

    TrajectoryRecord run(Rng rng, bool pair, PairSampleHook* hook = nullptr) const;

private:
    EvolutionConfig cfg_;
    Eigen::MatrixXcd h_free_, h_scat_;
    Eigen::MatrixXcd p_free_, p_scat_;
    bool cache_propagator_ = false;
    Integrator step_kind_ = Integrator::Strang;
    std::optional<SpectralData> spec_;
    int init_index_ = -1;
    Eigen::VectorXcd init_vec_;
    int n_steps_ = 0;
    std::vector<int> sample_steps_;
    std::vector<int> density_rows_;
    std::vector<double> sample_times_;
};

// Reference/scattered pair driven by one shared noise path; xi = psi - phi
// is tracked in a common amplitude frame.
TrajectoryRecord evolve_pair(const EvolutionConfig& config, Rng rng);

// Single trajectory (no scattering pair); fills the psi series only.
TrajectoryRecord evolve_single(const EvolutionConfig& config, Rng rng);

// H0 plus the uniform on-site loss term; scattering excluded.
Eigen::MatrixXcd effective_h0(const EvolutionConfig& config);

// Initial state per config, unit norm. Uses select_eigenstate when needed;
// a precomputed spectrum can be supplied to avoid repeated eigensolves.
Eigen::VectorXcd make_initial_state(const EvolutionConfig& config,
                                    const SpectralData* spec = nullptr);

} // namespace nhlat
