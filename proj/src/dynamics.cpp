#include "nhlat/dynamics.hpp"

#include <cmath>
#include <limits>

#include "nhlat/expm.hpp"

namespace nhlat {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double eta_vec(const Eigen::VectorXcd& w, const Eigen::VectorXcd& u) {
    const double nw = w.squaredNorm();
    const double nu = u.squaredNorm();
    if (nw == 0.0 || nu == 0.0) throw NumericError("eta: zero-norm input");
    double e = 1.0 - std::norm(w.dot(u)) / (nw * nu);
    if (e < 0.0) e = 0.0;
    if (e > 1.0) e = 1.0;
    return e;
}

struct StepBuffers {
    Eigen::VectorXcd tmp1, tmp2, k1, k2, k3, k4, phase;
    void resize(Eigen::Index n) {
        tmp1.resize(n);
        tmp2.resize(n);
        k1.resize(n);
        k2.resize(n);
        k3.resize(n);
        k4.resize(n);
        phase.resize(n);
    }
};

// half-step noise phases e^{-i xi_j dt/2}; shared by both states of a pair
void fill_strang_phase(StepBuffers& buf, const Eigen::VectorXd& noise_diag, double dt) {
    for (Eigen::Index j = 0; j < noise_diag.size(); ++j)
        buf.phase(j) = std::polar(1.0, -0.5 * dt * noise_diag(j));
}

// out <- one-step propagation of v under op with frozen diagonal noise.
void apply_step(Eigen::VectorXcd& out, const Eigen::VectorXcd& v, const StepOperator& op,
                const Eigen::VectorXd& noise_diag, StepBuffers& buf) {
    const Eigen::Index n = v.size();
    const double dt = op.dt;
    switch (op.kind) {
        case Integrator::Strang: {
            for (Eigen::Index j = 0; j < n; ++j) buf.tmp1(j) = buf.phase(j) * v(j);
            buf.tmp2.noalias() = (*op.p_const) * buf.tmp1;
            for (Eigen::Index j = 0; j < n; ++j) out(j) = buf.phase(j) * buf.tmp2(j);
            break;
        }
        case Integrator::Expm: {
            Eigen::MatrixXcd m = cxd{0.0, -dt} * (*op.h_const);
            for (Eigen::Index j = 0; j < n; ++j) m(j, j) += cxd{0.0, -dt * noise_diag(j)};
            out.noalias() = matrix_exponential(m) * v;
            break;
        }
        case Integrator::Rk4: {
            auto rhs = [&](Eigen::VectorXcd& dst, const Eigen::VectorXcd& x) {
                dst.noalias() = (*op.h_const) * x;
                for (Eigen::Index j = 0; j < n; ++j)
                    dst(j) = cxd{0.0, -1.0} * (dst(j) + noise_diag(j) * x(j));
            };
            rhs(buf.k1, v);
            buf.tmp1 = v + (0.5 * dt) * buf.k1;
            rhs(buf.k2, buf.tmp1);
            buf.tmp1 = v + (0.5 * dt) * buf.k2;
            rhs(buf.k3, buf.tmp1);
            buf.tmp1 = v + dt * buf.k3;
            rhs(buf.k4, buf.tmp1);
            out = v + (dt / 6.0) * (buf.k1 + 2.0 * buf.k2 + 2.0 * buf.k3 + buf.k4);
            break;
        }
    }
}

// Noise value provider, one diagonal per step; piecewise constant within dt.
class NoiseDriver {
public:
    NoiseDriver(const NoiseSpec& spec, int L, double dt, Rng rng)
        : dt_(dt), zero_(Eigen::VectorXd::Zero(L)), rng_(rng) {
        if (std::holds_alternative<OUParams>(spec)) {
            kind_ = Kind::Ou;
            field_ = ou_init_stationary(std::get<OUParams>(spec), L, rng_);
        } else if (std::holds_alternative<WhiteNoiseParams>(spec)) {
            kind_ = Kind::White;
            amp_ = std::sqrt(std::get<WhiteNoiseParams>(spec).gamma_w / dt);
            white_ = Eigen::VectorXd::Zero(L);
            refresh_white();
        }
    }

    // Values for the step starting at t_k; call advance() once per step after use.
    const Eigen::VectorXd& values() const {
        switch (kind_) {
            case Kind::Ou: return field_->values;
            case Kind::White: return white_;
            default: return zero_;
        }
    }

    void advance() {
        if (kind_ == Kind::Ou)
            ou_step(*field_, dt_);
        else if (kind_ == Kind::White)
            refresh_white();
    }

private:
    void refresh_white() {
        for (Eigen::Index j = 0; j < white_.size(); ++j) white_(j) = amp_ * rng_.normal();
    }

    enum class Kind { None, Ou, White } kind_ = Kind::None;
    double dt_;
    double amp_ = 0.0;
    Eigen::VectorXd zero_;
    Eigen::VectorXd white_;
    Rng rng_;
    std::optional<NoiseField> field_;
};

} // namespace

void EvolutionConfig::validate() const {
    model.validate();
    if (L < 2) throw ConfigError("evolution: L must be >= 2");
    if (!(dt > 0.0)) throw ConfigError("evolution: dt must be > 0");
    if (!(t_max > 0.0)) throw ConfigError("evolution: t_max must be > 0");
    if (sample_stride < 1) throw ConfigError("evolution: sample_stride must be >= 1");
    if (onsite_loss < 0.0) throw ConfigError("evolution: onsite loss must be >= 0");
    if (scat) {
        scat->validate(L);
        if (scat->t_off > t_max)
            throw ConfigError("evolution: scattering window extends past t_max");
    }
    if (std::holds_alternative<OUParams>(noise)) std::get<OUParams>(noise).validate();
    if (std::holds_alternative<WhiteNoiseParams>(noise)) std::get<WhiteNoiseParams>(noise).validate();
}

Eigen::MatrixXcd effective_h0(const EvolutionConfig& config) {
    Eigen::MatrixXcd h = build_hamiltonian(config.model, config.L, config.bc);
    if (config.onsite_loss != 0.0)
        h.diagonal().array() += cxd{0.0, -config.onsite_loss};
    return h;
}

Eigen::VectorXcd make_initial_state(const EvolutionConfig& config, const SpectralData* spec) {
    switch (config.init.kind) {
        case InitState::Kind::EigenstateNearest: {
            if (spec) return select_eigenstate(*spec, config.init.e_target).second;
            const SpectralData s = eigensystem(effective_h0(config));
            return select_eigenstate(s, config.init.e_target).second;
        }
        case InitState::Kind::DeltaSite: {
            if (config.init.site < 1 || config.init.site > config.L)
                throw ConfigError("initial state: delta site outside the lattice");
            Eigen::VectorXcd v = Eigen::VectorXcd::Zero(config.L);
            v(config.init.site - 1) = 1.0;
            return v;
        }
        case InitState::Kind::GaussianPacket: {
            if (!(config.init.width > 0.0))
                throw ConfigError("initial state: gaussian width must be > 0");
            Eigen::VectorXcd v(config.L);
            for (int j = 1; j <= config.L; ++j) {
                const double x = (j - config.init.center) / config.init.width;
                v(j - 1) = std::exp(-0.25 * x * x);
            }
            const double nrm = v.norm();
            if (nrm == 0.0) throw ConfigError("initial state: gaussian truncated to zero");
            return v / nrm;
        }
    }
    throw ConfigError("initial state: unknown kind");
}

ScaledState propagate_step(const ScaledState& state, const StepOperator& op,
                           const Eigen::VectorXd& noise_diag) {
    if (!(op.dt > 0.0)) throw ConfigError("propagate_step: dt must be > 0");
    StepBuffers buf;
    buf.resize(state.vec.size());
    if (op.kind == Integrator::Strang) fill_strang_phase(buf, noise_diag, op.dt);
    ScaledState out{Eigen::VectorXcd(state.vec.size()), state.log_amp};
    apply_step(out.vec, state.vec, op, noise_diag, buf);
    out.rescale();
    return out;
}

PairSampleHook::~PairSampleHook() = default;

PreparedEvolution::PreparedEvolution(EvolutionConfig cfg, bool with_spectrum)
    : cfg_(std::move(cfg)) {
    cfg_.validate();

    n_steps_ = static_cast<int>(std::llround(cfg_.t_max / cfg_.dt));
    if (n_steps_ < 1) throw ConfigError("evolution: t_max must cover at least one step");
    for (int k = 0; k <= n_steps_; k += cfg_.sample_stride) sample_steps_.push_back(k);
    if (sample_steps_.back() != n_steps_) sample_steps_.push_back(n_steps_);
    for (int k : sample_steps_) sample_times_.push_back(k * cfg_.dt);
    for (double t : cfg_.density_times) {
        const int k = static_cast<int>(std::llround(t / cfg_.dt));
        int best = 0;
        for (std::size_t i = 1; i < sample_steps_.size(); ++i)
            if (std::abs(sample_steps_[i] - k) < std::abs(sample_steps_[best] - k))
                best = static_cast<int>(i);
        density_rows_.push_back(best);
    }

    h_free_ = effective_h0(cfg_);
    if (cfg_.scat) {
        h_scat_ = build_hamiltonian(cfg_.model, cfg_.L, cfg_.bc, cfg_.scat, true);
        if (cfg_.onsite_loss != 0.0) h_scat_.diagonal().array() += cxd{0.0, -cfg_.onsite_loss};
    }

    const bool has_noise = !std::holds_alternative<std::monostate>(cfg_.noise);
    cache_propagator_ = cfg_.integrator == Integrator::Strang ||
                        (cfg_.integrator == Integrator::Expm && !has_noise);
    step_kind_ = (cfg_.integrator == Integrator::Expm && !has_noise) ? Integrator::Strang
                                                                     : cfg_.integrator;
    if (cache_propagator_) {
        p_free_ = matrix_exponential(cxd{0.0, -cfg_.dt} * h_free_);
        if (cfg_.scat) p_scat_ = matrix_exponential(cxd{0.0, -cfg_.dt} * h_scat_);
    }

    if (with_spectrum || cfg_.init.kind == InitState::Kind::EigenstateNearest)
        spec_ = eigensystem(h_free_);
    if (cfg_.init.kind == InitState::Kind::EigenstateNearest) {
        auto [idx, vec] = select_eigenstate(*spec_, cfg_.init.e_target);
        init_index_ = idx;
        init_vec_ = vec;
    } else {
        init_vec_ = make_initial_state(cfg_, nullptr);
    }
}

TrajectoryRecord PreparedEvolution::run(Rng rng, bool pair, PairSampleHook* hook) const {
    const int L = cfg_.L;
    const bool has_window = pair && cfg_.scat.has_value();
    const StepOperator op_free{&h_free_, cache_propagator_ ? &p_free_ : nullptr, cfg_.dt, step_kind_};
    const StepOperator op_scat{&h_scat_, cache_propagator_ ? &p_scat_ : nullptr, cfg_.dt, step_kind_};

    Eigen::VectorXcd u = init_vec_;
    Eigen::VectorXcd w;
    if (pair) w = u;
    double log_scale = 0.0;

    NoiseDriver noise(cfg_.noise, L, cfg_.dt, rng);
    StepBuffers buf;
    buf.resize(L);
    Eigen::VectorXcd next(L);

    TrajectoryRecord rec;
    const std::size_t n_samples = sample_steps_.size();
    rec.times.reserve(n_samples);
    rec.log_norm_psi_sq.reserve(n_samples);
    if (pair) {
        rec.log_norm_phi_sq.reserve(n_samples);
        rec.log_norm_xi_sq.reserve(n_samples);
        rec.eta.reserve(n_samples);
        rec.epsilon.reserve(n_samples);
    }
    if (!density_rows_.empty()) {
        rec.density_psi.resize(static_cast<Eigen::Index>(density_rows_.size()), L);
        if (pair) rec.density_phi.resize(static_cast<Eigen::Index>(density_rows_.size()), L);
        for (int row : density_rows_)
            rec.density_times.push_back(sample_steps_[row] * cfg_.dt);
    }

    std::size_t sample_pos = 0;
    auto record_sample = [&](int step) {
        const double t = step * cfg_.dt;
        rec.times.push_back(t);
        const double nu = u.squaredNorm();
        if (pair) {
            const double nw = w.squaredNorm();
            const double dsq = (w - u).squaredNorm();
            rec.log_norm_phi_sq.push_back(2.0 * log_scale + std::log(nu));
            rec.log_norm_xi_sq.push_back(dsq > 0.0 ? 2.0 * log_scale + std::log(dsq) : kNegInf);
            rec.log_norm_psi_sq.push_back(nw > 0.0 ? 2.0 * log_scale + std::log(nw) : kNegInf);
            rec.eta.push_back(eta_vec(w, u));
            rec.epsilon.push_back(dsq / nu);
        } else {
            rec.log_norm_psi_sq.push_back(2.0 * log_scale + std::log(nu));
        }
        for (std::size_t r = 0; r < density_rows_.size(); ++r) {
            if (density_rows_[r] != static_cast<int>(sample_pos)) continue;
            const Eigen::VectorXcd& ps = pair ? w : u;
            rec.density_psi.row(static_cast<Eigen::Index>(r)) =
                ps.cwiseAbs2().transpose() / ps.squaredNorm();
            if (pair)
                rec.density_phi.row(static_cast<Eigen::Index>(r)) =
                    u.cwiseAbs2().transpose() / u.squaredNorm();
        }
        if (hook) hook->on_sample(static_cast<int>(sample_pos), t, u, pair ? w : u, log_scale);
        ++sample_pos;
    };

    record_sample(0);
    for (int k = 0; k < n_steps_; ++k) {
        const Eigen::VectorXd& xi = noise.values();
        if (step_kind_ == Integrator::Strang) fill_strang_phase(buf, xi, cfg_.dt);
        bool scat_on = false;
        if (has_window) {
            const double mid = (k + 0.5) * cfg_.dt;
            scat_on = mid > cfg_.scat->t_on && mid <= cfg_.scat->t_off;
        }
        apply_step(next, u, op_free, xi, buf);
        u.swap(next);
        if (pair) {
            apply_step(next, w, scat_on ? op_scat : op_free, xi, buf);
            w.swap(next);
        }
        noise.advance();

        const double s = u.norm();
        if (s == 0.0) throw NumericError("evolution: state norm underflowed to exact zero");
        u /= s;
        if (pair) w /= s;
        log_scale += std::log(s);

        if (sample_pos < sample_steps_.size() && sample_steps_[sample_pos] == k + 1)
            record_sample(k + 1);
    }
    return rec;
}

TrajectoryRecord evolve_pair(const EvolutionConfig& config, Rng rng) {
    return PreparedEvolution(config).run(rng, true);
}

TrajectoryRecord evolve_single(const EvolutionConfig& config, Rng rng) {
    return PreparedEvolution(config).run(rng, false);
}

} // namespace nhlat
