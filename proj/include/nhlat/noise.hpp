#pragma once

#include <Eigen/Dense>
#include <functional>

#include "nhlat/errors.hpp"
#include "nhlat/rng.hpp"

namespace nhlat {

// Ornstein-Uhlenbeck parameters; correlation (sigma^2/2theta) e^{-theta|tau|}.
struct OUParams {
    double theta = 1.0;
    double sigma = 0.0;

    void validate() const {
        if (!(theta > 0.0)) throw ConfigError("OU noise: theta must be > 0");
        if (sigma < 0.0) throw ConfigError("OU noise: sigma must be >= 0");
    }
    double stationary_variance() const { return sigma * sigma / (2.0 * theta); }
};

// White noise, <xi(t)xi(t')> = Gamma delta(t - t').
struct WhiteNoiseParams {
    double gamma_w = 0.0;

    void validate() const {
        if (gamma_w < 0.0) throw ConfigError("white noise: Gamma must be >= 0");
    }
};

// Per-site OU values advanced by the exact transition kernel; owns its stream.
struct NoiseField {
    Eigen::VectorXd values;
    OUParams params;
    Rng rng;
};

NoiseField ou_init_stationary(const OUParams& params, int L, Rng rng);
void ou_step(NoiseField& field, double dt);

// Squared phase-coherence |C_phi(t)|^2 for each noise law.
double coherence_sq_ou(const OUParams& params, double t);
double coherence_sq_white(const WhiteNoiseParams& params, double t);

// Closed-form characterization of a noise law for the kernel integrals:
// coherence_sq(t) ~ tail_amp * e^{-tail_rate t} as t -> infinity.
struct NoiseLaw {
    std::function<double(double)> coherence_sq;
    double tail_rate = 0.0;
    double tail_amp = 1.0;
};

NoiseLaw make_noise_law(const OUParams& params);
NoiseLaw make_noise_law(const WhiteNoiseParams& params);

// Q(t) = int_0^t coherence_sq(tau) dtau, adaptive quadrature to rel. tol.
double kernel_q(const NoiseLaw& law, double t, double quad_tol = 1e-9);
double kernel_q_infinity(const NoiseLaw& law, double quad_tol = 1e-9);

// int_0^t Delta(tau) dtau with Delta = Q(inf) - Q; computed as the single
// integral t Q(inf) - int_0^t (t - s) coh(s) ds.
double delta_integral(const NoiseLaw& law, double t, double quad_tol = 1e-9);
double delta_integral_infinity(const NoiseLaw& law, double quad_tol = 1e-9);

// Effective time s(t) = int_0^t Q / Q(inf) = t - delta_integral(t)/Q(inf);
// maps the time-dependent transport coefficients onto their saturated values.
double effective_time(const NoiseLaw& law, double t, double quad_tol = 1e-9);

} // namespace nhlat
