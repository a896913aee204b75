#include "nhlat/noise.hpp"

#include <cmath>

namespace nhlat {

NoiseField ou_init_stationary(const OUParams& params, int L, Rng rng) {
    params.validate();
    NoiseField field{Eigen::VectorXd::Zero(L), params, rng};
    const double sd = std::sqrt(params.stationary_variance());
    for (int j = 0; j < L; ++j) field.values(j) = sd * field.rng.normal();
    return field;
}

void ou_step(NoiseField& field, double dt) {
    if (!(dt > 0.0)) throw ConfigError("ou_step: dt must be > 0");
    const double theta = field.params.theta;
    const double sigma = field.params.sigma;
    const double decay = std::exp(-theta * dt);
    const double sd = sigma * std::sqrt((1.0 - decay * decay) / (2.0 * theta));
    for (Eigen::Index j = 0; j < field.values.size(); ++j)
        field.values(j) = field.values(j) * decay + sd * field.rng.normal();
}

double coherence_sq_ou(const OUParams& params, double t) {
    if (t < 0.0) throw ConfigError("coherence: t must be >= 0");
    const double th = params.theta;
    const double s2 = params.sigma * params.sigma;
    return std::exp(-(s2 / (th * th)) * (t - (1.0 - std::exp(-th * t)) / th));
}

double coherence_sq_white(const WhiteNoiseParams& params, double t) {
    if (t < 0.0) throw ConfigError("coherence: t must be >= 0");
    return std::exp(-params.gamma_w * t);
}

NoiseLaw make_noise_law(const OUParams& params) {
    params.validate();
    NoiseLaw law;
    law.coherence_sq = [params](double t) { return coherence_sq_ou(params, t); };
    const double th = params.theta;
    const double s2 = params.sigma * params.sigma;
    law.tail_rate = s2 / (th * th);
    law.tail_amp = std::exp(s2 / (th * th * th));
    return law;
}

NoiseLaw make_noise_law(const WhiteNoiseParams& params) {
    params.validate();
    NoiseLaw law;
    law.coherence_sq = [params](double t) { return coherence_sq_white(params, t); };
    law.tail_rate = params.gamma_w;
    law.tail_amp = 1.0;
    return law;
}

namespace {

// Adaptive Simpson with absolute tolerance budget split per bisection.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol, int depth) {
    if (depth > 60) throw NumericError("quadrature: adaptive refinement failed to converge");
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
    if (b <= a) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double scale = std::max({std::abs(whole), (b - a) * 1e-3, 1e-300});
    const double r = adaptive_simpson(f, a, b, fa, fm, fb, whole, rel_tol * scale, 0);
    if (!std::isfinite(r)) throw NumericError("quadrature: non-finite result");
    return r;
}

// Time past which the coherence has decayed below `floor`.
double coherence_cutoff(const NoiseLaw& law, double floor) {
    if (!(law.tail_rate > 0.0))
        throw NumericError("kernel does not saturate: coherence has no exponential tail (noiseless law)");
    double t = std::log(law.tail_amp / floor) / law.tail_rate;
    t = std::max(t, 1.0);
    for (int i = 0; i < 200 && law.coherence_sq(t) > floor; ++i) t *= 1.5;
    return t;
}

} // namespace

double kernel_q(const NoiseLaw& law, double t, double quad_tol) {
    if (t < 0.0) throw ConfigError("kernel_q: t must be >= 0");
    if (t == 0.0) return 0.0;
    return integrate(law.coherence_sq, 0.0, t, quad_tol);
}

double kernel_q_infinity(const NoiseLaw& law, double quad_tol) {
    const double cut = coherence_cutoff(law, 1e-14);
    const double body = integrate(law.coherence_sq, 0.0, cut, quad_tol);
    const double tail = law.tail_amp * std::exp(-law.tail_rate * cut) / law.tail_rate;
    return body + tail;
}

double delta_integral(const NoiseLaw& law, double t, double quad_tol) {
    if (t < 0.0) throw ConfigError("delta_integral: t must be >= 0");
    if (t == 0.0) return 0.0;
    const double q_inf = kernel_q_infinity(law, quad_tol);
    const double iq = integrate([&](double s) { return (t - s) * law.coherence_sq(s); }, 0.0, t, quad_tol);
    return t * q_inf - iq;
}

double delta_integral_infinity(const NoiseLaw& law, double quad_tol) {
    // int_0^inf Delta = int_0^inf s coh(s) ds by exchanging the order
    const double cut = coherence_cutoff(law, 1e-14);
    const double body = integrate([&](double s) { return s * law.coherence_sq(s); }, 0.0, cut, quad_tol);
    const double r = law.tail_rate;
    const double tail = law.tail_amp * std::exp(-r * cut) * (cut / r + 1.0 / (r * r));
    return body + tail;
}

double effective_time(const NoiseLaw& law, double t, double quad_tol) {
    if (t == 0.0) return 0.0;
    return t - delta_integral(law, t, quad_tol) / kernel_q_infinity(law, quad_tol);
}

} // namespace nhlat
