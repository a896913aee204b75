#include "nhlat/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace nhlat {

double eta(const ScaledState& psi, const ScaledState& phi) {
    const double npsi = psi.vec.squaredNorm();
    const double nphi = phi.vec.squaredNorm();
    if (npsi == 0.0 || nphi == 0.0) throw NumericError("eta: zero-norm input");
    const double ov = std::norm(psi.vec.dot(phi.vec));
    double e = 1.0 - ov / (npsi * nphi);
    if (e < 0.0 && e > -1e-14) e = 0.0;
    if (e > 1.0 && e < 1.0 + 1e-14) e = 1.0;
    return std::clamp(e, 0.0, 1.0);
}

double epsilon_dev(const ScaledState& psi, const ScaledState& phi) {
    const double nphi = phi.vec.squaredNorm();
    if (nphi == 0.0) throw NumericError("epsilon: zero reference norm");
    const double gap = psi.log_amp - phi.log_amp;
    if (std::abs(gap) > 600.0)
        throw NumericError("epsilon: states are not in a shared amplitude frame");
    const Eigen::VectorXcd diff = std::exp(gap) * psi.vec - phi.vec;
    return diff.squaredNorm() / nphi;
}

double ftle(double log_norm_sq, double t) {
    if (!(t > 0.0)) throw ConfigError("ftle: t must be > 0");
    return log_norm_sq / (2.0 * t);
}

std::vector<double> instantaneous_growth(std::span<const double> times,
                                         std::span<const double> log_n) {
    const std::size_t n = times.size();
    if (n < 3 || log_n.size() != n)
        throw ConfigError("instantaneous_growth: need >= 3 aligned samples");
    for (std::size_t i = 1; i < n; ++i)
        if (!(times[i] > times[i - 1]))
            throw ConfigError("instantaneous_growth: times must be strictly increasing");

    std::vector<double> zeta(n);
    zeta[0] = (log_n[1] - log_n[0]) / (times[1] - times[0]);
    for (std::size_t i = 1; i + 1 < n; ++i)
        zeta[i] = (log_n[i + 1] - log_n[i - 1]) / (times[i + 1] - times[i - 1]);
    zeta[n - 1] = (log_n[n - 1] - log_n[n - 2]) / (times[n - 1] - times[n - 2]);
    return zeta;
}

std::vector<double> cumulative_difference(const FtleSeries& lam_xi, const FtleSeries& lam_phi) {
    const std::size_t n = lam_xi.times.size();
    if (n != lam_phi.times.size())
        throw ConfigError("cumulative_difference: time grids differ in length");
    for (std::size_t i = 0; i < n; ++i)
        if (lam_xi.times[i] != lam_phi.times[i])
            throw ConfigError("cumulative_difference: time grids do not match");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = lam_xi.times[i] * (lam_xi.lambda[i] - lam_phi.lambda[i]);
    return out;
}

Eigen::VectorXcd biorth_coefficients(const SpectralData& spec, const ScaledState& state,
                                     double* recon_residual, const BiorthOptions& opts) {
    if (spec.size() != state.vec.size())
        throw ConfigError("biorth_coefficients: dimension mismatch");
    if (spec.size() > opts.size_limit && !opts.force)
        throw ConfigError("biorth_coefficients: L exceeds the biorthogonal size limit (pass force to override)");
    if (spec.cond_estimate > opts.cond_limit)
        throw IllConditionedError("biorth_coefficients: eigenbasis too ill-conditioned",
                                  spec.cond_estimate);

    const double amp = std::exp(state.log_amp);
    Eigen::VectorXcd c = spec.left.adjoint() * (amp * state.vec);
    if (recon_residual) {
        const Eigen::VectorXcd recon = spec.right * c;
        *recon_residual = (recon - amp * state.vec).norm() / (amp * state.vec.norm());
    }
    return c;
}

double norm_growth_rate(const Eigen::MatrixXcd& h, const Eigen::VectorXcd& v) {
    const cxd val = v.dot(cxd{0.0, 1.0} * (h.adjoint() * v - h * v));
    return val.real();
}

} // namespace nhlat
