#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "nhlat/lattice.hpp"
#include "nhlat/state.hpp"

namespace nhlat {

// Finite-time Lyapunov exponent series for one state family.
struct FtleSeries {
    enum class Source { Phi, Xi, Psi };
    std::vector<double> times;
    std::vector<double> lambda;
    Source source = Source::Psi;
};

// Profile self-healing metric: 1 - |<psi|phi>|^2 / (<psi|psi><phi|phi>).
// Scale factors cancel exactly; clamped to [0,1] against rounding.
double eta(const ScaledState& psi, const ScaledState& phi);

// Deviation metric ||psi - phi||^2 / ||phi||^2, evaluated in a shared frame.
double epsilon_dev(const ScaledState& psi, const ScaledState& phi);

// lambda(t) = log_norm_sq / (2t).
double ftle(double log_norm_sq, double t);

// zeta(t) = d ln N / dt by centered differences (one-sided at the ends).
std::vector<double> instantaneous_growth(std::span<const double> times,
                                         std::span<const double> log_n);

// t * (lambda_xi - lambda_phi) on a common grid.
std::vector<double> cumulative_difference(const FtleSeries& lam_xi, const FtleSeries& lam_phi);

struct BiorthOptions {
    int size_limit = 60;        // skin eigenbases are exponentially ill-conditioned
    bool force = false;         // override the limit explicitly
    double cond_limit = 1e12;
};

// Coefficients C = L^dagger |state| (amplitude included). If recon_residual
// is non-null it receives ||sum C_n R_n - state|| / ||state||.
Eigen::VectorXcd biorth_coefficients(const SpectralData& spec, const ScaledState& state,
                                     double* recon_residual = nullptr,
                                     const BiorthOptions& opts = {});

// Gamma = <v| i(H^dag - H) |v>, the instantaneous norm-growth rate of the
// unscaled vector v.
double norm_growth_rate(const Eigen::MatrixXcd& h, const Eigen::VectorXcd& v);

} // namespace nhlat
