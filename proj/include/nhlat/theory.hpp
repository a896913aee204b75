#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "nhlat/lattice.hpp"
#include "nhlat/metrics.hpp"
#include "nhlat/noise.hpp"

namespace nhlat {

// Q-independent parts of the strong-noise transport coefficients:
//   S(t) = 2 Q(t) s_bar,  v(t) = 2 Q(t) v_bar,  D(t) = 2 Q(t) d_bar.
struct TransportCoefficients {
    double s_bar = 0.0;  // sum_{n>0} (t_{-n} - t_n)^2
    double v_bar = 0.0;  // a   sum_{n>0} n   (|t_{-n}|^2 - |t_n|^2)
    double d_bar = 0.0;  // a^2/2 sum_{n>0} n^2 (|t_{-n}|^2 + |t_n|^2)
};

TransportCoefficients transport_coefficients(const HoppingModel& model);

// Steady-state Lyapunov exponent; pass L = infinity to drop the finite-size term.
double lambda_infty_obc(const TransportCoefficients& tc, double q_inf, double L);
double lambda_infty_pbc(const TransportCoefficients& tc, double q_inf);

// Correlation length xi = D0/v0 of the steady skin envelope; +inf when v0 = 0.
double correlation_length(const HoppingModel& model);

// Separated OBC solution of the drift-diffusion equation at saturated
// coefficients; evaluate at effective time.
struct DriftDiffusionSolution {
    double s = 0.0, v = 0.0, d = 0.0;   // saturated S, v, D
    double alpha = 0.0;                 // -v/2D
    double beta = 0.0;                  // S - v^2/4D
    double domain_length = 0.0;
    std::vector<double> c_n;
    double tail_bound = 0.0;            // |c_n| of the last kept mode
};

DriftDiffusionSolution sine_coefficients(const std::function<double(double)>& f,
                                         double domain_length,
                                         const TransportCoefficients& tc, double q_inf,
                                         int n_modes = 64, int cells = 0);

double drift_diffusion_density(const DriftDiffusionSolution& sol, double x, double t_eff);

// Loss-term handling of the discrete master equation.
//   Reconciled:    loss coefficient sum_n t_n t_{-n}, applied in full at the
//                  edges (matches the absorbing-boundary continuum limit).
//   EdgeCorrected: each pair's loss share is dropped when the partner site
//                  falls outside the lattice (the exact truncated generator).
//   Printed:       loss coefficient sum_n |t_{-n}|^2, which conserves PBC
//                  mass and produces no source term; kept for comparison.
enum class MasterLossForm { Reconciled, EdgeCorrected, Printed };

// One RK4 step of the discrete master equation with Q frozen at q_t:
//   dP_j/dt = 2 Q [ sum_{n!=0} |t_n|^2 P_{j-n}  -  (sum_{n!=0} t_n t_{-n}) P_j ]
// with gains truncated at OBC edges.
void master_equation_step(Eigen::VectorXd& p, const HoppingModel& model, double q_t,
                          double dt, BoundaryCondition bc,
                          MasterLossForm loss_form = MasterLossForm::Reconciled);

// Integrates the master equation in effective time (exact for the shared-Q
// factorization) and returns the states at the requested physical times.
std::vector<Eigen::VectorXd> master_equation_run(const HoppingModel& model,
                                                 const Eigen::VectorXd& p0,
                                                 const NoiseLaw& law,
                                                 const std::vector<double>& times,
                                                 double ds, BoundaryCondition bc,
                                                 MasterLossForm loss_form = MasterLossForm::Reconciled);

// zeta(t) ~ S(t) - v(t)^2/4D(t) - D(t) pi^2/L^2 (asymptotic profile).
double asymptotic_zeta(const TransportCoefficients& tc, double q_t, double L);

// K_m = (sigma^2/2theta) sum_j |<L_m|j><j|phi(0)>|^2.
double weak_noise_k(const SpectralData& spec, int m, const Eigen::VectorXcd& init,
                    const OUParams& ou);

// <|C_m(inf)|^2> for m != init (SM weak-noise closed form); requires
// Im(E_m - E_init) != 0.
double weak_noise_variance_infty(const SpectralData& spec, int m, int init_index,
                                 const Eigen::VectorXcd& init, const OUParams& ou);

// <|C_init(t)|^2> = (2 K_init/theta)(t - (1 - e^{-theta t})/theta).
double weak_noise_variance_init(double k_init, const OUParams& ou, double t);

// lambda_xi(t1 + dt) ~ intercept + slope * dt with
//   intercept = ln||xi||^2 / 2 t1,
//   slope     = Gamma/(2 t1 ||xi||^2) - ln||xi||^2 / (2 t1^2).
std::pair<double, double> short_time_xi_slope(double norm_sq_t1, double gamma_rate, double t1);

struct OneOverTFit {
    double lambda_inf = 0.0;
    double coeff = 0.0;
    double r_squared = 0.0;
};

// Least squares of lambda(t) = lambda_inf + c/t over the window [t_a, t_b].
OneOverTFit one_over_t_fit(const FtleSeries& lam, double t_a, double t_b);

} // namespace nhlat
