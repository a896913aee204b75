#include "nhlat/theory.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace nhlat {

namespace {
constexpr double kPi = std::numbers::pi;
}

TransportCoefficients transport_coefficients(const HoppingModel& model) {
    model.validate();
    if (!model.all_real(1e-14))
        throw ConfigError("transport_coefficients: complex hoppings are not supported "
                          "(the source term assumes real amplitudes)");
    const double a = model.lattice_constant;
    TransportCoefficients tc;
    const int bw = model.bandwidth();
    for (int n = 1; n <= bw; ++n) {
        const double tp = model.hop(n).real();
        const double tm = model.hop(-n).real();
        tc.s_bar += (tm - tp) * (tm - tp);
        tc.v_bar += a * n * (tm * tm - tp * tp);
        tc.d_bar += 0.5 * a * a * n * n * (tm * tm + tp * tp);
    }
    return tc;
}

double lambda_infty_obc(const TransportCoefficients& tc, double q_inf, double L) {
    if (q_inf < 0.0) throw ConfigError("lambda_infty: Q(inf) must be >= 0");
    const double s = 2.0 * q_inf * tc.s_bar;
    const double v = 2.0 * q_inf * tc.v_bar;
    const double d = 2.0 * q_inf * tc.d_bar;
    double lam = 0.5 * s;
    if (d > 0.0) lam -= v * v / (8.0 * d);
    if (std::isfinite(L)) lam -= 0.5 * d * kPi * kPi / (L * L);
    return lam;
}

double lambda_infty_pbc(const TransportCoefficients& tc, double q_inf) {
    if (q_inf < 0.0) throw ConfigError("lambda_infty: Q(inf) must be >= 0");
    return q_inf * tc.s_bar;
}

double correlation_length(const HoppingModel& model) {
    const TransportCoefficients tc = transport_coefficients(model);
    if (tc.v_bar == 0.0) return std::numeric_limits<double>::infinity();
    return tc.d_bar / tc.v_bar;
}

DriftDiffusionSolution sine_coefficients(const std::function<double(double)>& f,
                                         double domain_length,
                                         const TransportCoefficients& tc, double q_inf,
                                         int n_modes, int cells) {
    if (!(domain_length > 0.0)) throw ConfigError("sine_coefficients: domain length must be > 0");
    if (n_modes < 1) throw ConfigError("sine_coefficients: need at least one mode");

    DriftDiffusionSolution sol;
    sol.s = 2.0 * q_inf * tc.s_bar;
    sol.v = 2.0 * q_inf * tc.v_bar;
    sol.d = 2.0 * q_inf * tc.d_bar;
    if (!(sol.d > 0.0)) throw ConfigError("sine_coefficients: diffusion coefficient must be > 0");
    sol.alpha = -sol.v / (2.0 * sol.d);
    sol.beta = sol.s - sol.v * sol.v / (4.0 * sol.d);
    sol.domain_length = domain_length;

    const double expo = sol.v / (2.0 * sol.d) * domain_length;
    if (std::abs(expo) > 700.0)
        throw NumericError("sine_coefficients: e^{vx/2D} overflows over the domain; "
                           "rescale the model or shrink the domain");

    // composite Simpson; default grid resolves the highest mode, sharper
    // initial data can request more cells
    if (cells <= 0) cells = std::max(8 * n_modes, 512);
    const double h = domain_length / cells;
    sol.c_n.resize(n_modes);
    for (int n = 1; n <= n_modes; ++n) {
        double acc = 0.0;
        auto g = [&](double x) {
            return f(x) * std::exp(sol.v / (2.0 * sol.d) * x) * std::sin(n * kPi * x / domain_length);
        };
        for (int c = 0; c < cells; ++c) {
            const double x0 = c * h;
            acc += h / 6.0 * (g(x0) + 4.0 * g(x0 + 0.5 * h) + g(x0 + h));
        }
        sol.c_n[n - 1] = 2.0 / domain_length * acc;
    }
    sol.tail_bound = std::abs(sol.c_n.back());
    return sol;
}

double drift_diffusion_density(const DriftDiffusionSolution& sol, double x, double t_eff) {
    if (x < 0.0 || x > sol.domain_length)
        throw ConfigError("drift_diffusion_density: x outside the domain");
    if (t_eff < 0.0) throw ConfigError("drift_diffusion_density: negative effective time");
    const double len = sol.domain_length;
    double series = 0.0;
    for (std::size_t i = 0; i < sol.c_n.size(); ++i) {
        const double n = static_cast<double>(i + 1);
        series += sol.c_n[i] * std::sin(n * kPi * x / len) *
                  std::exp(-sol.d * n * n * kPi * kPi / (len * len) * t_eff);
    }
    return std::exp(sol.alpha * x) * std::exp(sol.beta * t_eff) * series;
}

namespace {

// RHS of the master equation at unit Q; rate(t) multiplies it.
void master_rhs(Eigen::VectorXd& dst, const Eigen::VectorXd& p, const HoppingModel& model,
                BoundaryCondition bc, MasterLossForm loss_form) {
    const Eigen::Index L = p.size();
    double loss = 0.0;
    for (const auto& [n, t] : model.hops)
        loss += loss_form == MasterLossForm::Printed ? std::norm(t) : (t * model.hop(-n)).real();
    dst = -loss * p;
    for (const auto& [n, t] : model.hops) {
        const double gain = std::norm(t);
        const double pair_loss = (t * model.hop(-n)).real();
        for (Eigen::Index j = 0; j < L; ++j) {
            const Eigen::Index src = j - n;
            if (bc == BoundaryCondition::PBC) {
                dst(j) += gain * p(((src % L) + L) % L);
            } else if (src >= 0 && src < L) {
                dst(j) += gain * p(src);
            } else if (loss_form == MasterLossForm::EdgeCorrected) {
                // the (j, j-n) site pair does not exist: drop its loss share too
                dst(j) += pair_loss * p(j);
            }
        }
    }
}

} // namespace

void master_equation_step(Eigen::VectorXd& p, const HoppingModel& model, double q_t,
                          double dt, BoundaryCondition bc, MasterLossForm loss_form) {
    if (!(dt > 0.0)) throw ConfigError("master_equation_step: dt must be > 0");
    const Eigen::Index L = p.size();
    const double rate = 2.0 * q_t;
    Eigen::VectorXd k1(L), k2(L), k3(L), k4(L), tmp(L);
    master_rhs(k1, p, model, bc, loss_form);
    tmp = p + (0.5 * dt * rate) * k1;
    master_rhs(k2, tmp, model, bc, loss_form);
    tmp = p + (0.5 * dt * rate) * k2;
    master_rhs(k3, tmp, model, bc, loss_form);
    tmp = p + (dt * rate) * k3;
    master_rhs(k4, tmp, model, bc, loss_form);
    p += (dt * rate / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (p.minCoeff() < -1e-12)
        throw NumericError("master_equation_step: densities went negative; reduce dt");
}

std::vector<Eigen::VectorXd> master_equation_run(const HoppingModel& model,
                                                 const Eigen::VectorXd& p0,
                                                 const NoiseLaw& law,
                                                 const std::vector<double>& times,
                                                 double ds, BoundaryCondition bc,
                                                 MasterLossForm loss_form) {
    const double q_inf = kernel_q_infinity(law);
    std::vector<Eigen::VectorXd> out;
    out.reserve(times.size());
    Eigen::VectorXd p = p0;
    double s_now = 0.0;
    double t_prev = 0.0;
    for (double t : times) {
        if (t < t_prev) throw ConfigError("master_equation_run: times must be nondecreasing");
        const double s_target = effective_time(law, t);
        while (s_now < s_target - 1e-12) {
            const double step = std::min(ds, s_target - s_now);
            master_equation_step(p, model, q_inf, step, bc, loss_form);
            s_now += step;
        }
        out.push_back(p);
        t_prev = t;
    }
    return out;
}

double asymptotic_zeta(const TransportCoefficients& tc, double q_t, double L) {
    const double s = 2.0 * q_t * tc.s_bar;
    const double v = 2.0 * q_t * tc.v_bar;
    const double d = 2.0 * q_t * tc.d_bar;
    double z = s - d * kPi * kPi / (L * L);
    if (d > 0.0) z -= v * v / (4.0 * d);
    return z;
}

double weak_noise_k(const SpectralData& spec, int m, const Eigen::VectorXcd& init,
                    const OUParams& ou) {
    ou.validate();
    if (m < 0 || m >= spec.size()) throw ConfigError("weak_noise_k: mode index out of range");
    if (init.size() != spec.size()) throw ConfigError("weak_noise_k: dimension mismatch");
    double sum = 0.0;
    for (Eigen::Index j = 0; j < spec.size(); ++j)
        sum += std::norm(std::conj(spec.left(j, m)) * init(j));
    return ou.stationary_variance() * sum;
}

double weak_noise_variance_infty(const SpectralData& spec, int m, int init_index,
                                 const Eigen::VectorXcd& init, const OUParams& ou) {
    if (m == init_index)
        throw ConfigError("weak_noise_variance_infty: use weak_noise_variance_init for the initial mode");
    const cxd de = spec.energies(m) - spec.energies(init_index);
    if (de.imag() == 0.0)
        throw NumericError("weak_noise_variance_infty: Im(E_m - E_init) = 0, coefficient does not converge");
    const double km = weak_noise_k(spec, m, init, ou);
    const cxd a = 1.0 / (ou.theta - cxd{0.0, 1.0} * std::conj(de));
    const cxd b = 1.0 / (2.0 * de.imag()) - 1.0 / (ou.theta - cxd{0.0, 1.0} * de);
    return 2.0 * km * (a * b).real();
}

double weak_noise_variance_init(double k_init, const OUParams& ou, double t) {
    if (t < 0.0) throw ConfigError("weak_noise_variance_init: t must be >= 0");
    const double th = ou.theta;
    return 2.0 * k_init / th * (t - (1.0 - std::exp(-th * t)) / th);
}

std::pair<double, double> short_time_xi_slope(double norm_sq_t1, double gamma_rate, double t1) {
    if (!(t1 > 0.0)) throw ConfigError("short_time_xi_slope: t1 must be > 0");
    if (!(norm_sq_t1 > 0.0)) throw ConfigError("short_time_xi_slope: norm must be > 0");
    const double logn = std::log(norm_sq_t1);
    const double intercept = logn / (2.0 * t1);
    const double slope = gamma_rate / (2.0 * t1 * norm_sq_t1) - logn / (2.0 * t1 * t1);
    return {intercept, slope};
}

OneOverTFit one_over_t_fit(const FtleSeries& lam, double t_a, double t_b) {
    if (!(t_a > 0.0) || !(t_b > t_a)) throw ConfigError("one_over_t_fit: bad window");
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < lam.times.size(); ++i) {
        if (lam.times[i] >= t_a && lam.times[i] <= t_b) {
            ts.push_back(lam.times[i]);
            ys.push_back(lam.lambda[i]);
        }
    }
    if (ts.size() < 10) throw ConfigError("one_over_t_fit: fewer than 10 samples in the window");

    // normal equations for y = a + b/t
    double s11 = static_cast<double>(ts.size()), s1x = 0.0, sxx = 0.0, s1y = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double x = 1.0 / ts[i];
        s1x += x;
        sxx += x * x;
        s1y += ys[i];
        sxy += x * ys[i];
    }
    const double det = s11 * sxx - s1x * s1x;
    if (det == 0.0) throw NumericError("one_over_t_fit: degenerate window");
    OneOverTFit fit;
    fit.lambda_inf = (sxx * s1y - s1x * sxy) / det;
    fit.coeff = (s11 * sxy - s1x * s1y) / det;

    const double mean = s1y / s11;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double pred = fit.lambda_inf + fit.coeff / ts[i];
        ss_res += (ys[i] - pred) * (ys[i] - pred);
        ss_tot += (ys[i] - mean) * (ys[i] - mean);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

} // namespace nhlat
