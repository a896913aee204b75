#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <span>

#include "nhlat/theory.hpp"
#include "test_helpers.hpp"

using namespace nhlat;
using test::main_model;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

HoppingModel s4_model() {
    return HoppingModel::from_pairs({{1, 0.5}, {-1, 1.0}, {2, 0.4}, {-2, 0.8}});
}
HoppingModel s5_model() {
    return HoppingModel::from_pairs({{1, 0.6}, {-1, 1.0}, {2, 0.7}, {-2, 0.8}});
}
HoppingModel s6_model() {
    return HoppingModel::from_pairs({{1, 0.2}, {-1, 0.5}, {2, 0.6}, {-2, 1.0}, {3, 0.1}, {-3, 0.3}});
}

} // namespace

TEST_CASE("transport coefficients of the catalog models") {
    const TransportCoefficients tc = transport_coefficients(main_model());
    CHECK(tc.s_bar == doctest::Approx(0.13).epsilon(1e-12));
    CHECK(tc.v_bar == doctest::Approx(1.23).epsilon(1e-12));
    CHECK(tc.d_bar == doctest::Approx(4.025).epsilon(1e-12));

    const TransportCoefficients rec = transport_coefficients(test::reciprocal_model());
    CHECK(rec.s_bar == 0.0);
    CHECK(rec.v_bar == 0.0);
    CHECK(rec.d_bar > 0.0);

    const TransportCoefficients s4 = transport_coefficients(s4_model());
    CHECK(s4.v_bar == doctest::Approx(1.71).epsilon(1e-12));
    CHECK(s4.d_bar == doctest::Approx(2.225).epsilon(1e-12));

    const HoppingModel complex_model =
        HoppingModel::from_pairs({{1, cxd{0.0, 0.5}}, {-1, 1.0}});
    CHECK_THROWS_AS(transport_coefficients(complex_model), ConfigError);
}

TEST_CASE("lambda_infty_obc reproduces the strong-noise value 0.01444") {
    const TransportCoefficients tc = transport_coefficients(main_model());
    // bracket factor S_bar - v_bar^2/(4 D_bar)
    const double bracket = tc.s_bar - tc.v_bar * tc.v_bar / (4.0 * tc.d_bar);
    CHECK(bracket == doctest::Approx(0.0360311).epsilon(1e-5));

    const double q_inf = kernel_q_infinity(make_noise_law(OUParams{5.0, 10.0}));
    const double lam = lambda_infty_obc(tc, q_inf, kInf);
    CHECK(lam == doctest::Approx(0.01444).epsilon(5e-4));  // 3 significant figures

    // reciprocal model keeps only the finite-size decay
    const TransportCoefficients rec = transport_coefficients(test::reciprocal_model());
    const double lam_rec = lambda_infty_obc(rec, 0.3, 50.0);
    CHECK(lam_rec ==
          doctest::Approx(-0.3 * rec.d_bar * std::numbers::pi * std::numbers::pi / 2500.0)
              .epsilon(1e-12));
    CHECK(lambda_infty_obc(rec, 0.3, kInf) == 0.0);

    // the finite-size term is strictly negative
    CHECK(lambda_infty_obc(tc, q_inf, kInf) > lambda_infty_obc(tc, q_inf, 100.0));
    CHECK(lambda_infty_obc(tc, q_inf, 100.0) > lambda_infty_obc(tc, q_inf, 40.0));
}

TEST_CASE("lambda_infty_pbc is Q_inf S_bar") {
    const TransportCoefficients tc = transport_coefficients(main_model());
    const double q_inf = kernel_q_infinity(make_noise_law(OUParams{5.0, 10.0}));
    CHECK(lambda_infty_pbc(tc, q_inf) == doctest::Approx(0.0521).epsilon(2e-3));
    CHECK(lambda_infty_pbc(transport_coefficients(test::reciprocal_model()), q_inf) == 0.0);
    // white noise: Q_inf = 1/Gamma
    const double q_white = kernel_q_infinity(make_noise_law(WhiteNoiseParams{4.0}));
    CHECK(lambda_infty_pbc(tc, q_white) == doctest::Approx(0.0325).epsilon(1e-6));
}

TEST_CASE("correlation lengths of the four catalog models") {
    CHECK(correlation_length(main_model()) == doctest::Approx(3.27).epsilon(2e-3));
    CHECK(correlation_length(s5_model()) == doctest::Approx(3.13).epsilon(2e-3));
    CHECK(correlation_length(s6_model()) == doctest::Approx(1.92).epsilon(3e-3));
    CHECK(correlation_length(s4_model()) == doctest::Approx(1.30).epsilon(3e-3));
    CHECK(std::isinf(correlation_length(test::reciprocal_model())));
}

TEST_CASE("sine_coefficients picks out the fundamental mode") {
    const TransportCoefficients tc = transport_coefficients(main_model());
    const double q_inf = 0.4;
    const double len = 41.0;
    const double v = 2.0 * q_inf * tc.v_bar;
    const double d = 2.0 * q_inf * tc.d_bar;
    auto f = [&](double x) {
        return std::exp(-v / (2.0 * d) * x) * std::sin(std::numbers::pi * x / len);
    };
    const DriftDiffusionSolution sol = sine_coefficients(f, len, tc, q_inf, 16);
    CHECK(sol.c_n[0] == doctest::Approx(1.0).epsilon(1e-8));
    for (std::size_t n = 1; n < sol.c_n.size(); ++n) CHECK(std::abs(sol.c_n[n]) < 1e-8);
}

TEST_CASE("sine_coefficients of a narrow spike matches the point-mass limit") {
    const TransportCoefficients tc = transport_coefficients(main_model());
    const double q_inf = 0.4;
    const double len = 41.0;
    const double x0 = 15.0, w = 0.1;
    auto bump = [&](double x) {
        const double u = (x - x0) / w;
        return std::exp(-0.5 * u * u) / (w * std::sqrt(2.0 * std::numbers::pi));
    };
    const DriftDiffusionSolution sol = sine_coefficients(bump, len, tc, q_inf, 8, 8192);
    const double vd = sol.v / (2.0 * sol.d);
    for (int n = 1; n <= 8; ++n) {
        const double expected =
            2.0 / len * std::exp(vd * x0) * std::sin(n * std::numbers::pi * x0 / len);
        CHECK(sol.c_n[n - 1] == doctest::Approx(expected).epsilon(1e-2));
    }
}

TEST_CASE("sine_coefficients flags an overflowing spatial weight") {
    TransportCoefficients tc;
    tc.s_bar = 0.0;
    tc.v_bar = 100.0;
    tc.d_bar = 0.01;
    CHECK_THROWS_AS(sine_coefficients([](double) { return 1.0; }, 100.0, tc, 1.0, 8),
                    NumericError);
}

TEST_CASE("drift_diffusion_density vanishes at the boundaries and solves the PDE") {
    const TransportCoefficients tc = transport_coefficients(main_model());
    const double q_inf = kernel_q_infinity(make_noise_law(OUParams{5.0, 10.0}));
    const double len = 41.0;
    auto f = [&](double x) {
        const double u = (x - 20.0) / 3.0;
        return std::exp(-0.5 * u * u);
    };
    const DriftDiffusionSolution sol = sine_coefficients(f, len, tc, q_inf, 64);
    CHECK(drift_diffusion_density(sol, 0.0, 2.0) == 0.0);
    CHECK(drift_diffusion_density(sol, len, 2.0) == doctest::Approx(0.0).epsilon(1e-12));

    // residual of d_t rho = S rho + v rho_x + D rho_xx on an interior grid
    const double t0 = 2.0, hx = 1e-3, ht = 1e-5;
    double max_resid = 0.0, max_rho = 0.0;
    for (double x = 5.0; x <= 35.0; x += 2.5) {
        const double rho = drift_diffusion_density(sol, x, t0);
        const double dt_rho =
            (drift_diffusion_density(sol, x, t0 + ht) - drift_diffusion_density(sol, x, t0 - ht)) /
            (2.0 * ht);
        const double dx_rho =
            (drift_diffusion_density(sol, x + hx, t0) - drift_diffusion_density(sol, x - hx, t0)) /
            (2.0 * hx);
        const double dxx_rho = (drift_diffusion_density(sol, x + hx, t0) - 2.0 * rho +
                                drift_diffusion_density(sol, x - hx, t0)) /
                               (hx * hx);
        const double resid = dt_rho - (sol.s * rho + sol.v * dx_rho + sol.d * dxx_rho);
        max_resid = std::max(max_resid, std::abs(resid));
        max_rho = std::max(max_rho, std::abs(rho));
    }
    CHECK(max_resid <= 1e-6 * max_rho);
}

TEST_CASE("drift_diffusion long-time mass growth approaches lambda_infty") {
    const TransportCoefficients tc = transport_coefficients(main_model());
    const double q_inf = kernel_q_infinity(make_noise_law(OUParams{5.0, 10.0}));
    const double len = 41.0;
    auto f = [&](double x) {
        const double u = (x - 20.0) / 3.0;
        return std::exp(-0.5 * u * u);
    };
    const DriftDiffusionSolution sol = sine_coefficients(f, len, tc, q_inf, 64);
    // pick t late enough that the n=2 mode is 1e3-fold suppressed vs n=1
    const double gap = sol.d * 3.0 * std::numbers::pi * std::numbers::pi / (len * len);
    const double t_late = std::log(1e3 * std::abs(sol.c_n[1] / sol.c_n[0])) / gap;
    auto mass = [&](double t) {
        double acc = 0.0;
        const int cells = 400;
        for (int c = 0; c < cells; ++c) {
            const double x0 = len * c / cells, x1 = len * (c + 1) / cells;
            acc += (x1 - x0) / 6.0 *
                   (drift_diffusion_density(sol, x0, t) +
                    4.0 * drift_diffusion_density(sol, 0.5 * (x0 + x1), t) +
                    drift_diffusion_density(sol, x1, t));
        }
        return acc;
    };
    const double dt = 0.5;
    const double rate = std::log(mass(t_late + dt) / mass(t_late)) / dt;
    const double lam = lambda_infty_obc(tc, q_inf, len);
    CHECK(rate == doctest::Approx(2.0 * lam).epsilon(1e-4));
}

TEST_CASE("master_equation_step: PBC mass growth and reciprocal conservation") {
    const HoppingModel m = main_model();
    const TransportCoefficients tc = transport_coefficients(m);
    const int L = 30;
    Eigen::VectorXd p = Eigen::VectorXd::Zero(L);
    p(L / 2) = 1.0;
    p(L / 2 + 1) = 0.5;
    const double q = 0.4, dt = 0.01;
    const double mass0 = p.sum();
    master_equation_step(p, m, q, dt, BoundaryCondition::PBC);
    const double expected = mass0 * std::exp(2.0 * q * tc.s_bar * dt);
    CHECK(p.sum() == doctest::Approx(expected).epsilon(1e-12));

    // reciprocal rates conserve the total
    Eigen::VectorXd pr = Eigen::VectorXd::Random(L).cwiseAbs();
    const double total = pr.sum();
    master_equation_step(pr, test::reciprocal_model(), q, dt, BoundaryCondition::PBC);
    CHECK(pr.sum() == doctest::Approx(total).epsilon(1e-12));

    // uniform density stays uniform under PBC
    Eigen::VectorXd pu = Eigen::VectorXd::Constant(L, 1.0);
    master_equation_step(pu, m, q, dt, BoundaryCondition::PBC);
    CHECK((pu.array() - pu(0)).abs().maxCoeff() < 1e-12);

    // instability guard
    Eigen::VectorXd pb = Eigen::VectorXd::Zero(L);
    pb(0) = 1.0;
    CHECK_THROWS_AS(master_equation_step(pb, m, 10.0, 5.0, BoundaryCondition::OBC), NumericError);
}

TEST_CASE("master-equation PBC growth rate equals the source term at every step") {
    const HoppingModel m = main_model();
    const TransportCoefficients tc = transport_coefficients(m);
    const NoiseLaw law = make_noise_law(OUParams{5.0, 10.0});
    const int L = 24;
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(L);
    p0(10) = 1.0;

    std::vector<double> times, lnmass;
    for (int k = 0; k <= 40; ++k) times.push_back(0.25 * k);
    const auto states = master_equation_run(m, p0, law, times, 0.005, BoundaryCondition::PBC);
    for (const auto& p : states) lnmass.push_back(std::log(p.sum()));

    const std::vector<double> zeta = instantaneous_growth(
        std::span<const double>(times).subspan(1), std::span<const double>(lnmass).subspan(1));
    for (std::size_t i = 8; i + 1 < zeta.size(); ++i) {
        const double t = times[i + 1];  // zeta[i] sits at times[i+1]
        const double s_t = 2.0 * kernel_q(law, t) * tc.s_bar;
        CHECK(zeta[i] == doctest::Approx(s_t).epsilon(1e-3));  // centered-difference error
    }
}

TEST_CASE("asymptotic_zeta identities") {
    const TransportCoefficients tc = transport_coefficients(main_model());
    const double q = 0.4008, L = 100.0;
    CHECK(asymptotic_zeta(tc, q, L) ==
          doctest::Approx(2.0 * lambda_infty_obc(tc, q, L)).epsilon(1e-12));
    const TransportCoefficients rec = transport_coefficients(test::reciprocal_model());
    CHECK(asymptotic_zeta(rec, q, L) ==
          doctest::Approx(-2.0 * q * rec.d_bar * std::numbers::pi * std::numbers::pi / (L * L))
              .epsilon(1e-12));
    // fixture arithmetic for the main model at L=100
    const double expected = 2.0 * q * tc.s_bar - q * tc.v_bar * tc.v_bar / (2.0 * tc.d_bar) -
                            2.0 * q * tc.d_bar * std::numbers::pi * std::numbers::pi / (L * L);
    CHECK(asymptotic_zeta(tc, q, L) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("weak_noise_k matches a direct summation and its trivial limits") {
    const int L = 20;
    const SpectralData spec =
        eigensystem(build_hamiltonian(main_model(), L, BoundaryCondition::OBC));
    const Eigen::VectorXcd init = spec.right.col(5);
    const OUParams ou{1.0, 0.1};

    for (int m : {0, 3, 11, 19}) {
        double brute = 0.0;
        for (int j = 0; j < L; ++j)
            brute += std::norm(std::conj(spec.left(j, m)) * init(j));
        brute *= ou.sigma * ou.sigma / (2.0 * ou.theta);
        CHECK(weak_noise_k(spec, m, init, ou) == doctest::Approx(brute).epsilon(1e-12));
    }
    CHECK(weak_noise_k(spec, 2, init, OUParams{1.0, 0.0}) == 0.0);

    // disjoint support: init zeroed wherever the left vector lives
    Eigen::VectorXcd masked = init;
    for (int j = 0; j < L; ++j)
        if (std::abs(spec.left(j, 7)) > 1e-12) masked(j) = 0.0;
    CHECK(weak_noise_k(spec, 7, masked, ou) == 0.0);
}

TEST_CASE("weak_noise_variance_infty: limits, positivity, convergence guard") {
    const int L = 20;
    const SpectralData spec =
        eigensystem(build_hamiltonian(main_model(), L, BoundaryCondition::OBC));
    const OUParams ou{1.0, 0.1};
    const auto [init_idx, init_vec] = select_eigenstate(spec, cxd{-0.35, 0.1});

    // positivity for every upward mode (Im dE > 0)
    int tested = 0;
    for (int m = 0; m < L; ++m) {
        if (m == init_idx) continue;
        const double im_de = (spec.energies(m) - spec.energies(init_idx)).imag();
        if (im_de <= 1e-9) continue;
        CHECK(weak_noise_variance_infty(spec, m, init_idx, init_vec, ou) >= 0.0);
        ++tested;
    }
    CHECK(tested > 0);

    // theta -> infinity with sigma^2/(2 theta) fixed decouples like 1/theta
    int m_up = -1;
    for (int m = 0; m < L; ++m)
        if (m != init_idx && (spec.energies(m) - spec.energies(init_idx)).imag() > 1e-6) m_up = m;
    REQUIRE(m_up >= 0);
    const double var_fixed = 0.005;  // sigma^2/(2 theta)
    double prev = kInf;
    for (double theta : {10.0, 100.0, 1000.0}) {
        OUParams p{theta, std::sqrt(2.0 * theta * var_fixed)};
        const double v = weak_noise_variance_infty(spec, m_up, init_idx, init_vec, p);
        CHECK(v < prev);
        prev = v;
    }
    // 10x theta -> about 10x smaller
    OUParams pa{100.0, std::sqrt(2.0 * 100.0 * var_fixed)};
    OUParams pb{1000.0, std::sqrt(2.0 * 1000.0 * var_fixed)};
    const double ra = weak_noise_variance_infty(spec, m_up, init_idx, init_vec, pa);
    const double rb = weak_noise_variance_infty(spec, m_up, init_idx, init_vec, pb);
    CHECK(ra / rb == doctest::Approx(10.0).epsilon(0.15));

    // real-spectrum chain: Im dE = 0 does not converge
    const SpectralData real_spec =
        eigensystem(build_hamiltonian(test::nn_model(), L, BoundaryCondition::OBC));
    CHECK_THROWS_AS(weak_noise_variance_infty(real_spec, 3, 0, real_spec.right.col(0), ou),
                    NumericError);

    // zero coupling gives zero
    Eigen::VectorXcd zero_init = Eigen::VectorXcd::Zero(L);
    zero_init(0) = 1.0;
    for (int j = 0; j < L; ++j)
        if (std::abs(spec.left(j, m_up)) > 1e-12) zero_init(j) = 0.0;
    if (zero_init.norm() > 0.0)
        CHECK(weak_noise_variance_infty(spec, m_up, init_idx, zero_init, ou) == 0.0);
}

TEST_CASE("weak_noise_variance_init closed form") {
    const OUParams ou{1.0, 0.1};
    const double k_init = 0.37;
    CHECK(weak_noise_variance_init(k_init, ou, 0.0) == 0.0);

    // late-time slope 2 K / theta within 1%
    const double t1 = 40.0, t2 = 60.0;
    const double slope = (weak_noise_variance_init(k_init, ou, t2) -
                          weak_noise_variance_init(k_init, ou, t1)) /
                         (t2 - t1);
    CHECK(slope == doctest::Approx(2.0 * k_init / ou.theta).epsilon(0.01));

    // small-t expansion K t^2 + O(t^3)
    for (double t : {1e-3, 1e-4}) {
        const double v = weak_noise_variance_init(k_init, ou, t);
        CHECK(v == doctest::Approx(k_init * t * t).epsilon(1e-3));
    }
}

TEST_CASE("short_time_xi_slope coefficient forms") {
    const auto [i0, s0] = short_time_xi_slope(1.0, 0.8, 2.0);
    CHECK(i0 == 0.0);
    CHECK(s0 == doctest::Approx(0.8 / 4.0).epsilon(1e-12));

    // low initial norm: deep negative intercept, positive slope at Gamma = 0
    const auto [i1, s1] = short_time_xi_slope(1e-6, 0.0, 2.0);
    CHECK(i1 < -3.0);
    CHECK(s1 > 0.0);

    CHECK_THROWS_AS(short_time_xi_slope(0.0, 1.0, 2.0), ConfigError);
    CHECK_THROWS_AS(short_time_xi_slope(1.0, 1.0, 0.0), ConfigError);
}

TEST_CASE("one_over_t_fit recovers exact and noisy synthetic models") {
    FtleSeries lam;
    for (int i = 0; i < 200; ++i) {
        lam.times.push_back(10.0 + i * 4.0);
        lam.lambda.push_back(0.0144 + 0.5 / lam.times.back());
    }
    const OneOverTFit fit = one_over_t_fit(lam, 10.0, 810.0);
    CHECK(fit.lambda_inf == doctest::Approx(0.0144).epsilon(1e-10));
    CHECK(fit.coeff == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-10));

    // gaussian noise: recovered lambda_inf within 3 standard errors
    Rng rng(123);
    FtleSeries noisy = lam;
    const double sd = 1e-4;
    for (double& y : noisy.lambda) y += sd * rng.normal();
    const OneOverTFit nfit = one_over_t_fit(noisy, 10.0, 810.0);
    double sxx = 0.0, sx = 0.0;
    for (double t : lam.times) {
        sx += 1.0 / t;
        sxx += 1.0 / (t * t);
    }
    const double n = static_cast<double>(lam.times.size());
    const double se_intercept = sd * std::sqrt(sxx / (n * sxx - sx * sx));
    CHECK(std::abs(nfit.lambda_inf - 0.0144) < 3.0 * se_intercept);

    CHECK_THROWS_AS(one_over_t_fit(lam, 805.0, 810.0), ConfigError);  // < 10 samples
    CHECK_THROWS_AS(one_over_t_fit(lam, -1.0, 10.0), ConfigError);
}

namespace {

// grabs the shared-frame pair state at selected times
class PairGrab final : public PairSampleHook {
public:
    explicit PairGrab(std::vector<double> wanted) : wanted_(std::move(wanted)) {}
    void on_sample(int, double t, const Eigen::VectorXcd& u, const Eigen::VectorXcd& w,
                   double log_scale) override {
        for (std::size_t i = 0; i < wanted_.size(); ++i) {
            if (t != wanted_[i]) continue;
            u_[i] = u;
            w_[i] = w;
            c_[i] = log_scale;
        }
    }
    std::vector<double> wanted_;
    Eigen::VectorXcd u_[2], w_[2];
    double c_[2] = {0.0, 0.0};
};

} // namespace

TEST_CASE("short_time_xi_slope matches the simulated post-scattering slope") {
    EvolutionConfig cfg;
    cfg.model = main_model();
    cfg.L = 100;
    cfg.dt = 0.1;
    cfg.t_max = 4.5;
    cfg.scat = test::main_window();
    cfg.init.e_target = cxd{-0.35, 0.1};
    PreparedEvolution prep(cfg);
    PairGrab grab({4.0, 4.5});
    prep.run(Rng(1), true, &grab);
    REQUIRE(grab.u_[0].size() == cfg.L);

    const double t1 = 4.0;
    const Eigen::VectorXcd xi1 = grab.w_[0] - grab.u_[0];
    const double n_xi = std::exp(2.0 * grab.c_[0]) * xi1.squaredNorm();
    const double gamma = std::exp(2.0 * grab.c_[0]) * norm_growth_rate(prep.h_free(), xi1);
    const auto [intercept, slope] = short_time_xi_slope(n_xi, gamma, t1);

    const double lam1 = (2.0 * grab.c_[0] + std::log(xi1.squaredNorm())) / (2.0 * t1);
    const Eigen::VectorXcd xi2 = grab.w_[1] - grab.u_[1];
    const double lam2 = (2.0 * grab.c_[1] + std::log(xi2.squaredNorm())) / (2.0 * 4.5);
    CHECK(intercept == doctest::Approx(lam1).epsilon(1e-10));
    const double fd_slope = (lam2 - lam1) / 0.5;
    CHECK(fd_slope == doctest::Approx(slope).epsilon(0.05));
}

TEST_CASE("printed-form master equation conserves PBC mass") {
    const HoppingModel m = main_model();
    const int L = 24;
    Eigen::VectorXd p = Eigen::VectorXd::Zero(L);
    p(3) = 1.0;
    p(17) = 2.0;
    const double total = p.sum();
    for (int s = 0; s < 50; ++s)
        master_equation_step(p, m, 0.4, 0.02, BoundaryCondition::PBC, MasterLossForm::Printed);
    CHECK(p.sum() == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("sine_coefficients: weighted orthogonality zeroes the leading modes") {
    const TransportCoefficients tc = transport_coefficients(main_model());
    const double q_inf = 0.4;
    const double len = 41.0;
    const double vd = 2.0 * q_inf * tc.v_bar / (2.0 * 2.0 * q_inf * tc.d_bar);
    // third weighted harmonic: orthogonal to modes 1 and 2 by construction
    auto f = [&](double x) {
        return std::exp(-vd * x) * std::sin(3.0 * std::numbers::pi * x / len);
    };
    const DriftDiffusionSolution sol = sine_coefficients(f, len, tc, q_inf, 8);
    CHECK(std::abs(sol.c_n[0]) < 1e-8);
    CHECK(std::abs(sol.c_n[1]) < 1e-8);
    CHECK(sol.c_n[2] == doctest::Approx(1.0).epsilon(1e-8));
    for (int n = 3; n < 8; ++n) CHECK(std::abs(sol.c_n[n]) < 1e-8);
}
