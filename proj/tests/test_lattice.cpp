#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nhlat/lattice.hpp"
#include "nhlat/rng.hpp"
#include "test_helpers.hpp"

using namespace nhlat;
using test::main_model;
using test::nn_model;

TEST_CASE("build_hamiltonian places hoppings on the expected diagonals") {
    const Eigen::MatrixXcd h = build_hamiltonian(main_model(), 100, BoundaryCondition::OBC);
    CHECK(h(1, 0) == cxd{0.7, 0.0});   // superdiagonal: displacement +1
    CHECK(h(0, 1) == cxd{1.0, 0.0});   // subdiagonal
    CHECK(h(2, 0) == cxd{0.8, 0.0});   // second super
    CHECK(h(0, 2) == cxd{1.0, 0.0});   // second sub
    CHECK(h(99, 0) == cxd{0.0, 0.0});  // no wrap under OBC
    CHECK(h.diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("build_hamiltonian with inactive scattering keeps the diagonal zero") {
    const Eigen::MatrixXcd h =
        build_hamiltonian(main_model(), 40, BoundaryCondition::OBC, test::main_window(), false);
    CHECK(h.diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("build_hamiltonian active scattering adds -i gamma on the window sites") {
    const Eigen::MatrixXcd h =
        build_hamiltonian(main_model(), 40, BoundaryCondition::OBC, test::main_window(), true);
    for (int j = 0; j < 10; ++j) CHECK(h(j, j) == cxd{0.0, -10.0});
    CHECK(h(10, 10) == cxd{0.0, 0.0});
}

TEST_CASE("build_hamiltonian PBC wraps the hopping") {
    const HoppingModel m = HoppingModel::from_pairs({{1, 1.0}});
    const Eigen::MatrixXcd h = build_hamiltonian(m, 4, BoundaryCondition::PBC);
    CHECK(h(0, 3) == cxd{1.0, 0.0});  // H[1][4] in 1-based indexing
    CHECK(h(3, 0) == cxd{0.0, 0.0});
}

TEST_CASE("build_hamiltonian rejects invalid inputs") {
    CHECK_THROWS_AS(build_hamiltonian(main_model(), 2, BoundaryCondition::OBC), ConfigError);
    ScatteringWindow w{10.0, 50, 2.0, 4.0, 1};
    CHECK_THROWS_AS(build_hamiltonian(main_model(), 40, BoundaryCondition::OBC, w, true),
                    ConfigError);
    HoppingModel bad;
    bad.hops[0] = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("bloch_symbol closed forms") {
    const HoppingModel m = nn_model();
    CHECK(bloch_symbol(m, 0.0).real() == doctest::Approx(1.7).epsilon(1e-15));
    CHECK(bloch_symbol(m, 0.0).imag() == doctest::Approx(0.0));
    const cxd at_half_pi = bloch_symbol(m, std::numbers::pi / 2.0);
    CHECK(at_half_pi.real() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(at_half_pi.imag() == doctest::Approx(0.3).epsilon(1e-12));

    // single harmonic traces a circle of radius |t|
    const HoppingModel single = HoppingModel::from_pairs({{1, cxd{0.4, 0.3}}});
    for (double k : {0.1, 1.0, 2.5, 5.0})
        CHECK(std::abs(bloch_symbol(single, k)) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("spectral_winding of the main model is positive") {
    // dense argument-accumulation oracle: winding 2 around the origin (both
    // Bloch harmonics with left-directed weight encircle it), winding 1 around
    // the representative interior energy. Positive either way, consistent
    // with the left-localized skin modes.
    CHECK(spectral_winding(main_model(), cxd{0.0, 0.0}, 256) == 2);
    CHECK(spectral_winding(main_model(), cxd{-0.35, 0.1}, 256) == 1);
    // invariant under doubling the sample count
    CHECK(spectral_winding(main_model(), cxd{0.0, 0.0}, 512) == 2);
    CHECK(spectral_winding(main_model(), cxd{0.0, 0.0}, 1024) == 2);
    CHECK(spectral_winding(main_model(), cxd{-0.35, 0.1}, 512) == 1);
}

TEST_CASE("spectral_winding of a Hermitian chain outside the band is 0") {
    CHECK(spectral_winding(test::reciprocal_model(), cxd{3.0, 0.0}, 128) == 0);
}

TEST_CASE("spectral_winding of a single right hop is -1") {
    const HoppingModel m = HoppingModel::from_pairs({{1, 1.0}});
    CHECK(spectral_winding(m, cxd{0.0, 0.0}, 128) == -1);
}

TEST_CASE("spectral_winding rejects on-contour reference energies") {
    const HoppingModel m = HoppingModel::from_pairs({{1, 1.0}});
    CHECK_THROWS_AS(spectral_winding(m, cxd{1.0, 0.0}, 128), NumericError);
    CHECK_THROWS_AS(spectral_winding(m, cxd{0.0, 0.0}, 32), ConfigError);
}

TEST_CASE("eigensystem reproduces the similarity-gauge spectrum of the nn chain") {
    const int L = 20;
    const SpectralData spec = eigensystem(build_hamiltonian(nn_model(), L, BoundaryCondition::OBC));
    // r-gauge maps to a Hermitian chain: E_m = 2 sqrt(t1 t-1) cos(m pi / (L+1))
    std::vector<double> expected;
    for (int m = 1; m <= L; ++m)
        expected.push_back(2.0 * std::sqrt(0.7) * std::cos(m * std::numbers::pi / (L + 1)));
    std::sort(expected.begin(), expected.end());
    for (int i = 0; i < L; ++i) {
        CHECK(spec.energies(i).real() == doctest::Approx(expected[i]).epsilon(1e-8));
        CHECK(std::abs(spec.energies(i).imag()) < 1e-8);
    }
}

TEST_CASE("eigensystem of a Hermitian matrix has left = right up to normalization") {
    const SpectralData spec =
        eigensystem(build_hamiltonian(test::reciprocal_model(), 12, BoundaryCondition::OBC));
    for (int n = 0; n < 12; ++n) {
        const cxd scale = spec.left.col(n).dot(spec.right.col(n));
        CHECK((spec.left.col(n) * scale - spec.right.col(n)).norm() <
              1e-9 * spec.right.col(n).norm());
    }
}

TEST_CASE("eigensystem biorthonormality and residuals") {
    for (int L : {20, 40, 60}) {
        const Eigen::MatrixXcd h = build_hamiltonian(main_model(), L, BoundaryCondition::OBC);
        const SpectralData spec = eigensystem(h);
        const Eigen::MatrixXcd gram = spec.left.adjoint() * spec.right;
        const double dev =
            (gram - Eigen::MatrixXcd::Identity(L, L)).cwiseAbs().maxCoeff();
        CHECK(dev <= 1e-8);

        const double hnorm = h.norm();
        for (int n = 0; n < L; ++n) {
            const double resid =
                (h * spec.right.col(n) - spec.energies(n) * spec.right.col(n)).norm();
            CHECK(resid <= 1e-9 * hnorm);
        }
    }
}

TEST_CASE("eigensystem sorts energies lexicographically by (Re, Im)") {
    const SpectralData spec =
        eigensystem(build_hamiltonian(main_model(), 30, BoundaryCondition::OBC));
    for (int i = 1; i < 30; ++i) {
        const cxd a = spec.energies(i - 1), b = spec.energies(i);
        CHECK((a.real() < b.real() || (a.real() == b.real() && a.imag() <= b.imag())));
    }
}

TEST_CASE("select_eigenstate picks the closest mode, ties to the lower index") {
    const SpectralData spec =
        eigensystem(build_hamiltonian(main_model(), 30, BoundaryCondition::OBC));
    // exact hit
    const auto [idx, vec] = select_eigenstate(spec, spec.energies(7));
    CHECK(idx == 7);
    CHECK((vec - spec.right.col(7)).norm() == 0.0);
    // midpoint between two neighboring energies resolves to the lower index
    const cxd mid = 0.5 * (spec.energies(3) + spec.energies(4));
    const auto [tie_idx, tie_vec] = select_eigenstate(spec, mid);
    CHECK(tie_idx <= 4);
}

TEST_CASE("corner_weight endpoint and uniform cases") {
    const int L = 100;
    Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(L);
    e1(0) = 1.0;
    CHECK(corner_weight(e1, 10.0) == doctest::Approx(-1.0 + std::exp(-9.9)).epsilon(1e-12));

    Eigen::VectorXcd eL = Eigen::VectorXcd::Zero(L);
    eL(L - 1) = 1.0;
    CHECK(corner_weight(eL, 10.0) == doctest::Approx(1.0 - std::exp(-9.9)).epsilon(1e-12));

    Eigen::VectorXcd uniform = Eigen::VectorXcd::Constant(L, 1.0 / std::sqrt(double(L)));
    CHECK(corner_weight(uniform, 10.0) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("corner_weight sign matches the densest boundary for every OBC eigenstate") {
    const int L = 60;
    const SpectralData spec =
        eigensystem(build_hamiltonian(main_model(), L, BoundaryCondition::OBC));
    for (int n = 0; n < L; ++n) {
        const Eigen::VectorXd dens = spec.right.col(n).cwiseAbs2();
        double left_half = dens.head(L / 2).sum();
        double right_half = dens.tail(L / 2).sum();
        const double w = corner_weight(spec.right.col(n), 10.0);
        if (left_half > right_half)
            CHECK(w < 0.0);
        else
            CHECK(w > 0.0);
    }
}

TEST_CASE("max_imag_energy responds to a uniform imaginary shift") {
    Eigen::MatrixXcd h = build_hamiltonian(main_model(), 30, BoundaryCondition::OBC);
    const double base = max_imag_energy(eigensystem(h));
    h.diagonal().array() += cxd{0.0, 0.1};
    const double shifted = max_imag_energy(eigensystem(h));
    CHECK(shifted == doctest::Approx(base + 0.1).epsilon(1e-10));

    // nn-only chain has a real spectrum
    const SpectralData nn = eigensystem(build_hamiltonian(nn_model(), 20, BoundaryCondition::OBC));
    CHECK(std::abs(max_imag_energy(nn)) < 1e-9);
}

TEST_CASE("eigensystem flags a numerically defective matrix") {
    // a Jordan block has no eigenbasis: the eigenvector matrix is singular
    Eigen::MatrixXcd jordan = Eigen::MatrixXcd::Zero(4, 4);
    for (int i = 0; i + 1 < 4; ++i) jordan(i, i + 1) = 1.0;
    CHECK_THROWS_AS(eigensystem(jordan), NumericError);
}

TEST_CASE("select_eigenstate exact ties resolve to the lower sorted index") {
    // diagonal matrix: spectrum is exact, distances tie bit-for-bit
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(4, 4);
    h(0, 0) = 1.0;
    h(1, 1) = 3.0;
    h(2, 2) = 5.0;
    h(3, 3) = 7.0;
    const SpectralData spec = eigensystem(h);
    const auto [idx, vec] = select_eigenstate(spec, cxd{2.0, 0.0});  // equidistant to 1 and 3
    CHECK(idx == 0);
}
