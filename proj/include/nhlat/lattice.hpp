#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <utility>

#include "nhlat/errors.hpp"
#include "nhlat/types.hpp"

namespace nhlat {

// Hopping table of a 1D tight-binding chain. hop(d) is the amplitude for
// displacement +d, i.e. the matrix element H[j+d][j]. Displacement 0 is
// forbidden; on-site terms enter through noise/scattering potentials only.
struct HoppingModel {
    std::map<int, cxd> hops;
    double lattice_constant = 1.0;

    static HoppingModel from_pairs(std::initializer_list<std::pair<int, cxd>> entries);

    int bandwidth() const;       // max |d|
    bool all_real(double tol = 0.0) const;
    cxd hop(int d) const;        // 0 if absent
    void validate() const;       // throws ConfigError
};

enum class BoundaryCondition { OBC, PBC };

// Boundary scattering potential -i*gamma on `extent` consecutive sites
// starting at first_site (1-based; default 1 = leftmost), active during
// (t_on, t_off].
struct ScatteringWindow {
    double gamma = 0.0;
    int extent = 0;
    double t_on = 0.0;
    double t_off = 0.0;
    int first_site = 1;

    void validate(int L) const;  // throws ConfigError
};

// Biorthogonal eigensystem of a non-Hermitian matrix: columns of `right` are
// unit-norm right eigenvectors, columns of `left` satisfy <L_m|R_n> = delta_mn.
// Energies sorted lexicographically by (Re, Im).
struct SpectralData {
    Eigen::VectorXcd energies;
    Eigen::MatrixXcd right;
    Eigen::MatrixXcd left;
    double cond_estimate = 0.0;

    Eigen::Index size() const { return energies.size(); }
};

Eigen::MatrixXcd build_hamiltonian(const HoppingModel& model, int L, BoundaryCondition bc,
                                   const std::optional<ScatteringWindow>& scat = std::nullopt,
                                   bool scat_active = false);

// Bloch symbol h(k) = sum_d hop(d) e^{-ikd}.
cxd bloch_symbol(const HoppingModel& model, double k);

// Winding number of h(k) - e_ref over k in [0, 2pi), by accumulated argument
// over n_k uniform samples. Throws NumericError if any sample lands on e_ref.
int spectral_winding(const HoppingModel& model, cxd e_ref, int n_k = 256);

SpectralData eigensystem(const Eigen::MatrixXcd& h);

// Mode with energy closest to e_target; ties broken by lower sorted index.
std::pair<int, Eigen::VectorXcd> select_eigenstate(const SpectralData& spec, cxd e_target);

// Skin endpoint weight: sum_r sum_{i=1,2} (-1)^i |psi(r)|^4 e^{-|r-r_i|/delta}
// with r_1 = 1, r_2 = L. Negative = left-localized, positive = right-localized.
double corner_weight(const Eigen::VectorXcd& state, double delta);

double max_imag_energy(const SpectralData& spec);

} // namespace nhlat
