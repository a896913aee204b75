#include "nhlat/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace nhlat {

HoppingModel HoppingModel::from_pairs(std::initializer_list<std::pair<int, cxd>> entries) {
    HoppingModel m;
    for (const auto& [d, t] : entries) m.hops[d] = t;
    m.validate();
    return m;
}

int HoppingModel::bandwidth() const {
    int b = 0;
    for (const auto& [d, t] : hops) b = std::max(b, std::abs(d));
    return b;
}

bool HoppingModel::all_real(double tol) const {
    for (const auto& [d, t] : hops)
        if (std::abs(t.imag()) > tol) return false;
    return true;
}

cxd HoppingModel::hop(int d) const {
    auto it = hops.find(d);
    return it == hops.end() ? cxd{0.0, 0.0} : it->second;
}

void HoppingModel::validate() const {
    if (hops.count(0))
        throw ConfigError("hopping model: displacement 0 is not allowed (on-site terms enter via potentials)");
    bool any = false;
    for (const auto& [d, t] : hops)
        if (t != cxd{0.0, 0.0}) any = true;
    if (!any) throw ConfigError("hopping model: needs at least one nonzero amplitude");
    if (lattice_constant != 1.0)
        throw ConfigError("hopping model: lattice constant is fixed to 1");
}

void ScatteringWindow::validate(int L) const {
    if (extent < 1) throw ConfigError("scattering window: extent must be >= 1");
    if (first_site < 1 || first_site + extent - 1 > L)
        throw ConfigError("scattering window: sites exceed the lattice");
    if (!(t_on < t_off)) throw ConfigError("scattering window: requires t_on < t_off");
}

Eigen::MatrixXcd build_hamiltonian(const HoppingModel& model, int L, BoundaryCondition bc,
                                   const std::optional<ScatteringWindow>& scat, bool scat_active) {
    model.validate();
    if (L < 2) throw ConfigError("build_hamiltonian: L must be >= 2");
    if (model.bandwidth() >= L)
        throw ConfigError("build_hamiltonian: hopping bandwidth must be < L");

    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(L, L);
    for (const auto& [d, t] : model.hops) {
        for (int j = 0; j < L; ++j) {
            const int i = j + d;
            if (bc == BoundaryCondition::OBC) {
                if (i >= 0 && i < L) h(i, j) += t;
            } else {
                h(((i % L) + L) % L, j) += t;
            }
        }
    }
    if (scat_active) {
        if (!scat) throw ConfigError("build_hamiltonian: scattering requested without a window");
        scat->validate(L);
        for (int j = scat->first_site - 1; j < scat->first_site - 1 + scat->extent; ++j)
            h(j, j) += cxd{0.0, -scat->gamma};
    }
    return h;
}

cxd bloch_symbol(const HoppingModel& model, double k) {
    cxd val{0.0, 0.0};
    for (const auto& [d, t] : model.hops)
        val += t * std::exp(cxd{0.0, -k * static_cast<double>(d)});
    return val;
}

int spectral_winding(const HoppingModel& model, cxd e_ref, int n_k) {
    if (n_k < 64) throw ConfigError("spectral_winding: need at least 64 samples");
    const double two_pi = 2.0 * std::numbers::pi;
    double acc = 0.0;
    cxd prev = bloch_symbol(model, 0.0) - e_ref;
    if (std::abs(prev) < 1e-12)
        throw NumericError("spectral_winding: reference energy lies on the Bloch contour");
    for (int i = 1; i <= n_k; ++i) {
        const double k = two_pi * static_cast<double>(i) / n_k;
        const cxd cur = bloch_symbol(model, k) - e_ref;
        if (std::abs(cur) < 1e-12)
            throw NumericError("spectral_winding: reference energy lies on the Bloch contour");
        acc += std::arg(cur / prev);
        prev = cur;
    }
    return static_cast<int>(std::lround(acc / two_pi));
}

SpectralData eigensystem(const Eigen::MatrixXcd& h) {
    if (h.rows() != h.cols()) throw ConfigError("eigensystem: matrix must be square");
    const Eigen::Index n = h.rows();
    if (n < 2) throw ConfigError("eigensystem: need L >= 2");

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(h, true);
    if (solver.info() != Eigen::Success)
        throw NumericError("eigensystem: eigensolver failed to converge");

    std::vector<Eigen::Index> order(n);
    for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
    const auto& ev = solver.eigenvalues();
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (ev(a).real() != ev(b).real()) return ev(a).real() < ev(b).real();
        return ev(a).imag() < ev(b).imag();
    });

    SpectralData out;
    out.energies.resize(n);
    out.right.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.energies(i) = ev(order[i]);
        out.right.col(i) = solver.eigenvectors().col(order[i]).normalized();
    }

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(out.right);
    Eigen::MatrixXcd rinv = lu.inverse();
    // one Newton step on the inverse sharpens biorthonormality for the
    // exponentially ill-conditioned skin-mode matrices
    rinv += rinv * (Eigen::MatrixXcd::Identity(n, n) - out.right * rinv);

    out.cond_estimate = out.right.cwiseAbs().colwise().sum().maxCoeff() *
                        rinv.cwiseAbs().colwise().sum().maxCoeff();
    if (!std::isfinite(out.cond_estimate) || out.cond_estimate > 1e15)
        throw IllConditionedError("eigensystem: eigenvector matrix numerically defective", out.cond_estimate);

    out.left = rinv.adjoint();  // columns L_m, <L_m|R_n> = (R^-1 R)_mn
    return out;
}

std::pair<int, Eigen::VectorXcd> select_eigenstate(const SpectralData& spec, cxd e_target) {
    int best = 0;
    double best_dist = std::abs(spec.energies(0) - e_target);
    for (Eigen::Index i = 1; i < spec.size(); ++i) {
        const double d = std::abs(spec.energies(i) - e_target);
        if (d < best_dist) {
            best_dist = d;
            best = static_cast<int>(i);
        }
    }
    return {best, spec.right.col(best)};
}

double corner_weight(const Eigen::VectorXcd& state, double delta) {
    if (delta <= 0.0) throw ConfigError("corner_weight: delta must be positive");
    const Eigen::Index n = state.size();
    double w = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
        const double p2 = std::norm(state(r));
        const double left = std::exp(-static_cast<double>(r) / delta);            // |r - 1| with r 1-based
        const double right = std::exp(-static_cast<double>(n - 1 - r) / delta);   // |r - L|
        w += p2 * p2 * (right - left);
    }
    return w;
}

double max_imag_energy(const SpectralData& spec) {
    return spec.energies.imag().maxCoeff();
}

} // namespace nhlat
