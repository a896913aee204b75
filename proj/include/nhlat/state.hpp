#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "nhlat/errors.hpp"

namespace nhlat {

// Complex lattice wavefunction stored as (unit-scale vector, log amplitude):
// the represented state is e^{log_amp} * vec. Survives the e^{2*lambda*t}
// norm growth that overflows raw doubles on long trajectories.
struct ScaledState {
    Eigen::VectorXcd vec;
    double log_amp = 0.0;

    static ScaledState from_raw(Eigen::VectorXcd v) {
        ScaledState s{std::move(v), 0.0};
        s.rescale();
        return s;
    }

    // Keeps ||vec|| inside [0.5, 2], folding the factor into log_amp.
    void rescale() {
        const double nrm = vec.norm();
        if (nrm == 0.0) throw NumericError("scaled state: norm underflowed to exact zero");
        if (nrm < 0.5 || nrm > 2.0) {
            log_amp += std::log(nrm);
            vec /= nrm;
        }
    }

    double log_norm_sq() const { return 2.0 * log_amp + std::log(vec.squaredNorm()); }
};

} // namespace nhlat
