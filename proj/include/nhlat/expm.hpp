#pragma once

#include <Eigen/Dense>

#include "nhlat/errors.hpp"
#include "nhlat/types.hpp"

namespace nhlat {

// Dense matrix exponential, scaling-and-squaring with a Pade(13,13) core.
Eigen::MatrixXcd matrix_exponential(const Eigen::MatrixXcd& m);

} // namespace nhlat
