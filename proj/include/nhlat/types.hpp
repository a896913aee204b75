#pragma once

#include <complex>

namespace nhlat {

using cxd = std::complex<double>;

} // namespace nhlat
