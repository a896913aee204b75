#include "nhlat/expm.hpp"

#include <cmath>

#include "nhlat/errors.hpp"

namespace nhlat {

Eigen::MatrixXcd matrix_exponential(const Eigen::MatrixXcd& m) {
    if (m.rows() != m.cols()) throw ConfigError("matrix_exponential: matrix must be square");
    if (!m.allFinite()) throw NumericError("matrix_exponential: non-finite entries");

    const Eigen::Index n = m.rows();
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);

    // Pade(13,13) coefficients (Higham 2005); theta_13 scaling threshold.
    static const double b[] = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0,  129060195264000.0,   10559470521600.0,
        670442572800.0,      33522128640.0,       1323241920.0,
        40840800.0,          960960.0,            16380.0,
        182.0,               1.0};
    const double theta13 = 5.371920351148152;

    const double norm = m.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
    }
    const Eigen::MatrixXcd a = m / std::pow(2.0, squarings);

    const Eigen::MatrixXcd a2 = a * a;
    const Eigen::MatrixXcd a4 = a2 * a2;
    const Eigen::MatrixXcd a6 = a2 * a4;
    const Eigen::MatrixXcd u =
        a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) +
             b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
    const Eigen::MatrixXcd v =
        a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) +
        b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

    Eigen::MatrixXcd r = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) r = r * r;
    if (!r.allFinite()) throw NumericError("matrix_exponential: result overflowed");
    return r;
}

} // namespace nhlat
