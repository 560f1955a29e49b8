#ifndef STEPINF_QUARTIC_HPP
#define STEPINF_QUARTIC_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <vector>

#include "stepinf/errors.hpp"

namespace stepinf {

/// All roots of a complex polynomial c[0] + c[1] z + ... + c[d] z^d via the
/// eigenvalues of its companion matrix. Leading coefficients whose modulus
/// falls below 1e-14 of the largest are treated as zero and the degree
/// reduced; an (effectively) constant polynomial has no roots.
inline std::vector<std::complex<double>> polynomial_roots(
    const std::vector<std::complex<double>>& coeffs) {
    double maxAbs = 0.0;
    for (const auto& c : coeffs) maxAbs = std::max(maxAbs, std::abs(c));
    if (maxAbs == 0.0) return {};

    int deg = static_cast<int>(coeffs.size()) - 1;
    while (deg > 0 && std::abs(coeffs[static_cast<std::size_t>(deg)]) <= 1e-14 * maxAbs) --deg;
    if (deg == 0) return {};

    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(deg, deg);
    const std::complex<double> lead = coeffs[static_cast<std::size_t>(deg)];
    for (int i = 0; i < deg; ++i) {
        companion(i, deg - 1) = -coeffs[static_cast<std::size_t>(i)] / lead;
        if (i > 0) companion(i, i - 1) = 1.0;
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw NumericalError("polynomial_roots: eigenvalue iteration failed");

    std::vector<std::complex<double>> roots(static_cast<std::size_t>(deg));
    for (int i = 0; i < deg; ++i) roots[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
    return roots;
}

} // namespace stepinf

#endif
