#include "ntk/spectral_decomp.hpp"

#include <Eigen/Eigenvalues>
#include <functional>

#include "ntk/errors.hpp"
#include "ntk/flops.hpp"

namespace ntk {

double SpectralDecomposition::null_threshold() const {
    return size() == 0 ? 0.0 : 1e-12 * lambdas(0);
}

Eigen::MatrixXd SpectralDecomposition::reconstruct() const {
    return vectors * lambdas.asDiagonal() * vectors.transpose();
}

Eigen::VectorXd SpectralDecomposition::apply_function(
    const Eigen::VectorXd& rhs, const std::function<double(double)>& g) const {
    Eigen::VectorXd coeffs = vectors.transpose() * rhs;
    for (int k = 0; k < size(); ++k) coeffs(k) *= g(lambdas(k));
    flops::add(static_cast<std::uint64_t>(4) * size() * size());
    return vectors * coeffs;
}

SpectralDecomposition decompose(const Eigen::MatrixXd& symmetric) {
    if (symmetric.rows() != symmetric.cols()) {
        throw NumericError("decompose expects a square matrix");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric);
    if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    const int m = static_cast<int>(symmetric.rows());
    SpectralDecomposition d;
    d.lambdas.resize(m);
    d.vectors.resize(m, m);
    for (int k = 0; k < m; ++k) {
        d.lambdas(k) = es.eigenvalues()(m - 1 - k);
        d.vectors.col(k) = es.eigenvectors().col(m - 1 - k);
    }
    flops::add(static_cast<std::uint64_t>(9) * m * m * m);
    return d;
}

} // namespace ntk
