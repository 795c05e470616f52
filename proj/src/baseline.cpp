#include "gridsense/baseline.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gridsense/error.hpp"

namespace gridsense {

Eigen::VectorXcd lmmse_estimate(const Eigen::MatrixXcd& H, const Eigen::VectorXcd& y, double sigma2) {
    if (H.rows() != y.size())
        throw Error(ErrorCode::DimensionMismatch, "H has " + std::to_string(H.rows()) + " rows, y has " +
                                                      std::to_string(y.size()));
    if (!(sigma2 >= 0.0)) throw Error(ErrorCode::NonFiniteInput, "noise variance must be non-negative");
    if (std::isinf(sigma2)) return Eigen::VectorXcd::Zero(H.cols());

    Eigen::MatrixXcd normal = H.adjoint() * H;
    normal.diagonal().array() += sigma2;
    const Eigen::LDLT<Eigen::MatrixXcd> ldlt(normal);
    const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
    if (ldlt.info() != Eigen::Success || !(pivots.minCoeff() > 1e-14 * pivots.maxCoeff()))
        throw Error(ErrorCode::SingularSystem, "normal matrix is singular");
    return ldlt.solve(H.adjoint() * y);
}

double wrap_phase(double d) {
    constexpr double pi = std::numbers::pi;
    double w = std::remainder(d, 2.0 * pi);  // [-pi, pi]
    if (w <= -pi) w += 2.0 * pi;
    return w;
}

MetricsReport compute_metrics(const Eigen::VectorXcd& truth, const Eigen::VectorXcd& estimate) {
    if (truth.size() != estimate.size() || truth.size() == 0)
        throw Error(ErrorCode::DimensionMismatch, "metric inputs must be non-empty and equal length");
    MetricsReport r;
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
        r.mse += std::norm(truth(i) - estimate(i));
        const double dm = std::abs(truth(i)) - std::abs(estimate(i));
        r.mse_magnitude += dm * dm;
        const double dp = wrap_phase(std::arg(truth(i)) - std::arg(estimate(i)));
        r.mse_phase += dp * dp;
    }
    const auto n = static_cast<double>(truth.size());
    r.mse /= n;
    r.mse_magnitude /= n;
    r.mse_phase /= n;
    return r;
}

}  // namespace gridsense
