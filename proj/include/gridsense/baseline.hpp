#pragma once

#include <Eigen/Dense>

namespace gridsense {

/// Ridge solution (H^H H + sigma2 I)^{-1} H^H y. Throws SingularSystem when the
/// normal matrix is numerically singular, which needs sigma2 = 0 and rank-deficient H.
Eigen::VectorXcd lmmse_estimate(const Eigen::MatrixXcd& H, const Eigen::VectorXcd& y, double sigma2);

struct MetricsReport {
    double mse = 0.0;
    double mse_magnitude = 0.0;
    double mse_phase = 0.0;  // rad^2, differences wrapped to (-pi, pi]
};

MetricsReport compute_metrics(const Eigen::VectorXcd& truth, const Eigen::VectorXcd& estimate);

/// Wraps an angle difference into (-pi, pi].
double wrap_phase(double d);

}  // namespace gridsense
