#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gridsense/measurement.hpp"

namespace gridsense {

struct Hyperparams {
    Complex prior_mean{1.0, 0.0};
    double prior_variance = 1.0;
};

struct SolverOptions {
    int max_iterations = 500;
    double epsilon = 1e-8;
    bool em_enabled = true;
    double damping = 0.0;  // weight on the previous omega, rho; 0 disables
    std::uint64_t seed = 0;
    // Test switches. parallel: plain GAMP variable update with no in-sweep refresh.
    bool parallel = false;
    bool fixed_order = false;
};

/// Flattened view of H and the observations, shared by the update steps.
struct GampModel {
    Eigen::MatrixXcd H;
    Eigen::MatrixXd H2;  // |H|^2
    std::vector<std::vector<Eigen::Index>> support;  // nonzero rows of each column
    std::vector<Channel> channels;
    double sigma2 = 0.0;

    static GampModel make(const Eigen::MatrixXcd& H, const MeasurementSet& measurements, double sigma2);
    Eigen::Index variables() const noexcept { return H.cols(); }
    Eigen::Index factors() const noexcept { return H.rows(); }
};

struct SolverState {
    // per variable
    Eigen::VectorXcd xhat;
    Eigen::VectorXd tau;
    Eigen::VectorXcd R;
    Eigen::VectorXd Sigma2;
    // per factor
    Eigen::VectorXcd omega;
    Eigen::VectorXd rho;
    Eigen::VectorXcd zhat;
    Eigen::VectorXd varsigma;
    Eigen::VectorXcd shat;
    Eigen::VectorXd zeta;

    int t = 1;
    Hyperparams theta;
    Eigen::VectorXcd xhat_prev;
    std::size_t precision_floor_events = 0;
};

struct Estimate {
    Eigen::VectorXcd x;
    Eigen::VectorXd tau;
    Hyperparams theta;
    int iterations = 0;
    double final_epsilon = 0.0;
    std::vector<double> trace;
    bool converged = false;
    std::size_t precision_floor_events = 0;
};

struct Moments {
    Complex mean;
    double variance;
};

Moments posterior_z_unquantized(Complex omega, double rho, Complex y, double sigma2);
Moments posterior_z_quantized(Complex omega, double rho, CellBounds re, CellBounds im, double sigma2);
Moments posterior_x(Complex R, double Sigma2, const Hyperparams& theta);

SolverState init_state(const GampModel& model, const Hyperparams& theta);

/// Refreshes omega, rho and the channel posteriors. Throws NumericBlowup on any non-finite value.
void factor_update(SolverState& state, const GampModel& model, const SolverOptions& options);

/// Sequential update of every variable in random order, keeping the factor quantities
/// of each touched channel current as it goes.
void variable_sweep(SolverState& state, const GampModel& model, std::mt19937_64& rng, const SolverOptions& options);

Hyperparams em_update(const SolverState& state);

/// Throws Diverged if the iteration produces non-finite values.
Estimate run(const MeasurementSet& measurements, const Eigen::MatrixXcd& H, double sigma2,
             const SolverOptions& options, const Hyperparams& theta0 = {});

}  // namespace gridsense
