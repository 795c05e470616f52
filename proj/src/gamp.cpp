#include "gridsense/gamp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gridsense/error.hpp"
#include "gridsense/truncated_normal.hpp"

namespace gridsense {

namespace {

constexpr double kRelativePrecisionFloor = 1e-12;
constexpr double kAbsolutePrecisionFloor = 1e-300;

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void refresh_channel(SolverState& s, const GampModel& model, Eigen::Index mu) {
    const auto& ch = model.channels[static_cast<std::size_t>(mu)];
    const Moments m = ch.tag.is_quantized()
                          ? posterior_z_quantized(s.omega(mu), s.rho(mu), ch.re, ch.im, model.sigma2)
                          : posterior_z_unquantized(s.omega(mu), s.rho(mu), ch.observed, model.sigma2);
    s.zhat(mu) = m.mean;
    s.varsigma(mu) = m.variance;
    s.shat(mu) = (m.mean - s.omega(mu)) / s.rho(mu);
    s.zeta(mu) = (1.0 - m.variance / s.rho(mu)) / s.rho(mu);
}

}  // namespace

GampModel GampModel::make(const Eigen::MatrixXcd& H, const MeasurementSet& measurements, double sigma2) {
    if (static_cast<std::size_t>(H.rows()) != measurements.size())
        throw Error(ErrorCode::DimensionMismatch, "H has " + std::to_string(H.rows()) + " rows but there are " +
                                                      std::to_string(measurements.size()) + " measurements");
    if (H.cols() == 0) throw Error(ErrorCode::DimensionMismatch, "H has no columns");
    if (!(sigma2 >= 0.0)) throw Error(ErrorCode::NonFiniteInput, "noise variance must be non-negative");
    if (!H.allFinite()) throw Error(ErrorCode::NonFiniteInput, "H has non-finite entries");
    for (const auto& ch : measurements.channels)
        if (!finite(ch.observed)) throw Error(ErrorCode::NonFiniteInput, "non-finite measurement");

    GampModel m;
    m.H = H;
    m.H2 = H.cwiseAbs2();
    m.support.resize(static_cast<std::size_t>(H.cols()));
    for (Eigen::Index i = 0; i < H.cols(); ++i)
        for (Eigen::Index mu = 0; mu < H.rows(); ++mu)
            if (m.H2(mu, i) != 0.0) m.support[static_cast<std::size_t>(i)].push_back(mu);
    m.channels = measurements.channels;
    m.sigma2 = sigma2;
    return m;
}

Moments posterior_z_unquantized(Complex omega, double rho, Complex y, double sigma2) {
    if (sigma2 == 0.0) return {y, 0.0};
    if (std::isinf(sigma2)) return {omega, rho};
    const double v = rho + sigma2;
    return {omega + (rho / v) * (y - omega), rho * sigma2 / v};
}

// y = z + e given z ~ CN(omega, rho) is CN(omega, V) with V = sigma2 + rho, and splits into
// independent real and imaginary normals of variance V/2. Conditioning on the cell gives
// E[y | cell] and Var[y | cell] per component. z | y is Gaussian with mean
// omega + (rho/V)(y - omega) and variance rho sigma2 / V, so by the tower rule
//   zhat     = omega + (rho/V)(E[y | cell] - omega)
//   varsigma = rho sigma2 / V + (rho/V)^2 (Var_re + Var_im).
Moments posterior_z_quantized(Complex omega, double rho, CellBounds re, CellBounds im, double sigma2) {
    const double v = sigma2 + rho;
    if (std::isinf(v)) return {omega, rho};
    const double sd = std::sqrt(v / 2.0);
    const auto mr = truncated_normal_moments(omega.real(), sd, re.lower, re.upper);
    const auto mi = truncated_normal_moments(omega.imag(), sd, im.lower, im.upper);
    const double g = rho / v;
    return {omega + g * (Complex(mr.mean, mi.mean) - omega), rho * sigma2 / v + g * g * (mr.variance + mi.variance)};
}

Moments posterior_x(Complex R, double Sigma2, const Hyperparams& theta) {
    const double sx2 = theta.prior_variance;
    if (std::isinf(Sigma2)) return {theta.prior_mean, sx2};
    if (std::isinf(sx2) || Sigma2 == 0.0) return {R, Sigma2};
    const double w = Sigma2 / (Sigma2 + sx2);
    return {R + w * (theta.prior_mean - R), Sigma2 * sx2 / (Sigma2 + sx2)};
}

SolverState init_state(const GampModel& model, const Hyperparams& theta) {
    const auto n = model.variables();
    const auto p = model.factors();
    SolverState s;
    s.xhat = Eigen::VectorXcd::Ones(n);
    s.tau = Eigen::VectorXd::Ones(n);
    s.R = s.xhat;
    s.Sigma2 = Eigen::VectorXd::Ones(n);
    s.rho = Eigen::VectorXd::Ones(p);
    s.omega.resize(p);
    for (Eigen::Index mu = 0; mu < p; ++mu) s.omega(mu) = model.channels[static_cast<std::size_t>(mu)].observed;
    s.zhat = s.omega;
    s.varsigma = Eigen::VectorXd::Zero(p);
    s.shat = Eigen::VectorXcd::Zero(p);
    s.zeta = Eigen::VectorXd::Zero(p);
    s.t = 1;
    s.theta = theta;
    s.xhat_prev = s.xhat;
    return s;
}

void factor_update(SolverState& s, const GampModel& model, const SolverOptions& options) {
    // The Onsager term uses the channel scores left by the previous sweep.
    Eigen::VectorXd rho = model.H2 * s.tau;
    Eigen::VectorXcd omega = model.H * s.xhat - s.shat.cwiseProduct(rho);
    if (options.damping > 0.0 && s.t > 1) {
        rho = options.damping * s.rho + (1.0 - options.damping) * rho;
        omega = options.damping * s.omega + (1.0 - options.damping) * omega;
    }
    s.rho = std::move(rho);
    s.omega = std::move(omega);

    for (Eigen::Index mu = 0; mu < model.factors(); ++mu) {
        if (!(s.rho(mu) > 0.0)) throw Error(ErrorCode::NumericBlowup, "rho collapsed at channel " + std::to_string(mu));
        refresh_channel(s, model, mu);
    }
    if (!s.omega.allFinite() || !s.zhat.allFinite() || !s.varsigma.allFinite() || !s.shat.allFinite() ||
        !s.zeta.allFinite())
        throw Error(ErrorCode::NumericBlowup, "non-finite factor quantity at iteration " + std::to_string(s.t));
}

void variable_sweep(SolverState& s, const GampModel& model, std::mt19937_64& rng, const SolverOptions& options) {
    const auto n = model.variables();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    if (!options.fixed_order) std::shuffle(order.begin(), order.end(), rng);

    s.xhat_prev = s.xhat;
    for (const Eigen::Index i : order) {
        const auto& rows = model.support[static_cast<std::size_t>(i)];
        double precision = 0.0, scale = 0.0;
        Complex score{};
        for (const Eigen::Index mu : rows) {
            precision += model.H2(mu, i) * s.zeta(mu);
            scale += model.H2(mu, i) * std::abs(s.zeta(mu));
            score += std::conj(model.H(mu, i)) * s.shat(mu);
        }
        const double floor = std::max(kRelativePrecisionFloor * scale, kAbsolutePrecisionFloor);
        if (precision < floor) {
            precision = floor;
            ++s.precision_floor_events;
        }
        s.Sigma2(i) = 1.0 / precision;
        s.R(i) = s.xhat(i) + s.Sigma2(i) * score;
        const Moments post = posterior_x(s.R(i), s.Sigma2(i), s.theta);

        if (!options.parallel) {
            for (const Eigen::Index mu : rows) {
                const double rho_old = s.rho(mu);
                s.rho(mu) = std::max(rho_old + model.H2(mu, i) * (post.variance - s.tau(i)),
                                     std::numeric_limits<double>::min());
                s.omega(mu) += model.H(mu, i) * (post.mean - s.xhat(i)) - s.shat(mu) * (s.rho(mu) - rho_old);
                refresh_channel(s, model, mu);
            }
        }
        s.xhat(i) = post.mean;
        s.tau(i) = post.variance;
    }
    if (!s.xhat.allFinite() || !s.tau.allFinite())
        throw Error(ErrorCode::NumericBlowup, "non-finite variable estimate at iteration " + std::to_string(s.t));
}

Hyperparams em_update(const SolverState& s) {
    Hyperparams h;
    h.prior_mean = s.R.mean();
    h.prior_variance = ((s.R.array() - h.prior_mean).abs2() + s.Sigma2.array()).mean();
    return h;
}

Estimate run(const MeasurementSet& measurements, const Eigen::MatrixXcd& H, double sigma2,
             const SolverOptions& options, const Hyperparams& theta0) {
    if (!(options.epsilon > 0.0)) throw Error(ErrorCode::ConfigParseError, "epsilon must be positive");
    const GampModel model = GampModel::make(H, measurements, sigma2);
    SolverState s = init_state(model, theta0);
    std::mt19937_64 rng(options.seed);

    Estimate out;
    try {
        for (s.t = 1; s.t <= options.max_iterations; ++s.t) {
            factor_update(s, model, options);
            variable_sweep(s, model, rng, options);
            const double eps = (s.xhat - s.xhat_prev).squaredNorm();
            if (!std::isfinite(eps)) throw Error(ErrorCode::NumericBlowup, "non-finite step");
            out.trace.push_back(eps);
            out.iterations = s.t;
            if (options.em_enabled) s.theta = em_update(s);
            if (!(s.theta.prior_variance > 0.0) || !std::isfinite(s.theta.prior_variance) || !finite(s.theta.prior_mean))
                throw Error(ErrorCode::NumericBlowup, "hyperparameters left the valid range");
            if (eps < options.epsilon) {
                out.converged = true;
                break;
            }
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NumericBlowup) throw;
        throw Error(ErrorCode::Diverged, e.what());
    }

    out.x = s.xhat;
    out.tau = s.tau;
    out.theta = s.theta;
    out.final_epsilon = out.trace.empty() ? 0.0 : out.trace.back();
    out.precision_floor_events = s.precision_floor_events;
    return out;
}

}  // namespace gridsense
