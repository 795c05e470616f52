#include "gridsense/truncated_normal.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "gridsense/error.hpp"

namespace gridsense {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kTwoOverSqrt2Pi = 2.0 * std::numbers::inv_sqrtpi / std::numbers::sqrt2;  // 2/sqrt(2 pi)
constexpr int kMillsTerms = 60;
constexpr int kTaylorTerms = 40;

// Continued fraction for the tail: returns T1 and also T2, T3 for the variance.
// T_k = k / (u + T_{k+1}); the inverse Mills ratio is u + T1.
struct MillsTail {
    double t1, t2, t3;
};

MillsTail mills_tail(double u) {
    double t = 0.0, t2 = 0.0, t3 = 0.0;
    for (int k = kMillsTerms; k >= 1; --k) {
        t = k / (u + t);
        if (k == 3) t3 = t;
        if (k == 2) t2 = t;
    }
    return {t, t2, t3};
}

// Upper-truncated at b: X < b with u = -b.
TruncatedMoments one_sided(double b) {
    const double u = -b;
    if (u >= 4.0) {
        const auto [t1, t2, t3] = mills_tail(u);
        return {-(u + t1), t1 * (u + 2.0 * t2 - t3) / ((u + t3) * (u + t2))};
    }
    const double lambda = kTwoOverSqrt2Pi / erfcx(u / kSqrt2);
    return {-lambda, 1.0 + u * lambda - lambda * lambda};
}

// Cells short enough that exp(-(c+t)^2/2) on [-h, h] is a rapidly converging series in t.
bool use_series(double c, double h) { return h <= 0.25 && std::abs(c) * h <= 0.5; }

TruncatedMoments series(double c, double h) {
    // exp(-c t - t^2/2) = sum a_j t^j with (j+1) a_{j+1} = -c a_j - a_{j-1}; integrate in u = t/h.
    double am1 = 0.0, a = 1.0;
    double i0 = 0.0, i1 = 0.0, i2 = 0.0;
    double hp = 1.0;  // h^j
    for (int j = 0; j < kTaylorTerms; ++j) {
        const double w = a * hp;
        // int_{-1}^{1} u^k du = 2/(k+1) for even k
        if (j % 2 == 0) {
            i0 += w * 2.0 / (j + 1);
            i2 += w * 2.0 / (j + 3);
        } else {
            i1 += w * 2.0 / (j + 2);
        }
        const double next = (-c * a - am1) / (j + 1);
        am1 = a;
        a = next;
        hp *= h;
    }
    const double mu = i1 / i0;
    return {c + h * mu, h * h * (i2 / i0 - mu * mu)};
}

}  // namespace

double erfcx(double x) {
    if (std::isnan(x)) return x;
    if (x < 0.0) {
        if (x < -26.0) return HUGE_VAL;
        return 2.0 * std::exp(x * x) - erfcx(-x);
    }
    if (x < 3.0) return std::exp(x * x) * std::erfc(x);
    const double u = x * kSqrt2;
    return kTwoOverSqrt2Pi / (u + mills_tail(u).t1);
}

TruncatedMoments standard_truncated_moments(double a, double b) {
    if (std::isnan(a) || std::isnan(b) || !(a < b))
        throw Error(ErrorCode::NonFiniteInput, "truncation interval must satisfy lower < upper");
    if (std::isinf(a) && std::isinf(b)) return {0.0, 1.0};
    if (a + b > 0.0) {
        const auto r = standard_truncated_moments(-b, -a);
        return {-r.mean, r.variance};
    }
    // Now b is finite and the cell's midpoint sits at or left of zero.
    if (std::isfinite(a)) {
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        if (use_series(c, h)) return series(c, h);
    }

    if (b > 0.0) {
        const double pa = std::isinf(a) ? 0.0 : std::exp(-0.5 * a * a);
        const double pb = std::exp(-0.5 * b * b);
        const double z = 0.5 * (std::erf(b / kSqrt2) - (std::isinf(a) ? -1.0 : std::erf(a / kSqrt2)));
        const double k = 0.5 * kTwoOverSqrt2Pi / z;  // phi(t) = k z exp(-t^2/2)
        const double mean = k * (pa - pb);
        const double apa = std::isinf(a) ? 0.0 : a * pa;
        return {mean, 1.0 + k * (apa - b * pb) - mean * mean};
    }

    if (std::isinf(a)) return one_sided(b);
    const double expo = -0.5 * (a - b) * (a + b);
    const double r = std::exp(expo);
    if (r < 1e-17) return one_sided(b);
    const double d = erfcx(-b / kSqrt2) - r * erfcx(-a / kSqrt2);
    const double amp = kTwoOverSqrt2Pi / d;
    const double mean = amp * std::expm1(expo);
    return {mean, 1.0 + a * r * amp - b * amp - mean * mean};
}

TruncatedMoments truncated_normal_moments(double mu, double sd, double lower, double upper) {
    const auto s = standard_truncated_moments((lower - mu) / sd, (upper - mu) / sd);
    return {mu + sd * s.mean, sd * sd * s.variance};
}

}  // namespace gridsense
