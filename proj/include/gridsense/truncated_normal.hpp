#pragma once

namespace gridsense {

struct TruncatedMoments {
    double mean;
    double variance;
};

/// Scaled complementary error function exp(x^2) erfc(x), accurate for all finite x.
double erfcx(double x);

/// Moments of a standard normal conditioned on (a, b]. Either end may be infinite.
/// Stays finite when the cell carries no representable probability mass.
TruncatedMoments standard_truncated_moments(double a, double b);

/// Moments of N(mu, sd^2) conditioned on (lower, upper]; sd > 0.
TruncatedMoments truncated_normal_moments(double mu, double sd, double lower, double upper);

}  // namespace gridsense
