#pragma once

#include <complex>
#include <cstdint>
#include <utility>

namespace gridsense {

/// Uniform B-bit midrise quantizer with boundaries r_b = (-2^(B-1) + b) * step.
struct QuantizerSpec {
    int bits = 1;
    double step = 1.0;

    std::int64_t cell_count() const noexcept { return std::int64_t{1} << bits; }
    /// Boundary r_b for b in 0..2^B; r_0 and r_{2^B} are -inf and +inf.
    double boundary(std::int64_t b) const noexcept;
};

/// Throws InvalidQuantizer unless 1 <= bits <= 30 and step is finite and positive.
void check_spec(const QuantizerSpec& spec);

/// A real value's cell. Cells are (r_{b-1}, r_b], the first and last unbounded.
struct QuantizedComponent {
    std::int64_t cell = 1;
    double representative = 0.0;
};

struct CellBounds {
    double lower;  // exclusive, may be -inf
    double upper;  // inclusive, may be +inf
};

std::int64_t cell_index(double v, const QuantizerSpec& spec);
double representative(std::int64_t cell, const QuantizerSpec& spec);
QuantizedComponent quantize(double v, const QuantizerSpec& spec);
CellBounds cell_bounds(const QuantizedComponent& q, const QuantizerSpec& spec);
CellBounds cell_bounds(std::int64_t cell, const QuantizerSpec& spec);

/// Real and imaginary parts go through independent copies of the real quantizer.
std::pair<QuantizedComponent, QuantizedComponent> quantize_complex(std::complex<double> y, const QuantizerSpec& spec);
std::complex<double> quantized_value(std::complex<double> y, const QuantizerSpec& spec);

/// Step for a full-scale amplitude F: 2F / 2^B.
double step_for_full_scale(double full_scale, int bits);

}  // namespace gridsense
