#include "gridsense/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gridsense/error.hpp"

namespace gridsense {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void check_spec(const QuantizerSpec& spec) {
    if (spec.bits < 1 || spec.bits > 30)
        throw Error(ErrorCode::InvalidQuantizer, "bits must be in 1..30, got " + std::to_string(spec.bits));
    if (!std::isfinite(spec.step) || spec.step <= 0.0)
        throw Error(ErrorCode::InvalidQuantizer, "step must be positive and finite");
}

double QuantizerSpec::boundary(std::int64_t b) const noexcept {
    if (b <= 0) return -kInf;
    if (b >= cell_count()) return kInf;
    return static_cast<double>(b - cell_count() / 2) * step;
}

std::int64_t cell_index(double v, const QuantizerSpec& spec) {
    check_spec(spec);
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "cannot quantize a non-finite value");
    const std::int64_t n = spec.cell_count();
    const double u = v / spec.step + static_cast<double>(n / 2);
    auto b = static_cast<std::int64_t>(std::ceil(std::clamp(u, 1.0, static_cast<double>(n))));
    // v/step can round across a boundary; settle against the boundaries themselves.
    while (b > 1 && v <= spec.boundary(b - 1)) --b;
    while (b < n && v > spec.boundary(b)) ++b;
    return b;
}

double representative(std::int64_t cell, const QuantizerSpec& spec) {
    check_spec(spec);
    if (cell < 1 || cell > spec.cell_count())
        throw Error(ErrorCode::CellOutOfRange, "cell " + std::to_string(cell) + " outside 1.." +
                                                   std::to_string(spec.cell_count()));
    const auto half = static_cast<double>(spec.cell_count() / 2);
    // single rounding: (b - 2^(B-1) - 1/2) is exact
    if (cell == spec.cell_count()) return (static_cast<double>(cell - 1) - half + 0.5) * spec.step;
    return (static_cast<double>(cell) - half - 0.5) * spec.step;
}

QuantizedComponent quantize(double v, const QuantizerSpec& spec) {
    const auto b = cell_index(v, spec);
    return {b, representative(b, spec)};
}

CellBounds cell_bounds(std::int64_t cell, const QuantizerSpec& spec) {
    check_spec(spec);
    if (cell < 1 || cell > spec.cell_count())
        throw Error(ErrorCode::CellOutOfRange, "cell " + std::to_string(cell) + " outside 1.." +
                                                   std::to_string(spec.cell_count()));
    return {spec.boundary(cell - 1), spec.boundary(cell)};
}

CellBounds cell_bounds(const QuantizedComponent& q, const QuantizerSpec& spec) { return cell_bounds(q.cell, spec); }

std::pair<QuantizedComponent, QuantizedComponent> quantize_complex(std::complex<double> y, const QuantizerSpec& spec) {
    return {quantize(y.real(), spec), quantize(y.imag(), spec)};
}

std::complex<double> quantized_value(std::complex<double> y, const QuantizerSpec& spec) {
    const auto [re, im] = quantize_complex(y, spec);
    return {re.representative, im.representative};
}

double step_for_full_scale(double full_scale, int bits) {
    if (!(full_scale > 0.0) || !std::isfinite(full_scale))
        throw Error(ErrorCode::InvalidQuantizer, "full scale must be positive and finite");
    return 2.0 * full_scale / std::ldexp(1.0, bits);
}

}  // namespace gridsense
