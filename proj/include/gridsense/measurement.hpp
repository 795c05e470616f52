#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gridsense/network.hpp"
#include "gridsense/quantizer.hpp"

namespace gridsense {

/// Complex Gaussian prior on each bus voltage: CN(magnitude_mean * e^{j phase_mean}, variance).
struct StatePrior {
    double magnitude_mean = 1.0;
    double phase_mean = 0.0;
    double variance = 1.0;

    Complex mean() const { return std::polar(magnitude_mean, phase_mean); }
};

struct ResolutionTag {
    enum class Kind { Full, Quantized };
    Kind kind = Kind::Full;
    QuantizerSpec spec{};

    static ResolutionTag full() { return {}; }
    static ResolutionTag quantized(QuantizerSpec s) { return {Kind::Quantized, s}; }
    bool is_quantized() const noexcept { return kind == Kind::Quantized; }
};

/// One tag per channel, indexed like the rows of H.
using ResolutionProfile = std::vector<ResolutionTag>;

struct Channel {
    Complex observed{};
    ResolutionTag tag{};
    CellBounds re{-HUGE_VAL, HUGE_VAL};
    CellBounds im{-HUGE_VAL, HUGE_VAL};
};

struct MeasurementSet {
    std::vector<Channel> channels;

    std::size_t size() const noexcept { return channels.size(); }
    std::size_t quantized_count() const noexcept;
    Eigen::VectorXcd observed() const;
};

/// Independent generator for (seed, trial, stream). Streams keep state, noise and solver draws apart.
enum class Stream : std::uint64_t { State = 0, Noise = 1, Solver = 2 };
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t trial, Stream stream);

Eigen::VectorXcd sample_state(const StatePrior& prior, std::size_t n, std::mt19937_64& rng);

/// y = H x + e with e ~ CN(0, sigma2 I).
Eigen::VectorXcd simulate_measurements(const Eigen::MatrixXcd& H, const Eigen::VectorXcd& x, double sigma2,
                                       std::mt19937_64& rng);

MeasurementSet apply_resolution_profile(const Eigen::VectorXcd& y, const ResolutionProfile& profile);

/// Zero-based channel indices (rows of H) of the current meters selected for quantization at K.
/// Uses the network's k_ladder when present; otherwise accumulates side-chain groups in file order.
std::vector<std::size_t> selection_for_k(const ValidatedNetwork& net, int k);

/// Per-channel default full scale: 4 * sqrt(E|z|^2 / 2) with z = (H x)_mu under the prior.
Eigen::VectorXd auto_full_scale(const Eigen::MatrixXcd& H, const StatePrior& prior);

ResolutionProfile full_profile(std::size_t channels);

/// Quantize the listed channels at `bits`, each with step 2 F_mu / 2^bits.
ResolutionProfile quantized_profile(std::size_t channels, const std::vector<std::size_t>& selected, int bits,
                                    const Eigen::VectorXd& full_scale);

}  // namespace gridsense
