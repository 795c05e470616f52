#include "gridsense/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

#include "gridsense/error.hpp"

namespace gridsense {

std::size_t MeasurementSet::quantized_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(channels.begin(), channels.end(), [](const Channel& c) { return c.tag.is_quantized(); }));
}

Eigen::VectorXcd MeasurementSet::observed() const {
    Eigen::VectorXcd y(static_cast<Eigen::Index>(channels.size()));
    for (std::size_t k = 0; k < channels.size(); ++k) y(static_cast<Eigen::Index>(k)) = channels[k].observed;
    return y;
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t trial, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

namespace {

Eigen::VectorXcd circular_gaussian(Eigen::Index n, double variance, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double re = g(rng);
        v(i) = Complex(re, g(rng));
    }
    return v;
}

}  // namespace

Eigen::VectorXcd sample_state(const StatePrior& prior, std::size_t n, std::mt19937_64& rng) {
    const auto len = static_cast<Eigen::Index>(n);
    if (prior.variance <= 0.0) return Eigen::VectorXcd::Constant(len, prior.mean());
    return Eigen::VectorXcd::Constant(len, prior.mean()) + circular_gaussian(len, prior.variance, rng);
}

Eigen::VectorXcd simulate_measurements(const Eigen::MatrixXcd& H, const Eigen::VectorXcd& x, double sigma2,
                                       std::mt19937_64& rng) {
    if (H.cols() != x.size())
        throw Error(ErrorCode::DimensionMismatch, "H has " + std::to_string(H.cols()) + " columns, x has " +
                                                      std::to_string(x.size()) + " entries");
    Eigen::VectorXcd y = H * x;
    if (sigma2 > 0.0) y += circular_gaussian(y.size(), sigma2, rng);
    return y;
}

MeasurementSet apply_resolution_profile(const Eigen::VectorXcd& y, const ResolutionProfile& profile) {
    if (profile.size() != static_cast<std::size_t>(y.size()))
        throw Error(ErrorCode::ProfileGap, "profile covers " + std::to_string(profile.size()) + " of " +
                                               std::to_string(y.size()) + " channels");
    MeasurementSet out;
    out.channels.resize(profile.size());
    for (std::size_t k = 0; k < profile.size(); ++k) {
        auto& ch = out.channels[k];
        ch.tag = profile[k];
        const Complex v = y(static_cast<Eigen::Index>(k));
        if (!ch.tag.is_quantized()) {
            ch.observed = v;
            continue;
        }
        const auto [re, im] = quantize_complex(v, ch.tag.spec);
        ch.observed = Complex(re.representative, im.representative);
        ch.re = cell_bounds(re, ch.tag.spec);
        ch.im = cell_bounds(im, ch.tag.spec);
    }
    return out;
}

std::vector<std::size_t> selection_for_k(const ValidatedNetwork& net, int k) {
    const auto& model = net.model();
    if (model.side_chains.empty()) throw Error(ErrorCode::UnsupportedK, "network declares no side-chain groups");

    std::unordered_map<std::string, const SideChain*> by_name;
    for (const auto& g : model.side_chains) by_name[g.name] = &g;

    std::vector<int> meters;
    auto add_group = [&](const SideChain& g, std::size_t limit) {
        for (int m : g.meters) {
            if (meters.size() >= limit) return;
            if (std::find(meters.begin(), meters.end(), m) == meters.end()) meters.push_back(m);
        }
    };

    if (!model.k_ladder.empty()) {
        auto it = std::find_if(model.k_ladder.begin(), model.k_ladder.end(),
                               [k](const LadderEntry& e) { return e.k == k; });
        if (it == model.k_ladder.end())
            throw Error(ErrorCode::UnsupportedK, "K=" + std::to_string(k) + " is not on the network's ladder");
        for (const auto& name : it->groups) add_group(*by_name.at(name), SIZE_MAX);
        if (meters.size() != static_cast<std::size_t>(k))
            throw Error(ErrorCode::UnsupportedK, "ladder entry K=" + std::to_string(k) + " selects " +
                                                     std::to_string(meters.size()) + " meters");
    } else {
        if (k < 1) throw Error(ErrorCode::UnsupportedK, "K must be positive");
        for (const auto& g : model.side_chains) add_group(g, static_cast<std::size_t>(k));
        if (meters.size() != static_cast<std::size_t>(k))
            throw Error(ErrorCode::UnsupportedK, "side chains hold only " + std::to_string(meters.size()) + " meters");
    }

    std::vector<std::size_t> channels;
    channels.reserve(meters.size());
    for (int m : meters) channels.push_back(net.pmu_count() + static_cast<std::size_t>(m - 1));
    std::sort(channels.begin(), channels.end());
    return channels;
}

Eigen::VectorXd auto_full_scale(const Eigen::MatrixXcd& H, const StatePrior& prior) {
    const Eigen::VectorXcd mean = H * Eigen::VectorXcd::Constant(H.cols(), prior.mean());
    const Eigen::VectorXd power = mean.cwiseAbs2() + H.cwiseAbs2().rowwise().sum() * prior.variance;
    return 4.0 * (power / 2.0).cwiseSqrt();
}

ResolutionProfile full_profile(std::size_t channels) { return ResolutionProfile(channels, ResolutionTag::full()); }

ResolutionProfile quantized_profile(std::size_t channels, const std::vector<std::size_t>& selected, int bits,
                                    const Eigen::VectorXd& full_scale) {
    if (full_scale.size() != static_cast<Eigen::Index>(channels))
        throw Error(ErrorCode::DimensionMismatch, "full-scale vector does not match channel count");
    ResolutionProfile profile = full_profile(channels);
    for (std::size_t c : selected) {
        if (c >= channels) throw Error(ErrorCode::DimensionMismatch, "channel " + std::to_string(c) + " out of range");
        QuantizerSpec spec{bits, step_for_full_scale(full_scale(static_cast<Eigen::Index>(c)), bits)};
        check_spec(spec);
        profile[c] = ResolutionTag::quantized(spec);
    }
    return profile;
}

}  // namespace gridsense
