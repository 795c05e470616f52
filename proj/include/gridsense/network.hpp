#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace gridsense {

using Complex = std::complex<double>;
using PhaseBlock = Eigen::Matrix3cd;

struct Bus {
    int id = 0;           // 1-based, contiguous
    int phase_count = 1;  // 1 or 3
};

/// Two-port pi-model line. Admittances are per-unit. Three-phase networks
/// carry 3x3 blocks instead of the scalars.
struct Line {
    int id = 0;
    int from_bus = 0;
    int to_bus = 0;
    Complex series{};
    Complex shunt_from{};
    Complex shunt_to{};
    std::optional<PhaseBlock> series_block;
    std::optional<PhaseBlock> shunt_from_block;
    std::optional<PhaseBlock> shunt_to_block;
};

enum class Direction { FromTo, ToFrom };

/// Current meter; its serial number is its position in the meter list (1-based).
struct CurrentMeter {
    int line_id = 0;
    Direction direction = Direction::FromTo;
};

/// Named side-chain bus group with the meters (1-based serials) it owns.
struct SideChain {
    std::string name;
    std::vector<int> buses;
    std::vector<int> meters;
};

/// Explicit quantization set for one K: the union of the listed side-chain groups.
struct LadderEntry {
    int k = 0;
    std::vector<std::string> groups;
};

struct NetworkModel {
    std::string name;
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<CurrentMeter> current_meters;
    std::vector<int> pmu_buses;
    std::vector<int> main_chain;
    std::vector<SideChain> side_chains;
    std::vector<LadderEntry> k_ladder;
};

/// A NetworkModel that passed validate_network(). Only validate_network can build one.
class ValidatedNetwork {
public:
    const NetworkModel& model() const noexcept { return model_; }

    std::size_t bus_count() const noexcept { return model_.buses.size(); }
    std::size_t pmu_count() const noexcept { return model_.pmu_buses.size(); }
    std::size_t meter_count() const noexcept { return model_.current_meters.size(); }
    /// P = L + M, the number of measurement channels.
    std::size_t channel_count() const noexcept { return pmu_count() + meter_count(); }
    int phase_count() const noexcept { return model_.buses.front().phase_count; }

    const Line& line_by_id(int id) const;
    /// Zero-based bus column the meter's current leaves from / heads toward.
    std::size_t leaving_column(std::size_t meter) const;
    std::size_t entering_column(std::size_t meter) const;

private:
    friend ValidatedNetwork validate_network(NetworkModel model);
    explicit ValidatedNetwork(NetworkModel model);

    NetworkModel model_;
    std::vector<std::size_t> line_index_;  // indexed by line id
};

/// Measurement matrix H = [Pi ; Y_l A + Y_s] with its constituent blocks.
struct TopologyMatrix {
    Eigen::MatrixXcd H;
    Eigen::MatrixXd voltage_incidence;     // Pi, L x N
    Eigen::MatrixXd current_incidence;     // A, M x N
    Eigen::MatrixXcd series_admittance;    // Y_l, M x M diagonal
    Eigen::MatrixXcd shunt_admittance;     // Y_s, M x N

    Eigen::Index voltage_rows() const noexcept { return voltage_incidence.rows(); }
};

NetworkModel parse_network(const nlohmann::json& doc);
NetworkModel load_network(const std::filesystem::path& path);

ValidatedNetwork validate_network(NetworkModel model);

Eigen::MatrixXd build_current_incidence(const ValidatedNetwork& net);
Eigen::MatrixXd build_voltage_incidence(const ValidatedNetwork& net);
Eigen::MatrixXcd build_series_admittance(const ValidatedNetwork& net);
Eigen::MatrixXcd build_shunt_admittance(const ValidatedNetwork& net);

/// Single-phase assembly. Three-phase networks are forwarded to expand_three_phase.
TopologyMatrix assemble_topology(const ValidatedNetwork& net);

/// Blockwise expansion: 1 -> I3, 0 -> 03, admittance scalar -> its 3x3 block.
/// Bus n phase k maps to column 3(n-1)+k; channel rows are expanded the same way.
TopologyMatrix expand_three_phase(const ValidatedNetwork& net);

}  // namespace gridsense
