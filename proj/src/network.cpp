#include "gridsense/network.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <unordered_set>

#include "gridsense/error.hpp"

namespace gridsense {

namespace {

using nlohmann::json;

Complex parse_complex(const json& j, const char* field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw Error(ErrorCode::ConfigParseError, std::string(field) + " must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

PhaseBlock parse_block(const json& j, const char* field) {
    if (!j.is_array() || j.size() != 3)
        throw Error(ErrorCode::MissingPhaseBlock, std::string(field) + " must be a 3x3 array of [re, im]");
    PhaseBlock b;
    for (int r = 0; r < 3; ++r) {
        if (!j[r].is_array() || j[r].size() != 3)
            throw Error(ErrorCode::MissingPhaseBlock, std::string(field) + " row is not length 3");
        for (int c = 0; c < 3; ++c) b(r, c) = parse_complex(j[r][c], field);
    }
    return b;
}

// Scalars are [re, im]; blocks are nested 3x3 arrays. Tell them apart by the first element.
bool is_block(const json& j) { return j.is_array() && !j.empty() && j[0].is_array(); }

void parse_admittance(const json& line, const char* field, Complex& scalar, std::optional<PhaseBlock>& block) {
    auto it = line.find(field);
    if (it == line.end()) return;
    if (is_block(*it))
        block = parse_block(*it, field);
    else
        scalar = parse_complex(*it, field);
}

template <class T>
T required(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end()) throw Error(ErrorCode::ConfigParseError, std::string("missing field '") + field + "'");
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigParseError, std::string("field '") + field + "': " + e.what());
    }
}

const json& required_array(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_array())
        throw Error(ErrorCode::ConfigParseError, std::string("missing array '") + field + "'");
    return *it;
}

}  // namespace

NetworkModel parse_network(const json& doc) {
    if (!doc.is_object()) throw Error(ErrorCode::ConfigParseError, "network document is not an object");
    NetworkModel m;
    m.name = doc.value("name", std::string{});

    for (const auto& b : required_array(doc, "buses"))
        m.buses.push_back({required<int>(b, "id"), b.value("phases", 1)});

    for (const auto& l : required_array(doc, "lines")) {
        Line line;
        line.id = required<int>(l, "id");
        line.from_bus = required<int>(l, "from");
        line.to_bus = required<int>(l, "to");
        if (!l.contains("y_series")) throw Error(ErrorCode::ConfigParseError, "line without y_series");
        parse_admittance(l, "y_series", line.series, line.series_block);
        parse_admittance(l, "y_shunt_from", line.shunt_from, line.shunt_from_block);
        parse_admittance(l, "y_shunt_to", line.shunt_to, line.shunt_to_block);
        m.lines.push_back(std::move(line));
    }

    for (const auto& c : required_array(doc, "current_meters")) {
        CurrentMeter meter;
        meter.line_id = required<int>(c, "line");
        const auto dir = c.value("direction", std::string("from_to"));
        if (dir == "from_to")
            meter.direction = Direction::FromTo;
        else if (dir == "to_from")
            meter.direction = Direction::ToFrom;
        else
            throw Error(ErrorCode::ConfigParseError, "unknown meter direction '" + dir + "'");
        m.current_meters.push_back(meter);
    }

    m.pmu_buses = required<std::vector<int>>(doc, "pmu_buses");
    m.main_chain = doc.value("main_chain", std::vector<int>{});

    if (auto it = doc.find("side_chains"); it != doc.end()) {
        for (const auto& s : *it)
            m.side_chains.push_back({required<std::string>(s, "name"), required<std::vector<int>>(s, "buses"),
                                     required<std::vector<int>>(s, "meters")});
    }
    if (auto it = doc.find("k_ladder"); it != doc.end()) {
        for (const auto& e : *it)
            m.k_ladder.push_back({required<int>(e, "k"), required<std::vector<std::string>>(e, "groups")});
    }
    return m;
}

NetworkModel load_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigParseError, path.string() + ": " + e.what());
    }
    return parse_network(doc);
}

ValidatedNetwork::ValidatedNetwork(NetworkModel model) : model_(std::move(model)) {
    int max_id = 0;
    for (const auto& l : model_.lines) max_id = std::max(max_id, l.id);
    line_index_.assign(static_cast<std::size_t>(max_id) + 1, SIZE_MAX);
    for (std::size_t k = 0; k < model_.lines.size(); ++k)
        line_index_[static_cast<std::size_t>(model_.lines[k].id)] = k;
}

const Line& ValidatedNetwork::line_by_id(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= line_index_.size() || line_index_[id] == SIZE_MAX)
        throw Error(ErrorCode::DanglingLineRef, "no line " + std::to_string(id));
    return model_.lines[line_index_[id]];
}

std::size_t ValidatedNetwork::leaving_column(std::size_t meter) const {
    const auto& m = model_.current_meters.at(meter);
    const auto& l = line_by_id(m.line_id);
    return static_cast<std::size_t>((m.direction == Direction::FromTo ? l.from_bus : l.to_bus) - 1);
}

std::size_t ValidatedNetwork::entering_column(std::size_t meter) const {
    const auto& m = model_.current_meters.at(meter);
    const auto& l = line_by_id(m.line_id);
    return static_cast<std::size_t>((m.direction == Direction::FromTo ? l.to_bus : l.from_bus) - 1);
}

ValidatedNetwork validate_network(NetworkModel model) {
    const auto& buses = model.buses;
    if (buses.empty()) throw Error(ErrorCode::InvalidNetwork, "network has no buses");

    const int n = static_cast<int>(buses.size());
    std::set<int> ids;
    for (const auto& b : buses) {
        if (!ids.insert(b.id).second) throw Error(ErrorCode::DuplicateBusId, "bus " + std::to_string(b.id));
        if (b.phase_count != 1 && b.phase_count != 3)
            throw Error(ErrorCode::InvalidNetwork, "bus " + std::to_string(b.id) + " has phase_count " +
                                                       std::to_string(b.phase_count));
        if (b.phase_count != buses.front().phase_count)
            throw Error(ErrorCode::InvalidNetwork, "buses disagree on phase_count");
    }
    if (*ids.begin() != 1 || *ids.rbegin() != n)
        throw Error(ErrorCode::InvalidNetwork, "bus ids must be contiguous 1..N");
    // Storage order follows id so column n-1 is bus n.
    std::sort(model.buses.begin(), model.buses.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });

    auto bus_exists = [&](int id) { return id >= 1 && id <= n; };
    const bool three_phase = buses.front().phase_count == 3;

    std::unordered_set<int> line_ids;
    for (const auto& l : model.lines) {
        if (l.id < 1) throw Error(ErrorCode::InvalidNetwork, "line ids must be positive");
        if (!line_ids.insert(l.id).second)
            throw Error(ErrorCode::InvalidNetwork, "duplicate line id " + std::to_string(l.id));
        if (!bus_exists(l.from_bus) || !bus_exists(l.to_bus))
            throw Error(ErrorCode::DanglingLineRef, "line " + std::to_string(l.id) + " references a missing bus");
        if (l.from_bus == l.to_bus)
            throw Error(ErrorCode::InvalidNetwork, "line " + std::to_string(l.id) + " is a self loop");
        const bool zero = three_phase ? (l.series_block && l.series_block->isZero(0.0)) : l.series == Complex{};
        if (zero) throw Error(ErrorCode::InvalidNetwork, "line " + std::to_string(l.id) + " has zero series admittance");
    }

    if (model.current_meters.empty()) throw Error(ErrorCode::EmptyMeterSet, "no current meters");
    for (std::size_t k = 0; k < model.current_meters.size(); ++k) {
        if (!line_ids.count(model.current_meters[k].line_id))
            throw Error(ErrorCode::DanglingLineRef, "meter " + std::to_string(k + 1) + " references line " +
                                                        std::to_string(model.current_meters[k].line_id));
    }

    std::unordered_set<int> pmus;
    for (int b : model.pmu_buses) {
        if (!bus_exists(b)) throw Error(ErrorCode::DanglingLineRef, "PMU on missing bus " + std::to_string(b));
        if (!pmus.insert(b).second) throw Error(ErrorCode::InvalidNetwork, "PMU bus " + std::to_string(b) + " repeated");
    }

    if (model.pmu_buses.size() + model.current_meters.size() < buses.size())
        throw Error(ErrorCode::Underdetermined, "L + M = " +
                                                    std::to_string(model.pmu_buses.size() + model.current_meters.size()) +
                                                    " < N = " + std::to_string(n));

    for (int b : model.main_chain)
        if (!bus_exists(b)) throw Error(ErrorCode::InvalidNetwork, "main_chain bus " + std::to_string(b) + " missing");
    std::set<std::string> group_names;
    const int m = static_cast<int>(model.current_meters.size());
    for (const auto& g : model.side_chains) {
        if (!group_names.insert(g.name).second) throw Error(ErrorCode::InvalidNetwork, "duplicate group " + g.name);
        for (int b : g.buses)
            if (!bus_exists(b)) throw Error(ErrorCode::InvalidNetwork, "group " + g.name + " names a missing bus");
        for (int mi : g.meters)
            if (mi < 1 || mi > m) throw Error(ErrorCode::InvalidNetwork, "group " + g.name + " names a missing meter");
    }
    for (const auto& e : model.k_ladder)
        for (const auto& g : e.groups)
            if (!group_names.count(g)) throw Error(ErrorCode::InvalidNetwork, "k_ladder names unknown group " + g);

    return ValidatedNetwork(std::move(model));
}

Eigen::MatrixXd build_current_incidence(const ValidatedNetwork& net) {
    const auto m = static_cast<Eigen::Index>(net.meter_count());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(net.bus_count()));
    for (Eigen::Index k = 0; k < m; ++k) {
        a(k, static_cast<Eigen::Index>(net.leaving_column(k))) = 1.0;
        a(k, static_cast<Eigen::Index>(net.entering_column(k))) = -1.0;
    }
    return a;
}

Eigen::MatrixXd build_voltage_incidence(const ValidatedNetwork& net) {
    const auto& pmus = net.model().pmu_buses;
    Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pmus.size()),
                                               static_cast<Eigen::Index>(net.bus_count()));
    for (std::size_t l = 0; l < pmus.size(); ++l) pi(static_cast<Eigen::Index>(l), pmus[l] - 1) = 1.0;
    return pi;
}

Eigen::MatrixXcd build_series_admittance(const ValidatedNetwork& net) {
    const auto m = static_cast<Eigen::Index>(net.meter_count());
    Eigen::MatrixXcd yl = Eigen::MatrixXcd::Zero(m, m);
    for (Eigen::Index k = 0; k < m; ++k) yl(k, k) = net.line_by_id(net.model().current_meters[k].line_id).series;
    return yl;
}

namespace {

// Shunt on the side of the line the meter's current leaves from.
template <class T>
const T& leaving_shunt(const CurrentMeter& meter, const T& from, const T& to) {
    return meter.direction == Direction::FromTo ? from : to;
}

}  // namespace

Eigen::MatrixXcd build_shunt_admittance(const ValidatedNetwork& net) {
    const auto m = static_cast<Eigen::Index>(net.meter_count());
    Eigen::MatrixXcd ys = Eigen::MatrixXcd::Zero(m, static_cast<Eigen::Index>(net.bus_count()));
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto& meter = net.model().current_meters[k];
        const auto& line = net.line_by_id(meter.line_id);
        ys(k, static_cast<Eigen::Index>(net.leaving_column(k))) = leaving_shunt(meter, line.shunt_from, line.shunt_to);
    }
    return ys;
}

TopologyMatrix assemble_topology(const ValidatedNetwork& net) {
    if (net.phase_count() == 3) return expand_three_phase(net);

    TopologyMatrix t;
    t.voltage_incidence = build_voltage_incidence(net);
    t.current_incidence = build_current_incidence(net);
    t.series_admittance = build_series_admittance(net);
    t.shunt_admittance = build_shunt_admittance(net);

    const auto l = t.voltage_incidence.rows();
    const auto m = t.current_incidence.rows();
    t.H.resize(l + m, t.voltage_incidence.cols());
    t.H.topRows(l) = t.voltage_incidence.cast<Complex>();
    t.H.bottomRows(m) = t.series_admittance * t.current_incidence.cast<Complex>() + t.shunt_admittance;
    return t;
}

TopologyMatrix expand_three_phase(const ValidatedNetwork& net) {
    if (net.phase_count() != 3) throw Error(ErrorCode::InvalidNetwork, "expand_three_phase needs a three-phase network");

    const auto n = static_cast<Eigen::Index>(net.bus_count());
    const auto l = static_cast<Eigen::Index>(net.pmu_count());
    const auto m = static_cast<Eigen::Index>(net.meter_count());
    const PhaseBlock zero = PhaseBlock::Zero();
    const Eigen::Matrix3d eye = Eigen::Matrix3d::Identity();

    TopologyMatrix t;
    t.voltage_incidence = Eigen::MatrixXd::Zero(3 * l, 3 * n);
    t.current_incidence = Eigen::MatrixXd::Zero(3 * m, 3 * n);
    t.series_admittance = Eigen::MatrixXcd::Zero(3 * m, 3 * m);
    t.shunt_admittance = Eigen::MatrixXcd::Zero(3 * m, 3 * n);

    const auto& pmus = net.model().pmu_buses;
    for (Eigen::Index r = 0; r < l; ++r) t.voltage_incidence.block<3, 3>(3 * r, 3 * (pmus[r] - 1)) = eye;

    for (Eigen::Index k = 0; k < m; ++k) {
        const auto& meter = net.model().current_meters[k];
        const auto& line = net.line_by_id(meter.line_id);
        if (!line.series_block)
            throw Error(ErrorCode::MissingPhaseBlock, "line " + std::to_string(line.id) + " lacks a 3x3 series block");
        const auto leave = static_cast<Eigen::Index>(net.leaving_column(k));
        const auto enter = static_cast<Eigen::Index>(net.entering_column(k));
        t.current_incidence.block<3, 3>(3 * k, 3 * leave) = eye;
        t.current_incidence.block<3, 3>(3 * k, 3 * enter) = -eye;
        t.series_admittance.block<3, 3>(3 * k, 3 * k) = *line.series_block;
        const auto& shunt = leaving_shunt(meter, line.shunt_from_block, line.shunt_to_block);
        t.shunt_admittance.block<3, 3>(3 * k, 3 * leave) = shunt ? *shunt : zero;
    }

    t.H.resize(3 * (l + m), 3 * n);
    t.H.topRows(3 * l) = t.voltage_incidence.cast<Complex>();
    t.H.bottomRows(3 * m) = t.series_admittance * t.current_incidence.cast<Complex>() + t.shunt_admittance;
    return t;
}

}  // namespace gridsense
