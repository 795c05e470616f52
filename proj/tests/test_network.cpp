#include <doctest.h>

#include <complex>
#include <cstring>
#include <functional>

#include "gridsense/error.hpp"
#include "gridsense/network.hpp"

using namespace gridsense;
using C = std::complex<double>;

namespace {

const std::string kData = GRIDSENSE_DATA_DIR;

NetworkModel chain(int n, const std::vector<int>& pmus) {
    NetworkModel m;
    for (int i = 1; i <= n; ++i) m.buses.push_back({i, 1});
    for (int i = 1; i < n; ++i) m.lines.push_back({i, i, i + 1, C(1.0, -2.0), C(0.0, 0.01), C(0.0, 0.02)});
    for (int i = 1; i < n; ++i) m.current_meters.push_back({i, Direction::FromTo});
    m.pmu_buses = pmus;
    return m;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("six-bus fixture validates with P = 8") {
    const auto net = validate_network(load_network(kData + "/networks/six_bus.json"));
    CHECK(net.bus_count() == 6);
    CHECK(net.pmu_count() == 3);
    CHECK(net.meter_count() == 5);
    CHECK(net.channel_count() == 8);
}

TEST_CASE("validation errors") {
    SUBCASE("no PMUs and M = N - 1 is underdetermined") {
        CHECK(code_of([] { validate_network(chain(4, {})); }) == ErrorCode::Underdetermined);
    }
    SUBCASE("meter on a missing line") {
        auto m = chain(3, {1});
        m.current_meters.push_back({99, Direction::FromTo});
        CHECK(code_of([&] { validate_network(m); }) == ErrorCode::DanglingLineRef);
    }
    SUBCASE("duplicate bus id") {
        auto m = chain(3, {1});
        m.buses[2].id = 2;
        CHECK(code_of([&] { validate_network(m); }) == ErrorCode::DuplicateBusId);
    }
    SUBCASE("no meters") {
        auto m = chain(2, {1, 2});
        m.current_meters.clear();
        CHECK(code_of([&] { validate_network(m); }) == ErrorCode::EmptyMeterSet);
    }
    SUBCASE("line to a missing bus") {
        auto m = chain(3, {1});
        m.lines[1].to_bus = 7;
        CHECK(code_of([&] { validate_network(m); }) == ErrorCode::DanglingLineRef);
    }
    SUBCASE("self loop and zero series admittance") {
        auto m = chain(3, {1});
        m.lines[0].to_bus = 1;
        CHECK(code_of([&] { validate_network(m); }) == ErrorCode::InvalidNetwork);
        auto z = chain(3, {1});
        z.lines[0].series = 0.0;
        CHECK(code_of([&] { validate_network(z); }) == ErrorCode::InvalidNetwork);
    }
    SUBCASE("repeated PMU bus") {
        CHECK(code_of([] { validate_network(chain(3, {1, 1})); }) == ErrorCode::InvalidNetwork);
    }
    SUBCASE("non-contiguous ids") {
        auto m = chain(3, {1});
        m.buses[2].id = 5;
        CHECK(code_of([&] { validate_network(m); }) == ErrorCode::InvalidNetwork);
    }
    SUBCASE("mixed phase counts") {
        auto m = chain(3, {1});
        m.buses[1].phase_count = 3;
        CHECK(code_of([&] { validate_network(m); }) == ErrorCode::InvalidNetwork);
    }
}

TEST_CASE("current incidence rows and orientation") {
    auto m = chain(3, {1, 2, 3});
    m.current_meters = {{1, Direction::FromTo}};
    auto a = build_current_incidence(validate_network(m));
    CHECK(a.row(0) == Eigen::RowVector3d(1, -1, 0));

    m.current_meters = {{1, Direction::ToFrom}};
    a = build_current_incidence(validate_network(m));
    CHECK(a.row(0) == Eigen::RowVector3d(-1, 1, 0));

    const auto six = validate_network(load_network(kData + "/networks/six_bus.json"));
    const auto a6 = build_current_incidence(six);
    CHECK(a6.rows() == 5);
    for (Eigen::Index r = 0; r < a6.rows(); ++r) {
        CHECK(a6.row(r).sum() == 0.0);
        CHECK((a6.row(r).array() == 1.0).count() == 1);
        CHECK((a6.row(r).array() == -1.0).count() == 1);
    }
}

TEST_CASE("voltage incidence") {
    const auto six = validate_network(load_network(kData + "/networks/six_bus.json"));
    const auto pi = build_voltage_incidence(six);
    REQUIRE(pi.rows() == 3);
    const int expect[] = {0, 4, 5};
    for (int r = 0; r < 3; ++r) {
        CHECK(pi.row(r).sum() == 1.0);
        CHECK(pi(r, expect[r]) == 1.0);
    }
    const auto full = build_voltage_incidence(validate_network(chain(4, {1, 2, 3, 4})));
    CHECK(full.isIdentity());

    auto m = chain(3, {});
    m.current_meters.push_back({1, Direction::ToFrom});
    m.current_meters.push_back({2, Direction::ToFrom});
    const auto empty = build_voltage_incidence(validate_network(m));
    CHECK(empty.rows() == 0);
    CHECK(empty.cols() == 3);
}

TEST_CASE("series admittance is diagonal with the line value") {
    auto m = chain(2, {1, 2});
    m.current_meters = {{1, Direction::FromTo}, {1, Direction::ToFrom}};
    const auto yl = build_series_admittance(validate_network(m));
    CHECK(yl(0, 0) == C(1, -2));
    CHECK(yl(1, 1) == C(1, -2));
    CHECK(yl(0, 1) == C(0, 0));
    CHECK(yl(1, 0) == C(0, 0));
}

TEST_CASE("shunt admittance sits on the leaving bus") {
    auto m = chain(3, {1, 2, 3});
    m.current_meters = {{1, Direction::FromTo}, {2, Direction::ToFrom}};
    const auto ys = build_shunt_admittance(validate_network(m));
    CHECK(ys(0, 0) == C(0, 0.01));
    CHECK(ys(0, 1) == C(0, 0));
    CHECK(ys(1, 2) == C(0, 0.02));
    CHECK((ys.array() != C(0, 0)).count() == 2);

    const auto six = validate_network(load_network(kData + "/networks/six_bus.json"));
    const auto ys6 = build_shunt_admittance(six);
    CHECK((ys6.array() != C(0, 0)).count() == 5);
    const auto a6 = build_current_incidence(six);
    for (Eigen::Index r = 0; r < ys6.rows(); ++r)
        for (Eigen::Index c = 0; c < ys6.cols(); ++c)
            if (ys6(r, c) != C(0, 0)) CHECK(a6(r, c) == 1.0);
}

TEST_CASE("two-bus pi line reproduces the hand-built state equation") {
    const C y(2.0, -5.0), yi(0.0, 0.03), yj(0.0, 0.04);
    NetworkModel m;
    m.buses = {{1, 1}, {2, 1}};
    m.lines = {{1, 1, 2, y, yi, yj}};
    m.current_meters = {{1, Direction::FromTo}, {1, Direction::ToFrom}};
    m.pmu_buses = {1, 2};
    const auto t = assemble_topology(validate_network(m));
    Eigen::MatrixXcd expect(4, 2);
    expect << 1, 0, 0, 1, y + yi, -y, -y, y + yj;
    CHECK((t.H - expect).norm() == 0.0);

    m.lines[0] = {1, 1, 2, C(1, 0), C(0, 0), C(0, 0)};
    const auto t0 = assemble_topology(validate_network(m));
    CHECK(t0.H.row(2) == Eigen::RowVector2cd(1, -1));
    CHECK(t0.H.row(3) == Eigen::RowVector2cd(-1, 1));
}

TEST_CASE("six-bus H shape and row sums") {
    auto model = load_network(kData + "/networks/six_bus.json");
    model.lines[1].shunt_from = 0.0;  // meter 2 leaves bus 2 through line 2
    const auto net = validate_network(model);
    const auto t = assemble_topology(net);
    CHECK(t.H.rows() == 8);
    CHECK(t.H.cols() == 6);
    const Eigen::VectorXcd h1 = t.H * Eigen::VectorXcd::Ones(6);
    for (Eigen::Index r = 3; r < 8; ++r) {
        const bool zero_shunt = t.shunt_admittance.row(r - 3).isZero(0.0);
        CHECK((h1(r) == C(0, 0)) == zero_shunt);
    }
}

TEST_CASE("block invariants on the 69-bus feeder") {
    const auto net = validate_network(load_network(kData + "/networks/feeder69.json"));
    const auto t = assemble_topology(net);
    CHECK(t.H.rows() == 76);
    CHECK(t.H.cols() == 69);
    CHECK(t.H.topRows(8) == t.voltage_incidence.cast<C>());
    CHECK((t.H.bottomRows(68) - (t.series_admittance * t.current_incidence.cast<C>() + t.shunt_admittance)).norm() == 0.0);
    CHECK(t.voltage_incidence.rowwise().sum().isOnes());
    CHECK(t.current_incidence.rowwise().sum().isZero(0.0));
    Eigen::MatrixXcd off = t.series_admittance;
    off.diagonal().setZero();
    CHECK(off.isZero(0.0));
    for (Eigen::Index r = 0; r < 68; ++r) {
        int nonzero = 0;
        for (Eigen::Index c = 0; c < 69; ++c)
            if (t.shunt_admittance(r, c) != C(0, 0)) {
                ++nonzero;
                CHECK(t.current_incidence(r, c) == 1.0);
            }
        CHECK(nonzero <= 1);
    }
}

TEST_CASE("assembly is deterministic") {
    const auto net = validate_network(load_network(kData + "/networks/feeder69.json"));
    const auto a = assemble_topology(net).H;
    const auto b = assemble_topology(validate_network(load_network(kData + "/networks/feeder69.json"))).H;
    CHECK(std::memcmp(a.data(), b.data(), sizeof(C) * static_cast<std::size_t>(a.size())) == 0);
}

TEST_CASE("three-phase toy expands to 12 x 6") {
    const auto net = validate_network(load_network(kData + "/networks/three_phase_toy.json"));
    CHECK(net.phase_count() == 3);
    const auto t = expand_three_phase(net);
    CHECK(t.H.rows() == 12);
    CHECK(t.H.cols() == 6);
    CHECK(t.voltage_incidence.block(0, 0, 3, 3).isIdentity());
    CHECK(t.voltage_incidence.block(3, 3, 3, 3).isIdentity());
    CHECK(t.voltage_incidence.block(0, 3, 3, 3).isZero(0.0));
    const auto& line = net.model().lines[0];
    // meter 1: from 1 to 2 -> [Y + Ysh_from, -Y]
    CHECK((t.H.block(6, 0, 3, 3) - (*line.series_block + *line.shunt_from_block)).norm() == 0.0);
    CHECK((t.H.block(6, 3, 3, 3) + *line.series_block).norm() == 0.0);
    // meter 2: from 2 to 1 -> [-Y, Y + Ysh_to]
    CHECK((t.H.block(9, 0, 3, 3) + *line.series_block).norm() == 0.0);
    CHECK((t.H.block(9, 3, 3, 3) - (*line.series_block + *line.shunt_to_block)).norm() == 0.0);
    CHECK((assemble_topology(net).H - t.H).norm() == 0.0);
}

TEST_CASE("three-phase line without blocks") {
    auto m = load_network(kData + "/networks/three_phase_toy.json");
    m.lines[0].series_block.reset();
    m.lines[0].series = C(1, -1);
    CHECK(code_of([&] { expand_three_phase(validate_network(m)); }) == ErrorCode::MissingPhaseBlock);
    CHECK(code_of([&] { expand_three_phase(validate_network(chain(3, {1, 2, 3}))); }) == ErrorCode::InvalidNetwork);
}

TEST_CASE("decoupled three-phase data is three copies of the single-phase H") {
    const auto single = load_network(kData + "/networks/six_bus.json");
    NetworkModel lifted = single;
    for (auto& b : lifted.buses) b.phase_count = 3;
    const C scale[3] = {C(1.0, 0.0), C(0.9, 0.1), C(1.1, -0.05)};
    for (auto& l : lifted.lines) {
        PhaseBlock ys = PhaseBlock::Zero(), yf = PhaseBlock::Zero(), yt = PhaseBlock::Zero();
        for (int k = 0; k < 3; ++k) {
            ys(k, k) = l.series * scale[k];
            yf(k, k) = l.shunt_from * scale[k];
            yt(k, k) = l.shunt_to * scale[k];
        }
        l.series_block = ys;
        l.shunt_from_block = yf;
        l.shunt_to_block = yt;
    }
    const auto h3 = expand_three_phase(validate_network(lifted)).H;
    for (int k = 0; k < 3; ++k) {
        NetworkModel phase = single;
        for (auto& l : phase.lines) {
            l.series *= scale[k];
            l.shunt_from *= scale[k];
            l.shunt_to *= scale[k];
        }
        const auto h = assemble_topology(validate_network(phase)).H;
        // rows and columns 3r + k of H3 form the phase-k slice
        for (Eigen::Index r = 0; r < h.rows(); ++r)
            for (Eigen::Index c = 0; c < h.cols(); ++c) CHECK(h3(3 * r + k, 3 * c + k) == h(r, c));
    }
    // No coupling between phases.
    for (Eigen::Index r = 0; r < h3.rows(); ++r)
        for (Eigen::Index c = 0; c < h3.cols(); ++c)
            if (r % 3 != c % 3) CHECK(h3(r, c) == C(0, 0));
}

TEST_CASE("parse errors") {
    CHECK(code_of([] { load_network("/nonexistent/net.json"); }) == ErrorCode::IoError);
    CHECK(code_of([] { parse_network(nlohmann::json::parse(R"({"buses":[]})")); }) == ErrorCode::ConfigParseError);
    CHECK(code_of([] {
              parse_network(nlohmann::json::parse(
                  R"({"buses":[{"id":1}],"lines":[{"id":1,"from":1,"to":2,"y_series":[1]}],"current_meters":[],"pmu_buses":[]})"));
          }) == ErrorCode::ConfigParseError);
}
