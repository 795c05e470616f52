#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gridsense/bench.hpp"
#include "gridsense/error.hpp"

using namespace gridsense;

namespace {
const std::filesystem::path kData = GRIDSENSE_DATA_DIR;

ScenarioConfig small_scenario(int trials = 4) {
    ScenarioConfig c = load_scenario(kData / "scenarios/feeder69_k17.json");
    c.trials = trials;
    return c;
}
}  // namespace

TEST_CASE("bits accounting") {
    const auto k34 = bits_accounting(76, 34, 6);
    CHECK(k34.bits_total == 876);
    CHECK(k34.baseline_bits == 1216);
    CHECK(k34.saved_pct == 27.96);
    CHECK(k34.component_bits_total == 1752);
    const auto k42 = bits_accounting(76, 42, 6);
    CHECK(k42.bits_total == 796);
    CHECK(k42.saved_pct == 34.53);
    const auto none = bits_accounting(76, 0, 6);
    CHECK(none.bits_total == 1216);
    CHECK(none.saved_pct == 0.0);
}

TEST_CASE("scenario parsing") {
    const auto c = load_scenario(kData / "scenarios/feeder69_k17.json");
    CHECK(c.profile.mode == ProfileConfig::Mode::KLadder);
    CHECK(c.profile.k == 17);
    CHECK(c.profile.bits == 1);
    CHECK_FALSE(c.profile.full_scale.has_value());
    CHECK(std::filesystem::exists(c.network));
    CHECK(c.solver.epsilon == 1e-8);
    CHECK(c.solver.max_iterations == 500);

    auto parse = [](const char* text) { return parse_scenario(nlohmann::json::parse(text)); };
    auto code = [&](const char* text) {
        try {
            parse(text);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    CHECK(code(R"({"prior":{"magnitude_mean":1,"variance":1},"noise_variance":0.1})") == ErrorCode::ConfigParseError);
    CHECK(code(R"({"network":"x","prior":{"magnitude_mean":1,"variance":-1},"noise_variance":0.1})") ==
          ErrorCode::ConfigParseError);
    CHECK(code(R"({"network":"x","prior":{"magnitude_mean":1,"variance":1},"noise_variance":0.1,"estimators":["ls"]})") ==
          ErrorCode::ConfigParseError);
    CHECK(code(R"({"network":"x","prior":{"magnitude_mean":1,"variance":1},"noise_variance":0.1,"profile":{"mode":"k_ladder"}})") ==
          ErrorCode::ConfigParseError);
    const auto fixed = parse(
        R"({"network":"x","prior":{"magnitude_mean":1,"variance":1},"noise_variance":0.1,"profile":{"mode":"explicit","channels":[3],"bits":6,"full_scale":2.5}})");
    CHECK(*fixed.profile.full_scale == 2.5);
    CHECK(fixed.profile.channels == std::vector<int>{3});
}

TEST_CASE("run_scenario is deterministic and independent of the pool size") {
    const auto c = small_scenario(6);
    setenv("GRIDSENSE_THREADS", "1", 1);
    const auto a = run_scenario(c);
    setenv("GRIDSENSE_THREADS", "3", 1);
    const auto b = run_scenario(c);
    unsetenv("GRIDSENSE_THREADS");
    REQUIRE(a.estimators.size() == 2);
    for (std::size_t e = 0; e < 2; ++e) {
        CHECK(a.estimators[e].mean.mse == b.estimators[e].mean.mse);
        CHECK(a.estimators[e].mean.mse_phase == b.estimators[e].mean.mse_phase);
        CHECK(a.estimators[e].trials == 6);
    }
    CHECK(a.k == 17);
    CHECK(a.steps.size() == 17);

    const auto& g = a.estimators[0];
    double sum = 0.0;
    for (const auto& t : g.per_trial) sum += t.metrics.mse;
    CHECK(g.mean.mse == doctest::Approx(sum / 6.0).epsilon(1e-15));
}

TEST_CASE("lmmse-only runs report no learned prior") {
    auto c = small_scenario(2);
    c.estimators = {EstimatorKind::Lmmse};
    const auto r = run_scenario(c);
    REQUIRE(r.estimators.size() == 1);
    CHECK_FALSE(r.estimators[0].learned.has_value());
    CHECK(r.estimators[0].per_trial[0].iterations == 0);
}

TEST_CASE("report formats") {
    const auto r = run_scenario(small_scenario(2));
    const auto csv = format_csv(r);
    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "estimator,trials,mse,mse_magn,mse_phase,secs_per_trial,nu_x_re,nu_x_im,sigma_x2,bits_total,"
                    "bits_saved_pct,seed");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 2);

    const auto j = report_to_json(r);
    const auto back = report_from_json(nlohmann::json::parse(j.dump()));
    CHECK(report_to_json(back) == j);
    CHECK(back.estimators[0].mean.mse == r.estimators[0].mean.mse);

    const auto table = format_table(r);
    int data_rows = 0;
    std::istringstream t(table);
    for (std::string line; std::getline(t, line);)
        if (line.rfind("emswgamp", 0) == 0 || line.rfind("lmmse", 0) == 0) ++data_rows;
    CHECK(data_rows == 2);

    CHECK_THROWS_AS(emit_report(r, ReportFormat::Csv, "/nonexistent-dir/out.csv"), Error);
    const auto path = std::filesystem::temp_directory_path() / "gridsense_report_test.csv";
    emit_report(r, ReportFormat::Csv, path);
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    CHECK(ss.str() == csv);
    std::filesystem::remove(path);
}

TEST_CASE("sweep emits one report per K") {
    auto c = small_scenario(2);
    const auto reps = run_sweep(c, {0, 2, 17});
    REQUIRE(reps.size() == 3);
    CHECK(reps[0].k == 0);
    CHECK(reps[1].k == 2);
    CHECK(reps[2].k == 17);
    const auto csv = format_sweep(reps, ReportFormat::Csv);
    CHECK(csv.rfind("k,estimator,", 0) == 0);
}
