#include "gridsense/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include "gridsense/error.hpp"

namespace gridsense {

using nlohmann::json;

std::string to_string(EstimatorKind e) { return e == EstimatorKind::EmSwGamp ? "emswgamp" : "lmmse"; }

EstimatorKind parse_estimator(const std::string& name) {
    if (name == "emswgamp") return EstimatorKind::EmSwGamp;
    if (name == "lmmse") return EstimatorKind::Lmmse;
    throw Error(ErrorCode::ConfigParseError, "unknown estimator '" + name + "'");
}

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigParseError, std::string("field '") + key + "': " + e.what());
    }
}

template <class T>
T get_required(const json& j, const char* key) {
    if (!j.contains(key)) throw Error(ErrorCode::ConfigParseError, std::string("missing field '") + key + "'");
    return get_or<T>(j, key, T{});
}

ProfileConfig parse_profile(const json& j) {
    ProfileConfig p;
    const auto mode = get_or<std::string>(j, "mode", "full");
    if (mode == "full")
        p.mode = ProfileConfig::Mode::Full;
    else if (mode == "k_ladder")
        p.mode = ProfileConfig::Mode::KLadder;
    else if (mode == "explicit")
        p.mode = ProfileConfig::Mode::Explicit;
    else
        throw Error(ErrorCode::ConfigParseError, "unknown profile mode '" + mode + "'");
    p.k = get_or<int>(j, "k", 0);
    p.channels = get_or<std::vector<int>>(j, "channels", {});
    p.bits = get_or<int>(j, "bits", 1);
    if (auto it = j.find("full_scale"); it != j.end() && !(it->is_string() && *it == "auto")) {
        if (!it->is_number()) throw Error(ErrorCode::ConfigParseError, "full_scale must be a number or \"auto\"");
        p.full_scale = it->get<double>();
    }
    if (p.mode == ProfileConfig::Mode::KLadder && !j.contains("k"))
        throw Error(ErrorCode::ConfigParseError, "k_ladder profile needs k");
    if (p.mode != ProfileConfig::Mode::Full && (p.bits < 1 || p.bits > 30))
        throw Error(ErrorCode::ConfigParseError, "bits must be in 1..30");
    return p;
}

json profile_json(const ProfileConfig& p) {
    json j;
    switch (p.mode) {
        case ProfileConfig::Mode::Full: j["mode"] = "full"; break;
        case ProfileConfig::Mode::KLadder: j["mode"] = "k_ladder"; j["k"] = p.k; break;
        case ProfileConfig::Mode::Explicit: j["mode"] = "explicit"; j["channels"] = p.channels; break;
    }
    if (p.mode != ProfileConfig::Mode::Full) {
        j["bits"] = p.bits;
        if (p.full_scale)
            j["full_scale"] = *p.full_scale;
        else
            j["full_scale"] = "auto";
    }
    return j;
}

}  // namespace

ScenarioConfig parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw Error(ErrorCode::ConfigParseError, "scenario is not a JSON object");
    ScenarioConfig c;
    std::filesystem::path net = get_required<std::string>(doc, "network");
    c.network = net.is_relative() && !base_dir.empty() ? base_dir / net : net;

    if (!doc.contains("prior")) throw Error(ErrorCode::ConfigParseError, "missing field 'prior'");
    const auto& pr = doc["prior"];
    c.prior.magnitude_mean = get_required<double>(pr, "magnitude_mean");
    c.prior.phase_mean = get_or<double>(pr, "phase_mean", 0.0);
    c.prior.variance = get_required<double>(pr, "variance");
    if (!(c.prior.variance > 0.0)) throw Error(ErrorCode::ConfigParseError, "prior variance must be positive");

    c.noise_variance = get_required<double>(doc, "noise_variance");
    if (!(c.noise_variance >= 0.0)) throw Error(ErrorCode::ConfigParseError, "noise_variance must be >= 0");
    c.profile = doc.contains("profile") ? parse_profile(doc["profile"]) : ProfileConfig{};
    c.trials = get_or<int>(doc, "trials", 1);
    if (c.trials < 1) throw Error(ErrorCode::ConfigParseError, "trials must be >= 1");
    c.seed = get_or<std::uint64_t>(doc, "seed", 0);

    if (doc.contains("estimators")) {
        c.estimators.clear();
        for (const auto& name : get_required<std::vector<std::string>>(doc, "estimators"))
            c.estimators.push_back(parse_estimator(name));
        if (c.estimators.empty()) throw Error(ErrorCode::ConfigParseError, "no estimators selected");
    }

    if (doc.contains("solver")) {
        const auto& s = doc["solver"];
        c.solver.max_iterations = get_or<int>(s, "max_iterations", c.solver.max_iterations);
        c.solver.epsilon = get_or<double>(s, "epsilon", c.solver.epsilon);
        c.solver.em_enabled = get_or<bool>(s, "em", c.solver.em_enabled);
        c.solver.damping = get_or<double>(s, "damping", c.solver.damping);
    }
    if (c.solver.max_iterations < 1) throw Error(ErrorCode::ConfigParseError, "max_iterations must be >= 1");
    if (!(c.solver.epsilon > 0.0)) throw Error(ErrorCode::ConfigParseError, "epsilon must be positive");
    if (!(c.solver.damping >= 0.0 && c.solver.damping < 1.0))
        throw Error(ErrorCode::ConfigParseError, "damping must be in [0, 1)");

    if (doc.contains("initial_prior")) {
        const auto& ip = doc["initial_prior"];
        c.theta0.prior_mean = {get_or<double>(ip, "mean_re", 1.0), get_or<double>(ip, "mean_im", 0.0)};
        c.theta0.prior_variance = get_or<double>(ip, "variance", 1.0);
    }
    return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigParseError, "cannot open scenario " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigParseError, path.string() + ": " + e.what());
    }
    return parse_scenario(doc, path.parent_path());
}

json to_json(const ScenarioConfig& c) {
    json j;
    j["network"] = c.network.string();
    j["prior"] = {{"magnitude_mean", c.prior.magnitude_mean}, {"phase_mean", c.prior.phase_mean},
                  {"variance", c.prior.variance}};
    j["noise_variance"] = c.noise_variance;
    j["profile"] = profile_json(c.profile);
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["estimators"] = json::array();
    for (auto e : c.estimators) j["estimators"].push_back(to_string(e));
    j["solver"] = {{"max_iterations", c.solver.max_iterations}, {"epsilon", c.solver.epsilon},
                   {"em", c.solver.em_enabled}, {"damping", c.solver.damping}};
    j["initial_prior"] = {{"mean_re", c.theta0.prior_mean.real()}, {"mean_im", c.theta0.prior_mean.imag()},
                          {"variance", c.theta0.prior_variance}};
    return j;
}

BitsAccounting bits_accounting(const ResolutionProfile& profile) {
    BitsAccounting b;
    b.channels = profile.size();
    for (const auto& tag : profile) {
        if (tag.is_quantized()) {
            ++b.quantized;
            b.bits_total += tag.spec.bits;
        } else {
            b.bits_total += 16;
        }
    }
    b.baseline_bits = 16LL * static_cast<long long>(b.channels);
    // Integer arithmetic so the two-decimal truncation is exact.
    const long long hundredths = b.baseline_bits == 0 ? 0 : (b.baseline_bits - b.bits_total) * 10000 / b.baseline_bits;
    b.saved_pct = static_cast<double>(hundredths) / 100.0;
    b.component_bits_total = 2 * b.bits_total;
    b.component_baseline_bits = 2 * b.baseline_bits;
    return b;
}

BitsAccounting bits_accounting(std::size_t channels, std::size_t quantized, int bits) {
    ResolutionProfile p(channels);
    for (std::size_t k = 0; k < quantized && k < channels; ++k) p[k] = ResolutionTag::quantized({bits, 1.0});
    return bits_accounting(p);
}

bool AggregateReport::any_diverged() const {
    for (const auto& e : estimators)
        if (e.diverged > 0) return true;
    return false;
}

int worker_count() {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("GRIDSENSE_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) n = n > 0 ? std::min(n, cap) : cap;
    }
    return std::max(n, 1);
}

namespace {

ResolutionProfile build_profile(const ScenarioConfig& c, const ValidatedNetwork& net, const Eigen::MatrixXcd& H,
                                std::vector<std::size_t>& selected) {
    const std::size_t p = static_cast<std::size_t>(H.rows());
    selected.clear();
    switch (c.profile.mode) {
        case ProfileConfig::Mode::Full: return full_profile(p);
        case ProfileConfig::Mode::KLadder: selected = selection_for_k(net, c.profile.k); break;
        case ProfileConfig::Mode::Explicit:
            for (int ch : c.profile.channels) {
                if (ch < 1 || static_cast<std::size_t>(ch) > p)
                    throw Error(ErrorCode::ConfigParseError, "explicit channel " + std::to_string(ch) + " out of range");
                selected.push_back(static_cast<std::size_t>(ch - 1));
            }
            break;
    }
    const Eigen::VectorXd fs = c.profile.full_scale ? Eigen::VectorXd::Constant(H.rows(), *c.profile.full_scale)
                                                    : auto_full_scale(H, c.prior);
    return quantized_profile(p, selected, c.profile.bits, fs);
}

struct TrialResult {
    std::vector<TrialOutcome> per_estimator;
};

TrialResult run_trial(const ScenarioConfig& c, const Eigen::MatrixXcd& H, const ResolutionProfile& profile, int trial) {
    const auto t = static_cast<std::uint64_t>(trial);
    auto state_rng = make_rng(c.seed, t, Stream::State);
    auto noise_rng = make_rng(c.seed, t, Stream::Noise);
    const Eigen::VectorXcd x = sample_state(c.prior, static_cast<std::size_t>(H.cols()), state_rng);
    const Eigen::VectorXcd y = simulate_measurements(H, x, c.noise_variance, noise_rng);
    const MeasurementSet meas = apply_resolution_profile(y, profile);

    TrialResult r;
    for (const auto kind : c.estimators) {
        TrialOutcome o;
        const auto start = std::chrono::steady_clock::now();
        if (kind == EstimatorKind::EmSwGamp) {
            SolverOptions opt = c.solver;
            opt.seed = make_rng(c.seed, t, Stream::Solver)();
            try {
                const Estimate est = run(meas, H, c.noise_variance, opt, c.theta0);
                o.metrics = compute_metrics(x, est.x);
                o.iterations = est.iterations;
                o.converged = est.converged;
                o.theta = est.theta;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::Diverged) throw;
                o.diverged = true;
            }
        } else {
            o.metrics = compute_metrics(x, lmmse_estimate(H, meas.observed(), c.noise_variance));
            o.converged = true;
        }
        o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        r.per_estimator.push_back(o);
    }
    return r;
}

}  // namespace

AggregateReport run_scenario(const ScenarioConfig& config) {
    return run_scenario(config, validate_network(load_network(config.network)));
}

AggregateReport run_scenario(const ScenarioConfig& c, const ValidatedNetwork& net) {
    const TopologyMatrix topo = assemble_topology(net);
    const Eigen::MatrixXcd& H = topo.H;
    std::vector<std::size_t> selected;
    const ResolutionProfile profile = build_profile(c, net, H, selected);

    std::vector<TrialResult> results(static_cast<std::size_t>(c.trials));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (int t = next++; t < c.trials && !failed; t = next++) {
            try {
                results[static_cast<std::size_t>(t)] = run_trial(c, H, profile, t);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
            }
        }
    };
    const int workers = std::min(worker_count(), c.trials);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    AggregateReport rep;
    rep.network_name = net.model().name;
    rep.seed = c.seed;
    rep.trials = c.trials;
    rep.k = static_cast<int>(selected.size());
    rep.bits = bits_accounting(profile);
    rep.auto_full_scale = !c.profile.full_scale.has_value();
    for (std::size_t ch : selected) rep.steps.push_back({ch, profile[ch].spec.bits, profile[ch].spec.step});
    rep.config = to_json(c);

    for (std::size_t e = 0; e < c.estimators.size(); ++e) {
        EstimatorSummary s;
        s.estimator = c.estimators[e];
        s.trials = c.trials;
        Complex nu{};
        double sx2 = 0.0, secs = 0.0, iters = 0.0;
        int ok = 0;
        for (const auto& r : results) {
            const auto& o = r.per_estimator[e];
            s.per_trial.push_back(o);
            secs += o.seconds;
            if (o.diverged) {
                ++s.diverged;
                continue;
            }
            ++ok;
            s.converged += o.converged ? 1 : 0;
            s.mean.mse += o.metrics.mse;
            s.mean.mse_magnitude += o.metrics.mse_magnitude;
            s.mean.mse_phase += o.metrics.mse_phase;
            iters += o.iterations;
            nu += o.theta.prior_mean;
            sx2 += o.theta.prior_variance;
        }
        s.secs_per_trial = secs / c.trials;
        if (ok > 0) {
            s.mean.mse /= ok;
            s.mean.mse_magnitude /= ok;
            s.mean.mse_phase /= ok;
            s.mean_iterations = iters / ok;
            if (s.estimator == EstimatorKind::EmSwGamp) s.learned = Hyperparams{nu / double(ok), sx2 / ok};
        } else {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            s.mean = {nan, nan, nan};
        }
        rep.estimators.push_back(std::move(s));
    }
    return rep;
}

std::vector<AggregateReport> run_sweep(const ScenarioConfig& config, const std::vector<int>& ks) {
    const ValidatedNetwork net = validate_network(load_network(config.network));
    std::vector<AggregateReport> out;
    for (int k : ks) {
        ScenarioConfig c = config;
        if (k == 0) {
            c.profile.mode = ProfileConfig::Mode::Full;
        } else {
            c.profile.mode = ProfileConfig::Mode::KLadder;
            c.profile.k = k;
        }
        out.push_back(run_scenario(c, net));
    }
    return out;
}

ReportFormat parse_format(const std::string& name) {
    if (name == "csv") return ReportFormat::Csv;
    if (name == "json") return ReportFormat::Json;
    if (name == "table") return ReportFormat::Table;
    throw Error(ErrorCode::ConfigParseError, "unknown report format '" + name + "'");
}

const char* const kCsvHeader =
    "estimator,trials,mse,mse_magn,mse_phase,secs_per_trial,nu_x_re,nu_x_im,sigma_x2,bits_total,bits_saved_pct,seed";

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9e", v);
    return buf;
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

double from_nullable(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

std::string format_csv(const AggregateReport& r, bool with_header) {
    std::ostringstream os;
    if (with_header) os << kCsvHeader << '\n';
    for (const auto& e : r.estimators) {
        os << to_string(e.estimator) << ',' << e.trials << ',' << num(e.mean.mse) << ',' << num(e.mean.mse_magnitude)
           << ',' << num(e.mean.mse_phase) << ',' << num(e.secs_per_trial) << ',';
        if (e.learned)
            os << num(e.learned->prior_mean.real()) << ',' << num(e.learned->prior_mean.imag()) << ','
               << num(e.learned->prior_variance);
        else
            os << ",,";
        os << ',' << r.bits.bits_total << ',' << pct(r.bits.saved_pct) << ',' << r.seed << '\n';
    }
    return os.str();
}

json report_to_json(const AggregateReport& r) {
    json rows = json::array();
    for (const auto& e : r.estimators) {
        json row;
        row["estimator"] = to_string(e.estimator);
        row["trials"] = e.trials;
        row["mse"] = e.mean.mse;
        row["mse_magn"] = e.mean.mse_magnitude;
        row["mse_phase"] = e.mean.mse_phase;
        row["secs_per_trial"] = e.secs_per_trial;
        row["nu_x_re"] = nullable(e.learned ? std::optional(e.learned->prior_mean.real()) : std::nullopt);
        row["nu_x_im"] = nullable(e.learned ? std::optional(e.learned->prior_mean.imag()) : std::nullopt);
        row["sigma_x2"] = nullable(e.learned ? std::optional(e.learned->prior_variance) : std::nullopt);
        row["bits_total"] = r.bits.bits_total;
        row["bits_saved_pct"] = r.bits.saved_pct;
        row["seed"] = r.seed;
        row["diverged"] = e.diverged;
        row["converged"] = e.converged;
        row["mean_iterations"] = e.mean_iterations;
        rows.push_back(std::move(row));
    }
    json steps = json::array();
    for (const auto& s : r.steps) steps.push_back({{"channel", s.channel + 1}, {"bits", s.bits}, {"step", s.step}});
    json meta = {
        {"network", r.network_name},
        {"quantized_channels", r.k},
        {"channels", r.bits.channels},
        {"baseline_bits", r.bits.baseline_bits},
        {"component_bits_total", r.bits.component_bits_total},
        {"component_baseline_bits", r.bits.component_baseline_bits},
        {"bits_convention", "16 bits per full-precision measurement, B per quantized one; component counts are x2"},
        {"full_scale", r.auto_full_scale ? "auto: 4*sqrt(E|z|^2/2) per channel" : "fixed"},
        {"phase_error", "wrapped to (-pi, pi]"},
        {"steps", steps},
        {"config", r.config},
    };
    return {{"rows", rows}, {"meta", meta}};
}

AggregateReport report_from_json(const json& doc) {
    AggregateReport r;
    try {
        const auto& meta = doc.at("meta");
        r.network_name = meta.at("network").get<std::string>();
        r.k = meta.at("quantized_channels").get<int>();
        r.bits.channels = meta.at("channels").get<std::size_t>();
        r.bits.quantized = static_cast<std::size_t>(r.k);
        r.bits.baseline_bits = meta.at("baseline_bits").get<long long>();
        r.bits.component_bits_total = meta.at("component_bits_total").get<long long>();
        r.bits.component_baseline_bits = meta.at("component_baseline_bits").get<long long>();
        r.auto_full_scale = meta.at("full_scale").get<std::string>() != "fixed";
        r.config = meta.at("config");
        for (const auto& s : meta.at("steps"))
            r.steps.push_back({s.at("channel").get<std::size_t>() - 1, s.at("bits").get<int>(), s.at("step").get<double>()});
        for (const auto& row : doc.at("rows")) {
            EstimatorSummary e;
            e.estimator = parse_estimator(row.at("estimator").get<std::string>());
            e.trials = row.at("trials").get<int>();
            e.mean = {row.at("mse").get<double>(), row.at("mse_magn").get<double>(), row.at("mse_phase").get<double>()};
            e.secs_per_trial = row.at("secs_per_trial").get<double>();
            if (!row.at("sigma_x2").is_null())
                e.learned = Hyperparams{{from_nullable(row.at("nu_x_re")), from_nullable(row.at("nu_x_im"))},
                                        row.at("sigma_x2").get<double>()};
            e.diverged = row.at("diverged").get<int>();
            e.converged = row.at("converged").get<int>();
            e.mean_iterations = row.at("mean_iterations").get<double>();
            r.bits.bits_total = row.at("bits_total").get<long long>();
            r.bits.saved_pct = row.at("bits_saved_pct").get<double>();
            r.seed = row.at("seed").get<std::uint64_t>();
            r.trials = e.trials;
            r.estimators.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigParseError, std::string("report: ") + e.what());
    }
    return r;
}

namespace {

void table_rows(std::ostringstream& os, const AggregateReport& r, bool with_k) {
    char buf[256];
    for (const auto& e : r.estimators) {
        std::string nu = "-", sx2 = "-";
        if (e.learned) {
            char tmp[64];
            std::snprintf(tmp, sizeof tmp, "%.3f", std::abs(e.learned->prior_mean));
            nu = tmp;
            std::snprintf(tmp, sizeof tmp, "%.2e", e.learned->prior_variance);
            sx2 = tmp;
        }
        if (with_k) {
            std::snprintf(buf, sizeof buf, "%4d  ", r.k);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "%-9s %10.2e %10.2e %10.2e %9.4f %7s %9s %5d/%d\n", to_string(e.estimator).c_str(),
                      e.mean.mse, e.mean.mse_magnitude, e.mean.mse_phase, e.secs_per_trial, nu.c_str(), sx2.c_str(),
                      e.trials - e.diverged, e.trials);
        os << buf;
    }
}

const char* kTableHeader = "estimator        MSE  MSE_magn  MSE_phase  time (s)    |nu|   sigma2  ok/trials\n";

}  // namespace

std::string format_table(const AggregateReport& r) {
    std::ostringstream os;
    os << r.network_name << ": " << r.trials << " trials, seed " << r.seed << ", " << r.k << " of " << r.bits.channels
       << " channels quantized\n";
    os << kTableHeader;
    table_rows(os, r, false);
    os << "bits per snapshot: " << r.bits.bits_total << " of " << r.bits.baseline_bits << " (" << pct(r.bits.saved_pct)
       << "% saved); per component: " << r.bits.component_bits_total << " of " << r.bits.component_baseline_bits << '\n';
    return os.str();
}

std::string format_sweep(const std::vector<AggregateReport>& reports, ReportFormat format) {
    std::ostringstream os;
    switch (format) {
        case ReportFormat::Csv:
            os << "k," << kCsvHeader << '\n';
            for (const auto& r : reports) {
                std::istringstream rows(format_csv(r, false));
                for (std::string line; std::getline(rows, line);) os << r.k << ',' << line << '\n';
            }
            break;
        case ReportFormat::Json: {
            json all = json::array();
            for (const auto& r : reports) all.push_back(report_to_json(r));
            os << all.dump(2) << '\n';
            break;
        }
        case ReportFormat::Table:
            os << "   K  " << kTableHeader;
            for (const auto& r : reports) table_rows(os, r, true);
            break;
    }
    return os.str();
}

std::string render(const AggregateReport& r, ReportFormat format) {
    switch (format) {
        case ReportFormat::Csv: return format_csv(r);
        case ReportFormat::Json: return report_to_json(r).dump(2) + "\n";
        case ReportFormat::Table: return format_table(r);
    }
    return {};
}

void write_text(const std::string& text, const std::filesystem::path& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void emit_report(const AggregateReport& report, ReportFormat format, const std::filesystem::path& path) {
    write_text(render(report, format), path);
}

}  // namespace gridsense
