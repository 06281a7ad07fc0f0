#include "workflows.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "estimators.hpp"
#include "fbm.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "rosenblatt.hpp"
#include "sde.hpp"

namespace rblab {

namespace {

using nlohmann::json;

json parse_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    require(!j.is_discarded(), ErrorCode::schema_error, "config is not valid JSON");
    return j;
}

// Strict view of a JSON object: every key must be consumed, violations carry
// the field path.
class Strict {
public:
    Strict(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        require(j_.is_object(), ErrorCode::schema_error, path_ + ": expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        used_.insert(key);
        require(j_.contains(key), ErrorCode::schema_error,
                path_ + "." + key + ": required field missing");
        return j_.at(key);
    }

    double num(const std::string& key) {
        const json& v = raw(key);
        require(v.is_number(), ErrorCode::schema_error,
                path_ + "." + key + ": expected a number");
        return v.get<double>();
    }

    double num_or(const std::string& key, double fallback) {
        return has(key) ? num(key) : fallback;
    }

    std::int64_t integer(const std::string& key) {
        const json& v = raw(key);
        require(v.is_number_integer(), ErrorCode::schema_error,
                path_ + "." + key + ": expected an integer");
        return v.get<std::int64_t>();
    }

    std::int64_t integer_or(const std::string& key, std::int64_t fallback) {
        return has(key) ? integer(key) : fallback;
    }

    std::uint64_t uinteger_or(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        require(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0),
                ErrorCode::schema_error,
                path_ + "." + key + ": expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    std::string str(const std::string& key) {
        const json& v = raw(key);
        require(v.is_string(), ErrorCode::schema_error,
                path_ + "." + key + ": expected a string");
        return v.get<std::string>();
    }

    std::string str_or(const std::string& key, const std::string& fallback) {
        return has(key) ? str(key) : fallback;
    }

    Strict child(const std::string& key) { return Strict(raw(key), path_ + "." + key); }

    std::vector<double> num_array(const std::string& key) {
        const json& v = raw(key);
        require(v.is_array(), ErrorCode::schema_error,
                path_ + "." + key + ": expected an array");
        std::vector<double> out;
        for (const auto& el : v) {
            require(el.is_number(), ErrorCode::schema_error,
                    path_ + "." + key + ": expected numeric entries");
            out.push_back(el.get<double>());
        }
        return out;
    }

    std::vector<std::int64_t> int_array(const std::string& key) {
        const json& v = raw(key);
        require(v.is_array(), ErrorCode::schema_error,
                path_ + "." + key + ": expected an array");
        std::vector<std::int64_t> out;
        for (const auto& el : v) {
            require(el.is_number_integer(), ErrorCode::schema_error,
                    path_ + "." + key + ": expected integer entries");
            out.push_back(el.get<std::int64_t>());
        }
        return out;
    }

    std::vector<std::string> str_array(const std::string& key) {
        const json& v = raw(key);
        require(v.is_array(), ErrorCode::schema_error,
                path_ + "." + key + ": expected an array");
        std::vector<std::string> out;
        for (const auto& el : v) {
            require(el.is_string(), ErrorCode::schema_error,
                    path_ + "." + key + ": expected string entries");
            out.push_back(el.get<std::string>());
        }
        return out;
    }

    // Call after consuming everything the schema allows.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            require(used_.count(it.key()) > 0, ErrorCode::schema_error,
                    path_ + "." + it.key() + ": unknown field");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

Hurst parse_hurst(Strict& s, const std::string& key) {
    double v = s.num(key);
    require(v > 0.5 && v < 1.0, ErrorCode::range_error,
            key + " = " + format_g17(v) +
                " violates the constraint H in (0.5, 1)");
    return Hurst(v);
}

std::string out_file(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

struct ParsedNoise {
    bool rosenblatt;
    double h;
    std::int64_t inner_resolution;  // resolved (rosenblatt only)
    std::int64_t budget;            // M^2*N ceiling (rosenblatt only)
    std::uint64_t seed;
};

// "noise": {"kind": "rosenblatt"|"fbm", "h": .., ["inner_resolution": ..,]
//           ["seed": ..]}
ParsedNoise parse_noise(Strict& s, std::int64_t n_steps, bool allow_seed) {
    std::string kind = s.str("kind");
    require(kind == "rosenblatt" || kind == "fbm", ErrorCode::schema_error,
            "noise.kind must be 'rosenblatt' or 'fbm'");
    ParsedNoise out;
    out.rosenblatt = (kind == "rosenblatt");
    out.h = parse_hurst(s, "h").value();
    out.seed = allow_seed ? s.uinteger_or("seed", 1) : 0;
    out.inner_resolution = 0;
    out.budget = kDefaultSynthesisBudget;
    if (out.rosenblatt) {
        out.budget = s.integer_or("synthesis_budget", kDefaultSynthesisBudget);
        require(out.budget >= 1, ErrorCode::range_error,
                "synthesis_budget must be positive");
        out.inner_resolution = s.integer_or("inner_resolution", 0);
        if (out.inner_resolution == 0)
            out.inner_resolution = default_inner_resolution(n_steps, out.budget);
        require(out.inner_resolution >= n_steps, ErrorCode::range_error,
                "inner_resolution must be at least n_steps");
    } else {
        require(!s.has("inner_resolution"), ErrorCode::schema_error,
                "inner_resolution only applies to Rosenblatt noise");
        require(!s.has("synthesis_budget"), ErrorCode::schema_error,
                "synthesis_budget only applies to Rosenblatt noise");
    }
    return out;
}

json noise_echo(const ParsedNoise& n, std::int64_t n_steps, bool with_seed) {
    json j;
    j["kind"] = n.rosenblatt ? "rosenblatt" : "fbm";
    j["h"] = n.h;
    j["n_steps"] = n_steps;
    if (n.rosenblatt) {
        j["inner_resolution"] = n.inner_resolution;
        j["synthesis_budget"] = n.budget;
    }
    if (with_seed) j["seed"] = n.seed;
    return j;
}

DriftPoly parse_drift(Strict& s, const std::string& key) {
    std::vector<double> coeffs = s.num_array(key);
    require(!coeffs.empty(), ErrorCode::schema_error, key + ": must not be empty");
    return DriftPoly(coeffs);  // admissibility enforced by the type
}

// "d_h": {"source": "override", "values": [[h, d], ...]}
//      | {"source": "table", "path": "d_table.json"}
//      | {"source": "calibrate", ...}
DhSource parse_dh(Strict& parent, const std::string& key, bool allow_calibrate) {
    DhSource out;
    if (!parent.has(key)) {
        require(allow_calibrate, ErrorCode::schema_error,
                key + ": required (override or table) for drift estimation");
        out.kind = DhSource::Kind::calibrate;
        return out;
    }
    Strict s = parent.child(key);
    std::string source = s.str("source");
    if (source == "override") {
        const json& vals = s.raw("values");
        require(vals.is_array() && !vals.empty(), ErrorCode::schema_error,
                key + ".values: expected a non-empty array of [h, d] pairs");
        std::vector<std::pair<double, double>> pts;
        for (const auto& el : vals) {
            require(el.is_array() && el.size() == 2 && el[0].is_number() &&
                        el[1].is_number(),
                    ErrorCode::schema_error,
                    key + ".values: entries must be [h, d] pairs");
            pts.emplace_back(el[0].get<double>(), el[1].get<double>());
        }
        out.kind = DhSource::Kind::override_table;
        out.table = DhTable::from_points(std::move(pts));
    } else if (source == "table") {
        std::string path = s.str("path");
        json t = parse_json(read_text_file(path));
        Strict ts(t, "d_table");
        const json& vals = ts.raw("points");
        std::vector<std::pair<double, double>> pts;
        for (const auto& el : vals)
            pts.emplace_back(el[0].get<double>(), el[1].get<double>());
        out.kind = DhSource::Kind::override_table;
        out.table = DhTable::from_points(std::move(pts));
        s.finish();
        return out;
    } else if (source == "calibrate") {
        require(allow_calibrate, ErrorCode::schema_error,
                key + ".source: 'calibrate' is not available here; use "
                      "'override' or 'table'");
        out.kind = DhSource::Kind::calibrate;
        out.calibration.n_steps = s.integer_or("n_steps", 8192);
        out.calibration.inner_resolution = s.integer_or("inner_resolution", 0);
        out.calibration.replications = s.integer_or("replications", 200);
        out.calibration.master_seed =
            s.uinteger_or("master_seed", 0x9E3779B97F4A7C15ULL);
    } else {
        fail(ErrorCode::schema_error,
             key + ".source: must be 'override', 'table' or 'calibrate'");
    }
    s.finish();
    return out;
}

json dh_echo(const DhSource& src, const DhTable& resolved) {
    json j;
    if (src.kind == DhSource::Kind::calibrate) {
        j["source"] = "calibrate";
        j["n_steps"] = src.calibration.n_steps;
        j["inner_resolution"] = src.calibration.inner_resolution;
        j["replications"] = src.calibration.replications;
        j["master_seed"] = src.calibration.master_seed;
    } else {
        j["source"] = "override";
    }
    json pts = json::array();
    for (const auto& [h, d] : resolved.points()) pts.push_back(json::array({h, d}));
    j["resolved_points"] = pts;
    return j;
}

} // namespace

void run_simulate_noise(const std::string& config_json, const std::string& out_dir) {
    json root = parse_json(config_json);
    Strict s(root, "config");
    std::int64_t n_steps = s.integer("n_steps");
    require(n_steps >= 1, ErrorCode::range_error, "n_steps must be positive");
    ParsedNoise noise = parse_noise(s, n_steps, /*allow_seed=*/true);
    s.finish();

    SamplePath path =
        noise.rosenblatt
            ? simulate_rosenblatt(RosenblattSpec(Hurst(noise.h), n_steps,
                                                 noise.inner_resolution, noise.seed),
                                  noise.budget)
            : simulate_fbm(FbmSpec(Hurst(noise.h), n_steps, noise.seed));

    write_path_csv(path, out_file(out_dir, "path.csv"));
    json echo = noise_echo(noise, n_steps, true);
    write_text_file(out_file(out_dir, "config.json"), dump_json_g17(echo));
}

void run_solve(const std::string& config_json, const std::string& out_dir) {
    json root = parse_json(config_json);
    Strict s(root, "config");
    Strict ms = s.child("model");
    double x0 = ms.num("x0");
    double lambda = ms.num("lambda");
    double sigma = ms.num_or("sigma", 1.0);
    DriftPoly drift = parse_drift(ms, "drift");
    std::int64_t fine = ms.integer_or("fine_steps", 8192);
    require(fine >= 1, ErrorCode::range_error, "fine_steps must be positive");
    Strict ns = ms.child("noise");
    ParsedNoise noise = parse_noise(ns, fine, /*allow_seed=*/true);
    ns.finish();
    ms.finish();
    s.finish();

    SamplePath noise_path =
        noise.rosenblatt
            ? simulate_rosenblatt(RosenblattSpec(Hurst(noise.h), fine,
                                                 noise.inner_resolution, noise.seed),
                                  noise.budget)
            : simulate_fbm(FbmSpec(Hurst(noise.h), fine, noise.seed));
    SolutionPath sol = euler_maruyama(x0, lambda, sigma, drift, noise_path);

    write_path_csv(sol.solution, out_file(out_dir, "solution.csv"));
    write_path_csv(sol.noise, out_file(out_dir, "noise.csv"));

    json model;
    model["x0"] = x0;
    model["lambda"] = lambda;
    model["sigma"] = sigma;
    model["drift"] = drift.coefficients;
    model["fine_steps"] = fine;
    model["noise"] = noise_echo(noise, fine, true);
    write_text_file(out_file(out_dir, "model.json"), dump_json_g17(model));
    json echo;
    echo["model"] = model;
    write_text_file(out_file(out_dir, "config.json"), dump_json_g17(echo));
}

void run_estimate(const std::string& config_json, const std::string& out_dir) {
    json root = parse_json(config_json);
    Strict s(root, "config");
    std::string csv = s.str("path_csv");
    std::vector<std::string> wanted =
        s.has("estimators") ? s.str_array("estimators")
                            : std::vector<std::string>{"diffusion"};
    for (const auto& e : wanted)
        require(e == "diffusion" || e == "lambda_known" || e == "lambda_plugin",
                ErrorCode::schema_error,
                "estimators: unknown entry '" + e + "'");
    auto has_est = [&](const char* name) {
        return std::find(wanted.begin(), wanted.end(), name) != wanted.end();
    };

    SamplePath path = read_path_csv(csv);

    json report;
    json inputs;
    inputs["path_csv"] = csv;
    inputs["n"] = path.n_steps;
    inputs["interval_scheme"] = "halves";
    inputs["estimators"] = wanted;

    std::optional<DriftPoly> drift;
    if (s.has("drift")) drift = parse_drift(s, "drift");

    if (has_est("diffusion")) {
        DiffusionEstimate de = estimate_diffusion(path);
        json j;
        j["h_hat"] = de.h_hat;
        j["sigma_hat"] = de.sigma_hat;
        j["n"] = de.n;
        j["sum_sq_full"] = de.sum_sq_full;
        j["sum_sq_half"] = de.sum_sq_half;
        report["diffusion"] = j;
    }

    if (has_est("lambda_known")) {
        require(drift.has_value(), ErrorCode::schema_error,
                "drift: required for lambda_known");
        Hurst h = parse_hurst(s, "h");
        double sigma = s.num("sigma");
        DhSource dh = parse_dh(s, "d_h", /*allow_calibrate=*/false);
        double d_val = dh.table.lookup(h.value());
        DriftEstimate le = estimate_lambda_known(path, *drift, h, sigma, d_val);
        json j;
        j["lambda_hat"] = le.lambda_hat;
        j["regressor"] = json::array({le.regressor[0], le.regressor[1]});
        j["response"] = json::array({le.response[0], le.response[1]});
        j["h"] = h.value();
        j["sigma"] = sigma;
        j["d_value"] = d_val;
        report["lambda_known"] = j;
        inputs["d_h"] = dh_echo(dh, dh.table);
    }

    if (has_est("lambda_plugin")) {
        require(drift.has_value(), ErrorCode::schema_error,
                "drift: required for lambda_plugin");
        DhSource dh = parse_dh(s, "d_h", /*allow_calibrate=*/false);
        DriftEstimate le = estimate_lambda_plugin(path, *drift, dh.table);
        const PluginDiagnostics& pd = *le.plugin;
        json j;
        j["lambda_hat"] = le.lambda_hat;
        j["regressor"] = json::array({le.regressor[0], le.regressor[1]});
        j["response"] = json::array({le.response[0], le.response[1]});
        j["h_hat"] = pd.diffusion.h_hat;
        j["sigma_hat"] = pd.diffusion.sigma_hat;
        j["sum_sq_full"] = pd.diffusion.sum_sq_full;
        j["sum_sq_half"] = pd.diffusion.sum_sq_half;
        j["h_clamped"] = pd.h_clamped;
        j["delta"] = pd.delta;
        j["k"] = pd.params.k;
        j["h_n"] = pd.params.h_n;
        j["n_n"] = pd.params.n_n;
        j["d_value"] = pd.d_value;
        j["w_first"] = pd.w_first;
        j["w_second"] = pd.w_second;
        report["lambda_plugin"] = j;
        inputs["d_h"] = dh_echo(dh, dh.table);
    }

    if (drift.has_value()) inputs["drift"] = drift->coefficients;
    report["inputs"] = inputs;
    s.finish();

    write_text_file(out_file(out_dir, "report.json"), dump_json_g17(report));
    write_text_file(out_file(out_dir, "config.json"), dump_json_g17(root));
}

void run_calibrate_d(const std::string& config_json, const std::string& out_dir) {
    json root = parse_json(config_json);
    Strict s(root, "config");
    Hurst h = parse_hurst(s, "h");
    std::int64_t n_steps = s.integer_or("n_steps", 8192);
    require(n_steps >= 4, ErrorCode::range_error, "n_steps too small");
    std::int64_t budget = s.integer_or("synthesis_budget", kDefaultSynthesisBudget);
    require(budget >= 1, ErrorCode::range_error, "synthesis_budget must be positive");
    std::int64_t m = s.integer_or("inner_resolution", 0);
    if (m == 0) m = default_inner_resolution(n_steps, budget);
    std::int64_t reps = s.integer_or("replications", 200);
    std::uint64_t master = s.uinteger_or("master_seed", 0x9E3779B97F4A7C15ULL);
    std::int64_t stability_n = s.integer_or("stability_n", n_steps / 2);
    require(stability_n >= 4, ErrorCode::range_error, "stability_n too small");
    s.finish();

    DhCalibration main = calibrate_d(h, n_steps, m, reps, master, budget);
    std::int64_t m_alt = default_inner_resolution(stability_n, budget);
    DhCalibration alt = calibrate_d(h, stability_n, m_alt, reps, master, budget);
    double rel_diff = std::abs(main.d - alt.d) / main.d;

    json out;
    out["h"] = h.value();
    out["d"] = main.d;
    out["n_steps"] = n_steps;
    out["inner_resolution"] = m;
    out["replications"] = reps;
    out["master_seed"] = master;
    json stab;
    stab["n_alt"] = stability_n;
    stab["inner_resolution_alt"] = m_alt;
    stab["d_alt"] = alt.d;
    stab["rel_diff"] = rel_diff;
    out["stability"] = stab;
    out["points"] = json::array({json::array({h.value(), main.d})});
    write_text_file(out_file(out_dir, "d_table.json"), dump_json_g17(out));
    write_text_file(out_file(out_dir, "config.json"), dump_json_g17(out));
}

namespace {

ExperimentConfig parse_experiment(const std::string& config_json, json* echo_out) {
    json root = parse_json(config_json);
    Strict s(root, "config");
    ExperimentConfig cfg;

    Strict ms = s.child("model");
    cfg.x0 = ms.num("x0");
    cfg.lambda = ms.num("lambda");
    cfg.sigma = ms.num_or("sigma", 1.0);
    cfg.drift = parse_drift(ms, "drift");
    cfg.fine_steps = ms.integer_or("fine_steps", 8192);
    Strict ns = ms.child("noise");
    ParsedNoise noise = parse_noise(ns, cfg.fine_steps, /*allow_seed=*/false);
    ns.finish();
    ms.finish();
    cfg.rosenblatt_noise = noise.rosenblatt;
    cfg.hurst = noise.h;
    cfg.inner_resolution = noise.rosenblatt ? noise.inner_resolution : 0;
    cfg.synthesis_budget = noise.rosenblatt ? noise.budget : cfg.synthesis_budget;

    cfg.obs_sizes = s.int_array("obs_sizes");
    cfg.replications = s.integer_or("replications", 200);
    cfg.master_seed = s.uinteger_or("master_seed", 1);

    if (s.has("estimators")) {
        cfg.estimators = EstimatorSet{false, false, false};
        for (const auto& e : s.str_array("estimators")) {
            if (e == "diffusion") cfg.estimators.diffusion = true;
            else if (e == "lambda_known") cfg.estimators.lambda_known = true;
            else if (e == "lambda_plugin") cfg.estimators.lambda_plugin = true;
            else fail(ErrorCode::schema_error, "estimators: unknown entry '" + e + "'");
        }
    }
    cfg.d_h = parse_dh(s, "d_h", /*allow_calibrate=*/true);
    s.finish();
    cfg.validate();

    if (echo_out) {
        json echo;
        json model;
        model["x0"] = cfg.x0;
        model["lambda"] = cfg.lambda;
        model["sigma"] = cfg.sigma;
        model["drift"] = cfg.drift.coefficients;
        model["fine_steps"] = cfg.fine_steps;
        model["noise"] = noise_echo(noise, cfg.fine_steps, false);
        echo["model"] = model;
        echo["obs_sizes"] = cfg.obs_sizes;
        echo["replications"] = cfg.replications;
        echo["master_seed"] = cfg.master_seed;
        json est = json::array();
        if (cfg.estimators.diffusion) est.push_back("diffusion");
        if (cfg.estimators.lambda_known) est.push_back("lambda_known");
        if (cfg.estimators.lambda_plugin) est.push_back("lambda_plugin");
        echo["estimators"] = est;
        *echo_out = echo;
    }
    return cfg;
}

std::string summary_csv(const SummaryTable& table) {
    std::string out = "estimator,N,count,failed,rmse,bias,median,q1,q3,skewness,truth\n";
    for (const auto& c : table.cells) {
        out += c.estimator;
        out += ',' + std::to_string(c.n);
        out += ',' + std::to_string(c.count);
        out += ',' + std::to_string(c.failed);
        out += ',' + format_g17(c.rmse);
        out += ',' + format_g17(c.bias);
        out += ',' + format_g17(c.median);
        out += ',' + format_g17(c.q1);
        out += ',' + format_g17(c.q3);
        out += ',' + format_g17(c.skewness);
        out += ',' + format_g17(c.truth);
        out += '\n';
    }
    return out;
}

} // namespace

void run_experiment_cmd(const std::string& config_json, const std::string& out_dir) {
    json echo;
    ExperimentConfig cfg = parse_experiment(config_json, &echo);
    ExperimentRun run = run_experiment(cfg);

    echo["d_h"] = dh_echo(cfg.d_h, run.d_table);
    echo["d_value_used"] = run.d_value_used;
    write_text_file(out_file(out_dir, "config.json"), dump_json_g17(echo));

    // replications.csv: one row per replication x N x estimator cell.
    std::string reps = "replication,seed,N,estimator,estimate,truth,error_tag\n";
    TruthValues truth{cfg.hurst, cfg.sigma, cfg.lambda};
    for (const auto& rep : run.results) {
        for (const auto& cell : rep.cells) {
            reps += std::to_string(rep.index);
            reps += ',' + std::to_string(rep.seed);
            reps += ',' + std::to_string(cell.n);
            reps += ',' + cell.estimator;
            reps += ',';
            if (cell.ok) reps += format_g17(cell.estimate);
            reps += ',' + format_g17(truth.for_estimator(cell.estimator));
            reps += ',' + cell.error_tag;
            reps += '\n';
        }
    }
    write_text_file(out_file(out_dir, "replications.csv"), reps);

    SummaryTable table = summarize(run.results, truth);
    write_text_file(out_file(out_dir, "summary.csv"), summary_csv(table));

    std::string slopes = "estimator,metric,slope,points\n";
    std::set<std::string> names;
    for (const auto& c : table.cells) names.insert(c.estimator);
    for (const auto& name : names) {
        std::int64_t pts = 0;
        for (const auto& c : table.cells)
            if (c.estimator == name && c.rmse > 0.0) ++pts;
        if (pts < 3) continue;
        slopes += name + ",rmse," + format_g17(fit_loglog_slope(table, name)) + ',' +
                  std::to_string(pts) + '\n';
    }
    write_text_file(out_file(out_dir, "slopes.csv"), slopes);

    for (const auto& c : table.cells) {
        if (c.count < 20) continue;
        std::vector<std::pair<double, double>> pairs;
        try {
            pairs = qq_data(run.results, c.estimator, c.n);
        } catch (const Error& err) {
            if (err.code() == ErrorCode::degenerate_sample) continue;
            throw;
        }
        std::string qq = "theoretical,sample\n";
        for (const auto& [th, sm] : pairs)
            qq += format_g17(th) + ',' + format_g17(sm) + '\n';
        write_text_file(
            out_file(out_dir, "qq_" + c.estimator + "_" + std::to_string(c.n) + ".csv"),
            qq);
    }
}

} // namespace rblab
