// rblab command-line front end.  Parses flags and config documents, then
// drives the workflows through the shared library's C API (rblab.h).

#include <rblab.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    int threads = -1;  // -1: flag absent, fall back to RBLAB_THREADS
    std::string seed;  // empty: not given
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool need_out = true) {
    cmd->add_option("--config", opts.config_path, "JSON config document");
    auto* out = cmd->add_option("--out", opts.out_dir, "output directory (must not exist)");
    if (need_out) out->required();
    cmd->add_option("--set", opts.overrides,
                    "dot-path override key=value, e.g. --set model.noise.h=0.8");
    cmd->add_option("--threads", opts.threads,
                    "worker threads (0 = auto; env RBLAB_THREADS as fallback)");
    cmd->add_option("--seed", opts.seed, "seed override (64-bit unsigned)");
}

[[noreturn]] void die(int32_t status, const std::string& message) {
    json err;
    err["error"]["code"] = status;
    err["error"]["name"] = rblab_status_name(status);
    err["error"]["message"] = message;
    std::cout << err.dump(2) << std::endl;
    std::exit(status == 0 ? 1 : static_cast<int>(status));
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream f(path);
    if (!f.good()) die(RBLAB_ERR_IO, "cannot read config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    json j = json::parse(ss.str(), nullptr, false);
    if (j.is_discarded()) die(RBLAB_ERR_SCHEMA, "config file is not valid JSON: " + path);
    return j;
}

// Sets doc[dot.path] = value, creating intermediate objects.  The value is
// parsed as JSON when possible so numbers and booleans keep their types.
void apply_override(json& doc, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        die(RBLAB_ERR_SCHEMA, "--set expects key=value, got '" + assignment + "'");
    std::string path = assignment.substr(0, eq);
    std::string raw = assignment.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        auto dot = path.find('.', start);
        std::string key = path.substr(start, dot - start);
        if (key.empty()) die(RBLAB_ERR_SCHEMA, "--set path has an empty segment: " + path);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        if (!node->contains(key) || !(*node)[key].is_object())
            (*node)[key] = json::object();
        node = &(*node)[key];
        start = dot + 1;
    }
}

std::uint64_t parse_seed(const std::string& text) {
    try {
        std::size_t pos = 0;
        std::uint64_t v = std::stoull(text, &pos);
        if (pos != text.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        die(RBLAB_ERR_SCHEMA, "--seed expects a 64-bit unsigned integer, got '" + text + "'");
    }
}

void configure_threads(const CommonOpts& opts) {
    int threads = opts.threads;
    if (threads < 0) {
        const char* env = std::getenv("RBLAB_THREADS");
        threads = env ? std::atoi(env) : 0;
    }
    rblab_set_threads(threads);
}

// Runs a workflow with temp-dir staging: artifacts appear at out_dir only if
// the whole run succeeded.
void run_with_staging(const std::string& out_dir, const json& config,
                      int32_t (*workflow)(const char*, const char*)) {
    fs::path out(out_dir);
    std::error_code ec;
    if (fs::exists(out)) die(RBLAB_ERR_IO, "output directory already exists: " + out_dir);
    if (out.has_parent_path() && !out.parent_path().empty())
        fs::create_directories(out.parent_path(), ec);

    fs::path tmp = out;
    tmp += ".partial-" + std::to_string(static_cast<long>(::getpid()));
    fs::remove_all(tmp, ec);
    if (!fs::create_directories(tmp, ec) || ec)
        die(RBLAB_ERR_IO, "cannot create staging directory: " + tmp.string());

    std::string text = config.dump(2);
    int32_t rc = workflow(text.c_str(), tmp.string().c_str());
    if (rc != RBLAB_OK) {
        std::string msg = rblab_last_error();
        fs::remove_all(tmp, ec);
        die(rc, msg);
    }
    fs::rename(tmp, out, ec);
    if (ec) {
        fs::remove_all(tmp, ec);
        die(RBLAB_ERR_IO, "cannot move staging directory to " + out_dir);
    }
    std::cout << "ok: " << out_dir << std::endl;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rblab: Rosenblatt-driven SDE simulation and estimation"};
    // long-form help only; calibrate-d owns --h for the Hurst parameter
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);

    CommonOpts sim, solve, est, cal, exp;
    double cal_h = 0.0;

    auto* c_sim = app.add_subcommand("simulate-noise",
                                     "synthesize one Rosenblatt or fBm path");
    add_common(c_sim, sim);
    auto* c_solve = app.add_subcommand("solve", "solve the SDE by Euler-Maruyama");
    add_common(c_solve, solve);
    auto* c_est = app.add_subcommand("estimate", "run estimators on a stored path");
    add_common(c_est, est);
    auto* c_cal = app.add_subcommand("calibrate-d", "calibrate the d(H) constant");
    add_common(c_cal, cal);
    c_cal->add_option("--h", cal_h, "Hurst parameter to calibrate at");
    auto* c_exp = app.add_subcommand("experiment", "run a Monte Carlo campaign");
    add_common(c_exp, exp);

    CLI11_PARSE(app, argc, argv);

    if (c_sim->parsed()) {
        configure_threads(sim);
        json cfg = load_config(sim.config_path);
        for (const auto& o : sim.overrides) apply_override(cfg, o);
        if (!sim.seed.empty()) cfg["seed"] = parse_seed(sim.seed);
        run_with_staging(sim.out_dir, cfg, rblab_run_simulate_noise);
    } else if (c_solve->parsed()) {
        configure_threads(solve);
        json cfg = load_config(solve.config_path);
        for (const auto& o : solve.overrides) apply_override(cfg, o);
        if (!solve.seed.empty()) cfg["model"]["noise"]["seed"] = parse_seed(solve.seed);
        run_with_staging(solve.out_dir, cfg, rblab_run_solve);
    } else if (c_est->parsed()) {
        configure_threads(est);
        if (!est.seed.empty()) die(RBLAB_ERR_SCHEMA, "--seed does not apply to estimate");
        json cfg = load_config(est.config_path);
        for (const auto& o : est.overrides) apply_override(cfg, o);
        run_with_staging(est.out_dir, cfg, rblab_run_estimate);
    } else if (c_cal->parsed()) {
        configure_threads(cal);
        json cfg = load_config(cal.config_path);
        for (const auto& o : cal.overrides) apply_override(cfg, o);
        if (cal_h != 0.0) cfg["h"] = cal_h;
        if (!cfg.contains("h")) die(RBLAB_ERR_SCHEMA, "calibrate-d needs --h or config h");
        if (!cal.seed.empty()) cfg["master_seed"] = parse_seed(cal.seed);
        run_with_staging(cal.out_dir, cfg, rblab_run_calibrate_d);
    } else if (c_exp->parsed()) {
        configure_threads(exp);
        json cfg = load_config(exp.config_path);
        for (const auto& o : exp.overrides) apply_override(cfg, o);
        if (!exp.seed.empty()) cfg["master_seed"] = parse_seed(exp.seed);
        run_with_staging(exp.out_dir, cfg, rblab_run_experiment);
    }
    return 0;
}
