#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    fs::path out = fs::temp_directory_path() / "rblab_cli_out.txt";
    std::string cmd = std::string(RBLAB_CLI_PATH) + " " + args + " > " +
                      out.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    std::ifstream f(out);
    std::ostringstream ss;
    ss << f.rdbuf();
    fs::remove(out);
    return {WEXITSTATUS(rc), ss.str()};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream f(p);
    f << content;
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("simulate-noise writes path.csv and a resolved config echo") {
    TempDir dir("rblab_cli_sim");
    TempDir cfgdir("rblab_cli_simcfg");
    fs::create_directories(cfgdir.path);
    write_file(cfgdir.path / "cfg.json",
               R"({"kind":"fbm","h":0.75,"n_steps":64,"seed":5})");
    RunResult r = run_cli("simulate-noise --config " +
                          (cfgdir.path / "cfg.json").string() + " --out " + dir.str());
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir.path / "path.csv"));
    CHECK(fs::exists(dir.path / "config.json"));
    std::string csv = read_file(dir.path / "path.csv");
    CHECK(csv.rfind("t,value\n", 0) == 0);
    json echo = json::parse(read_file(dir.path / "config.json"));
    CHECK(echo["kind"] == "fbm");
    CHECK(echo["seed"] == 5);
}

TEST_CASE("range violations come back as machine-readable errors") {
    TempDir dir("rblab_cli_range");
    RunResult r = run_cli(
        "simulate-noise --set kind=fbm --set h=1.2 --set n_steps=64 --out " +
        dir.str());
    CHECK(r.exit_code != 0);
    json err = json::parse(r.output);
    CHECK(err["error"]["name"] == "RangeError");
    std::string msg = err["error"]["message"];
    CHECK(msg.find("(0.5, 1)") != std::string::npos);
    CHECK(!fs::exists(dir.path));  // nothing left behind
}

TEST_CASE("unknown config keys are rejected with a field path") {
    TempDir dir("rblab_cli_schema");
    RunResult r = run_cli(
        "simulate-noise --set kind=fbm --set h=0.75 --set n_steps=64 "
        "--set typo_field=3 --out " + dir.str());
    CHECK(r.exit_code != 0);
    json err = json::parse(r.output);
    CHECK(err["error"]["name"] == "SchemaError");
    std::string msg = err["error"]["message"];
    CHECK(msg.find("typo_field") != std::string::npos);
}

TEST_CASE("estimate surfaces OddSampleSize on an odd-length path") {
    TempDir dir("rblab_cli_odd");
    TempDir data("rblab_cli_odddata");
    fs::create_directories(data.path);
    std::ostringstream csv;
    csv << "t,value\n";
    for (int i = 0; i <= 33; ++i) csv << (i / 33.0) << ',' << (0.01 * i * i) << '\n';
    write_file(data.path / "path.csv", csv.str());
    write_file(data.path / "cfg.json",
               json{{"path_csv", (data.path / "path.csv").string()},
                    {"estimators", json::array({"diffusion"})}}
                   .dump());
    RunResult r = run_cli("estimate --config " + (data.path / "cfg.json").string() +
                          " --out " + dir.str());
    CHECK(r.exit_code != 0);
    json err = json::parse(r.output);
    CHECK(err["error"]["name"] == "OddSampleSize");
}

TEST_CASE("estimate produces a full report over the C API path") {
    TempDir dir("rblab_cli_est");
    TempDir data("rblab_cli_estdata");
    fs::create_directories(data.path);

    TempDir noise("rblab_cli_estnoise");
    RunResult sim = run_cli(
        "simulate-noise --set kind=rosenblatt --set h=0.75 --set n_steps=1024 "
        "--set inner_resolution=4096 --seed 3 --out " + noise.str());
    REQUIRE(sim.exit_code == 0);

    json cfg;
    cfg["path_csv"] = (noise.path / "path.csv").string();
    cfg["estimators"] = json::array({"diffusion", "lambda_known", "lambda_plugin"});
    cfg["h"] = 0.75;
    cfg["sigma"] = 1.0;
    cfg["drift"] = json::array({0.0, -1.0});
    cfg["d_h"] = {{"source", "override"},
                  {"values", json::array({json::array({0.75, 1.2})})}};
    write_file(data.path / "cfg.json", cfg.dump());

    RunResult r = run_cli("estimate --config " + (data.path / "cfg.json").string() +
                          " --out " + dir.str());
    REQUIRE(r.exit_code == 0);
    json report = json::parse(read_file(dir.path / "report.json"));
    CHECK(report.contains("diffusion"));
    CHECK(report.contains("lambda_known"));
    CHECK(report.contains("lambda_plugin"));
    CHECK(report["inputs"]["n"] == 1024);
    CHECK(report["lambda_plugin"]["d_value"] == 1.2);
    CHECK(report["lambda_plugin"].contains("w_first"));
    CHECK(report["lambda_known"].contains("regressor"));
}

TEST_CASE("idempotent rerun yields byte-identical artifacts") {
    TempDir a("rblab_cli_rep_a");
    TempDir b("rblab_cli_rep_b");
    std::string args =
        "simulate-noise --set kind=rosenblatt --set h=0.75 --set n_steps=128 "
        "--set inner_resolution=512 --set seed=11";
    REQUIRE(run_cli(args + " --out " + a.str()).exit_code == 0);
    REQUIRE(run_cli(args + " --out " + b.str()).exit_code == 0);
    CHECK(read_file(a.path / "path.csv") == read_file(b.path / "path.csv"));
    CHECK(read_file(a.path / "config.json") == read_file(b.path / "config.json"));
}

TEST_CASE("existing output directory is refused without touching it") {
    TempDir dir("rblab_cli_existing");
    fs::create_directories(dir.path);
    write_file(dir.path / "keep.txt", "precious");
    RunResult r = run_cli(
        "simulate-noise --set kind=fbm --set h=0.75 --set n_steps=64 --out " +
        dir.str());
    CHECK(r.exit_code != 0);
    CHECK(read_file(dir.path / "keep.txt") == "precious");
}

TEST_CASE("solve writes solution, noise and the model sidecar") {
    TempDir dir("rblab_cli_solve");
    RunResult r = run_cli(
        "solve --set model.x0=0.5 --set model.lambda=5 --set model.sigma=1 "
        "--set model.drift=[0,-1] --set model.fine_steps=256 "
        "--set model.noise.kind=fbm --set model.noise.h=0.75 --seed 9 --out " +
        dir.str());
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(dir.path / "solution.csv"));
    CHECK(fs::exists(dir.path / "noise.csv"));
    json model = json::parse(read_file(dir.path / "model.json"));
    CHECK(model["noise"]["seed"] == 9);
    CHECK(model["fine_steps"] == 256);
    // solution and noise share the grid
    std::string sol = read_file(dir.path / "solution.csv");
    std::string noi = read_file(dir.path / "noise.csv");
    CHECK(std::count(sol.begin(), sol.end(), '\n') ==
          std::count(noi.begin(), noi.end(), '\n'));
}

TEST_CASE("experiment campaign produces the full output contract") {
    TempDir dir("rblab_cli_exp");
    json cfg;
    cfg["model"] = {{"x0", 0.5},
                    {"lambda", 5.0},
                    {"sigma", 1.0},
                    {"drift", json::array({0.0, -1.0})},
                    {"fine_steps", 256},
                    {"noise", {{"kind", "rosenblatt"}, {"h", 0.75},
                               {"inner_resolution", 1024}}}};
    cfg["obs_sizes"] = json::array({64, 128, 256});
    cfg["replications"] = 24;
    cfg["master_seed"] = 4;
    cfg["d_h"] = {{"source", "override"},
                  {"values", json::array({json::array({0.75, 1.2})})}};
    TempDir data("rblab_cli_expdata");
    fs::create_directories(data.path);
    write_file(data.path / "cfg.json", cfg.dump());

    RunResult r = run_cli("experiment --config " + (data.path / "cfg.json").string() +
                          " --threads 2 --out " + dir.str());
    REQUIRE(r.exit_code == 0);
    for (const char* name : {"config.json", "replications.csv", "summary.csv",
                             "slopes.csv", "qq_h_hat_64.csv"})
        CHECK(fs::exists(dir.path / name));

    std::string reps = read_file(dir.path / "replications.csv");
    CHECK(reps.rfind("replication,seed,N,estimator,estimate,truth,error_tag\n", 0) == 0);
    // 24 reps x 3 N x 4 cells + header
    CHECK(std::count(reps.begin(), reps.end(), '\n') == 1 + 24 * 3 * 4);

    std::string summary = read_file(dir.path / "summary.csv");
    CHECK(summary.find("lambda_plugin") != std::string::npos);

    // byte-identical rerun at a different thread count
    TempDir dir2("rblab_cli_exp2");
    RunResult r2 = run_cli("experiment --config " +
                           (data.path / "cfg.json").string() +
                           " --threads 1 --out " + dir2.str());
    REQUIRE(r2.exit_code == 0);
    for (const char* name : {"config.json", "replications.csv", "summary.csv",
                             "slopes.csv"})
        CHECK(read_file(dir.path / name) == read_file(dir2.path / name));
}

TEST_CASE("calibrate-d writes the table with its stability diagnostic") {
    TempDir dir("rblab_cli_cal");
    RunResult r = run_cli(
        "calibrate-d --h 0.75 --set n_steps=256 --set inner_resolution=1024 "
        "--set replications=60 --set stability_n=128 --seed 21 --out " +
        dir.str());
    REQUIRE(r.exit_code == 0);
    json table = json::parse(read_file(dir.path / "d_table.json"));
    CHECK(table["h"] == 0.75);
    CHECK(table["d"].get<double>() > 0.0);
    CHECK(table["stability"]["d_alt"].get<double>() > 0.0);
    CHECK(table["stability"].contains("rel_diff"));
    CHECK(table["points"].is_array());
}
