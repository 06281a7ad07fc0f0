#include <doctest.h>

#include <cmath>
#include <set>

#include "harness.hpp"
#include "rng.hpp"
#include "stats_util.hpp"
#include "threads.hpp"

using namespace rblab;

namespace {

// Independent re-statement of the split-mix sequence as a seeding oracle.
std::uint64_t mix_oracle(std::uint64_t master, std::uint64_t index) {
    unsigned long long z = master + (index + 1ULL) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<ReplicationResult> synthetic_results(
    const std::vector<double>& estimates, const std::string& name, std::int64_t n) {
    std::vector<ReplicationResult> out;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        ReplicationResult rep;
        rep.index = static_cast<std::int64_t>(i);
        rep.seed = i;
        rep.cells.push_back(CellOutcome{n, name, estimates[i], true, ""});
        out.push_back(std::move(rep));
    }
    return out;
}

} // namespace

TEST_CASE("seed_for_replication matches the stated constant sequence") {
    CHECK(seed_for_replication(0, 0) == 0xe220a8397b1dcdafULL);
    CHECK(seed_for_replication(0, 0) == 16294208416658607535ULL);
    CHECK(seed_for_replication(42, 7) == 14769051326987775908ULL);
    for (std::uint64_t master : {0ULL, 1ULL, 0xDEADBEEFULL})
        for (std::uint64_t i = 0; i < 50; ++i)
            CHECK(seed_for_replication(master, i) == mix_oracle(master, i));
    // pure function
    CHECK(seed_for_replication(99, 3) == seed_for_replication(99, 3));
    // distinct across 10000 indices
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(seed_for_replication(0, i));
    CHECK(seen.size() == 10000);
}

TEST_CASE("summarize exact aggregation cases") {
    TruthValues truth{0.75, 1.0, 2.0};

    auto constant = synthetic_results(std::vector<double>(8, 3.5), "lambda_known", 64);
    SummaryTable t1 = summarize(constant, truth);
    REQUIRE(t1.cells.size() == 1);
    CHECK(t1.cells[0].rmse == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(t1.cells[0].bias == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(t1.cells[0].skewness == 0.0);
    CHECK(t1.cells[0].count == 8);

    auto trio = synthetic_results({1.0, 2.0, 3.0}, "lambda_known", 64);
    SummaryTable t2 = summarize(trio, truth);
    CHECK(t2.cells[0].bias == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(t2.cells[0].rmse == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
    CHECK(t2.cells[0].median == 2.0);
    CHECK(t2.cells[0].q1 == doctest::Approx(1.5));
    CHECK(t2.cells[0].q3 == doctest::Approx(2.5));
    CHECK(t2.cells[0].skewness == doctest::Approx(0.0).epsilon(1e-14));

    // rmse^2 == bias^2 + population variance, exactly in exact arithmetic
    auto mixed = synthetic_results({1.0, 2.0, 4.0, 4.5}, "h_hat", 32);
    SummaryTable t3 = summarize(mixed, TruthValues{3.0, 1.0, 1.0});
    const SummaryCell& c = t3.cells[0];
    double mean = (1.0 + 2.0 + 4.0 + 4.5) / 4.0;
    double var = ((1 - mean) * (1 - mean) + (2 - mean) * (2 - mean) +
                  (4 - mean) * (4 - mean) + (4.5 - mean) * (4.5 - mean)) / 4.0;
    CHECK(c.rmse * c.rmse ==
          doctest::Approx(c.bias * c.bias + var).epsilon(1e-14));
}

TEST_CASE("summarize failure accounting and EmptyCell") {
    TruthValues truth{0.75, 1.0, 2.0};
    auto results = synthetic_results({1.0, 2.0, 3.0}, "lambda_known", 64);
    results[1].cells[0].ok = false;
    results[1].cells[0].error_tag = "NumericalBlowup";
    SummaryTable t = summarize(results, truth);
    CHECK(t.cells[0].count == 2);
    CHECK(t.cells[0].failed == 1);
    CHECK(t.cells[0].count + t.cells[0].failed == 3);

    results[0].cells[0].ok = false;
    results[2].cells[0].ok = false;
    CHECK_THROWS_AS(summarize(results, truth), Error);
    try {
        summarize(results, truth);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::empty_cell);
    }
}

TEST_CASE("fit_loglog_slope recovers exact power laws") {
    TruthValues truth{0.75, 1.0, 0.0};
    std::vector<ReplicationResult> results;
    // metric = 3 * N^{-0.4}: build cells via two synthetic estimates per N
    // whose rmse equals the target exactly (estimates = truth +- m).
    for (std::int64_t n : {256, 1024, 4096, 16384}) {
        double m = 3.0 * std::pow(static_cast<double>(n), -0.4);
        ReplicationResult a, b;
        a.index = results.size();
        b.index = results.size() + 1;
        a.cells.push_back(CellOutcome{n, "lambda_known", m, true, ""});
        b.cells.push_back(CellOutcome{n, "lambda_known", -m, true, ""});
        results.push_back(a);
        results.push_back(b);
    }
    SummaryTable t = summarize(results, truth);
    CHECK(fit_loglog_slope(t, "lambda_known") == doctest::Approx(-0.4).epsilon(1e-12));

    // constant metric: slope 0
    std::vector<ReplicationResult> flat;
    for (std::int64_t n : {256, 1024, 4096}) {
        ReplicationResult a, b;
        a.cells.push_back(CellOutcome{n, "lambda_known", 1.0, true, ""});
        b.cells.push_back(CellOutcome{n, "lambda_known", -1.0, true, ""});
        flat.push_back(a);
        flat.push_back(b);
    }
    SummaryTable tf = summarize(flat, truth);
    CHECK(fit_loglog_slope(tf, "lambda_known") == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(fit_loglog_slope(t, "h_hat"), Error);
    try {
        fit_loglog_slope(t, "h_hat");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::insufficient_points);
    }
}

TEST_CASE("qq_data against a synthetic Gaussian sample") {
    GaussianStream gs(12345);
    std::vector<double> sample(1000);
    for (auto& v : sample) v = 0.7 + 2.0 * gs.next();
    auto results = synthetic_results(sample, "lambda_known", 128);
    auto pairs = qq_data(results, "lambda_known", 128);
    REQUIRE(pairs.size() == 1000);
    // Compare over the bulk (|q| <= 2): extreme order statistics of a sample
    // of 1000 swing by ~0.4 and carry no diagnostic weight.
    double worst = 0.0;
    for (auto& [th, sm] : pairs)
        if (std::abs(th) <= 2.0) worst = std::max(worst, std::abs(th - sm));
    CHECK(worst < 0.15);

    // constant sample: DegenerateSample
    auto flat = synthetic_results(std::vector<double>(50, 1.0), "lambda_known", 128);
    CHECK_THROWS_AS(qq_data(flat, "lambda_known", 128), Error);
    try {
        qq_data(flat, "lambda_known", 128);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::degenerate_sample);
    }

    // too few points
    auto few = synthetic_results({1.0, 2.0, 3.0}, "lambda_known", 128);
    CHECK_THROWS_AS(qq_data(few, "lambda_known", 128), Error);
}

TEST_CASE("normal_quantile sanity") {
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK(normal_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
    CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-9));
}

TEST_CASE("run_experiment: exact recovery with zero noise and constant drift") {
    ExperimentConfig cfg;
    cfg.x0 = 0.5;
    cfg.lambda = 5.0;
    cfg.sigma = 0.0;
    cfg.drift = DriftPoly({1.0});
    cfg.rosenblatt_noise = false;  // noise is multiplied by sigma = 0 anyway
    cfg.hurst = 0.75;
    cfg.fine_steps = 512;
    cfg.obs_sizes = {64, 128};
    cfg.replications = 1;
    cfg.master_seed = 9;
    cfg.estimators = EstimatorSet{false, true, false};
    cfg.d_h.kind = DhSource::Kind::override_table;
    cfg.d_h.table = DhTable::single(0.75, 1.0);

    ExperimentRun run = run_experiment(cfg);
    REQUIRE(run.results.size() == 1);
    for (const auto& cell : run.results[0].cells) {
        CHECK(cell.ok);
        CHECK(cell.estimator == "lambda_known");
        CHECK(cell.estimate == 5.0);  // exact on the dyadic grid
    }
}

TEST_CASE("run_experiment determinism across thread counts") {
    ExperimentConfig cfg;
    cfg.x0 = 0.5;
    cfg.lambda = 5.0;
    cfg.sigma = 1.0;
    cfg.drift = DriftPoly({0.0, -1.0});
    cfg.rosenblatt_noise = true;
    cfg.hurst = 0.75;
    cfg.fine_steps = 128;
    cfg.inner_resolution = 512;
    cfg.obs_sizes = {32, 64};
    cfg.replications = 4;
    cfg.master_seed = 5;
    cfg.d_h.kind = DhSource::Kind::override_table;
    cfg.d_h.table = DhTable::single(0.75, 1.0);

    set_thread_limit(1);
    ExperimentRun serial = run_experiment(cfg);
    set_thread_limit(2);
    ExperimentRun parallel = run_experiment(cfg);
    set_thread_limit(0);

    REQUIRE(serial.results.size() == parallel.results.size());
    for (std::size_t r = 0; r < serial.results.size(); ++r) {
        CHECK(serial.results[r].seed == parallel.results[r].seed);
        REQUIRE(serial.results[r].cells.size() == parallel.results[r].cells.size());
        for (std::size_t c = 0; c < serial.results[r].cells.size(); ++c) {
            const auto& a = serial.results[r].cells[c];
            const auto& b = parallel.results[r].cells[c];
            CHECK(a.estimator == b.estimator);
            CHECK(a.n == b.n);
            CHECK(a.ok == b.ok);
            if (a.ok) CHECK(a.estimate == b.estimate);  // bitwise
        }
    }

    // seed disjointness bookkeeping
    std::set<std::uint64_t> seeds;
    for (const auto& rep : serial.results) seeds.insert(rep.seed);
    CHECK(seeds.size() == serial.results.size());
}

TEST_CASE("run_experiment records blowups as tagged failures") {
    ExperimentConfig cfg;
    cfg.x0 = 1.0;
    cfg.lambda = 1e9;  // admissible shape, absurd scale: guaranteed blowup
    cfg.sigma = 0.0;
    cfg.drift = DriftPoly({0.0, 1.0});
    cfg.rosenblatt_noise = false;
    cfg.hurst = 0.75;
    cfg.fine_steps = 64;
    cfg.obs_sizes = {32};
    cfg.replications = 2;
    cfg.master_seed = 3;
    cfg.estimators = EstimatorSet{true, false, false};
    cfg.d_h.kind = DhSource::Kind::override_table;
    cfg.d_h.table = DhTable::single(0.75, 1.0);

    ExperimentRun run = run_experiment(cfg);
    std::int64_t failures = 0;
    for (const auto& rep : run.results)
        for (const auto& cell : rep.cells) {
            CHECK(!cell.ok);
            CHECK(cell.error_tag == "NumericalBlowup");
            ++failures;
        }
    CHECK(failures == 4);  // 2 reps x (h_hat, sigma_hat)
}

TEST_CASE("experiment config validation") {
    ExperimentConfig cfg;
    cfg.d_h.kind = DhSource::Kind::override_table;
    cfg.d_h.table = DhTable::single(0.75, 1.0);
    cfg.fine_steps = 512;
    cfg.obs_sizes = {64, 128};
    CHECK_NOTHROW(cfg.validate());

    auto bad = cfg;
    bad.obs_sizes = {128, 64};
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = cfg;
    bad.obs_sizes = {63};
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = cfg;
    bad.obs_sizes = {100};  // 512 % 100 != 0
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = cfg;
    bad.estimators = EstimatorSet{false, false, false};
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = cfg;
    bad.sigma = -1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}
