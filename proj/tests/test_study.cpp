#include "drm/study.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using nlohmann::json;

namespace {

drm::StudyConfig small_config()
{
    drm::StudyConfig c;
    c.problem = "cosine";
    c.d = 1;
    c.sample_sizes = {64, 128, 256};
    c.repetitions = 2;
    c.quadrature_size = 2000;
    c.train.iterations = 30;
    c.train.checkpoint_every = 10;
    c.train.batch_domain = c.train.batch_boundary = 32;
    c.train.learning_rate = 1e-2;
    c.gap_reps = 3;
    c.gap_reference_size = 5000;
    c.restarts = 1;
    c.spline_level = 2;
    return c;
}

}  // namespace

TEST_CASE("rate fitting")
{
    std::vector<std::pair<double, double>> exact, flat, noisy;
    std::mt19937_64 gen(1);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (double n = 64; n <= 65536; n *= 2) {
        exact.emplace_back(n, 3.0 / std::sqrt(n));
        flat.emplace_back(n, 0.7);
        noisy.emplace_back(n, std::pow(n, -0.25) * (1.0 + 0.01 * noise(gen)));
    }
    const drm::RateFit e = drm::fit_rate(exact);
    CHECK(std::abs(e.slope + 0.5) <= 1e-12);
    CHECK(e.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(e.std_error <= 1e-12);
    CHECK(std::abs(drm::fit_rate(flat).slope) <= 1e-14);
    const drm::RateFit n = drm::fit_rate(noisy);
    CHECK(std::abs(n.slope + 0.25) <= 0.02);
    CHECK(n.std_error > 0.0);

    std::vector<double> xs, ys;
    for (const auto& [a, b] : noisy) {
        xs.push_back(a);
        ys.push_back(b);
    }
    CHECK(n.slope == doctest::Approx(oracle::loglog_slope(xs, ys)).epsilon(1e-12));

    CHECK_THROWS_AS(drm::fit_rate({{1, 1}, {2, 2}}), std::invalid_argument);
    CHECK_THROWS_AS(drm::fit_rate({{1, 1}, {2, 0}, {3, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(drm::fit_rate({{1, 1}, {-2, 1}, {3, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(drm::fit_rate({{2, 1}, {2, 2}, {2, 3}}), std::invalid_argument);
}

TEST_CASE("study configuration")
{
    drm::StudyConfig c = small_config();
    CHECK_NOTHROW(c.validate());
    CHECK(c.repetition_seed(1) == c.seed + 1);
    c.seeds = {7, 9};
    CHECK(c.repetition_seed(1) == 9);

    const json j = drm::to_json(c);
    const drm::StudyConfig back = drm::study_config_from_json(j);
    CHECK(drm::to_json(back) == j);

    c.sample_sizes = {128, 64};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = small_config();
    c.repetitions = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = small_config();
    c.seeds = {1};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    const json partial = json::parse(R"({"problem": {"name": "quadratic", "d": 2}, "sample_sizes": [100],
                                        "train": {"optimizer": "sgd", "adam_betas": [0.8, 0.99]}})");
    const drm::StudyConfig p = drm::study_config_from_json(partial);
    CHECK(p.problem == "quadratic");
    CHECK(p.d == 2);
    CHECK(p.train.optimizer == drm::OptimizerKind::sgd);
    CHECK(p.train.adam_beta1 == 0.8);
    CHECK(p.train.learning_rate == drm::TrainConfig{}.learning_rate);
    CHECK_THROWS(drm::study_config_from_json(json::parse(R"({"train": {"optimizer": "newton"}})")));
    CHECK(drm::clamp_batches(drm::TrainConfig{}, 100).batch_domain == 100);
}

TEST_CASE("convergence study report")
{
    const drm::StudyConfig c = small_config();
    const drm::StudyReport r = drm::run_convergence_study(c);
    CHECK(r.complete);
    CHECK(r.cells.size() == 6);
    CHECK(r.n_values == std::vector<long long>{64, 128, 256});
    REQUIRE(r.fit.has_value());
    CHECK(r.predicted.h1_sq_exponent == doctest::Approx(-1.0 / 3.0));
    CHECK(r.rng_algorithm == "splitmix64-counter");
    for (const drm::StudyCell& cell : r.cells) {
        CHECK(cell.architecture == drm::prescribe_architecture(1, cell.n, 0.0));
        CHECK(cell.error.h1_err > 0.0);
        CHECK(cell.error.h1_err_se > 0.0);
    }
    // median of two repetitions is their mean
    CHECK(r.median_h1_err[0] == doctest::Approx(0.5 * (r.cells[0].error.h1_err + r.cells[1].error.h1_err)));

    const json j = r.to_json();
    for (const char* key : {"config", "cells", "n_values", "median_h1_err", "fitted_rate", "predicted_rates", "bounds",
                            "rng_algorithm"}) {
        CHECK(j.contains(key));
    }
    CHECK(j["cells"][0]["loss"].contains("grad_term"));
    CHECK(j["cells"][0]["loss"].contains("boundary_term"));
    CHECK(j["bounds"].size() == 3);

    const std::string csv = r.to_csv();
    CHECK(csv.rfind("n,rep,h1_err,h1_err_se,l2_err,excess,loss_total\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);

    // byte-identical reruns
    CHECK(drm::run_convergence_study(c).to_json().dump() == j.dump());

    drm::StudyConfig single = c;
    single.sample_sizes = {64};
    const drm::StudyReport s = drm::run_convergence_study(single);
    CHECK_FALSE(s.fit.has_value());
    CHECK(s.to_json()["fitted_rate"].is_null());
}

TEST_CASE("aborted studies keep the finished cells")
{
    drm::StudyConfig c = small_config();
    c.train.optimizer = drm::OptimizerKind::sgd;
    c.train.learning_rate = 1e8;
    c.train.init_scale = 3.0;
    bool thrown = false;
    try {
        drm::run_convergence_study(c);
    } catch (const drm::StudyAborted& e) {
        thrown = true;
        CHECK_FALSE(e.partial().complete);
        CHECK_FALSE(e.partial().abort_reason.empty());
        CHECK(e.partial().to_json().contains("abort_reason"));
    }
    CHECK(thrown);
}

TEST_CASE("error decomposition")
{
    drm::StudyConfig c = small_config();
    c.problem = "quadratic";
    c.d = 1;
    c.sample_sizes = {128};
    c.repetitions = 3;
    c.seeds = {5, 3, 4};
    const json r = drm::run_error_decomposition(c);
    // u* = x^2 lies in the spline span: no approximation error
    CHECK(r["E_app"].get<double>() <= 1e-8);
    CHECK(r["per_seed"].size() == 3);
    for (const auto& row : r["per_seed"]) {
        CHECK(row["E_sta"].get<double>() >= 0.0);
        CHECK(row["E_opt"].get<double>() >= 0.0);
        CHECK(row.contains("bound_satisfied"));
    }
    CHECK(r["per_seed"][0]["seed"] == 3);

    drm::StudyConfig reordered = c;
    reordered.seeds = {4, 5, 3};
    const json q = drm::run_error_decomposition(reordered);
    CHECK(q["mean"] == r["mean"]);
    CHECK(q["per_seed"] == r["per_seed"]);

    drm::StudyConfig cos = c;
    cos.problem = "cosine";
    cos.repetitions = 1;
    cos.seeds = {};
    const json k = drm::run_error_decomposition(cos);
    CHECK(k["E_app"].get<double>() > 0.0);
}

TEST_CASE("bounds report")
{
    const drm::BoundInputs in = drm::bound_inputs_from_json(json::parse(R"({"D": 4, "W": 32, "d": 2, "n": 1e6, "nu": 0.01})"));
    CHECK(in.depth == 4);
    CHECK(in.width == 32);
    const json r = drm::bounds_report(in, 0.5, 1.0);
    CHECK(r["pdim_bound"].get<double>() == doctest::Approx(drm::pdim_bound(4, 32)));
    CHECK(r["statistical_error_bound"].get<double>() == doctest::Approx(9.455).epsilon(1e-3));
    CHECK(r["dudley_rademacher_bound"].is_number());
    CHECK(r["gradient_network"]["depth"] == 7);
    CHECK(r["gradient_network"]["width"] == 2 * 6 * 32);
    CHECK(r["predicted_rates"]["h1_sq_exponent"].get<double>() == doctest::Approx(-1.0 / 4.01));
    const json small = drm::bounds_report(drm::bound_inputs_from_json(json::parse(R"({"D": 4, "W": 32, "d": 2, "n": 100})")),
                                          0.5, 1.0);
    CHECK(small["dudley_rademacher_bound"].is_null());
    CHECK(small["log_covering_bound"].is_null());
    CHECK_THROWS_AS(drm::bound_inputs_from_json(json::parse(R"({"D": 0})")), std::invalid_argument);
}

TEST_CASE("output bound measurement")
{
    const drm::Network sq = drm::build_square_gadget();
    Eigen::MatrixXd pts(1, 3);
    pts << -0.5, 0.25, 1.5;
    // max(|x^2|, (2x)^2) over the points is 9 at x = 1.5
    CHECK(drm::measure_output_bound(sq, pts) == doctest::Approx(9.0));
}
