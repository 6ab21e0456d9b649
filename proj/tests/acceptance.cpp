/**
 * @file acceptance.cpp
 * @brief Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
 *
 * Usage: acceptance [criterion numbers...]; with no arguments all ten run.
 * Runtime budgets are part of each verdict.
 */
#include "drm/bounds.hpp"
#include "drm/constructions.hpp"
#include "drm/ritz.hpp"
#include "drm/study.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

namespace {

using drm::Activation;
using drm::Network;

struct Outcome {
    bool passed = false;
    std::string detail;
    double timed_s = -1.0;  // runtime of the budgeted part when it excludes informational work
};

/// |got - want| / max(|want|, 1).
double rel_err(double got, double want)
{
    return std::abs(got - want) / std::max(std::abs(want), 1.0);
}

bool four_digits(double got, double want)
{
    return std::abs(got - want) <= 5e-5 * std::abs(want);
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Eigen::VectorXd vec2(double a, double b)
{
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}

Outcome exact_gadgets()
{
    std::mt19937_64 gen(101);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    const Network sq = drm::build_square_gadget();
    const Network prod = drm::build_product_gadget();
    double worst_sq = 0.0, worst_prod = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const double x = u(gen), y = u(gen);
        worst_sq = std::max(worst_sq, rel_err(drm::forward(sq, Eigen::VectorXd::Constant(1, x)), x * x));
        worst_prod = std::max(worst_prod, rel_err(drm::forward(prod, vec2(x, y)), x * y));
    }
    return {worst_sq <= 1e-12 && worst_prod <= 1e-12,
            fmt("max rel error square %.2e, product %.2e", worst_sq, worst_prod)};
}

Outcome bspline_exactness()
{
    std::mt19937_64 gen(102);
    std::uniform_real_distribution<double> u(-0.25, 1.25);
    double worst_uni = 0.0, worst_multi = 0.0;
    bool arch_ok = true;
    for (int l = 1; l <= 3; ++l) {
        for (int i = -2; i <= (1 << l) - 1; ++i) {
            const Network net = drm::build_univariate_bspline(l, i);
            arch_ok = arch_ok && net.depth() <= 2 && net.width() <= 4;
            for (int k = 0; k < 10000; ++k) {
                const double x = u(gen);
                worst_uni = std::max(worst_uni, rel_err(drm::forward(net, Eigen::VectorXd::Constant(1, x)),
                                                        oracle::bspline_piecewise(l, i, x)));
            }
        }
    }
    for (int d = 2; d <= 3; ++d) {
        for (int l = 1; l <= 3; ++l) {
            std::uniform_int_distribution<int> idx(-2, (1 << l) - 1);
            for (int rep = 0; rep < 5; ++rep) {
                drm::SplineIndex s{l, std::vector<int>(static_cast<std::size_t>(d))};
                for (int& v : s.index) v = idx(gen);
                const Network net = drm::build_multivariate_bspline(s);
                arch_ok = arch_ok && net.depth() <= drm::ceil_log2(d) + 2 && net.width() <= 4 * d;
                for (int k = 0; k < 2000; ++k) {
                    const Eigen::VectorXd x = oracle::random_point(d, -0.25, 1.25, gen);
                    double want = 1.0;
                    for (int j = 0; j < d; ++j) want *= oracle::bspline_piecewise(l, s.index[std::size_t(j)], x[j]);
                    worst_multi = std::max(worst_multi, rel_err(drm::forward(net, x), want));
                }
            }
        }
    }
    return {worst_uni <= 1e-12 && worst_multi <= 1e-10 && arch_ok,
            fmt("univariate %.2e, multivariate %.2e, architecture bounds %s", worst_uni, worst_multi,
                arch_ok ? "hold" : "violated")};
}

Outcome partition_of_unity()
{
    double worst = 0.0;
    for (int l = 1; l <= 3; ++l) {
        std::vector<Network> nets;
        for (int i = -2; i <= (1 << l) - 1; ++i) nets.push_back(drm::build_univariate_bspline(l, i));
        for (int k = 0; k < 1000; ++k) {
            const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, k / 999.0);
            double s = 0.0;
            for (const Network& n : nets) s += drm::forward(n, x);
            worst = std::max(worst, std::abs(s - 1.0));
        }
    }
    return {worst <= 1e-12, fmt("max |sum - 1| = %.2e", worst)};
}

Outcome gradient_norm_network()
{
    std::mt19937_64 gen(104);
    std::uniform_int_distribution<int> dim(1, 3), depth(1, 4), width(1, 16);
    double worst = 0.0;
    bool arch_ok = true;
    for (int t = 0; t < 20; ++t) {
        const int d = dim(gen), D = depth(gen);
        std::vector<int> dims{d};
        for (int l = 0; l < D; ++l) dims.push_back(width(gen));
        dims.push_back(1);
        const Network net = oracle::random_net(dims, Activation::relu2, gen, 0.8);
        const Network g = drm::build_gradient_norm_network(net);
        const long long W = net.width();
        arch_ok = arch_ok && g.depth() <= net.depth() + 3 && g.width() <= static_cast<long long>(d) * (net.depth() + 2) * W;
        for (int k = 0; k < 1000; ++k) {
            const Eigen::VectorXd x = oracle::random_point(d, -1.0, 1.0, gen);
            const double want = drm::forward_with_input_gradient(net, x).input_gradient.squaredNorm();
            const double got = drm::forward(g, x);
            worst = std::max(worst, std::abs(got - want) / std::max(std::abs(want), 1e-20));
        }
    }
    return {worst <= 1e-9 && arch_ok,
            fmt("max rel error %.2e over 20 nets, depth/width bounds %s", worst, arch_ok ? "hold" : "violated")};
}

Outcome derivative_correctness()
{
    std::mt19937_64 gen(105);
    const double h = 1e-6;
    double worst = 0.0;
    int coords = 0;

    // parameter_sensitivities against differences of the value and input gradient
    const Network net = oracle::random_net({2, 6, 5, 1}, Activation::relu2, gen);
    const Eigen::VectorXd phi = net.parameters();
    std::uniform_int_distribution<Eigen::Index> pick(0, phi.size() - 1);
    Eigen::VectorXd x;
    do x = oracle::random_point(2, 0.0, 1.0, gen);
    while (oracle::min_kink_distance(net, x) < 1e-2);
    const drm::ParameterSensitivities ps = drm::parameter_sensitivities(net, x);
    for (int c = 0; c < 50; ++c, ++coords) {
        const Eigen::Index k = pick(gen);
        Eigen::VectorXd pp = phi, pm = phi;
        pp[k] += h;
        pm[k] -= h;
        const drm::EvalResult a = drm::forward_with_input_gradient(net.with_parameters(pp), x);
        const drm::EvalResult b = drm::forward_with_input_gradient(net.with_parameters(pm), x);
        worst = std::max(worst, rel_err(ps.value[k], (a.value - b.value) / (2 * h)));
        for (int j = 0; j < 2; ++j)
            worst = std::max(worst, rel_err(ps.gradient(j, k), (a.input_gradient[j] - b.input_gradient[j]) / (2 * h)));
    }

    // loss gradient on a batch away from activation kinks
    const drm::Problem p = drm::make_cosine_problem(2);
    const Network lnet = oracle::random_net({2, 8, 8, 1}, Activation::relu2, gen);
    drm::SampleSet s = drm::make_sample_set(64, 64, 2, 7);
    for (Eigen::Index i = 0; i < s.domain_points.cols(); ++i)
        while (oracle::min_kink_distance(lnet, s.domain_points.col(i)) < 1e-3)
            s.domain_points.col(i) = oracle::random_point(2, 0.0, 1.0, gen);
    const drm::LossAndGradient lg = drm::loss_and_parameter_gradient(lnet, p, s);
    const Eigen::VectorXd lphi = lnet.parameters();
    std::uniform_int_distribution<Eigen::Index> lpick(0, lphi.size() - 1);
    for (int c = 0; c < 50; ++c, ++coords) {
        const Eigen::Index k = lpick(gen);
        Eigen::VectorXd pp = lphi, pm = lphi;
        pp[k] += 1e-5;
        pm[k] -= 1e-5;
        const double fd = (drm::empirical_loss(lnet.with_parameters(pp), p, s).total -
                           drm::empirical_loss(lnet.with_parameters(pm), p, s).total) / 2e-5;
        worst = std::max(worst, rel_err(lg.gradient[k], fd));
    }
    return {worst <= 1e-5, fmt("max rel error %.2e over %d parameter coordinates", worst, coords)};
}

/// H1 error of a spline combination on a midpoint grid of [0, 1].
double spline_h1_error(const drm::SplineCombination& comb, const drm::Problem& p)
{
    const int m = 20000;
    double s = 0.0;
    for (int k = 0; k < m; ++k) {
        const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, (k + 0.5) / m);
        const double v = drm::evaluate(comb, x) - p.u_star(x);
        const double g = drm::evaluate_gradient(comb, x)[0] - p.grad_u_star(x)[0];
        s += v * v + g * g;
    }
    return std::sqrt(s / m);
}

Outcome spline_rate(std::string& note)
{
    const drm::Problem p = drm::make_cosine_problem(1);
    std::vector<std::pair<double, double>> pts;
    std::string errs;
    double net_gap = 0.0;
    for (int l = 2; l <= 5; ++l) {
        const drm::SplineCombination comb = drm::fit_spline_coefficients(p.u_star, l, 1);
        const double e = spline_h1_error(comb, p);
        // the network realizes the same function
        const Network net = drm::build_spline_combination(comb);
        for (int k = 0; k <= 100; ++k) {
            const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, k / 100.0);
            net_gap = std::max(net_gap, std::abs(drm::forward(net, x) - drm::evaluate(comb, x)));
        }
        pts.emplace_back(std::ldexp(1.0, l), e);
        errs += fmt("%s%.3e", errs.empty() ? "" : ", ", e);
    }
    const drm::RateFit fit = drm::fit_rate(pts);
    note = fmt("one-sided check slope <= -0.7: %s", fit.slope <= -0.7 ? "PASS" : "FAIL");
    return {std::abs(fit.slope + 1.0) <= 0.3 && net_gap <= 1e-10,
            fmt("log2 slope %.3f (target -1.0 +/- 0.3), errors [%s], network vs closed form %.1e", fit.slope,
                errs.c_str(), net_gap)};
}

Outcome energy_sandwich()
{
    std::mt19937_64 gen(107);
    const drm::Problem p = drm::make_cosine_problem(2);
    double worst_z = 0.0;
    for (int t = 0; t < 10; ++t) {
        const Network net = oracle::random_net({2, 8, 8, 1}, Activation::relu2, gen, 0.7);
        const drm::EnergyExcess e = drm::energy_excess(net, p, 200000, 1000 + t);
        const double se = std::hypot(e.excess_se, 0.5 * e.h1_sq_of_diff_se);
        worst_z = std::max(worst_z, std::abs(e.excess - 0.5 * e.h1_sq_of_diff) / se);
    }
    return {worst_z <= 5.0, fmt("max |difference| / combined se = %.2f over 10 nets", worst_z)};
}

Outcome gap_scaling()
{
    std::mt19937_64 gen(108);
    const drm::Problem p = drm::make_cosine_problem(2);
    const Network net = oracle::random_net({2, 8, 8, 1}, Activation::relu2, gen, 0.7);
    std::vector<std::pair<double, double>> pts;
    std::string gaps;
    for (long long n : {256LL, 1024LL, 4096LL, 16384LL}) {
        const drm::StatisticalGap g = drm::statistical_gap_estimate(net, p, n, 100, 77, 1'000'000);
        pts.emplace_back(double(n), g.mean_abs_gap);
        gaps += fmt("%s%.3e", gaps.empty() ? "" : ", ", g.mean_abs_gap);
    }
    const drm::RateFit fit = drm::fit_rate(pts);
    return {std::abs(fit.slope + 0.5) <= 0.15, fmt("slope %.3f (target -0.5 +/- 0.15), gaps [%s]", fit.slope, gaps.c_str())};
}

Outcome training_efficacy(std::string& note)
{
    drm::StudyConfig cfg;
    cfg.problem = "cosine";
    cfg.d = 1;
    cfg.sample_sizes = {4096};
    cfg.repetitions = 3;
    const auto t0 = std::chrono::steady_clock::now();
    const drm::StudyReport r = drm::run_convergence_study(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double baseline = std::sqrt(0.5 + std::numbers::pi * std::numbers::pi / 2.0);
    const double median = r.median_h1_err.front();
    std::string per;
    for (const auto& c : r.cells) per += fmt("%s%.3f", per.empty() ? "" : ", ", c.error.h1_err);

    // measured rate across sample sizes, reported next to the predicted exponent
    drm::StudyConfig rate = cfg;
    rate.sample_sizes = {256, 1024, 4096, 16384};
    rate.repetitions = 1;
    const drm::StudyReport rr = drm::run_convergence_study(rate);
    std::string med;
    for (double m : rr.median_h1_err) med += fmt("%s%.3f", med.empty() ? "" : ", ", m);
    note = fmt("measured h1^2 slope %.3f +/- %.3f, predicted %.3f, h1 errors at n = 256..16384: [%s]", rr.fit->slope,
               rr.fit->std_error, rr.predicted.h1_sq_exponent, med.c_str());
    return {median <= 0.2 * baseline,
            fmt("median h1 error %.4f <= %.4f (0.2 x zero-network %.4f); seeds [%s]", median, 0.2 * baseline, baseline,
                per.c_str()),
            secs};
}

Outcome bound_calculators()
{
    bool ok = true;
    std::ostringstream why;
    const double pd = drm::pdim_bound(4, 32, 1.0);
    const double pd_formula = 16.0 * 1024.0 * (4.0 + std::log(32.0));
    ok = ok && four_digits(pd, pd_formula) && std::round(pd / 100.0) == 1223.0;
    const double du = drm::dudley_rademacher_bound(1000, 1, 10);
    ok = ok && four_digits(du, 28.0 * std::sqrt(1.5) * std::sqrt(0.01) * std::sqrt(std::log(100.0 * std::exp(1.0))));
    ok = ok && std::abs(du - 8.12) <= 0.005;
    drm::BoundInputs in;
    in.d = 2;
    in.depth = 4;
    in.width = 32;
    in.n = 1e6;
    in.nu = 0.01;
    const double st = drm::statistical_error_bound(in, 1.0);
    ok = ok && four_digits(st, std::pow(2.0 * 7.0 * 6.0 * 32.0 * std::sqrt((7.0 + std::log(384.0)) / 1e6), 0.99));
    ok = ok && std::abs(st - 9.46) <= 0.005;
    const long long w = drm::prescribe_architecture(2, 1024, 0.0).width();
    ok = ok && w == 32;
    why << fmt("pdim %.4g, dudley %.4g, statistical %.4g, width %lld", pd, du, st, w);

    // monotonicity grid
    bool mono = true;
    for (int D = 1; D <= 6; ++D)
        for (long long W = 1; W <= 1024; W *= 2)
            mono = mono && drm::pdim_bound(D, 2 * W) > drm::pdim_bound(D, W) && drm::pdim_bound(D + 1, W) > drm::pdim_bound(D, W);
    for (double n = 100; n < 1e10; n *= 3)
        mono = mono && drm::dudley_rademacher_bound(3 * n, 1, 10) < drm::dudley_rademacher_bound(n, 1, 10);
    for (double n = 10; n < 1e10; n *= 3) {
        drm::BoundInputs a = in, b = in;
        a.n = n;
        b.n = 3 * n;
        mono = mono && drm::statistical_error_bound(b) < drm::statistical_error_bound(a);
    }
    for (long long n = 64; n <= (1LL << 20); n *= 4)
        mono = mono && drm::prescribed_width(2, 4 * n, 0.0) >= drm::prescribed_width(2, n, 0.0);
    why << ", monotonicity grid " << (mono ? "holds" : "violated");
    return {ok && mono, why.str()};
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome(std::string&)> run;
};

}  // namespace

int main(int argc, char** argv)
{
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    const auto plain = [](Outcome (*f)()) { return [f](std::string&) { return f(); }; };
    const std::vector<Criterion> criteria{
        {1, "exact gadgets", 1.0, plain(exact_gadgets)},
        {2, "B-spline exactness and architecture", 10.0, plain(bspline_exactness)},
        {3, "partition of unity", 1.0, plain(partition_of_unity)},
        {4, "gradient-norm network", 30.0, plain(gradient_norm_network)},
        {5, "derivative correctness", 10.0, plain(derivative_correctness)},
        {6, "spline approximation rate", 60.0, spline_rate},
        {7, "energy sandwich identity", 120.0, plain(energy_sandwich)},
        {8, "statistical gap scaling", 120.0, plain(gap_scaling)},
        {9, "training efficacy", 600.0, training_efficacy},
        {10, "bound calculators", 1.0, plain(bound_calculators)},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        std::string note;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = c.run(note);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (o.timed_s >= 0.0) secs = o.timed_s;
        const bool in_budget = secs < c.budget_s;
        const bool pass = o.passed && in_budget;
        failures += !pass;
        std::printf("criterion %2d %-36s %s  %s; %.2f s (budget %.0f s%s)\n", c.id, c.name, pass ? "PASS" : "FAIL",
                    o.detail.c_str(), secs, c.budget_s, in_budget ? "" : ", exceeded");
        if (!note.empty()) std::printf("             info: %s\n", note.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
