#include "drm/study.hpp"

#include "drm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace drm {

using nlohmann::json;

RateFit fit_rate(const std::vector<std::pair<double, double>>& points)
{
    if (points.size() < 3) throw std::invalid_argument("fit_rate: need at least three points");
    const auto m = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [n, e] : points) {
        if (!(n > 0.0) || !(e > 0.0)) throw std::invalid_argument("fit_rate: values must be positive");
        mx += std::log(n);
        my += std::log(e);
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [n, e] : points) {
        const double dx = std::log(n) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(e) - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_rate: sample sizes must not all coincide");
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (const auto& [n, e] : points) {
        const double r = std::log(e) - (fit.intercept + fit.slope * std::log(n));
        rss += r * r;
    }
    fit.std_error = std::sqrt(rss / (m - 2.0) / sxx);
    return fit;
}

void StudyConfig::validate() const
{
    if (d < 1) throw std::invalid_argument("study: d must be >= 1");
    if (sample_sizes.empty()) throw std::invalid_argument("study: sample_sizes is empty");
    for (std::size_t i = 0; i < sample_sizes.size(); ++i) {
        if (sample_sizes[i] < 2) throw std::invalid_argument("study: sample sizes must be >= 2");
        if (i > 0 && sample_sizes[i] <= sample_sizes[i - 1]) {
            throw std::invalid_argument("study: sample sizes must be strictly increasing");
        }
    }
    if (repetitions < 1) throw std::invalid_argument("study: repetitions must be >= 1");
    if (!seeds.empty() && seeds.size() != static_cast<std::size_t>(repetitions)) {
        throw std::invalid_argument("study: need one seed per repetition");
    }
    if (!(nu >= 0.0)) throw std::invalid_argument("study: nu must be >= 0");
    if (quadrature_size < 2) throw std::invalid_argument("study: quadrature_size must be >= 2");
    if (spline_level < 1) throw std::invalid_argument("study: spline_level must be >= 1");
    if (gap_reps < 2) throw std::invalid_argument("study: gap_reps must be >= 2");
    if (restarts < 1) throw std::invalid_argument("study: restarts must be >= 1");
    train.validate();
}

std::uint64_t StudyConfig::repetition_seed(int rep) const
{
    return seeds.empty() ? seed + static_cast<std::uint64_t>(rep) : seeds[static_cast<std::size_t>(rep)];
}

TrainConfig train_config_from_json(const json& j, TrainConfig c)
{
    if (j.is_null()) return c;
    if (!j.is_object()) throw std::invalid_argument("train config must be an object");
    if (j.contains("optimizer")) c.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("lr_decay")) c.lr_decay = j.at("lr_decay").get<double>();
    if (j.contains("iterations")) c.iterations = j.at("iterations").get<long long>();
    if (j.contains("batch_domain")) c.batch_domain = j.at("batch_domain").get<Eigen::Index>();
    if (j.contains("batch_boundary")) c.batch_boundary = j.at("batch_boundary").get<Eigen::Index>();
    if (j.contains("resample")) c.resample = resample_from_string(j.at("resample").get<std::string>());
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("adam_betas")) {
        const auto betas = j.at("adam_betas").get<std::vector<double>>();
        if (betas.size() != 2) throw std::invalid_argument("adam_betas needs two values");
        c.adam_beta1 = betas[0];
        c.adam_beta2 = betas[1];
    }
    if (j.contains("adam_eps")) c.adam_eps = j.at("adam_eps").get<double>();
    if (j.contains("init_scale")) c.init_scale = j.at("init_scale").get<double>();
    if (j.contains("checkpoint_every")) c.checkpoint_every = j.at("checkpoint_every").get<long long>();
    return c;
}

json to_json(const TrainConfig& c)
{
    return json{{"optimizer", std::string(to_string(c.optimizer))},
                {"learning_rate", c.learning_rate},
                {"lr_decay", c.lr_decay},
                {"iterations", c.iterations},
                {"batch_domain", c.batch_domain},
                {"batch_boundary", c.batch_boundary},
                {"resample", std::string(to_string(c.resample))},
                {"seed", c.seed},
                {"adam_betas", {c.adam_beta1, c.adam_beta2}},
                {"adam_eps", c.adam_eps},
                {"init_scale", c.init_scale},
                {"checkpoint_every", c.checkpoint_every}};
}

StudyConfig study_config_from_json(const json& j)
{
    StudyConfig c;
    if (j.contains("problem")) {
        const json& p = j.at("problem");
        if (p.is_string()) {
            c.problem = p.get<std::string>();
        } else {
            c.problem = p.at("name").get<std::string>();
            if (p.contains("d")) c.d = p.at("d").get<int>();
        }
    }
    if (j.contains("d")) c.d = j.at("d").get<int>();
    if (j.contains("sample_sizes")) c.sample_sizes = j.at("sample_sizes").get<std::vector<long long>>();
    if (j.contains("nu")) c.nu = j.at("nu").get<double>();
    if (j.contains("repetitions")) c.repetitions = j.at("repetitions").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("quadrature_size")) c.quadrature_size = j.at("quadrature_size").get<Eigen::Index>();
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    if (j.contains("bound_B")) c.bound_B = j.at("bound_B").get<double>();
    if (j.contains("pdim_constant")) c.pdim_constant = j.at("pdim_constant").get<double>();
    if (j.contains("c_bc3")) c.c_bc3 = j.at("c_bc3").get<double>();
    if (j.contains("spline_level")) c.spline_level = j.at("spline_level").get<int>();
    if (j.contains("gap_reps")) c.gap_reps = j.at("gap_reps").get<int>();
    if (j.contains("gap_reference_size")) c.gap_reference_size = j.at("gap_reference_size").get<Eigen::Index>();
    if (j.contains("restarts")) c.restarts = j.at("restarts").get<int>();
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    c.validate();
    return c;
}

json to_json(const StudyConfig& c)
{
    return json{{"problem", {{"name", c.problem}, {"d", c.d}}},
                {"sample_sizes", c.sample_sizes},
                {"nu", c.nu},
                {"repetitions", c.repetitions},
                {"seed", c.seed},
                {"seeds", c.seeds},
                {"quadrature_size", c.quadrature_size},
                {"train", to_json(c.train)},
                {"bound_B", c.bound_B},
                {"pdim_constant", c.pdim_constant},
                {"c_bc3", c.c_bc3},
                {"spline_level", c.spline_level},
                {"gap_reps", c.gap_reps},
                {"gap_reference_size", c.gap_reference_size},
                {"restarts", c.restarts},
                {"output", c.output}};
}

json to_json(const LossReport& r)
{
    return json{{"total", r.total},
                {"grad_term", r.gradient_term},
                {"mass_term", r.mass_term},
                {"forcing_term", r.forcing_term},
                {"boundary_term", r.boundary_term}};
}

json to_json(const H1Error& e)
{
    return json{{"l2_err", e.l2_err},           {"h1_semi_err", e.h1_semi_err}, {"h1_err", e.h1_err},
                {"l2_sq_se", e.l2_sq_se},       {"h1_semi_sq_se", e.h1_semi_sq_se},
                {"h1_sq_se", e.h1_sq_se},       {"h1_err_se", e.h1_err_se}};
}

json to_json(const ConstructionCheck& c)
{
    return json{{"name", c.name},
                {"max_abs_error", c.max_abs_error},
                {"max_rel_error", c.max_rel_error},
                {"probes", c.probes},
                {"depth", c.depth},
                {"width", c.width},
                {"depth_bound", c.depth_bound},
                {"width_bound", c.width_bound},
                {"tolerance", c.tolerance},
                {"passed", c.passed}};
}

namespace {

json architecture_json(const Architecture& a)
{
    return json{{"dims", a.dims}, {"depth", a.depth()}, {"width", a.width()}};
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return (m % 2) ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

json excess_json(const EnergyExcess& e)
{
    return json{{"excess", e.excess},
                {"excess_se", e.excess_se},
                {"h1_sq_of_diff", e.h1_sq_of_diff},
                {"h1_sq_of_diff_se", e.h1_sq_of_diff_se}};
}

json bound_values(int d, long long n, double nu, double B, double pdim_constant, double c_bc3)
{
    const Architecture arch = prescribe_architecture(d, n, nu);
    BoundInputs in;
    in.depth = arch.depth();
    in.width = arch.width();
    in.d = d;
    in.n = static_cast<double>(n);
    in.B = B;
    in.nu = nu;
    in.pdim_constant = pdim_constant;
    const double pdim = pdim_bound(in.depth, in.width, pdim_constant);
    json out{{"n", n},
             {"depth", in.depth},
             {"width", in.width},
             {"pdim_bound", pdim},
             {"statistical_error_bound", statistical_error_bound(in, c_bc3)}};
    out["dudley_rademacher_bound"] = (in.n > pdim) ? json(dudley_rademacher_bound(in.n, B, pdim)) : json(nullptr);
    return out;
}

}  // namespace

double measure_output_bound(const Network& net, const Eigen::MatrixXd& points)
{
    double b = 0.0;
    for (Eigen::Index start = 0; start < points.cols(); start += kEvalChunk) {
        const Eigen::Index len = std::min(kEvalChunk, points.cols() - start);
        const ForwardTape tape = forward_batch(net, points.middleCols(start, len));
        b = std::max(b, tape.values().cwiseAbs().maxCoeff());
        b = std::max(b, tape.gradients().colwise().squaredNorm().maxCoeff());
    }
    return b;
}

TrainConfig clamp_batches(TrainConfig cfg, long long n)
{
    cfg.batch_domain = std::min<Eigen::Index>(cfg.batch_domain, n);
    cfg.batch_boundary = std::min<Eigen::Index>(cfg.batch_boundary, n);
    return cfg;
}

StudyCell run_study_cell(const StudyConfig& cfg, const Problem& p, long long n, int rep)
{
    const CounterRng cell_rng = CounterRng(cfg.repetition_seed(rep)).derive(static_cast<std::uint64_t>(n));
    StudyCell cell;
    cell.n = n;
    cell.rep = rep;
    cell.seed = cfg.repetition_seed(rep);
    cell.architecture = prescribe_architecture(p.d, n, cfg.nu);

    const SampleSet samples = make_sample_set(n, n, p.d, cell_rng.derive(1).key());
    TrainConfig tc = clamp_batches(cfg.train, n);
    tc.seed = cell_rng.derive(2).key();
    const TrainResult trained = train_from_scratch(cell.architecture, p, samples, tc);

    cell.best_iteration = trained.history.best_iteration;
    cell.initial_loss = trained.history.checkpoints.front().loss;
    cell.loss = empirical_loss(trained.network, p, samples);
    cell.error = h1_error(trained.network, p, cfg.quadrature_size, cell_rng.derive(3).key());
    if (p.analytic_energy) cell.excess = energy_excess(trained.network, p, cfg.quadrature_size, cell_rng.derive(4).key());
    cell.measured_B = measure_output_bound(trained.network,
                                           sample_domain(std::min<Eigen::Index>(cfg.quadrature_size, 20000), p.d,
                                                         cell_rng.derive(5).key()));
    return cell;
}

json StudyReport::to_json() const
{
    json cells_json = json::array();
    for (const StudyCell& c : cells) {
        cells_json.push_back({{"n", c.n},
                              {"rep", c.rep},
                              {"seed", c.seed},
                              {"architecture", architecture_json(c.architecture)},
                              {"error", drm::to_json(c.error)},
                              {"energy", excess_json(c.excess)},
                              {"loss", drm::to_json(c.loss)},
                              {"initial_loss", c.initial_loss},
                              {"best_iteration", c.best_iteration},
                              {"measured_B", c.measured_B}});
    }
    json out{{"config", config_echo},
             {"rng_algorithm", rng_algorithm},
             {"complete", complete},
             {"cells", cells_json},
             {"n_values", n_values},
             {"median_h1_err", median_h1_err},
             {"predicted_rates", {{"h1_sq_exponent", predicted.h1_sq_exponent}, {"h1_exponent", predicted.h1_exponent}}},
             {"bounds", bounds}};
    if (fit) {
        out["fitted_rate"] = {{"quantity", "median h1_err^2"},
                              {"slope", fit->slope},
                              {"intercept", fit->intercept},
                              {"slope_se", fit->std_error}};
    } else {
        out["fitted_rate"] = nullptr;
    }
    if (!complete) out["abort_reason"] = abort_reason;
    return out;
}

std::string StudyReport::to_csv() const
{
    std::ostringstream os;
    os.precision(17);
    os << "n,rep,h1_err,h1_err_se,l2_err,excess,loss_total\n";
    for (const StudyCell& c : cells) {
        os << c.n << ',' << c.rep << ',' << c.error.h1_err << ',' << c.error.h1_err_se << ',' << c.error.l2_err << ','
           << c.excess.excess << ',' << c.loss.total << '\n';
    }
    return os.str();
}

StudyReport run_convergence_study(const StudyConfig& cfg, const json& echo)
{
    cfg.validate();
    const Problem p = make_problem(cfg.problem, cfg.d);

    StudyReport report;
    report.config_echo = echo.is_null() ? to_json(cfg) : echo;
    report.rng_algorithm = std::string(kRngAlgorithm);
    report.predicted = predicted_rates(cfg.d, cfg.nu);
    report.bounds = json::array();

    for (long long n : cfg.sample_sizes) {
        std::vector<double> errs;
        for (int rep = 0; rep < cfg.repetitions; ++rep) {
            try {
                report.cells.push_back(run_study_cell(cfg, p, n, rep));
            } catch (const TrainingAborted& e) {
                report.complete = false;
                report.abort_reason = "n=" + std::to_string(n) + " rep=" + std::to_string(rep) + ": " + e.what();
                throw StudyAborted(report.abort_reason, report);
            }
            errs.push_back(report.cells.back().error.h1_err);
        }
        report.n_values.push_back(n);
        report.median_h1_err.push_back(median(errs));
        report.bounds.push_back(bound_values(cfg.d, n, cfg.nu, cfg.bound_B, cfg.pdim_constant, cfg.c_bc3));
    }

    if (report.n_values.size() >= 3) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < report.n_values.size(); ++i) {
            pts.emplace_back(static_cast<double>(report.n_values[i]), report.median_h1_err[i] * report.median_h1_err[i]);
        }
        report.fit = fit_rate(pts);
    }
    return report;
}

json run_error_decomposition(const StudyConfig& cfg, const json& echo)
{
    cfg.validate();
    const Problem p = make_problem(cfg.problem, cfg.d);
    if (!p.analytic_energy) throw std::invalid_argument("decompose: problem has no analytic energy");
    const long long n = cfg.sample_sizes.front();
    const double c1_wedge = std::min(p.c1, 1.0);
    const double w_vee = std::max(p.w_sup, 1.0);

    // Approximation proxy: spline fit realized as a network, independent of the seed.
    const SplineCombination comb = fit_spline_coefficients(p.u_star, cfg.spline_level, p.d);
    const Network spline_net = build_spline_combination(comb);
    const H1Error spline_err = h1_error(spline_net, p, cfg.quadrature_size, CounterRng(cfg.seed).derive(7).key());
    const double e_app = 0.5 * w_vee * spline_err.h1_err * spline_err.h1_err;
    const double e_app_se = 0.5 * w_vee * spline_err.h1_sq_se;

    std::vector<std::uint64_t> seeds;
    for (int r = 0; r < cfg.repetitions; ++r) seeds.push_back(cfg.repetition_seed(r));
    std::sort(seeds.begin(), seeds.end());

    json rows = json::array();
    double sum_sta = 0.0, sum_opt = 0.0, sum_h1sq = 0.0, sum_lhs = 0.0, sum_rhs = 0.0;
    for (std::uint64_t s : seeds) {
        const CounterRng rng = CounterRng(s).derive(static_cast<std::uint64_t>(n));
        const Architecture arch = prescribe_architecture(p.d, n, cfg.nu);
        const SampleSet samples = make_sample_set(n, n, p.d, rng.derive(1).key());
        TrainConfig tc = clamp_batches(cfg.train, n);
        tc.seed = rng.derive(2).key();
        const TrainResult trained = train_from_scratch(arch, p, samples, tc);

        const H1Error err = h1_error(trained.network, p, cfg.quadrature_size, rng.derive(3).key());
        const EnergyExcess exc = energy_excess(trained.network, p, cfg.quadrature_size, rng.derive(4).key());
        const StatisticalGap gap = statistical_gap_estimate(trained.network, p, n, cfg.gap_reps, rng.derive(5).key(),
                                                            cfg.gap_reference_size);
        const double e_sta = 2.0 * gap.mean_abs_gap;
        const double e_opt = optimization_error_estimate(trained.network, p, samples, cfg.restarts, tc.seed, tc);

        const double h1_sq = err.h1_err * err.h1_err;
        const double lhs = 0.5 * c1_wedge * h1_sq;
        const double proxies = e_app + e_sta + e_opt;
        const double slack = 5.0 * std::hypot(0.5 * c1_wedge * err.h1_sq_se, e_app_se, 2.0 * gap.gap_se);
        rows.push_back({{"seed", s},
                        {"architecture", architecture_json(arch)},
                        {"h1_err", err.h1_err},
                        {"h1_err_se", err.h1_err_se},
                        {"h1_sq", h1_sq},
                        {"energy", excess_json(exc)},
                        {"E_app", e_app},
                        {"E_sta", e_sta},
                        {"E_sta_per_term",
                         {{"grad_term", gap.gradient_gap}, {"mass_term", gap.mass_gap},
                          {"forcing_term", gap.forcing_gap}, {"boundary_term", gap.boundary_gap}}},
                        {"E_opt", e_opt},
                        {"lhs", lhs},
                        {"rhs_h1_sq", 2.0 / c1_wedge * proxies},
                        {"mc_slack", slack},
                        {"bound_satisfied", lhs <= proxies + slack}});
        sum_sta += e_sta;
        sum_opt += e_opt;
        sum_h1sq += h1_sq;
        sum_lhs += lhs;
        sum_rhs += 2.0 / c1_wedge * proxies;
    }
    const double m = static_cast<double>(seeds.size());
    return json{{"config", echo.is_null() ? to_json(cfg) : echo},
                {"rng_algorithm", std::string(kRngAlgorithm)},
                {"n", n},
                {"c1", p.c1},
                {"w_sup", p.w_sup},
                {"spline_level", cfg.spline_level},
                {"spline_network", architecture_json(spline_net.architecture())},
                {"E_app", e_app},
                {"E_app_se", e_app_se},
                {"per_seed", rows},
                {"mean", {{"E_app", e_app},
                          {"E_sta", sum_sta / m},
                          {"E_opt", sum_opt / m},
                          {"h1_sq", sum_h1sq / m},
                          {"lhs", sum_lhs / m},
                          {"rhs_h1_sq", sum_rhs / m}}}};
}

BoundInputs bound_inputs_from_json(const json& j)
{
    BoundInputs in;
    if (j.contains("D")) in.depth = j.at("D").get<int>();
    if (j.contains("depth")) in.depth = j.at("depth").get<int>();
    if (j.contains("W")) in.width = j.at("W").get<long long>();
    if (j.contains("width")) in.width = j.at("width").get<long long>();
    if (j.contains("d")) in.d = j.at("d").get<int>();
    if (j.contains("n")) in.n = j.at("n").get<double>();
    if (j.contains("B")) in.B = j.at("B").get<double>();
    if (j.contains("c3")) in.c3 = j.at("c3").get<double>();
    if (j.contains("nu")) in.nu = j.at("nu").get<double>();
    if (j.contains("pdim_constant")) in.pdim_constant = j.at("pdim_constant").get<double>();
    in.validate();
    return in;
}

json bounds_report(const BoundInputs& in, double eps, double c_bc3)
{
    in.validate();
    const double pdim2 = pdim_bound(in.depth, in.width, in.pdim_constant);
    const long long grad_width = static_cast<long long>(in.d) * (in.depth + 2) * in.width;
    const double pdim12 = pdim_bound(in.depth + 3, grad_width, in.pdim_constant);
    auto guarded = [](auto fn) -> json {
        try {
            return fn();
        } catch (const std::domain_error&) {
            return nullptr;
        }
    };
    const PredictedRates rates = predicted_rates(in.d, in.nu);
    const Architecture arch = prescribe_architecture(in.d, static_cast<long long>(in.n), in.nu);
    return json{
        {"inputs", {{"D", in.depth}, {"W", in.width}, {"d", in.d}, {"n", in.n}, {"B", in.B}, {"c3", in.c3},
                    {"nu", in.nu}, {"pdim_constant", in.pdim_constant}, {"eps", eps}, {"c_bc3", c_bc3}}},
        {"pdim_bound", pdim2},
        {"gradient_network", {{"depth", in.depth + 3}, {"width", grad_width}, {"pdim_bound", pdim12}}},
        {"log_covering_bound", guarded([&] { return json(log_covering_bound(eps, in.n, in.B, pdim2)); })},
        {"dudley_rademacher_bound", guarded([&] { return json(dudley_rademacher_bound(in.n, in.B, pdim2)); })},
        {"statistical_error_bound", statistical_error_bound(in, c_bc3)},
        {"predicted_rates", {{"h1_sq_exponent", rates.h1_sq_exponent}, {"h1_exponent", rates.h1_exponent}}},
        {"prescribed_architecture", architecture_json(arch)}};
}

}  // namespace drm
