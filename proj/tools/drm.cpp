/**
 * @file drm.cpp
 * @brief Command line front end for the construction checks and the experiments.
 *
 * Every subcommand prints a JSON report on stdout. Exit codes: 0 on success,
 * 1 when a verification check fails or training aborts, 2 on bad input.
 */
#include "drm/network_io.hpp"
#include "drm/rng.hpp"
#include "drm/study.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

using nlohmann::json;

namespace {

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void emit(const json& report, const std::string& prefix)
{
    const std::string text = report.dump(2) + "\n";
    std::cout << text;
    if (!prefix.empty()) write_text(prefix + ".json", text);
}

std::string history_csv(const drm::TrainHistory& h)
{
    std::ostringstream os;
    os.precision(17);
    os << "iteration,loss,grad_norm\n";
    for (const auto& c : h.checkpoints) os << c.iteration << ',' << c.loss << ',' << c.grad_norm << '\n';
    return os.str();
}

json history_json(const drm::TrainHistory& h)
{
    return json{{"checkpoints", h.checkpoints.size()},
                {"best_iteration", h.best_iteration},
                {"best_loss", h.best_loss},
                {"first_loss", h.checkpoints.empty() ? 0.0 : h.checkpoints.front().loss},
                {"last_loss", h.checkpoints.empty() ? 0.0 : h.checkpoints.back().loss}};
}

int cmd_construct_verify(std::uint64_t seed, int probes)
{
    const auto checks = drm::run_construction_suite(seed, probes);
    json rows = json::array();
    bool ok = true;
    for (const auto& c : checks) {
        rows.push_back(drm::to_json(c));
        ok = ok && c.passed;
    }
    emit(json{{"seed", seed}, {"probes", probes}, {"checks", rows}, {"all_passed", ok}}, "");
    return ok ? 0 : 1;
}

int cmd_verify_gradnet(const std::string& netfile, std::uint64_t seed, int probes, const std::string& save)
{
    const drm::Network net = drm::load_network(netfile);
    const drm::ConstructionCheck c = drm::verify_gradient_norm(net, seed, probes);
    if (!save.empty()) drm::save_network(save, drm::build_gradient_norm_network(net));
    emit(drm::to_json(c), "");
    return c.passed ? 0 : 1;
}

int cmd_train(const std::string& config_path)
{
    const json cfg = read_json_file(config_path);
    std::string name = "cosine";
    int d = 1;
    if (cfg.contains("problem")) {
        const json& p = cfg.at("problem");
        name = p.is_string() ? p.get<std::string>() : p.at("name").get<std::string>();
        if (p.is_object() && p.contains("d")) d = p.at("d").get<int>();
    }
    if (cfg.contains("d")) d = cfg.at("d").get<int>();
    const long long n = cfg.value("n", 4096LL);
    const double nu = cfg.value("nu", 0.0);
    const std::uint64_t sample_seed = cfg.value("sample_seed", std::uint64_t{1});
    const Eigen::Index n_quad = cfg.value("quadrature_size", Eigen::Index{100000});
    const std::string prefix = cfg.value("output", std::string{});

    const drm::Problem p = drm::make_problem(name, d);
    drm::Architecture arch;
    if (cfg.contains("architecture")) {
        const json& a = cfg.at("architecture");
        const int depth = a.at("depth").get<int>();
        const int width = a.at("width").get<int>();
        std::vector<int> dims{d};
        for (int l = 1; l < depth; ++l) dims.push_back(width);
        dims.push_back(1);
        arch = drm::Architecture::uniform(dims, drm::Activation::relu2);
    } else {
        arch = drm::prescribe_architecture(d, n, nu);
    }
    const drm::TrainConfig tc = drm::clamp_batches(drm::train_config_from_json(cfg.value("train", json::object())), n);
    const drm::SampleSet samples = drm::make_sample_set(n, n, d, sample_seed);

    json report{{"config", cfg},
                {"resolved_train", drm::to_json(tc)},
                {"rng_algorithm", std::string(drm::kRngAlgorithm)},
                {"architecture", {{"dims", arch.dims}, {"depth", arch.depth()}, {"width", arch.width()}}}};
    try {
        const drm::TrainResult res = drm::train_from_scratch(arch, p, samples, tc);
        report["history"] = history_json(res.history);
        report["loss"] = drm::to_json(drm::empirical_loss(res.network, p, samples));
        report["error"] = drm::to_json(drm::h1_error(res.network, p, n_quad, sample_seed + 1));
        if (p.analytic_energy) {
            const drm::EnergyExcess e = drm::energy_excess(res.network, p, n_quad, sample_seed + 2);
            report["energy"] = {{"excess", e.excess},
                                {"excess_se", e.excess_se},
                                {"h1_sq_of_diff", e.h1_sq_of_diff},
                                {"h1_sq_of_diff_se", e.h1_sq_of_diff_se}};
        }
        report["measured_B"] = drm::measure_output_bound(res.network, samples.domain_points);
        if (!prefix.empty()) {
            write_text(prefix + "_history.csv", history_csv(res.history));
            drm::save_network(prefix + ".net", res.network);
        }
        emit(report, prefix);
        return 0;
    } catch (const drm::TrainingAborted& e) {
        report["aborted"] = e.what();
        report["history"] = history_json(e.history());
        if (!prefix.empty()) write_text(prefix + "_history.csv", history_csv(e.history()));
        emit(report, prefix);
        return 1;
    }
}

int cmd_study(const std::string& config_path)
{
    const json raw = read_json_file(config_path);
    const drm::StudyConfig cfg = drm::study_config_from_json(raw);
    json echo{{"input", raw}, {"resolved", drm::to_json(cfg)}};
    try {
        const drm::StudyReport report = drm::run_convergence_study(cfg, echo);
        if (!cfg.output.empty()) write_text(cfg.output + ".csv", report.to_csv());
        emit(report.to_json(), cfg.output);
        return 0;
    } catch (const drm::StudyAborted& e) {
        if (!cfg.output.empty()) write_text(cfg.output + ".csv", e.partial().to_csv());
        emit(e.partial().to_json(), cfg.output);
        return 1;
    }
}

int cmd_decompose(const std::string& config_path)
{
    const json raw = read_json_file(config_path);
    const drm::StudyConfig cfg = drm::study_config_from_json(raw);
    json echo{{"input", raw}, {"resolved", drm::to_json(cfg)}};
    emit(drm::run_error_decomposition(cfg, echo), cfg.output);
    return 0;
}

int cmd_bounds(const std::string& inputs_path)
{
    const json raw = read_json_file(inputs_path);
    const drm::BoundInputs in = drm::bound_inputs_from_json(raw);
    emit(drm::bounds_report(in, raw.value("eps", 0.01), raw.value("c_bc3", 1.0)), "");
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Deep Ritz method laboratory"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    int probes = 1000;
    auto* cv = app.add_subcommand("construct-verify", "Check the exact network constructions");
    cv->add_option("--seed", seed, "probe seed");
    cv->add_option("--probes", probes, "probes per check")->check(CLI::PositiveNumber);

    std::string netfile, save;
    auto* vg = app.add_subcommand("verify-gradnet", "Check the gradient-norm network of a saved ReLU^2 net");
    vg->add_option("netfile", netfile)->required()->check(CLI::ExistingFile);
    vg->add_option("--seed", seed, "probe seed");
    vg->add_option("--probes", probes, "probe count")->check(CLI::PositiveNumber);
    vg->add_option("--save", save, "write the gradient-norm network here");

    std::string config;
    auto* tr = app.add_subcommand("train", "Train one network");
    tr->add_option("config", config)->required()->check(CLI::ExistingFile);
    auto* st = app.add_subcommand("study", "Convergence study over sample sizes");
    st->add_option("config", config)->required()->check(CLI::ExistingFile);
    auto* de = app.add_subcommand("decompose", "Error decomposition at one sample size");
    de->add_option("config", config)->required()->check(CLI::ExistingFile);
    auto* bo = app.add_subcommand("bounds", "Evaluate the complexity and error bounds");
    bo->add_option("inputs", config)->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cv->parsed()) return cmd_construct_verify(seed, probes);
        if (vg->parsed()) return cmd_verify_gradnet(netfile, seed, probes, save);
        if (tr->parsed()) return cmd_train(config);
        if (st->parsed()) return cmd_study(config);
        if (de->parsed()) return cmd_decompose(config);
        if (bo->parsed()) return cmd_bounds(config);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: bad JSON: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
