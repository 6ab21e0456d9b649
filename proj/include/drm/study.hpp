/**
 * @file study.hpp
 * @brief Convergence studies, error decompositions, rate fitting and the
 *        JSON / CSV report formats used by the command line tool.
 */
#pragma once

#include "drm/bounds.hpp"
#include "drm/constructions.hpp"
#include "drm/ritz.hpp"
#include "drm/sampling.hpp"
#include "drm/trainer.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace drm {

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double std_error = 0.0;  // of the slope
};

/// OLS of ln(err) on ln(n). Needs >= 3 points with positive coordinates.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points);

struct StudyConfig {
    std::string problem = "cosine";
    int d = 1;
    std::vector<long long> sample_sizes{256, 1024, 4096};
    double nu = 0.0;
    int repetitions = 3;
    std::vector<std::uint64_t> seeds;   // one per repetition; defaults to seed, seed+1, ...
    std::uint64_t seed = 1;
    Eigen::Index quadrature_size = 100000;
    TrainConfig train;
    double bound_B = 1.0;               // B used by the bound calculators
    double pdim_constant = 1.0;
    double c_bc3 = 1.0;
    // Error decomposition.
    int spline_level = 3;
    int gap_reps = 8;
    Eigen::Index gap_reference_size = 200000;
    int restarts = 2;
    std::string output;                 // path prefix for reports; empty = none

    /// Throws std::invalid_argument on violated invariants.
    void validate() const;
    std::uint64_t repetition_seed(int rep) const;
};

StudyConfig study_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StudyConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
nlohmann::json to_json(const TrainConfig& cfg);
nlohmann::json to_json(const LossReport& r);
nlohmann::json to_json(const H1Error& e);
nlohmann::json to_json(const ConstructionCheck& c);

struct StudyCell {
    long long n = 0;
    int rep = 0;
    std::uint64_t seed = 0;
    Architecture architecture;
    H1Error error;
    EnergyExcess excess;
    LossReport loss;           // final (best-iterate) loss on the training set
    long long best_iteration = 0;
    double initial_loss = 0.0;
    double measured_B = 0.0;   // max of |u| and |grad u|^2 over the quadrature points
};

struct StudyReport {
    nlohmann::json config_echo;
    std::vector<StudyCell> cells;
    std::vector<long long> n_values;
    std::vector<double> median_h1_err;
    std::optional<RateFit> fit;  // of median h1_err^2 vs n
    PredictedRates predicted;
    nlohmann::json bounds;       // per n
    std::string rng_algorithm;
    bool complete = true;
    std::string abort_reason;

    nlohmann::json to_json() const;
    /// Columns: n, rep, h1_err, h1_err_se, l2_err, excess, loss_total.
    std::string to_csv() const;
};

/// Carries the cells finished before a training run aborted.
class StudyAborted : public std::runtime_error {
public:
    StudyAborted(const std::string& what, StudyReport partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}
    const StudyReport& partial() const { return partial_; }

private:
    StudyReport partial_;
};

/// Batch sizes clamped to the sample-set size n.
TrainConfig clamp_batches(TrainConfig cfg, long long n);

/// Trains one (n, seed) cell on the prescribed architecture and measures it.
StudyCell run_study_cell(const StudyConfig& cfg, const Problem& p, long long n, int rep);

StudyReport run_convergence_study(const StudyConfig& cfg, const nlohmann::json& echo = nullptr);

/// Per-seed and aggregated error-decomposition proxies at n = sample_sizes.front().
nlohmann::json run_error_decomposition(const StudyConfig& cfg, const nlohmann::json& echo = nullptr);

/// Bound calculator output for the `bounds` subcommand.
nlohmann::json bounds_report(const BoundInputs& in, double eps, double c_bc3);
BoundInputs bound_inputs_from_json(const nlohmann::json& j);

/// max(|u|, |grad u|^2) over the given points.
double measure_output_bound(const Network& net, const Eigen::MatrixXd& points);

}  // namespace drm
