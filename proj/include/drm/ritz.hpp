/**
 * @file ritz.hpp
 * @brief Empirical Ritz energy, its four-term split, population estimates,
 *        energy excess and the fixed-network statistical gap.
 *
 * For samples X_1..X_N in the domain and Y_1..Y_M on the boundary,
 *
 *   L^(u) = |Omega|/N sum_i [ |grad u(X_i)|^2 / 2 + w u^2 / 2 - u f ](X_i)
 *         - |dOmega|/M sum_j u(Y_j) g(Y_j),
 *
 * reported as total = gradient + mass - forcing - boundary.
 */
#pragma once

#include "drm/network.hpp"
#include "drm/problems.hpp"
#include "drm/sampling.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace drm {

struct LossReport {
    double total = 0.0;
    double gradient_term = 0.0;  // |Omega|/N sum |grad u|^2 / 2
    double mass_term = 0.0;      // |Omega|/N sum w u^2 / 2
    double forcing_term = 0.0;   // |Omega|/N sum u f
    double boundary_term = 0.0;  // |dOmega|/M sum u g
};

/// Problem data evaluated once on a sample set.
struct ProblemData {
    Eigen::RowVectorXd w;         // N
    Eigen::RowVectorXd f;         // N
    Eigen::RowVectorXd g;         // M
};

ProblemData evaluate_problem_data(const Problem& p, const SampleSet& samples);

/// Throws std::invalid_argument on empty sample sets or dimension mismatch.
LossReport empirical_loss(const Network& net, const Problem& p, const SampleSet& samples);
LossReport empirical_loss(const Network& net, const ProblemData& data, const SampleSet& samples);

struct LossAndGradient {
    LossReport loss;
    Eigen::VectorXd gradient;  // d total / d phi, documented parameter order
};

LossAndGradient loss_and_parameter_gradient(const Network& net, const Problem& p, const SampleSet& samples);
LossAndGradient loss_and_parameter_gradient(const Network& net, const ProblemData& data, const SampleSet& samples);

struct PopulationEstimate {
    LossReport loss;
    double std_error = 0.0;  // of loss.total
    // Standard errors of the individual terms.
    double gradient_se = 0.0, mass_se = 0.0, forcing_se = 0.0, boundary_se = 0.0;
};

/// Empirical loss on a fresh sample of n_quad domain and n_quad boundary points.
PopulationEstimate population_loss_estimate(const Network& net, const Problem& p, Eigen::Index n_quad,
                                            std::uint64_t seed);

struct EnergyExcess {
    double excess = 0.0;          // population estimate - L(u*)
    double excess_se = 0.0;
    double h1_sq_of_diff = 0.0;   // |grad v|^2_{L2} + |v|^2_{L2,w}, v = u - u*
    double h1_sq_of_diff_se = 0.0;
};

/// The two sides use independent child streams of `seed`. Throws
/// std::invalid_argument when the problem has no analytic energy.
EnergyExcess energy_excess(const Network& net, const Problem& p, Eigen::Index n_quad, std::uint64_t seed);

struct StatisticalGap {
    double mean_abs_gap = 0.0;
    double gap_se = 0.0;
    double gradient_gap = 0.0;
    double mass_gap = 0.0;
    double forcing_gap = 0.0;
    double boundary_gap = 0.0;
    LossReport reference;
};

/**
 * Mean over `reps` independent sample sets of size n (N = M = n) of
 * |L^(u) - L_ref(u)| for the fixed net, where L_ref uses `reference_size`
 * samples, plus the same means for each term.
 */
StatisticalGap statistical_gap_estimate(const Network& net, const Problem& p, Eigen::Index n, int reps,
                                        std::uint64_t seed, Eigen::Index reference_size = 1'000'000);

}  // namespace drm
