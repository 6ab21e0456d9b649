/**
 * @file sampling.hpp
 * @brief Seeded uniform sampling of (0,1)^d and its boundary, Monte-Carlo
 *        integration, and MC error norms of a network against a problem.
 *
 * Points are stored column-wise (d x n) so they can be fed to batched network
 * evaluation directly.
 */
#pragma once

#include "drm/network.hpp"
#include "drm/problems.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace drm {

struct BoundarySample {
    Eigen::MatrixXd points;   // d x m
    std::vector<Face> faces;  // m tags
};

struct SampleSet {
    Eigen::MatrixXd domain_points;    // d x N, strictly interior
    Eigen::MatrixXd boundary_points;  // d x M, one coordinate in {0,1}
    std::vector<Face> boundary_faces;
    std::uint64_t seed = 0;

    int dim() const { return static_cast<int>(domain_points.rows()); }
    Eigen::Index domain_size() const { return domain_points.cols(); }
    Eigen::Index boundary_size() const { return boundary_points.cols(); }
};

/// n i.i.d. uniform points in (0,1)^d. Coordinate j of point i is draw i*d+j.
Eigen::MatrixXd sample_domain(Eigen::Index n, int d, std::uint64_t seed);

/// m i.i.d. uniform points on the boundary: a face uniformly among the 2d,
/// then uniform on the face.
BoundarySample sample_boundary(Eigen::Index m, int d, std::uint64_t seed);

/// N domain and M boundary points from independent child streams of `seed`.
SampleSet make_sample_set(Eigen::Index n_domain, Eigen::Index m_boundary, int d, std::uint64_t seed);

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// volume * sample mean, with standard error volume * stdev / sqrt(n).
McEstimate mc_integrate(const std::function<double(const Eigen::VectorXd&)>& fn,
                        const Eigen::MatrixXd& points, double volume);

/// Same statistics for precomputed integrand values.
McEstimate mc_from_values(const Eigen::Ref<const Eigen::VectorXd>& values, double volume);

struct H1Error {
    double l2_err = 0.0;        // ||u - u*||_{L^2}
    double h1_semi_err = 0.0;   // |u - u*|_{H^1}
    double h1_err = 0.0;        // sqrt(l2^2 + semi^2)
    double l2_sq_se = 0.0;      // standard errors of the squared quantities
    double h1_semi_sq_se = 0.0;
    double h1_sq_se = 0.0;
    double h1_err_se = 0.0;     // delta-method standard error of h1_err
};

/// MC estimates over n_quad fresh uniform points of (0,1)^d.
H1Error h1_error(const Network& net, const Problem& p, Eigen::Index n_quad, std::uint64_t seed);

/// Batch size used when streaming large point sets through a network.
inline constexpr Eigen::Index kEvalChunk = 4096;

}  // namespace drm
