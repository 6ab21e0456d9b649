/**
 * @file constructions.hpp
 * @brief Weight-level constructions of exact ReLU^2 (and ReLU-ReLU^2) networks.
 *
 * Gadgets:
 *   - square:   x^2 = relu2(x) + relu2(-x)
 *   - product:  xy  = (relu2(x+y) + relu2(-x-y) - relu2(x-y) - relu2(y-x)) / 4
 *   - cardinal quadratic B-splines on the dyadic grid of level l:
 *       N_{l,i}(x) = 2^{2l-1} sum_{j=0}^{3} (-1)^j C(3,j) (x - (i+j) 2^{-l})_+^2
 *     and their tensor products via binary product trees;
 *   - linear combinations of B-splines (spline approximants);
 *   - the gradient-norm network computing |grad u|^2 for a ReLU^2 network u.
 */
#pragma once

#include "drm/network.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace drm {

/// ceil(log2(d)) for d >= 1.
int ceil_log2(int d);

Network build_square_gadget();
Network build_product_gadget();

/// sum_i x_i^2 in one hidden layer of 2d ReLU^2 units.
Network build_square_sum(int d);

/// Multi-index of a tensor-product B-spline; the dimension is index.size().
struct SplineIndex {
    int level = 1;
    std::vector<int> index;  // each entry in [-2, 2^level - 1]

    int dim() const { return static_cast<int>(index.size()); }
    bool operator==(const SplineIndex&) const = default;
};

/// Throws std::invalid_argument when level < 1 or an entry is out of range.
void validate(const SplineIndex& idx);

/// Closed-form N_{l,i}(x) and its derivative.
double bspline_value(int level, int i, double x);
double bspline_derivative(int level, int i, double x);

/// Closed-form tensor-product value.
double bspline_value(const SplineIndex& idx, const Eigen::VectorXd& x);

Network build_univariate_bspline(int level, int i);
Network build_multivariate_bspline(const SplineIndex& idx);

struct SplineTerm {
    SplineIndex index;
    double coefficient = 0.0;
};

struct SplineCombination {
    int level = 1;
    int d = 1;
    std::vector<SplineTerm> terms;
};

/// Throws std::invalid_argument on an empty combination or mixed level / dimension.
void validate(const SplineCombination& comb);

/// Closed-form value and gradient of a combination.
double evaluate(const SplineCombination& comb, const Eigen::VectorXd& x);
Eigen::VectorXd evaluate_gradient(const SplineCombination& comb, const Eigen::VectorXd& x);

/// Parallel composition of the B-spline subnets merged by the output layer.
Network build_spline_combination(const SplineCombination& comb);

/**
 * Sums scalar networks of equal depth and input dimension with weights:
 * first layers stacked, hidden layers block-diagonal, output rows scaled.
 */
Network parallel_sum(const std::vector<Network>& nets, const std::vector<double>& weights);

enum class SplineBasis {
    full,      // i_j in [-2, 2^l - 1]: (2^l + 2)^d functions
    interior,  // i_j in [1, 2^l - 4]:  (2^l - 4)^d functions, level >= 3
};

/// Index range of one axis for a basis choice.
std::pair<int, int> spline_index_range(int level, SplineBasis basis);

/**
 * Least-squares fit of spline coefficients on the tensor grid with four
 * midpoint collocation nodes per knot interval and axis. The tensor-product
 * structure is used: the coefficient tensor is the target grid tensor
 * multiplied along every axis by the 1-D pseudo-inverse. Throws
 * std::runtime_error if the 1-D collocation matrix is rank deficient.
 */
SplineCombination fit_spline_coefficients(const std::function<double(const Eigen::VectorXd&)>& target,
                                          int level, int d, SplineBasis basis = SplineBasis::full);

/**
 * Builds a ReLU-ReLU^2 network computing |grad_x u(x)|^2 for a network u
 * with ReLU^2 hidden layers and a linear scalar output. The construction
 * pipelines, per layer k, the values h_k = relu2(z_k), the switches
 * s_k = relu(z_k) and the partial derivatives
 *   D_i h_k = 2 s_k * (A_k D_i h_{k-1}),
 * with the products realized by product gadgets; the final partials are
 * squared by square gadgets and summed.
 * Depth <= D + 3 and width <= d (D + 2) W are asserted (std::logic_error).
 * Throws std::invalid_argument for unsupported activations.
 */
Network build_gradient_norm_network(const Network& net);

/**
 * Depth ceil(log2 d) + 3 and hidden width
 * 4d * ceil(max(1, n^{1/(d+2+nu)} - 4))^d, ReLU^2 hidden layers, linear output.
 */
Architecture prescribe_architecture(int d, long long n, double nu);

/// Width formula of prescribe_architecture alone.
long long prescribed_width(int d, long long n, double nu);

/// One line of the construction verification suite.
struct ConstructionCheck {
    std::string name;
    double max_abs_error = 0.0;
    double max_rel_error = 0.0;
    long long probes = 0;
    int depth = 0;
    int width = 0;
    int depth_bound = 0;
    long long width_bound = 0;
    double tolerance = 0.0;
    bool passed = false;
};

/// Square, product, B-spline, partition-of-unity and gradient-norm checks.
std::vector<ConstructionCheck> run_construction_suite(std::uint64_t seed, int probes);

/// Probe one gradient-norm network against network-core's analytic gradient.
ConstructionCheck verify_gradient_norm(const Network& net, std::uint64_t seed, int probes,
                                       double rel_tolerance = 1e-9);

}  // namespace drm
