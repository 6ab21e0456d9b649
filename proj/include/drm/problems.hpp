/**
 * @file problems.hpp
 * @brief Manufactured Neumann problems -Lap u + w u = f in (0,1)^d, du/dn = g.
 */
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace drm {

/// A face of the unit cube: x[axis] == side.
struct Face {
    int axis = 0;
    int side = 0;  // 0 or 1

    /// Outward normal component along `axis` (-1 or +1).
    double normal_sign() const { return side == 0 ? -1.0 : 1.0; }
    bool operator==(const Face&) const = default;
};

using PointFn = std::function<double(const Eigen::VectorXd&)>;
using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using FluxFn = std::function<double(const Eigen::VectorXd&, Face)>;

struct Problem {
    std::string name;
    int d = 1;
    PointFn w;
    PointFn f;
    FluxFn g;
    PointFn u_star;
    GradFn grad_u_star;

    double c1 = 1.0;       // essential lower bound of w
    double w_sup = 1.0;    // ||w||_inf
    double c2 = 0.0;       // ||u*||_{H^2}
    double c3 = 0.0;       // common sup bound of |f|, |w|, |g|
    std::optional<double> analytic_energy;       // L(u*)
    std::optional<double> analytic_h1_norm_sq;   // ||u*||^2_{H^1}
};

/// |Omega| and |dOmega| for the unit cube.
inline constexpr double domain_volume() { return 1.0; }
inline double boundary_area(int d) { return 2.0 * d; }

/// u* = sum_i cos(pi x_i), w = 1, g = 0.
Problem make_cosine_problem(int d);

/// u* = sum_i x_i^2, w = 1, g = 2 on faces x_j = 1 and 0 on faces x_j = 0.
Problem make_quadratic_problem(int d);

/// Lookup by config name ("cosine", "quadratic").
Problem make_problem(const std::string& name, int d);

struct ProblemCheck {
    double max_pde_residual = 0.0;
    double max_flux_residual = 0.0;
    double min_w = 0.0;
    int probes = 0;
    bool ok = false;
};

/**
 * Probes -Lap u* + w u* - f (Laplacian by central second differences, step
 * 1e-4) and grad u*.n - g at seeded random points. `ok` is false when a
 * residual exceeds `tolerance` or w drops below c1.
 */
ProblemCheck check_problem(const Problem& p, int n_probe, std::uint64_t seed, double tolerance = 1e-6);

/// As check_problem, but throws std::runtime_error when the check fails.
ProblemCheck verify_problem(const Problem& p, int n_probe, std::uint64_t seed, double tolerance = 1e-6);

}  // namespace drm
