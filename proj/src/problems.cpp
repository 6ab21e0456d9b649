#include "drm/problems.hpp"

#include "drm/rng.hpp"
#include "drm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace drm {

namespace {
constexpr double kPi = std::numbers::pi;
}

Problem make_cosine_problem(int d)
{
    if (d < 1) throw std::invalid_argument("cosine problem: d must be >= 1");
    Problem p;
    p.name = "cosine";
    p.d = d;
    p.u_star = [](const Eigen::VectorXd& x) { return (kPi * x.array()).cos().sum(); };
    p.grad_u_star = [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return -kPi * (kPi * x.array()).sin().matrix();
    };
    p.w = [](const Eigen::VectorXd&) { return 1.0; };
    p.f = [](const Eigen::VectorXd& x) { return (kPi * kPi + 1.0) * (kPi * x.array()).cos().sum(); };
    // d/dn cos(pi x) = -/+ pi sin(pi x) vanishes at x = 0 and x = 1.
    p.g = [](const Eigen::VectorXd&, Face) { return 0.0; };

    const double dd = d;
    p.c1 = 1.0;
    p.w_sup = 1.0;
    p.c2 = std::sqrt(dd / 2.0 * (1.0 + kPi * kPi + kPi * kPi * kPi * kPi));
    p.c3 = std::max(1.0, (kPi * kPi + 1.0) * dd);
    p.analytic_energy = -(kPi * kPi + 1.0) * dd / 4.0;
    p.analytic_h1_norm_sq = dd / 2.0 + dd * kPi * kPi / 2.0;
    return p;
}

Problem make_quadratic_problem(int d)
{
    if (d < 1) throw std::invalid_argument("quadratic problem: d must be >= 1");
    Problem p;
    p.name = "quadratic";
    p.d = d;
    p.u_star = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    p.grad_u_star = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return 2.0 * x; };
    p.w = [](const Eigen::VectorXd&) { return 1.0; };
    p.f = [d](const Eigen::VectorXd& x) { return -2.0 * d + x.squaredNorm(); };
    p.g = [](const Eigen::VectorXd& x, Face face) { return face.normal_sign() * 2.0 * x[face.axis]; };

    const double dd = d;
    const double grad_sq = 4.0 * dd / 3.0;                         // sum_i int 4 x_i^2
    const double mass = dd / 5.0 + dd * (dd - 1.0) / 9.0;          // int (sum_i x_i^2)^2
    p.c1 = 1.0;
    p.w_sup = 1.0;
    p.c2 = std::sqrt(mass + grad_sq + 4.0 * dd);
    p.c3 = std::max(2.0, 2.0 * dd);
    // At the minimizer L(u*) = -a(u*, u*) / 2.
    p.analytic_energy = -0.5 * (grad_sq + mass);
    p.analytic_h1_norm_sq = grad_sq + mass;
    return p;
}

Problem make_problem(const std::string& name, int d)
{
    if (name == "cosine") return make_cosine_problem(d);
    if (name == "quadratic") return make_quadratic_problem(d);
    throw std::invalid_argument("unknown problem '" + name + "'");
}

ProblemCheck check_problem(const Problem& p, int n_probe, std::uint64_t seed, double tolerance)
{
    if (n_probe < 1) throw std::invalid_argument("check_problem: n_probe must be >= 1");
    constexpr double h = 1e-4;
    const CounterRng rng = CounterRng(seed).derive(stream::probe);
    const Eigen::MatrixXd interior = sample_domain(n_probe, p.d, rng.derive(1).key());
    const BoundarySample boundary = sample_boundary(n_probe, p.d, rng.derive(2).key());

    ProblemCheck out;
    out.probes = n_probe;
    out.min_w = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < interior.cols(); ++i) {
        const Eigen::VectorXd x = interior.col(i);
        const double u0 = p.u_star(x);
        double lap = 0.0;
        for (int k = 0; k < p.d; ++k) {
            Eigen::VectorXd xp = x;
            Eigen::VectorXd xm = x;
            xp[k] += h;
            xm[k] -= h;
            lap += (p.u_star(xp) - 2.0 * u0 + p.u_star(xm)) / (h * h);
        }
        const double wx = p.w(x);
        out.min_w = std::min(out.min_w, wx);
        out.max_pde_residual = std::max(out.max_pde_residual, std::abs(-lap + wx * u0 - p.f(x)));
    }
    for (Eigen::Index i = 0; i < boundary.points.cols(); ++i) {
        const Eigen::VectorXd y = boundary.points.col(i);
        const Face face = boundary.faces[static_cast<std::size_t>(i)];
        const double flux = face.normal_sign() * p.grad_u_star(y)[face.axis];
        out.max_flux_residual = std::max(out.max_flux_residual, std::abs(flux - p.g(y, face)));
    }
    out.ok = out.max_pde_residual <= tolerance && out.max_flux_residual <= tolerance && out.min_w >= p.c1;
    return out;
}

ProblemCheck verify_problem(const Problem& p, int n_probe, std::uint64_t seed, double tolerance)
{
    ProblemCheck check = check_problem(p, n_probe, seed, tolerance);
    if (!check.ok) {
        throw std::runtime_error("problem '" + p.name + "' fails verification: pde residual " +
                                 std::to_string(check.max_pde_residual) + ", flux residual " +
                                 std::to_string(check.max_flux_residual) + ", min w " +
                                 std::to_string(check.min_w));
    }
    return check;
}

}  // namespace drm
