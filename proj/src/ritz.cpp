#include "drm/ritz.hpp"

#include "drm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace drm {

namespace {

void check_inputs(const Network& net, const SampleSet& samples)
{
    if (samples.domain_size() < 1 || samples.boundary_size() < 1) {
        throw std::invalid_argument("empirical loss: empty sample set");
    }
    if (net.input_dim() != samples.dim() || samples.boundary_points.rows() != samples.dim()) {
        throw std::invalid_argument("empirical loss: sample dimension does not match network input");
    }
}

void finish(LossReport& r)
{
    r.total = r.gradient_term + r.mass_term - r.forcing_term - r.boundary_term;
}

/// Per-point integrands of the domain and boundary parts.
struct Integrands {
    Eigen::VectorXd gradient, mass, forcing;  // N each
    Eigen::VectorXd boundary;                 // M
};

Integrands integrands(const Network& net, const ProblemData& data, const SampleSet& samples)
{
    const Eigen::Index n = samples.domain_size();
    const Eigen::Index m = samples.boundary_size();
    Integrands out;
    out.gradient.resize(n);
    out.mass.resize(n);
    out.forcing.resize(n);
    out.boundary.resize(m);
    for (Eigen::Index start = 0; start < n; start += kEvalChunk) {
        const Eigen::Index len = std::min(kEvalChunk, n - start);
        const ForwardTape tape = forward_batch(net, samples.domain_points.middleCols(start, len));
        const Eigen::RowVectorXd u = tape.values();
        const Eigen::MatrixXd grad = tape.gradients();
        for (Eigen::Index b = 0; b < len; ++b) {
            const Eigen::Index i = start + b;
            out.gradient[i] = 0.5 * grad.col(b).squaredNorm();
            out.mass[i] = 0.5 * data.w[i] * u[b] * u[b];
            out.forcing[i] = u[b] * data.f[i];
        }
    }
    for (Eigen::Index start = 0; start < m; start += kEvalChunk) {
        const Eigen::Index len = std::min(kEvalChunk, m - start);
        const Eigen::RowVectorXd u = forward_values(net, samples.boundary_points.middleCols(start, len));
        for (Eigen::Index b = 0; b < len; ++b) out.boundary[start + b] = u[b] * data.g[start + b];
    }
    return out;
}

LossReport report_from(const Integrands& in, int d)
{
    LossReport r;
    const double vol = domain_volume();
    const double area = boundary_area(d);
    r.gradient_term = vol * in.gradient.mean();
    r.mass_term = vol * in.mass.mean();
    r.forcing_term = vol * in.forcing.mean();
    r.boundary_term = area * in.boundary.mean();
    finish(r);
    return r;
}

}  // namespace

ProblemData evaluate_problem_data(const Problem& p, const SampleSet& samples)
{
    if (samples.dim() != p.d) throw std::invalid_argument("sample dimension does not match problem");
    ProblemData data;
    data.w.resize(samples.domain_size());
    data.f.resize(samples.domain_size());
    data.g.resize(samples.boundary_size());
    for (Eigen::Index i = 0; i < samples.domain_size(); ++i) {
        const Eigen::VectorXd x = samples.domain_points.col(i);
        data.w[i] = p.w(x);
        data.f[i] = p.f(x);
    }
    for (Eigen::Index j = 0; j < samples.boundary_size(); ++j) {
        data.g[j] = p.g(samples.boundary_points.col(j), samples.boundary_faces[static_cast<std::size_t>(j)]);
    }
    return data;
}

LossReport empirical_loss(const Network& net, const ProblemData& data, const SampleSet& samples)
{
    check_inputs(net, samples);
    return report_from(integrands(net, data, samples), samples.dim());
}

LossReport empirical_loss(const Network& net, const Problem& p, const SampleSet& samples)
{
    check_inputs(net, samples);
    return empirical_loss(net, evaluate_problem_data(p, samples), samples);
}

LossAndGradient loss_and_parameter_gradient(const Network& net, const ProblemData& data, const SampleSet& samples)
{
    check_inputs(net, samples);
    const Eigen::Index n = samples.domain_size();
    const Eigen::Index m = samples.boundary_size();
    const int d = samples.dim();
    const double dom_scale = domain_volume() / static_cast<double>(n);
    const double bdy_scale = boundary_area(d) / static_cast<double>(m);

    LossAndGradient out;
    out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.parameter_count()));
    double grad_sum = 0.0, mass_sum = 0.0, forcing_sum = 0.0, boundary_sum = 0.0;

    for (Eigen::Index start = 0; start < n; start += kEvalChunk) {
        const Eigen::Index len = std::min(kEvalChunk, n - start);
        const ForwardTape tape = forward_batch(net, samples.domain_points.middleCols(start, len));
        const Eigen::RowVectorXd u = tape.values();
        const Eigen::MatrixXd grad = tape.gradients();
        Eigen::RowVectorXd ubar(len);
        for (Eigen::Index b = 0; b < len; ++b) {
            const Eigen::Index i = start + b;
            grad_sum += 0.5 * grad.col(b).squaredNorm();
            mass_sum += 0.5 * data.w[i] * u[b] * u[b];
            forcing_sum += u[b] * data.f[i];
            ubar[b] = dom_scale * (data.w[i] * u[b] - data.f[i]);
        }
        out.gradient += backward(net, tape, ubar, dom_scale * grad);
    }
    for (Eigen::Index start = 0; start < m; start += kEvalChunk) {
        const Eigen::Index len = std::min(kEvalChunk, m - start);
        const ForwardTape tape = forward_batch(net, samples.boundary_points.middleCols(start, len));
        const Eigen::RowVectorXd u = tape.values();
        Eigen::RowVectorXd ubar(len);
        for (Eigen::Index b = 0; b < len; ++b) {
            boundary_sum += u[b] * data.g[start + b];
            ubar[b] = -bdy_scale * data.g[start + b];
        }
        out.gradient += backward(net, tape, ubar, Eigen::MatrixXd::Zero(d, len));
    }

    out.loss.gradient_term = dom_scale * grad_sum;
    out.loss.mass_term = dom_scale * mass_sum;
    out.loss.forcing_term = dom_scale * forcing_sum;
    out.loss.boundary_term = bdy_scale * boundary_sum;
    finish(out.loss);
    return out;
}

LossAndGradient loss_and_parameter_gradient(const Network& net, const Problem& p, const SampleSet& samples)
{
    check_inputs(net, samples);
    return loss_and_parameter_gradient(net, evaluate_problem_data(p, samples), samples);
}

PopulationEstimate population_loss_estimate(const Network& net, const Problem& p, Eigen::Index n_quad,
                                            std::uint64_t seed)
{
    if (n_quad < 2) throw std::invalid_argument("population_loss_estimate: need n_quad >= 2");
    const SampleSet samples = make_sample_set(n_quad, n_quad, p.d, CounterRng(seed).derive(stream::quadrature).key());
    check_inputs(net, samples);
    const Integrands in = integrands(net, evaluate_problem_data(p, samples), samples);

    PopulationEstimate out;
    out.loss = report_from(in, p.d);
    const Eigen::VectorXd domain_part = in.gradient + in.mass - in.forcing;
    const double dom_se = mc_from_values(domain_part, domain_volume()).std_error;
    const double bdy_se = mc_from_values(in.boundary, boundary_area(p.d)).std_error;
    out.std_error = std::hypot(dom_se, bdy_se);
    out.gradient_se = mc_from_values(in.gradient, domain_volume()).std_error;
    out.mass_se = mc_from_values(in.mass, domain_volume()).std_error;
    out.forcing_se = mc_from_values(in.forcing, domain_volume()).std_error;
    out.boundary_se = bdy_se;
    return out;
}

EnergyExcess energy_excess(const Network& net, const Problem& p, Eigen::Index n_quad, std::uint64_t seed)
{
    if (!p.analytic_energy) throw std::invalid_argument("energy_excess: problem has no analytic energy");
    const CounterRng rng(seed);
    const PopulationEstimate pop = population_loss_estimate(net, p, n_quad, rng.derive(1).key());

    const Eigen::MatrixXd pts = sample_domain(n_quad, p.d, rng.derive(2).key());
    Eigen::VectorXd terms(n_quad);
    for (Eigen::Index start = 0; start < n_quad; start += kEvalChunk) {
        const Eigen::Index len = std::min(kEvalChunk, n_quad - start);
        const ForwardTape tape = forward_batch(net, pts.middleCols(start, len));
        const Eigen::RowVectorXd u = tape.values();
        const Eigen::MatrixXd grad = tape.gradients();
        for (Eigen::Index b = 0; b < len; ++b) {
            const Eigen::VectorXd x = pts.col(start + b);
            const double v = u[b] - p.u_star(x);
            terms[start + b] = (grad.col(b) - p.grad_u_star(x)).squaredNorm() + p.w(x) * v * v;
        }
    }
    const McEstimate diff = mc_from_values(terms, domain_volume());

    EnergyExcess out;
    out.excess = pop.loss.total - *p.analytic_energy;
    out.excess_se = pop.std_error;
    out.h1_sq_of_diff = diff.estimate;
    out.h1_sq_of_diff_se = diff.std_error;
    return out;
}

StatisticalGap statistical_gap_estimate(const Network& net, const Problem& p, Eigen::Index n, int reps,
                                        std::uint64_t seed, Eigen::Index reference_size)
{
    if (reps < 2) throw std::invalid_argument("statistical_gap_estimate: need reps >= 2");
    if (n < 1) throw std::invalid_argument("statistical_gap_estimate: need n >= 1");
    const CounterRng rng(seed);

    StatisticalGap out;
    out.reference = population_loss_estimate(net, p, reference_size, rng.derive(0).key()).loss;

    Eigen::VectorXd gaps(reps);
    for (int r = 0; r < reps; ++r) {
        const SampleSet s = make_sample_set(n, n, p.d, rng.derive(static_cast<std::uint64_t>(r) + 1).key());
        const LossReport l = empirical_loss(net, p, s);
        gaps[r] = std::abs(l.total - out.reference.total);
        out.gradient_gap += std::abs(l.gradient_term - out.reference.gradient_term);
        out.mass_gap += std::abs(l.mass_term - out.reference.mass_term);
        out.forcing_gap += std::abs(l.forcing_term - out.reference.forcing_term);
        out.boundary_gap += std::abs(l.boundary_term - out.reference.boundary_term);
    }
    out.mean_abs_gap = gaps.mean();
    out.gap_se = mc_from_values(gaps, 1.0).std_error;
    out.gradient_gap /= reps;
    out.mass_gap /= reps;
    out.forcing_gap /= reps;
    out.boundary_gap /= reps;
    return out;
}

}  // namespace drm
