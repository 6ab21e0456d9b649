#include "drm/sampling.hpp"

#include "drm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace drm {

Eigen::MatrixXd sample_domain(Eigen::Index n, int d, std::uint64_t seed)
{
    if (n < 1 || d < 1) throw std::invalid_argument("sample_domain: need n >= 1 and d >= 1");
    const CounterRng rng = CounterRng(seed).derive(stream::domain);
    Eigen::MatrixXd pts(d, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) pts(j, i) = rng.uniform(static_cast<std::uint64_t>(i * d + j));
    }
    return pts;
}

BoundarySample sample_boundary(Eigen::Index m, int d, std::uint64_t seed)
{
    if (m < 1 || d < 1) throw std::invalid_argument("sample_boundary: need m >= 1 and d >= 1");
    const CounterRng rng = CounterRng(seed).derive(stream::boundary);
    const auto stride = static_cast<std::uint64_t>(d + 1);
    BoundarySample out;
    out.points.resize(d, m);
    out.faces.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        const std::uint64_t base = static_cast<std::uint64_t>(i) * stride;
        const auto face_index = static_cast<int>(rng.below(base, static_cast<std::uint64_t>(2 * d)));
        const Face face{face_index / 2, face_index % 2};
        for (int j = 0; j < d; ++j) {
            out.points(j, i) = (j == face.axis) ? static_cast<double>(face.side)
                                                : rng.uniform(base + 1 + static_cast<std::uint64_t>(j));
        }
        out.faces.push_back(face);
    }
    return out;
}

SampleSet make_sample_set(Eigen::Index n_domain, Eigen::Index m_boundary, int d, std::uint64_t seed)
{
    SampleSet s;
    s.seed = seed;
    s.domain_points = sample_domain(n_domain, d, seed);
    BoundarySample b = sample_boundary(m_boundary, d, seed);
    s.boundary_points = std::move(b.points);
    s.boundary_faces = std::move(b.faces);
    return s;
}

McEstimate mc_from_values(const Eigen::Ref<const Eigen::VectorXd>& values, double volume)
{
    const Eigen::Index n = values.size();
    if (n < 2) throw std::invalid_argument("mc_integrate: need at least two points");
    const double mean = values.mean();
    const double ss = (values.array() - mean).square().sum();
    const double stdev = std::sqrt(ss / static_cast<double>(n - 1));
    return {volume * mean, volume * stdev / std::sqrt(static_cast<double>(n))};
}

McEstimate mc_integrate(const std::function<double(const Eigen::VectorXd&)>& fn,
                        const Eigen::MatrixXd& points, double volume)
{
    Eigen::VectorXd values(points.cols());
    for (Eigen::Index i = 0; i < points.cols(); ++i) values[i] = fn(points.col(i));
    return mc_from_values(values, volume);
}

H1Error h1_error(const Network& net, const Problem& p, Eigen::Index n_quad, std::uint64_t seed)
{
    if (net.input_dim() != p.d) throw std::invalid_argument("h1_error: network/problem dimension mismatch");
    const Eigen::MatrixXd pts = sample_domain(n_quad, p.d, CounterRng(seed).derive(stream::quadrature).key());

    Eigen::VectorXd l2_terms(n_quad);
    Eigen::VectorXd semi_terms(n_quad);
    for (Eigen::Index start = 0; start < n_quad; start += kEvalChunk) {
        const Eigen::Index len = std::min(kEvalChunk, n_quad - start);
        const ForwardTape tape = forward_batch(net, pts.middleCols(start, len));
        const Eigen::RowVectorXd u = tape.values();
        const Eigen::MatrixXd grad = tape.gradients();
        for (Eigen::Index b = 0; b < len; ++b) {
            const Eigen::VectorXd x = pts.col(start + b);
            const double e = u[b] - p.u_star(x);
            l2_terms[start + b] = e * e;
            semi_terms[start + b] = (grad.col(b) - p.grad_u_star(x)).squaredNorm();
        }
    }

    const McEstimate l2 = mc_from_values(l2_terms, domain_volume());
    const McEstimate semi = mc_from_values(semi_terms, domain_volume());
    const McEstimate full = mc_from_values(l2_terms + semi_terms, domain_volume());

    H1Error out;
    out.l2_err = std::sqrt(l2.estimate);
    out.h1_semi_err = std::sqrt(semi.estimate);
    out.h1_err = std::sqrt(full.estimate);
    out.l2_sq_se = l2.std_error;
    out.h1_semi_sq_se = semi.std_error;
    out.h1_sq_se = full.std_error;
    out.h1_err_se = out.h1_err > 0.0 ? full.std_error / (2.0 * out.h1_err) : 0.0;
    return out;
}

}  // namespace drm
