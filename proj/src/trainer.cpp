#include "drm/trainer.hpp"

#include "drm/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace drm {

std::string_view to_string(OptimizerKind k)
{
    return k == OptimizerKind::sgd ? "sgd" : "adam";
}

std::string_view to_string(ResampleMode m)
{
    return m == ResampleMode::fixed_set ? "fixed_set" : "fresh_each_step";
}

OptimizerKind optimizer_from_string(std::string_view s)
{
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw std::invalid_argument("unknown optimizer '" + std::string(s) + "'");
}

ResampleMode resample_from_string(std::string_view s)
{
    if (s == "fixed_set") return ResampleMode::fixed_set;
    if (s == "fresh_each_step") return ResampleMode::fresh_each_step;
    throw std::invalid_argument("unknown resample mode '" + std::string(s) + "'");
}

void TrainConfig::validate() const
{
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("learning_rate must be finite and >= 0");
    }
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw std::invalid_argument("lr_decay must lie in (0, 1]");
    if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
    if (batch_domain < 1 || batch_boundary < 1) throw std::invalid_argument("batch sizes must be >= 1");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw std::invalid_argument("adam betas must lie in [0, 1)");
    }
    if (!(adam_eps > 0.0)) throw std::invalid_argument("adam_eps must be > 0");
    if (!(init_scale >= 0.0)) throw std::invalid_argument("init_scale must be >= 0");
    if (checkpoint_every < 1) throw std::invalid_argument("checkpoint_every must be >= 1");
}

Network init_network(const Architecture& arch, double init_scale, std::uint64_t seed)
{
    const Network zero = Network::zeros(arch);
    const CounterRng rng = CounterRng(seed).derive(stream::init);
    Eigen::VectorXd phi = zero.parameters();
    Eigen::Index k = 0;
    std::uint64_t counter = 0;
    for (int l = 1; l <= arch.depth(); ++l) {
        const int fan_in = arch.dims[l - 1];
        const int fan_out = arch.dims[l];
        const double s = init_scale * std::sqrt(6.0 / (fan_in + fan_out));
        for (long long w = 0; w < static_cast<long long>(fan_in) * fan_out; ++w) {
            phi[k++] = s * (2.0 * rng.uniform(counter++) - 1.0);
        }
        k += fan_out;  // biases stay zero
    }
    return zero.with_parameters(phi);
}

Optimizer::Optimizer(const TrainConfig& cfg, Eigen::Index size)
    : kind_(cfg.optimizer), beta1_(cfg.adam_beta1), beta2_(cfg.adam_beta2), eps_(cfg.adam_eps),
      m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size))
{
}

void Optimizer::step(Eigen::VectorXd& phi, const Eigen::VectorXd& grad, double learning_rate)
{
    if (kind_ == OptimizerKind::sgd) {
        phi -= learning_rate * grad;
        return;
    }
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    phi.array() -= learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

namespace {

/// First k entries of a seeded partial Fisher-Yates shuffle of 0..n-1.
std::vector<Eigen::Index> subsample(Eigen::Index n, Eigen::Index k, const CounterRng& rng)
{
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i),
                                                                static_cast<std::uint64_t>(n - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(k));
    return idx;
}

struct Batch {
    SampleSet samples;
    ProblemData data;
};

Batch fixed_batch(const SampleSet& full, const ProblemData& data, Eigen::Index bd, Eigen::Index bb,
                  const CounterRng& rng)
{
    Batch b;
    const std::vector<Eigen::Index> di = subsample(full.domain_size(), bd, rng.derive(1));
    const std::vector<Eigen::Index> bi = subsample(full.boundary_size(), bb, rng.derive(2));
    b.samples.seed = full.seed;
    b.samples.domain_points.resize(full.dim(), bd);
    b.data.w.resize(bd);
    b.data.f.resize(bd);
    for (Eigen::Index k = 0; k < bd; ++k) {
        const Eigen::Index i = di[static_cast<std::size_t>(k)];
        b.samples.domain_points.col(k) = full.domain_points.col(i);
        b.data.w[k] = data.w[i];
        b.data.f[k] = data.f[i];
    }
    b.samples.boundary_points.resize(full.dim(), bb);
    b.data.g.resize(bb);
    for (Eigen::Index k = 0; k < bb; ++k) {
        const Eigen::Index j = bi[static_cast<std::size_t>(k)];
        b.samples.boundary_points.col(k) = full.boundary_points.col(j);
        b.samples.boundary_faces.push_back(full.boundary_faces[static_cast<std::size_t>(j)]);
        b.data.g[k] = data.g[j];
    }
    return b;
}

bool finite(const LossAndGradient& lg)
{
    return std::isfinite(lg.loss.total) && lg.gradient.allFinite();
}

}  // namespace

TrainResult train(const Network& net, const Problem& p, const SampleSet& samples, const TrainConfig& cfg)
{
    cfg.validate();
    if (net.input_dim() != p.d || samples.dim() != p.d) {
        throw std::invalid_argument("train: network, problem and samples must share the dimension");
    }
    if (cfg.resample == ResampleMode::fixed_set &&
        (cfg.batch_domain > samples.domain_size() || cfg.batch_boundary > samples.boundary_size())) {
        throw std::invalid_argument("train: batch larger than the fixed sample set");
    }
    const auto t0 = std::chrono::steady_clock::now();

    const ProblemData full_data = evaluate_problem_data(p, samples);
    const bool full_batch = cfg.resample == ResampleMode::fixed_set &&
                            cfg.batch_domain == samples.domain_size() &&
                            cfg.batch_boundary == samples.boundary_size();
    const long long epoch = std::max<long long>(
        1, (samples.domain_size() + cfg.batch_domain - 1) / cfg.batch_domain);
    const CounterRng batch_rng = CounterRng(cfg.seed).derive(stream::batch);

    Network current = net;
    Eigen::VectorXd phi = net.parameters();
    Optimizer opt(cfg, phi.size());

    TrainResult result{net, {}};
    auto checkpoint = [&](long long iteration, const Network& candidate) {
        const LossAndGradient lg = loss_and_parameter_gradient(candidate, full_data, samples);
        Checkpoint c{iteration, lg.loss.total, lg.gradient.norm()};
        result.history.checkpoints.push_back(c);
        if (result.history.checkpoints.size() == 1 || (std::isfinite(c.loss) && c.loss < result.history.best_loss)) {
            result.history.best_loss = c.loss;
            result.history.best_iteration = iteration;
            result.network = candidate;
        }
    };
    checkpoint(0, current);

    for (long long it = 1; it <= cfg.iterations; ++it) {
        const CounterRng step_rng = batch_rng.derive(static_cast<std::uint64_t>(it));
        LossAndGradient lg;
        if (full_batch) {
            lg = loss_and_parameter_gradient(current, full_data, samples);
        } else if (cfg.resample == ResampleMode::fixed_set) {
            const Batch b = fixed_batch(samples, full_data, cfg.batch_domain, cfg.batch_boundary, step_rng);
            lg = loss_and_parameter_gradient(current, b.data, b.samples);
        } else {
            SampleSet fresh;
            fresh.seed = step_rng.key();
            fresh.domain_points = sample_domain(cfg.batch_domain, p.d, step_rng.derive(1).key());
            BoundarySample bs = sample_boundary(cfg.batch_boundary, p.d, step_rng.derive(2).key());
            fresh.boundary_points = std::move(bs.points);
            fresh.boundary_faces = std::move(bs.faces);
            lg = loss_and_parameter_gradient(current, p, fresh);
        }
        if (!finite(lg)) {
            std::ostringstream msg;
            msg << "training diverged at iteration " << it << ": loss " << lg.loss.total << ", |phi| "
                << phi.norm() << ", max |phi| " << phi.cwiseAbs().maxCoeff();
            result.history.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            throw TrainingAborted(msg.str(), result.history);
        }

        const double lr = cfg.learning_rate * std::pow(cfg.lr_decay, static_cast<double>((it - 1) / epoch));
        opt.step(phi, lg.gradient, lr);
        if (!phi.allFinite()) {
            throw TrainingAborted("non-finite parameters after iteration " + std::to_string(it), result.history);
        }
        current = current.with_parameters(phi);

        if (it % cfg.checkpoint_every == 0 || it == cfg.iterations) checkpoint(it, current);
    }

    result.history.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

TrainResult train_from_scratch(const Architecture& arch, const Problem& p, const SampleSet& samples,
                               const TrainConfig& cfg)
{
    return train(init_network(arch, cfg.init_scale, cfg.seed), p, samples, cfg);
}

double optimization_error_estimate(const Network& trained, const Problem& p, const SampleSet& samples,
                                   int restarts, std::uint64_t seed, const TrainConfig& cfg)
{
    if (restarts < 1) throw std::invalid_argument("optimization_error_estimate: restarts must be >= 1");
    const ProblemData data = evaluate_problem_data(p, samples);
    const double own = empirical_loss(trained, data, samples).total;
    double best = own;
    const Architecture arch = trained.architecture();
    for (int r = 0; r < restarts; ++r) {
        TrainConfig c = cfg;
        c.seed = seed + static_cast<std::uint64_t>(r);
        const TrainResult res = train_from_scratch(arch, p, samples, c);
        best = std::min(best, empirical_loss(res.network, data, samples).total);
    }
    return std::max(0.0, own - best);
}

}  // namespace drm
