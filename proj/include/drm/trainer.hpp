/**
 * @file trainer.hpp
 * @brief First-order minimization of the empirical Ritz loss (SGD / Adam).
 */
#pragma once

#include "drm/network.hpp"
#include "drm/problems.hpp"
#include "drm/ritz.hpp"
#include "drm/sampling.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace drm {

enum class OptimizerKind { sgd, adam };
enum class ResampleMode { fixed_set, fresh_each_step };

std::string_view to_string(OptimizerKind k);
std::string_view to_string(ResampleMode m);
OptimizerKind optimizer_from_string(std::string_view s);
ResampleMode resample_from_string(std::string_view s);

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double lr_decay = 1.0;           // multiplicative, applied once per epoch
    long long iterations = 5000;
    Eigen::Index batch_domain = 512;
    Eigen::Index batch_boundary = 512;
    ResampleMode resample = ResampleMode::fixed_set;
    std::uint64_t seed = 1;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double init_scale = 1.0;
    long long checkpoint_every = 100;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

struct Checkpoint {
    long long iteration = 0;
    double loss = 0.0;       // on the full fixed sample set
    double grad_norm = 0.0;  // of the full-set gradient
};

struct TrainHistory {
    std::vector<Checkpoint> checkpoints;
    long long best_iteration = 0;
    double best_loss = 0.0;
    double wall_seconds = 0.0;
};

/// Raised on a non-finite loss or gradient; carries the history so far.
class TrainingAborted : public std::runtime_error {
public:
    TrainingAborted(const std::string& what, TrainHistory history)
        : std::runtime_error(what), history_(std::move(history)) {}
    const TrainHistory& history() const { return history_; }

private:
    TrainHistory history_;
};

/// Weights uniform on [-s, s], s = init_scale sqrt(6 / (N_{l-1} + N_l)); zero biases.
Network init_network(const Architecture& arch, double init_scale, std::uint64_t seed);

struct TrainResult {
    Network network;  // best iterate by full-set loss
    TrainHistory history;
};

/**
 * Runs cfg.iterations optimizer steps on mini-batches (fixed_set: subsample
 * without replacement per step; fresh_each_step: new i.i.d. points). Every
 * checkpoint_every steps, and after the last one, the full-set loss is
 * recorded; the best checkpoint's network is returned.
 */
TrainResult train(const Network& net, const Problem& p, const SampleSet& samples, const TrainConfig& cfg);

/// init_network(arch, cfg.init_scale, cfg.seed) followed by train.
TrainResult train_from_scratch(const Architecture& arch, const Problem& p, const SampleSet& samples,
                               const TrainConfig& cfg);

/**
 * Proxy for the optimization error: L^(trained) minus the smallest L^ among
 * `restarts` networks trained from scratch with seeds seed, seed+1, ...;
 * clamped at zero.
 */
double optimization_error_estimate(const Network& trained, const Problem& p, const SampleSet& samples,
                                   int restarts, std::uint64_t seed, const TrainConfig& cfg);

/// One optimizer update on a flat parameter vector.
class Optimizer {
public:
    Optimizer(const TrainConfig& cfg, Eigen::Index size);
    void step(Eigen::VectorXd& phi, const Eigen::VectorXd& grad, double learning_rate);

private:
    OptimizerKind kind_;
    double beta1_, beta2_, eps_;
    long long t_ = 0;
    Eigen::VectorXd m_, v_;
};

}  // namespace drm
