/**
 * @file network.hpp
 * @brief Layered networks with ReLU / ReLU^2 / identity activations.
 *
 * A network is a list of affine layers f_l = act_l(A_l f_{l-1} + b_l). Every
 * neuron carries its own activation tag so that mixed ReLU-ReLU^2 networks
 * (e.g. gradient-norm networks) use the same representation as plain ones.
 *
 * Besides the value, the evaluators propagate the exact input Jacobian and can
 * back-propagate adjoints of (u, grad u) to all parameters. Networks are
 * piecewise polynomial, so all derivatives are exact away from ReLU kinks.
 *
 * Parameter order (flattening): layer by layer; within a layer the weight
 * matrix in row-major order followed by the bias vector.
 */
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace drm {

enum class Activation { relu, relu2, identity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

/// act(x)
inline double activate(Activation a, double x)
{
    switch (a) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::relu2: return x > 0.0 ? x * x : 0.0;
    case Activation::identity: return x;
    }
    return x;
}

/// act'(x); relu'(0) = 0.
inline double activate_derivative(Activation a, double x)
{
    switch (a) {
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::relu2: return x > 0.0 ? 2.0 * x : 0.0;
    case Activation::identity: return 1.0;
    }
    return 1.0;
}

/// act''(x), taken as 0 wherever the piece is linear.
inline double activate_second_derivative(Activation a, double x)
{
    return (a == Activation::relu2 && x > 0.0) ? 2.0 : 0.0;
}

/// Layer sizes and per-neuron activations.
struct Architecture {
    std::vector<int> dims;                             // N_0 .. N_L
    std::vector<std::vector<Activation>> activations;  // L entries, entry l has N_l tags

    /// Uniform hidden activation, identity output layer.
    static Architecture uniform(std::vector<int> dims, Activation hidden);

    int depth() const { return static_cast<int>(dims.size()) - 1; }
    int width() const;
    int input_dim() const { return dims.front(); }
    int output_dim() const { return dims.back(); }
    std::size_t parameter_count() const;

    /// Throws std::invalid_argument when malformed.
    void validate() const;

    bool operator==(const Architecture&) const = default;
};

struct Layer {
    Eigen::MatrixXd weight;            // N_l x N_{l-1}
    Eigen::VectorXd bias;              // N_l
    std::vector<Activation> activation;  // N_l
};

class Network {
public:
    /// Validates shapes and finiteness; throws std::invalid_argument.
    explicit Network(std::vector<Layer> layers);

    /// Zero weights and biases for the given architecture.
    static Network zeros(const Architecture& arch);

    const std::vector<Layer>& layers() const { return layers_; }
    Architecture architecture() const;
    int depth() const { return static_cast<int>(layers_.size()); }
    int width() const;
    int input_dim() const { return static_cast<int>(layers_.front().weight.cols()); }
    int output_dim() const { return static_cast<int>(layers_.back().weight.rows()); }
    std::size_t parameter_count() const;

    /// Flattened parameters in the documented order.
    Eigen::VectorXd parameters() const;
    /// Copy with replaced parameters (same architecture).
    Network with_parameters(const Eigen::VectorXd& phi) const;

    bool operator==(const Network& other) const;

private:
    std::vector<Layer> layers_;
};

struct EvalResult {
    double value = 0.0;
    Eigen::VectorXd input_gradient;
};

/// Value of a scalar network at x.
double forward(const Network& net, const Eigen::VectorXd& x);

/// All outputs of a (possibly vector-valued) network at x.
Eigen::VectorXd forward_vector(const Network& net, const Eigen::VectorXd& x);

/// Value and exact input gradient of a scalar network.
EvalResult forward_with_input_gradient(const Network& net, const Eigen::VectorXd& x);

struct ParameterSensitivities {
    Eigen::VectorXd value;     // du/dphi, length P
    Eigen::MatrixXd gradient;  // d(grad_x u)/dphi, d x P; row k is d(du/dx_k)/dphi
};

ParameterSensitivities parameter_sensitivities(const Network& net, const Eigen::VectorXd& x);

/**
 * Batched forward pass that records what the adjoint sweep needs.
 * Points are the columns of the input matrix (d x B).
 */
struct ForwardTape {
    Eigen::MatrixXd input;                             // d x B
    std::vector<Eigen::MatrixXd> pre;                  // Z_l, N_l x B
    std::vector<Eigen::MatrixXd> post;                 // act(Z_l), N_l x B
    std::vector<std::vector<Eigen::MatrixXd>> dpre;    // dZ_l/dx_k
    std::vector<std::vector<Eigen::MatrixXd>> dpost;   // d act(Z_l)/dx_k

    Eigen::RowVectorXd values() const { return post.back().row(0); }
    /// d x B matrix of input gradients.
    Eigen::MatrixXd gradients() const;
};

/// Throws std::invalid_argument unless net is scalar and x has N_0 rows.
ForwardTape forward_batch(const Network& net, const Eigen::MatrixXd& x);

/// Values only, for a d x B batch of points.
Eigen::RowVectorXd forward_values(const Network& net, const Eigen::MatrixXd& x);

/**
 * Reverse sweep: given adjoints ubar (1 x B) of the outputs and gbar (d x B)
 * of the input gradients, returns sum over the batch of
 * ubar_b du_b/dphi + gbar_b . d(grad u_b)/dphi as a flat parameter vector.
 */
Eigen::VectorXd backward(const Network& net, const ForwardTape& tape,
                         const Eigen::RowVectorXd& value_adjoint,
                         const Eigen::MatrixXd& gradient_adjoint);

}  // namespace drm
