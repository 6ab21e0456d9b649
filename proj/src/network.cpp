#include "drm/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace drm {

std::string_view to_string(Activation a)
{
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::relu2: return "relu2";
    case Activation::identity: return "identity";
    }
    return "identity";
}

Activation activation_from_string(std::string_view s)
{
    if (s == "relu") return Activation::relu;
    if (s == "relu2") return Activation::relu2;
    if (s == "identity") return Activation::identity;
    throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

Architecture Architecture::uniform(std::vector<int> dims, Activation hidden)
{
    Architecture arch;
    arch.dims = std::move(dims);
    const int depth = arch.depth();
    for (int l = 1; l <= depth; ++l) {
        const Activation a = (l == depth) ? Activation::identity : hidden;
        arch.activations.emplace_back(static_cast<std::size_t>(arch.dims[l]), a);
    }
    arch.validate();
    return arch;
}

int Architecture::width() const
{
    return dims.empty() ? 0 : *std::max_element(dims.begin(), dims.end());
}

std::size_t Architecture::parameter_count() const
{
    std::size_t count = 0;
    for (std::size_t l = 1; l < dims.size(); ++l) {
        count += static_cast<std::size_t>(dims[l]) * static_cast<std::size_t>(dims[l - 1] + 1);
    }
    return count;
}

void Architecture::validate() const
{
    if (dims.size() < 2) throw std::invalid_argument("architecture needs at least one layer");
    for (int n : dims) {
        if (n < 1) throw std::invalid_argument("layer dimensions must be positive");
    }
    if (activations.size() != dims.size() - 1) {
        throw std::invalid_argument("one activation list per layer required");
    }
    for (std::size_t l = 0; l < activations.size(); ++l) {
        if (activations[l].size() != static_cast<std::size_t>(dims[l + 1])) {
            throw std::invalid_argument("activation list length differs from layer size");
        }
    }
}

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers))
{
    if (layers_.empty()) throw std::invalid_argument("network has no layers");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        if (layer.weight.rows() < 1 || layer.weight.cols() < 1) {
            throw std::invalid_argument("empty weight matrix in layer " + std::to_string(l + 1));
        }
        if (layer.bias.size() != layer.weight.rows() ||
            layer.activation.size() != static_cast<std::size_t>(layer.weight.rows())) {
            throw std::invalid_argument("shape mismatch in layer " + std::to_string(l + 1));
        }
        if (l > 0 && layer.weight.cols() != layers_[l - 1].weight.rows()) {
            throw std::invalid_argument("layer " + std::to_string(l + 1) +
                                        " input size differs from previous output size");
        }
        if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
            throw std::invalid_argument("non-finite parameter in layer " + std::to_string(l + 1));
        }
    }
}

Network Network::zeros(const Architecture& arch)
{
    arch.validate();
    std::vector<Layer> layers;
    for (int l = 1; l <= arch.depth(); ++l) {
        layers.push_back({Eigen::MatrixXd::Zero(arch.dims[l], arch.dims[l - 1]),
                          Eigen::VectorXd::Zero(arch.dims[l]), arch.activations[l - 1]});
    }
    return Network(std::move(layers));
}

Architecture Network::architecture() const
{
    Architecture arch;
    arch.dims.push_back(input_dim());
    for (const Layer& layer : layers_) {
        arch.dims.push_back(static_cast<int>(layer.weight.rows()));
        arch.activations.push_back(layer.activation);
    }
    return arch;
}

int Network::width() const
{
    int w = input_dim();
    for (const Layer& layer : layers_) w = std::max(w, static_cast<int>(layer.weight.rows()));
    return w;
}

std::size_t Network::parameter_count() const
{
    std::size_t count = 0;
    for (const Layer& layer : layers_) count += layer.weight.size() + layer.bias.size();
    return count;
}

Eigen::VectorXd Network::parameters() const
{
    Eigen::VectorXd phi(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index k = 0;
    for (const Layer& layer : layers_) {
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) phi[k++] = layer.weight(r, c);
        }
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) phi[k++] = layer.bias[r];
    }
    return phi;
}

Network Network::with_parameters(const Eigen::VectorXd& phi) const
{
    if (phi.size() != static_cast<Eigen::Index>(parameter_count())) {
        throw std::invalid_argument("parameter vector length mismatch");
    }
    std::vector<Layer> layers = layers_;
    Eigen::Index k = 0;
    for (Layer& layer : layers) {
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = phi[k++];
        }
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = phi[k++];
    }
    return Network(std::move(layers));
}

bool Network::operator==(const Network& other) const
{
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& a = layers_[l];
        const Layer& b = other.layers_[l];
        if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols()) return false;
        if (a.weight != b.weight || a.bias != b.bias || a.activation != b.activation) return false;
    }
    return true;
}

namespace {

void check_point(const Network& net, const Eigen::VectorXd& x)
{
    if (x.size() != net.input_dim()) {
        throw std::invalid_argument("input has dimension " + std::to_string(x.size()) +
                                    ", network expects " + std::to_string(net.input_dim()));
    }
}

void check_scalar(const Network& net)
{
    if (net.output_dim() != 1) throw std::invalid_argument("network output is not scalar");
}

// Shared value path so forward and forward_with_input_gradient agree bitwise.
Eigen::VectorXd layer_pre(const Layer& layer, const Eigen::VectorXd& h)
{
    Eigen::VectorXd z = layer.weight * h;
    z += layer.bias;
    return z;
}

Eigen::VectorXd layer_post(const Layer& layer, const Eigen::VectorXd& z)
{
    Eigen::VectorXd h(z.size());
    for (Eigen::Index r = 0; r < z.size(); ++r) {
        h[r] = activate(layer.activation[static_cast<std::size_t>(r)], z[r]);
    }
    return h;
}

}  // namespace

Eigen::VectorXd forward_vector(const Network& net, const Eigen::VectorXd& x)
{
    check_point(net, x);
    Eigen::VectorXd h = x;
    for (const Layer& layer : net.layers()) h = layer_post(layer, layer_pre(layer, h));
    return h;
}

double forward(const Network& net, const Eigen::VectorXd& x)
{
    check_scalar(net);
    return forward_vector(net, x)[0];
}

EvalResult forward_with_input_gradient(const Network& net, const Eigen::VectorXd& x)
{
    check_point(net, x);
    check_scalar(net);
    Eigen::VectorXd h = x;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(x.size(), x.size());
    for (const Layer& layer : net.layers()) {
        const Eigen::VectorXd z = layer_pre(layer, h);
        Eigen::MatrixXd djac = layer.weight * jac;
        for (Eigen::Index r = 0; r < z.size(); ++r) {
            djac.row(r) *= activate_derivative(layer.activation[static_cast<std::size_t>(r)], z[r]);
        }
        h = layer_post(layer, z);
        jac = std::move(djac);
    }
    return {h[0], jac.row(0).transpose()};
}

Eigen::MatrixXd ForwardTape::gradients() const
{
    const auto d = static_cast<Eigen::Index>(dpost.back().size());
    Eigen::MatrixXd g(d, input.cols());
    for (Eigen::Index k = 0; k < d; ++k) g.row(k) = dpost.back()[static_cast<std::size_t>(k)].row(0);
    return g;
}

ForwardTape forward_batch(const Network& net, const Eigen::MatrixXd& x)
{
    check_scalar(net);
    if (x.rows() != net.input_dim()) {
        throw std::invalid_argument("batch has dimension " + std::to_string(x.rows()) +
                                    ", network expects " + std::to_string(net.input_dim()));
    }
    const Eigen::Index d = x.rows();
    const Eigen::Index batch = x.cols();
    const auto nd = static_cast<std::size_t>(d);

    ForwardTape tape;
    tape.input = x;
    const Eigen::MatrixXd* h = &tape.input;
    const std::vector<Eigen::MatrixXd>* dh = nullptr;

    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const Layer& layer = net.layers()[l];
        Eigen::MatrixXd z = layer.weight * (*h);
        z.colwise() += layer.bias;

        std::vector<Eigen::MatrixXd> dz(nd);
        for (std::size_t k = 0; k < nd; ++k) {
            if (dh == nullptr) {
                // d(x)/dx_k is the unit vector e_k for every point.
                dz[k] = layer.weight.col(static_cast<Eigen::Index>(k)).replicate(1, batch);
            } else {
                dz[k] = layer.weight * (*dh)[k];
            }
        }

        Eigen::MatrixXd a(z.rows(), batch);
        std::vector<Eigen::MatrixXd> da(nd, Eigen::MatrixXd(z.rows(), batch));
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            const Activation act = layer.activation[static_cast<std::size_t>(r)];
            if (act == Activation::identity) {
                a.row(r) = z.row(r);
                for (std::size_t k = 0; k < nd; ++k) da[k].row(r) = dz[k].row(r);
                continue;
            }
            for (Eigen::Index b = 0; b < batch; ++b) {
                const double zb = z(r, b);
                a(r, b) = activate(act, zb);
                const double slope = activate_derivative(act, zb);
                for (std::size_t k = 0; k < nd; ++k) da[k](r, b) = slope * dz[k](r, b);
            }
        }

        tape.pre.push_back(std::move(z));
        tape.post.push_back(std::move(a));
        tape.dpre.push_back(std::move(dz));
        tape.dpost.push_back(std::move(da));
        h = &tape.post.back();
        dh = &tape.dpost.back();
    }
    return tape;
}

Eigen::RowVectorXd forward_values(const Network& net, const Eigen::MatrixXd& x)
{
    check_scalar(net);
    if (x.rows() != net.input_dim()) throw std::invalid_argument("batch dimension mismatch");
    Eigen::MatrixXd h = x;
    for (const Layer& layer : net.layers()) {
        Eigen::MatrixXd z = layer.weight * h;
        z.colwise() += layer.bias;
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            const Activation act = layer.activation[static_cast<std::size_t>(r)];
            if (act == Activation::identity) continue;
            for (Eigen::Index b = 0; b < z.cols(); ++b) z(r, b) = activate(act, z(r, b));
        }
        h = std::move(z);
    }
    return h.row(0);
}

Eigen::VectorXd backward(const Network& net, const ForwardTape& tape,
                         const Eigen::RowVectorXd& value_adjoint,
                         const Eigen::MatrixXd& gradient_adjoint)
{
    const Eigen::Index d = tape.input.rows();
    const Eigen::Index batch = tape.input.cols();
    const auto nd = static_cast<std::size_t>(d);
    if (value_adjoint.size() != batch || gradient_adjoint.rows() != d ||
        gradient_adjoint.cols() != batch) {
        throw std::invalid_argument("adjoint shapes do not match the tape");
    }
    const auto& layers = net.layers();
    const std::size_t depth = layers.size();

    // Adjoints of the output layer's post-activation values and tangents.
    Eigen::MatrixXd post_bar = value_adjoint;
    std::vector<Eigen::MatrixXd> dpost_bar(nd);
    for (std::size_t k = 0; k < nd; ++k) dpost_bar[k] = gradient_adjoint.row(static_cast<Eigen::Index>(k));

    std::vector<Eigen::MatrixXd> weight_bar(depth);
    std::vector<Eigen::VectorXd> bias_bar(depth);

    for (std::size_t li = depth; li-- > 0;) {
        const Layer& layer = layers[li];
        const Eigen::MatrixXd& z = tape.pre[li];
        const std::vector<Eigen::MatrixXd>& dz = tape.dpre[li];

        // Through the activation: a = act(z), da_k = act'(z) dz_k.
        Eigen::MatrixXd pre_bar(z.rows(), batch);
        std::vector<Eigen::MatrixXd> dpre_bar(nd, Eigen::MatrixXd(z.rows(), batch));
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            const Activation act = layer.activation[static_cast<std::size_t>(r)];
            if (act == Activation::identity) {
                pre_bar.row(r) = post_bar.row(r);
                for (std::size_t k = 0; k < nd; ++k) dpre_bar[k].row(r) = dpost_bar[k].row(r);
                continue;
            }
            for (Eigen::Index b = 0; b < batch; ++b) {
                const double zb = z(r, b);
                const double slope = activate_derivative(act, zb);
                const double curvature = activate_second_derivative(act, zb);
                double acc = slope * post_bar(r, b);
                for (std::size_t k = 0; k < nd; ++k) {
                    acc += curvature * dpost_bar[k](r, b) * dz[k](r, b);
                    dpre_bar[k](r, b) = slope * dpost_bar[k](r, b);
                }
                pre_bar(r, b) = acc;
            }
        }

        // Through the affine map: z = A h + b, dz_k = A dh_k.
        bias_bar[li] = pre_bar.rowwise().sum();
        if (li == 0) {
            Eigen::MatrixXd wbar = pre_bar * tape.input.transpose();
            for (std::size_t k = 0; k < nd; ++k) {
                wbar.col(static_cast<Eigen::Index>(k)) += dpre_bar[k].rowwise().sum();
            }
            weight_bar[li] = std::move(wbar);
        } else {
            Eigen::MatrixXd wbar = pre_bar * tape.post[li - 1].transpose();
            for (std::size_t k = 0; k < nd; ++k) wbar.noalias() += dpre_bar[k] * tape.dpost[li - 1][k].transpose();
            weight_bar[li] = std::move(wbar);

            post_bar = layer.weight.transpose() * pre_bar;
            for (std::size_t k = 0; k < nd; ++k) dpost_bar[k] = layer.weight.transpose() * dpre_bar[k];
        }
    }

    Eigen::VectorXd grad(static_cast<Eigen::Index>(net.parameter_count()));
    Eigen::Index k = 0;
    for (std::size_t li = 0; li < depth; ++li) {
        for (Eigen::Index r = 0; r < weight_bar[li].rows(); ++r) {
            for (Eigen::Index c = 0; c < weight_bar[li].cols(); ++c) grad[k++] = weight_bar[li](r, c);
        }
        for (Eigen::Index r = 0; r < bias_bar[li].size(); ++r) grad[k++] = bias_bar[li][r];
    }
    return grad;
}

ParameterSensitivities parameter_sensitivities(const Network& net, const Eigen::VectorXd& x)
{
    check_point(net, x);
    const Eigen::Index d = x.size();
    const ForwardTape tape = forward_batch(net, x);

    ParameterSensitivities out;
    Eigen::RowVectorXd seed_value = Eigen::RowVectorXd::Ones(1);
    Eigen::MatrixXd seed_grad = Eigen::MatrixXd::Zero(d, 1);
    out.value = backward(net, tape, seed_value, seed_grad);

    out.gradient.resize(d, out.value.size());
    seed_value.setZero();
    for (Eigen::Index k = 0; k < d; ++k) {
        seed_grad.setZero();
        seed_grad(k, 0) = 1.0;
        out.gradient.row(k) = backward(net, tape, seed_value, seed_grad).transpose();
    }
    return out;
}

}  // namespace drm
