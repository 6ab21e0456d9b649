#include "drm/constructions.hpp"
#include "drm/network.hpp"
#include "drm/network_io.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using drm::Activation;
using drm::Network;

namespace {

Network single_neuron(double a, double b, Activation act)
{
    drm::Layer hidden{Eigen::MatrixXd::Constant(1, 1, a), Eigen::VectorXd::Constant(1, b), {act}};
    drm::Layer out{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1), {Activation::identity}};
    return Network({hidden, out});
}

Eigen::VectorXd vec(std::initializer_list<double> v)
{
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double t : v) x[i++] = t;
    return x;
}

/// Point where every pre-activation is at least `margin` away from a kink.
Eigen::VectorXd smooth_point(const Network& net, std::mt19937_64& gen, double margin = 1e-3)
{
    for (;;) {
        Eigen::VectorXd x = oracle::random_point(net.input_dim(), -1.0, 1.0, gen);
        if (oracle::min_kink_distance(net, x) > margin) return x;
    }
}

}  // namespace

TEST_CASE("activation conventions")
{
    CHECK(drm::activate(Activation::relu, -1.0) == 0.0);
    CHECK(drm::activate(Activation::relu2, 3.0) == 9.0);
    CHECK(drm::activate(Activation::relu2, -3.0) == 0.0);
    CHECK(drm::activate_derivative(Activation::relu, 0.0) == 0.0);
    CHECK(drm::activate_derivative(Activation::relu2, 0.5) == 1.0);
    CHECK(drm::activate_derivative(Activation::relu2, -0.5) == 0.0);
    CHECK(drm::activate_derivative(Activation::identity, 7.0) == 1.0);
    for (auto a : {Activation::relu, Activation::relu2, Activation::identity}) {
        CHECK(drm::activation_from_string(drm::to_string(a)) == a);
    }
    CHECK_THROWS_AS(drm::activation_from_string("tanh"), std::invalid_argument);
}

TEST_CASE("architecture and network invariants")
{
    const auto arch = drm::Architecture::uniform({2, 5, 3, 1}, Activation::relu2);
    CHECK(arch.depth() == 3);
    CHECK(arch.width() == 5);
    CHECK(arch.parameter_count() == (2 * 5 + 5) + (5 * 3 + 3) + (3 + 1));
    CHECK(arch.activations.back()[0] == Activation::identity);
    const Network z = Network::zeros(arch);
    CHECK(z.architecture() == arch);
    CHECK(z.parameters().size() == 37);

    drm::Layer bad{Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(3), {Activation::relu, Activation::relu}};
    CHECK_THROWS_AS(Network({bad}), std::invalid_argument);
    drm::Layer nan{Eigen::MatrixXd::Constant(1, 1, NAN), Eigen::VectorXd::Zero(1), {Activation::identity}};
    CHECK_THROWS_AS(Network({nan}), std::invalid_argument);
    CHECK_THROWS_AS(drm::Architecture::uniform({2}, Activation::relu).validate(), std::invalid_argument);
}

TEST_CASE("parameter order is layer-major, row-major weights, then bias")
{
    drm::Layer l1{(Eigen::MatrixXd(2, 2) << 1, 2, 3, 4).finished(), vec({5, 6}), {Activation::relu2, Activation::relu2}};
    drm::Layer l2{(Eigen::MatrixXd(1, 2) << 7, 8).finished(), vec({9}), {Activation::identity}};
    const Network net({l1, l2});
    const Eigen::VectorXd phi = net.parameters();
    for (int k = 0; k < 9; ++k) CHECK(phi[k] == k + 1);
    CHECK(net.with_parameters(phi) == net);
    CHECK_THROWS_AS(net.with_parameters(Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("forward on hand-checked nets")
{
    CHECK(drm::forward(single_neuron(1, 0, Activation::relu2), vec({0.5})) == 0.25);
    drm::Layer id{Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), {Activation::identity}};
    CHECK(drm::forward(Network({id}), vec({0.3})) == 0.3);
    CHECK_THROWS_AS(drm::forward(single_neuron(1, 0, Activation::relu2), vec({0.5, 0.1})), std::invalid_argument);
}

TEST_CASE("forward agrees with a duplicate evaluator")
{
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Network net = oracle::random_net({3, 7, 1}, trial % 2 ? Activation::relu : Activation::relu2, gen);
        for (int k = 0; k < 20; ++k) {
            const Eigen::VectorXd x = oracle::random_point(3, -2.0, 2.0, gen);
            const double ref = oracle::naive_value(net, x);
            CHECK(std::abs(drm::forward(net, x) - ref) <= 1e-14 * std::max(1.0, std::abs(ref)));
        }
    }
}

TEST_CASE("input gradient: examples and finite differences")
{
    const auto sq = drm::forward_with_input_gradient(drm::build_square_gadget(), vec({1.5}));
    CHECK(sq.input_gradient[0] == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(drm::forward_with_input_gradient(single_neuron(1, 0, Activation::relu2), vec({-1.0})).input_gradient[0] == 0.0);

    std::mt19937_64 gen(12);
    const Network net = oracle::random_net({2, 6, 6, 1}, Activation::relu2, gen);
    for (int k = 0; k < 100; ++k) {
        const Eigen::VectorXd x = smooth_point(net, gen);
        const drm::EvalResult r = drm::forward_with_input_gradient(net, x);
        CHECK(r.value == drm::forward(net, x));  // bitwise
        const Eigen::VectorXd fd = oracle::fd_input_gradient(net, x, 1e-5);
        for (int i = 0; i < 2; ++i) {
            CHECK(std::abs(r.input_gradient[i] - fd[i]) <= 1e-6 * std::max(1.0, std::abs(fd[i])));
        }
    }
}

TEST_CASE("parameter sensitivities: single neuron")
{
    const auto s = drm::parameter_sensitivities(single_neuron(1, 0, Activation::relu2), vec({0.5}));
    // phi = (a, b, output weight, output bias)
    CHECK(s.value[0] == doctest::Approx(0.5));
    CHECK(s.value[1] == doctest::Approx(1.0));
    CHECK(s.value[2] == doctest::Approx(0.25));
    CHECK(s.value[3] == doctest::Approx(1.0));
    // du/dx = 2 a (a x + b) => d/da = 4 a x + 2b = 2, d/db = 2a = 2
    CHECK(s.gradient(0, 0) == doctest::Approx(2.0));
    CHECK(s.gradient(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("parameter sensitivities match finite differences")
{
    std::mt19937_64 gen(13);
    for (int trial = 0; trial < 5; ++trial) {
        const Network net = oracle::random_net({2, 5, 4, 1}, Activation::relu2, gen);
        const Eigen::VectorXd x = smooth_point(net, gen, 1e-2);
        const drm::ParameterSensitivities s = drm::parameter_sensitivities(net, x);
        const Eigen::VectorXd phi = net.parameters();
        const double h = 1e-5;
        for (Eigen::Index k = 0; k < phi.size(); ++k) {
            Eigen::VectorXd pp = phi, pm = phi;
            pp[k] += h;
            pm[k] -= h;
            const Network np = net.with_parameters(pp), nm = net.with_parameters(pm);
            const double dv = (oracle::naive_value(np, x) - oracle::naive_value(nm, x)) / (2 * h);
            CHECK(std::abs(s.value[k] - dv) <= 1e-6 * std::max(1.0, std::abs(dv)));
            const Eigen::VectorXd dg = (drm::forward_with_input_gradient(np, x).input_gradient -
                                        drm::forward_with_input_gradient(nm, x).input_gradient) / (2 * h);
            for (int i = 0; i < 2; ++i) {
                CHECK(std::abs(s.gradient(i, k) - dg[i]) <= 1e-5 * std::max(1.0, std::abs(dg[i])));
            }
        }
    }
}

TEST_CASE("batched tape and backward agree with pointwise sensitivities")
{
    std::mt19937_64 gen(14);
    const Network net = oracle::random_net({3, 4, 4, 1}, Activation::relu2, gen);
    const int B = 7;
    Eigen::MatrixXd X(3, B);
    for (int b = 0; b < B; ++b) X.col(b) = oracle::random_point(3, -1, 1, gen);
    const drm::ForwardTape tape = drm::forward_batch(net, X);
    Eigen::RowVectorXd ubar(B);
    Eigen::MatrixXd gbar(3, B);
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.parameter_count()));
    for (int b = 0; b < B; ++b) {
        const drm::EvalResult r = drm::forward_with_input_gradient(net, X.col(b));
        CHECK(tape.values()[b] == r.value);
        CHECK((tape.gradients().col(b) - r.input_gradient).norm() <= 1e-14 * (1 + r.input_gradient.norm()));
        ubar[b] = 0.3 * b - 1.0;
        gbar.col(b) = oracle::random_point(3, -1, 1, gen);
        const auto s = drm::parameter_sensitivities(net, X.col(b));
        expected += ubar[b] * s.value + s.gradient.transpose() * gbar.col(b);
    }
    const Eigen::VectorXd got = drm::backward(net, tape, ubar, gbar);
    CHECK((got - expected).norm() <= 1e-12 * (1 + expected.norm()));
    CHECK((drm::forward_values(net, X) - tape.values()).norm() == 0.0);
    CHECK_THROWS_AS(drm::backward(net, tape, Eigen::RowVectorXd::Zero(B - 1), gbar), std::invalid_argument);
}

TEST_CASE("positive homogeneity of a ReLU^2 neuron")
{
    for (double c : {0.5, 2.0, 3.7}) {
        const double base = drm::forward(single_neuron(0.8, 0.1, Activation::relu2), vec({0.6}));
        const double scaled = drm::forward(single_neuron(0.8 * c, 0.1 * c, Activation::relu2), vec({0.6}));
        CHECK(scaled == doctest::Approx(c * c * base).epsilon(1e-14));
    }
}

TEST_CASE("serialization round-trips bit-exactly")
{
    std::mt19937_64 gen(15);
    Network net = oracle::random_net({2, 3, 1}, Activation::relu2, gen);
    const Network mixed = drm::build_gradient_norm_network(net);
    for (const Network& n : {net, mixed}) {
        const std::string text = drm::network_to_string(n);
        const Network back = drm::network_from_string(text);
        CHECK(back == n);
        CHECK(back.parameters().cwiseEqual(n.parameters()).all());
        CHECK(drm::network_to_string(back) == text);
    }
    CHECK(drm::network_from_string("# comment\n" + drm::network_to_string(net)) == net);
    CHECK_THROWS(drm::network_from_string("drm-network 2\n"));
    CHECK_THROWS(drm::network_from_string("drm-network 1\ndims 1 1\nlayer 1 identity\n0.5\n"));
    CHECK_THROWS(drm::network_from_string("drm-network 1\ndims 1 1\nlayer 1 identity\nabc 0\n"));
    CHECK(drm::format_double(0.1) == "0.1");
}
