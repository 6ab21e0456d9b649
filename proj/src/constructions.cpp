#include "drm/constructions.hpp"

#include "drm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace drm {

namespace {
// Squared gradient norms below this are compared absolutely; an exact zero
// gradient leaves gadget rounding residue near 1e-37.
constexpr double kGradNormFloor = 1e-20;
}  // namespace

int ceil_log2(int d)
{
    if (d < 1) throw std::invalid_argument("ceil_log2: d must be >= 1");
    int k = 0;
    while ((1 << k) < d) ++k;
    return k;
}

namespace {

using Row = Eigen::RowVectorXd;

constexpr int kBinom3[4] = {1, 3, 3, 1};

/// An affine functional of the outputs of some layer.
struct Form {
    Row w;
    double c = 0.0;

    static Form unit(Eigen::Index size, Eigen::Index at, double scale = 1.0)
    {
        Form f{Row::Zero(size), 0.0};
        f.w[at] = scale;
        return f;
    }
    static Form constant(Eigen::Index size, double value) { return {Row::Zero(size), value}; }

    Form operator+(const Form& o) const { return {w + o.w, c + o.c}; }
    Form operator-(const Form& o) const { return {w - o.w, c - o.c}; }
    Form operator*(double s) const { return {w * s, c * s}; }
};

/// Accumulates neurons of one layer, each an activation of a Form over the previous layer.
class LayerBuilder {
public:
    explicit LayerBuilder(Eigen::Index inputs) : inputs_(inputs) {}

    Eigen::Index add(const Form& f, Activation act)
    {
        if (f.w.size() != inputs_) throw std::logic_error("form size does not match layer input");
        rows_.push_back(f.w);
        bias_.push_back(f.c);
        acts_.push_back(act);
        return static_cast<Eigen::Index>(rows_.size()) - 1;
    }

    Eigen::Index size() const { return static_cast<Eigen::Index>(rows_.size()); }

    Layer build() const
    {
        if (rows_.empty()) throw std::logic_error("empty layer");
        Layer layer;
        layer.weight.resize(size(), inputs_);
        layer.bias.resize(size());
        for (Eigen::Index r = 0; r < size(); ++r) {
            layer.weight.row(r) = rows_[static_cast<std::size_t>(r)];
            layer.bias[r] = bias_[static_cast<std::size_t>(r)];
        }
        layer.activation = acts_;
        return layer;
    }

private:
    Eigen::Index inputs_;
    std::vector<Row> rows_;
    std::vector<double> bias_;
    std::vector<Activation> acts_;
};

/// Neuron indices of one product gadget, to be resolved once the layer size is known.
struct ProductSlots {
    Eigen::Index plus = 0, minus = 0, diff = 0, rdiff = 0;
    double scale = 1.0;
};

ProductSlots add_product(LayerBuilder& layer, const Form& a, const Form& b, double scale)
{
    ProductSlots s;
    s.plus = layer.add(a + b, Activation::relu2);
    s.minus = layer.add((a + b) * -1.0, Activation::relu2);
    s.diff = layer.add(a - b, Activation::relu2);
    s.rdiff = layer.add(b - a, Activation::relu2);
    s.scale = scale;
    return s;
}

/// scale * a * b as a form over the layer holding the gadget.
Form product_form(const ProductSlots& s, Eigen::Index layer_size)
{
    Form f = Form::constant(layer_size, 0.0);
    const double q = 0.25 * s.scale;
    f.w[s.plus] += q;
    f.w[s.minus] += q;
    f.w[s.diff] -= q;
    f.w[s.rdiff] -= q;
    return f;
}

Layer output_layer(const std::vector<Form>& outputs)
{
    LayerBuilder out(outputs.front().w.size());
    for (const Form& f : outputs) out.add(f, Activation::identity);
    return out.build();
}

}  // namespace

Network build_square_gadget()
{
    LayerBuilder hidden(1);
    hidden.add(Form::unit(1, 0), Activation::relu2);
    hidden.add(Form::unit(1, 0, -1.0), Activation::relu2);
    Form sum{Row::Ones(2), 0.0};
    return Network({hidden.build(), output_layer({sum})});
}

Network build_product_gadget()
{
    LayerBuilder hidden(2);
    const ProductSlots s = add_product(hidden, Form::unit(2, 0), Form::unit(2, 1), 1.0);
    return Network({hidden.build(), output_layer({product_form(s, hidden.size())})});
}

Network build_square_sum(int d)
{
    if (d < 1) throw std::invalid_argument("build_square_sum: d must be >= 1");
    LayerBuilder hidden(d);
    for (int i = 0; i < d; ++i) {
        hidden.add(Form::unit(d, i), Activation::relu2);
        hidden.add(Form::unit(d, i, -1.0), Activation::relu2);
    }
    Form sum{Row::Ones(2 * d), 0.0};
    return Network({hidden.build(), output_layer({sum})});
}

void validate(const SplineIndex& idx)
{
    if (idx.level < 1) throw std::invalid_argument("spline level must be >= 1");
    if (idx.index.empty()) throw std::invalid_argument("spline index is empty");
    if (idx.level > 30) throw std::invalid_argument("spline level too large");
    const int hi = (1 << idx.level) - 1;
    for (int i : idx.index) {
        if (i < -2 || i > hi) {
            throw std::invalid_argument("spline index " + std::to_string(i) + " outside [-2, " +
                                        std::to_string(hi) + "] at level " + std::to_string(idx.level));
        }
    }
}

double bspline_value(int level, int i, double x)
{
    const double h = std::ldexp(1.0, -level);
    const double scale = std::ldexp(1.0, 2 * level - 1);
    // The truncated powers cancel exactly beyond the support; return the
    // exact zero there instead of the rounding residue.
    if (x <= i * h || x >= (i + 3) * h) return 0.0;
    double sum = 0.0;
    for (int j = 0; j < 4; ++j) {
        const double t = x - (i + j) * h;
        if (t > 0.0) sum += ((j % 2) ? -1.0 : 1.0) * kBinom3[j] * t * t;
    }
    return std::max(0.0, scale * sum);
}

double bspline_derivative(int level, int i, double x)
{
    const double h = std::ldexp(1.0, -level);
    const double scale = std::ldexp(1.0, 2 * level - 1);
    if (x <= i * h || x >= (i + 3) * h) return 0.0;
    double sum = 0.0;
    for (int j = 0; j < 4; ++j) {
        const double t = x - (i + j) * h;
        if (t > 0.0) sum += ((j % 2) ? -1.0 : 1.0) * kBinom3[j] * 2.0 * t;
    }
    return scale * sum;
}

double bspline_value(const SplineIndex& idx, const Eigen::VectorXd& x)
{
    if (x.size() != idx.dim()) throw std::invalid_argument("bspline_value: dimension mismatch");
    double v = 1.0;
    for (int j = 0; j < idx.dim(); ++j) v *= bspline_value(idx.level, idx.index[static_cast<std::size_t>(j)], x[j]);
    return v;
}

Network build_univariate_bspline(int level, int i)
{
    return build_multivariate_bspline(SplineIndex{level, {i}});
}

Network build_multivariate_bspline(const SplineIndex& idx)
{
    validate(idx);
    const int d = idx.dim();
    const double h = std::ldexp(1.0, -idx.level);
    const double scale = std::ldexp(1.0, 2 * idx.level - 1);

    // Layer 1: the four truncated powers (x_j - (i_j + k) h)_+^2 of every axis.
    LayerBuilder first(d);
    std::vector<Eigen::Index> slots;
    for (int j = 0; j < d; ++j) {
        for (int k = 0; k < 4; ++k) {
            Form f = Form::unit(d, j);
            f.c = -(idx.index[static_cast<std::size_t>(j)] + k) * h;
            slots.push_back(first.add(f, Activation::relu2));
        }
    }
    std::vector<Layer> layers{first.build()};
    Eigen::Index size = first.size();

    // Univariate factors as forms over layer 1.
    std::vector<Form> factors;
    for (int j = 0; j < d; ++j) {
        Form f = Form::constant(size, 0.0);
        for (int k = 0; k < 4; ++k) {
            f.w[slots[static_cast<std::size_t>(4 * j + k)]] = ((k % 2) ? -scale : scale) * kBinom3[k];
        }
        factors.push_back(f);
    }

    // Binary product tree; an odd leftover is multiplied by the constant 1.
    while (factors.size() > 1) {
        LayerBuilder stage(size);
        std::vector<ProductSlots> products;
        for (std::size_t a = 0; a < factors.size(); a += 2) {
            const Form& lhs = factors[a];
            const Form rhs = (a + 1 < factors.size()) ? factors[a + 1] : Form::constant(size, 1.0);
            products.push_back(add_product(stage, lhs, rhs, 1.0));
        }
        layers.push_back(stage.build());
        size = stage.size();
        factors.clear();
        for (const ProductSlots& p : products) factors.push_back(product_form(p, size));
    }
    layers.push_back(output_layer(factors));
    Network net(std::move(layers));

    const int depth_bound = ceil_log2(d) + 2;
    if (net.depth() > depth_bound || net.width() > 4 * d) {
        throw std::logic_error("B-spline network exceeds depth/width bound");
    }
    return net;
}

void validate(const SplineCombination& comb)
{
    if (comb.terms.empty()) throw std::invalid_argument("spline combination has no terms");
    for (const SplineTerm& t : comb.terms) {
        if (t.index.level != comb.level || t.index.dim() != comb.d) {
            throw std::invalid_argument("spline combination mixes levels or dimensions");
        }
        validate(t.index);
    }
}

double evaluate(const SplineCombination& comb, const Eigen::VectorXd& x)
{
    double v = 0.0;
    for (const SplineTerm& t : comb.terms) v += t.coefficient * bspline_value(t.index, x);
    return v;
}

Eigen::VectorXd evaluate_gradient(const SplineCombination& comb, const Eigen::VectorXd& x)
{
    Eigen::VectorXd g = Eigen::VectorXd::Zero(comb.d);
    for (const SplineTerm& t : comb.terms) {
        for (int k = 0; k < comb.d; ++k) {
            double v = t.coefficient;
            for (int j = 0; j < comb.d; ++j) {
                const int i = t.index.index[static_cast<std::size_t>(j)];
                v *= (j == k) ? bspline_derivative(comb.level, i, x[j]) : bspline_value(comb.level, i, x[j]);
            }
            g[k] += v;
        }
    }
    return g;
}

Network parallel_sum(const std::vector<Network>& nets, const std::vector<double>& weights)
{
    if (nets.empty() || nets.size() != weights.size()) {
        throw std::invalid_argument("parallel_sum: need matching non-empty nets and weights");
    }
    const int depth = nets.front().depth();
    const int d = nets.front().input_dim();
    for (const Network& n : nets) {
        if (n.depth() != depth || n.input_dim() != d || n.output_dim() != 1) {
            throw std::invalid_argument("parallel_sum: nets must share depth and input size and be scalar");
        }
    }

    std::vector<Layer> layers;
    for (int l = 0; l < depth; ++l) {
        const bool last = (l == depth - 1);
        Eigen::Index rows = 0;
        Eigen::Index cols = 0;
        for (const Network& n : nets) {
            rows += n.layers()[static_cast<std::size_t>(l)].weight.rows();
            cols += n.layers()[static_cast<std::size_t>(l)].weight.cols();
        }
        if (l == 0) cols = d;
        if (last) rows = 1;

        Layer layer;
        layer.weight = Eigen::MatrixXd::Zero(rows, cols);
        layer.bias = Eigen::VectorXd::Zero(rows);
        Eigen::Index r0 = 0;
        Eigen::Index c0 = 0;
        for (std::size_t k = 0; k < nets.size(); ++k) {
            const Layer& src = nets[k].layers()[static_cast<std::size_t>(l)];
            const Eigen::Index c = (l == 0) ? 0 : c0;
            if (last) {
                layer.weight.block(0, c, 1, src.weight.cols()) += weights[k] * src.weight;
                layer.bias[0] += weights[k] * src.bias[0];
            } else {
                layer.weight.block(r0, c, src.weight.rows(), src.weight.cols()) = src.weight;
                layer.bias.segment(r0, src.bias.size()) = src.bias;
                layer.activation.insert(layer.activation.end(), src.activation.begin(), src.activation.end());
                r0 += src.weight.rows();
            }
            c0 += src.weight.cols();
        }
        if (last) layer.activation = {Activation::identity};
        layers.push_back(std::move(layer));
    }
    return Network(std::move(layers));
}

Network build_spline_combination(const SplineCombination& comb)
{
    validate(comb);
    std::vector<Network> parts;
    std::vector<double> weights;
    parts.reserve(comb.terms.size());
    for (const SplineTerm& t : comb.terms) {
        parts.push_back(build_multivariate_bspline(t.index));
        weights.push_back(t.coefficient);
    }
    Network net = parallel_sum(parts, weights);
    if (net.depth() > ceil_log2(comb.d) + 3) throw std::logic_error("spline combination exceeds depth bound");
    return net;
}

std::pair<int, int> spline_index_range(int level, SplineBasis basis)
{
    if (basis == SplineBasis::full) return {-2, (1 << level) - 1};
    if (level < 3) throw std::invalid_argument("interior spline basis needs level >= 3");
    return {1, (1 << level) - 4};
}

SplineCombination fit_spline_coefficients(const std::function<double(const Eigen::VectorXd&)>& target,
                                          int level, int d, SplineBasis basis)
{
    if (level < 1 || level > 20) throw std::invalid_argument("fit: level out of range");
    if (d < 1) throw std::invalid_argument("fit: d must be >= 1");
    const auto [lo, hi] = spline_index_range(level, basis);
    const int nb = hi - lo + 1;
    const int ng = 4 * (1 << level);

    long long total_coeffs = 1;
    long long total_nodes = 1;
    for (int j = 0; j < d; ++j) {
        total_coeffs *= nb;
        total_nodes *= ng;
    }
    if (total_nodes > 50'000'000LL) throw std::invalid_argument("fit: collocation grid too large");

    Eigen::VectorXd nodes(ng);
    for (int k = 0; k < ng; ++k) nodes[k] = (k + 0.5) / ng;

    Eigen::MatrixXd collocation(ng, nb);
    for (int k = 0; k < ng; ++k) {
        for (int b = 0; b < nb; ++b) collocation(k, b) = bspline_value(level, lo + b, nodes[k]);
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(collocation);
    if (qr.rank() < nb) {
        throw std::runtime_error("fit: collocation matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                                 " < " + std::to_string(nb) + ")");
    }
    // 1-D pseudo-inverse, nb x ng.
    const Eigen::MatrixXd pinv = qr.solve(Eigen::MatrixXd::Identity(ng, ng));

    // Target on the tensor grid; axis 0 varies fastest.
    Eigen::VectorXd tensor(total_nodes);
    Eigen::VectorXd x(d);
    for (long long flat = 0; flat < total_nodes; ++flat) {
        long long rem = flat;
        for (int j = 0; j < d; ++j) {
            x[j] = nodes[static_cast<Eigen::Index>(rem % ng)];
            rem /= ng;
        }
        tensor[flat] = target(x);
    }

    // Apply pinv along each axis in turn; axis sizes change from ng to nb.
    std::vector<long long> extent(static_cast<std::size_t>(d), ng);
    for (int axis = 0; axis < d; ++axis) {
        long long inner = 1;
        for (int j = 0; j < axis; ++j) inner *= extent[static_cast<std::size_t>(j)];
        long long outer = 1;
        for (int j = axis + 1; j < d; ++j) outer *= extent[static_cast<std::size_t>(j)];
        Eigen::VectorXd next(inner * nb * outer);
        for (long long o = 0; o < outer; ++o) {
            for (long long in = 0; in < inner; ++in) {
                for (int b = 0; b < nb; ++b) {
                    double acc = 0.0;
                    for (int k = 0; k < ng; ++k) acc += pinv(b, k) * tensor[(o * ng + k) * inner + in];
                    next[(o * nb + b) * inner + in] = acc;
                }
            }
        }
        tensor = std::move(next);
        extent[static_cast<std::size_t>(axis)] = nb;
    }

    SplineCombination comb;
    comb.level = level;
    comb.d = d;
    comb.terms.reserve(static_cast<std::size_t>(total_coeffs));
    for (long long flat = 0; flat < total_coeffs; ++flat) {
        SplineTerm t;
        t.index.level = level;
        long long rem = flat;
        for (int j = 0; j < d; ++j) {
            t.index.index.push_back(lo + static_cast<int>(rem % nb));
            rem /= nb;
        }
        t.coefficient = tensor[flat];
        comb.terms.push_back(std::move(t));
    }
    return comb;
}

Network build_gradient_norm_network(const Network& net)
{
    const auto& src = net.layers();
    const int depth = net.depth();
    const int d = net.input_dim();
    const int width = net.width();
    if (net.output_dim() != 1) throw std::invalid_argument("gradient-norm network: input net must be scalar");
    for (int l = 0; l < depth; ++l) {
        const Activation expected = (l == depth - 1) ? Activation::identity : Activation::relu2;
        for (Activation a : src[static_cast<std::size_t>(l)].activation) {
            if (a != expected) {
                throw std::invalid_argument(
                    "gradient-norm network: needs ReLU^2 hidden layers and a linear output layer");
            }
        }
    }

    // A linear network has a constant gradient.
    if (depth == 1) {
        Layer layer{Eigen::MatrixXd::Zero(1, d), Eigen::VectorXd::Constant(1, src[0].weight.squaredNorm()),
                    {Activation::identity}};
        return Network({layer});
    }

    const Eigen::Index nd = d;
    std::vector<Layer> layers;

    // Forms over the current top layer: values h, switches s, partials P[q][i].
    std::vector<Form> values;
    std::vector<Form> switches;
    std::vector<std::vector<Form>> partials;

    // Layer 1.
    {
        const Layer& a1 = src[0];
        const Eigen::Index n1 = a1.weight.rows();
        LayerBuilder b(nd);
        std::vector<Eigen::Index> s_slot(static_cast<std::size_t>(n1));
        std::vector<Eigen::Index> h_slot(static_cast<std::size_t>(n1));
        for (Eigen::Index q = 0; q < n1; ++q) {
            const Form z{a1.weight.row(q), a1.bias[q]};
            s_slot[static_cast<std::size_t>(q)] = b.add(z, Activation::relu);
            if (depth >= 3) h_slot[static_cast<std::size_t>(q)] = b.add(z, Activation::relu2);
        }
        layers.push_back(b.build());
        const Eigen::Index size = b.size();
        for (Eigen::Index q = 0; q < n1; ++q) {
            switches.push_back(Form::unit(size, s_slot[static_cast<std::size_t>(q)]));
            if (depth >= 3) values.push_back(Form::unit(size, h_slot[static_cast<std::size_t>(q)]));
            // D_i h_1[q] = 2 a_qi s_1[q].
            std::vector<Form> row;
            for (Eigen::Index i = 0; i < nd; ++i) {
                row.push_back(Form::unit(size, s_slot[static_cast<std::size_t>(q)], 2.0 * a1.weight(q, i)));
            }
            partials.push_back(std::move(row));
        }
    }

    // Product layer: D_i h_k[q] = 2 s_k[q] * sum_j A_k[q][j] D_i h_{k-1}[j].
    auto add_partial_products = [&](LayerBuilder& b, const Layer& ak, const std::vector<Form>& sw,
                                     const std::vector<std::vector<Form>>& prev) {
        std::vector<std::vector<ProductSlots>> slots;
        for (Eigen::Index q = 0; q < ak.weight.rows(); ++q) {
            std::vector<ProductSlots> row;
            for (Eigen::Index i = 0; i < nd; ++i) {
                Form y = Form::constant(sw.front().w.size(), 0.0);
                for (Eigen::Index j = 0; j < ak.weight.cols(); ++j) {
                    const double a = ak.weight(q, j);
                    if (a != 0.0) y = y + prev[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] * a;
                }
                row.push_back(add_product(b, sw[static_cast<std::size_t>(q)], y, 2.0));
            }
            slots.push_back(std::move(row));
        }
        return slots;
    };
    auto resolve = [&](const std::vector<std::vector<ProductSlots>>& slots, Eigen::Index size) {
        std::vector<std::vector<Form>> out;
        for (const auto& row : slots) {
            std::vector<Form> forms;
            for (const ProductSlots& s : row) forms.push_back(product_form(s, size));
            out.push_back(std::move(forms));
        }
        return out;
    };

    // Hidden layers 2 .. D-1 of the source net, pipelined with the products of the layer before.
    for (int k = 2; k <= depth - 1; ++k) {
        const Layer& ak = src[static_cast<std::size_t>(k - 1)];
        const Layer& aprev = src[static_cast<std::size_t>(k - 2)];
        LayerBuilder b(layers.back().weight.rows());

        std::vector<Eigen::Index> s_slot;
        std::vector<Eigen::Index> h_slot;
        for (Eigen::Index q = 0; q < ak.weight.rows(); ++q) {
            Form z = Form::constant(values.front().w.size(), ak.bias[q]);
            for (Eigen::Index j = 0; j < ak.weight.cols(); ++j) {
                z = z + values[static_cast<std::size_t>(j)] * ak.weight(q, j);
            }
            s_slot.push_back(b.add(z, Activation::relu));
            if (k <= depth - 2) h_slot.push_back(b.add(z, Activation::relu2));
        }

        std::vector<Eigen::Index> pass_slot;
        std::vector<std::vector<ProductSlots>> product_slots;
        if (k == 2) {
            // s_1 >= 0 passes through a ReLU unchanged; D_i h_1 stays linear in it.
            for (const Form& s : switches) pass_slot.push_back(b.add(s, Activation::relu));
        } else {
            product_slots = add_partial_products(b, aprev, switches, partials);
        }

        layers.push_back(b.build());
        const Eigen::Index size = b.size();

        std::vector<std::vector<Form>> next_partials;
        if (k == 2) {
            for (std::size_t q = 0; q < pass_slot.size(); ++q) {
                std::vector<Form> row;
                for (Eigen::Index i = 0; i < nd; ++i) {
                    row.push_back(Form::unit(size, pass_slot[q], 2.0 * aprev.weight(static_cast<Eigen::Index>(q), i)));
                }
                next_partials.push_back(std::move(row));
            }
        } else {
            next_partials = resolve(product_slots, size);
        }

        switches.clear();
        values.clear();
        for (Eigen::Index s : s_slot) switches.push_back(Form::unit(size, s));
        for (Eigen::Index h : h_slot) values.push_back(Form::unit(size, h));
        partials = std::move(next_partials);
    }

    // Products for the last hidden layer (only needed when it is not layer 1).
    if (depth >= 3) {
        const Layer& alast = src[static_cast<std::size_t>(depth - 2)];
        LayerBuilder b(layers.back().weight.rows());
        const auto slots = add_partial_products(b, alast, switches, partials);
        layers.push_back(b.build());
        partials = resolve(slots, b.size());
    }

    // grad_i u = sum_q A_D[0][q] D_i h_{D-1}[q], squared by square gadgets and summed.
    const Layer& out = src.back();
    const Eigen::Index top = layers.back().weight.rows();
    LayerBuilder squares(top);
    for (Eigen::Index i = 0; i < nd; ++i) {
        Form g = Form::constant(top, 0.0);
        for (Eigen::Index q = 0; q < out.weight.cols(); ++q) {
            g = g + partials[static_cast<std::size_t>(q)][static_cast<std::size_t>(i)] * out.weight(0, q);
        }
        squares.add(g, Activation::relu2);
        squares.add(g * -1.0, Activation::relu2);
    }
    layers.push_back(squares.build());
    layers.push_back(output_layer({Form{Row::Ones(squares.size()), 0.0}}));

    Network result(std::move(layers));
    if (result.depth() > depth + 3) throw std::logic_error("gradient-norm network exceeds depth D+3");
    if (static_cast<long long>(result.width()) > static_cast<long long>(d) * (depth + 2) * width) {
        throw std::logic_error("gradient-norm network exceeds width d(D+2)W");
    }
    return result;
}

long long prescribed_width(int d, long long n, double nu)
{
    if (d < 1 || n < 1 || nu < 0.0) throw std::invalid_argument("prescribe_architecture: need d, n >= 1, nu >= 0");
    double base = std::pow(static_cast<double>(n), 1.0 / (d + 2.0 + nu)) - 4.0;
    // Snap values a few ulps from an integer (e.g. 65536^{1/4} = 16) before the ceiling.
    const double nearest = std::round(base);
    if (std::abs(base - nearest) <= 1e-9 * std::max(1.0, std::abs(nearest))) base = nearest;
    const long long per_axis = static_cast<long long>(std::ceil(std::max(1.0, base)));
    long long w = 4LL * d;
    for (int j = 0; j < d; ++j) w *= per_axis;
    return w;
}

Architecture prescribe_architecture(int d, long long n, double nu)
{
    const long long width = prescribed_width(d, n, nu);
    if (width > 1'000'000'000LL) throw std::invalid_argument("prescribe_architecture: width overflow");
    const int depth = ceil_log2(d) + 3;
    std::vector<int> dims{d};
    for (int l = 1; l < depth; ++l) dims.push_back(static_cast<int>(width));
    dims.push_back(1);
    return Architecture::uniform(dims, Activation::relu2);
}

ConstructionCheck verify_gradient_norm(const Network& net, std::uint64_t seed, int probes, double rel_tolerance)
{
    const Network gradnet = build_gradient_norm_network(net);
    const int d = net.input_dim();
    const Eigen::MatrixXd pts = [&] {
        // Probes on [-1, 2]^d so kinks outside the unit cube are exercised too.
        const CounterRng rng = CounterRng(seed).derive(stream::probe);
        Eigen::MatrixXd p(d, probes);
        for (int i = 0; i < probes; ++i) {
            for (int j = 0; j < d; ++j) p(j, i) = -1.0 + 3.0 * rng.uniform(static_cast<std::uint64_t>(i * d + j));
        }
        return p;
    }();

    ConstructionCheck c;
    c.name = "gradient_norm";
    c.probes = probes;
    c.depth = gradnet.depth();
    c.width = gradnet.width();
    c.depth_bound = net.depth() + 3;
    c.width_bound = static_cast<long long>(d) * (net.depth() + 2) * net.width();
    c.tolerance = rel_tolerance;
    for (int i = 0; i < probes; ++i) {
        const Eigen::VectorXd x = pts.col(i);
        const double expected = forward_with_input_gradient(net, x).input_gradient.squaredNorm();
        const double got = forward(gradnet, x);
        const double err = std::abs(got - expected);
        c.max_abs_error = std::max(c.max_abs_error, err);
        c.max_rel_error = std::max(c.max_rel_error, err / std::max(std::abs(expected), kGradNormFloor));
        if (got < 0.0) c.max_rel_error = std::numeric_limits<double>::infinity();
    }
    c.passed = c.max_rel_error <= rel_tolerance && c.depth <= c.depth_bound && c.width <= c.width_bound;
    return c;
}

namespace {

ConstructionCheck check_scalar_fn(const std::string& name, const Network& net,
                                  const std::function<double(const Eigen::VectorXd&)>& oracle,
                                  const Eigen::MatrixXd& pts, double tol, bool relative)
{
    ConstructionCheck c;
    c.name = name;
    c.probes = pts.cols();
    c.depth = net.depth();
    c.width = net.width();
    c.tolerance = tol;
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
        const Eigen::VectorXd x = pts.col(i);
        const double expected = oracle(x);
        const double err = std::abs(forward(net, x) - expected);
        c.max_abs_error = std::max(c.max_abs_error, err);
        c.max_rel_error = std::max(c.max_rel_error, err / std::max(std::abs(expected), 1.0));
    }
    c.passed = (relative ? c.max_rel_error : c.max_abs_error) <= tol;
    return c;
}

Eigen::MatrixXd uniform_box(int d, int n, double lo, double hi, std::uint64_t seed)
{
    const CounterRng rng = CounterRng(seed).derive(stream::probe);
    Eigen::MatrixXd p(d, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) p(j, i) = lo + (hi - lo) * rng.uniform(static_cast<std::uint64_t>(i * d + j));
    }
    return p;
}

Network random_relu2_net(int d, int depth, int width, std::uint64_t seed)
{
    const CounterRng rng = CounterRng(seed).derive(stream::init);
    std::vector<int> dims{d};
    for (int l = 1; l < depth; ++l) dims.push_back(width);
    dims.push_back(1);
    Network net = Network::zeros(Architecture::uniform(dims, Activation::relu2));
    Eigen::VectorXd phi = net.parameters();
    for (Eigen::Index k = 0; k < phi.size(); ++k) phi[k] = -1.0 + 2.0 * rng.uniform(static_cast<std::uint64_t>(k));
    return net.with_parameters(phi);
}

}  // namespace

std::vector<ConstructionCheck> run_construction_suite(std::uint64_t seed, int probes)
{
    std::vector<ConstructionCheck> out;

    const Eigen::MatrixXd line = uniform_box(1, probes, -10.0, 10.0, seed);
    ConstructionCheck sq = check_scalar_fn("square_gadget", build_square_gadget(),
                                           [](const Eigen::VectorXd& x) { return x[0] * x[0]; }, line, 1e-12, true);
    sq.depth_bound = 2;
    sq.width_bound = 2;
    out.push_back(sq);

    const Eigen::MatrixXd plane = uniform_box(2, probes, -10.0, 10.0, seed + 1);
    ConstructionCheck pr = check_scalar_fn("product_gadget", build_product_gadget(),
                                           [](const Eigen::VectorXd& x) { return x[0] * x[1]; }, plane, 1e-12, true);
    pr.depth_bound = 2;
    pr.width_bound = 4;
    out.push_back(pr);

    for (int level = 1; level <= 3; ++level) {
        const Eigen::MatrixXd pts = uniform_box(1, probes, -0.25, 1.25, seed + 10 + level);
        for (int i = -2; i <= (1 << level) - 1; ++i) {
            ConstructionCheck c = check_scalar_fn(
                "bspline_l" + std::to_string(level) + "_i" + std::to_string(i), build_univariate_bspline(level, i),
                [level, i](const Eigen::VectorXd& x) { return bspline_value(level, i, x[0]); }, pts, 1e-12, false);
            c.depth_bound = 2;
            c.width_bound = 4;
            c.passed = c.passed && c.depth <= 2 && c.width <= 4;
            out.push_back(c);
        }
    }

    for (int d = 2; d <= 3; ++d) {
        const int level = 2;
        const CounterRng rng = CounterRng(seed + 20 + d).derive(stream::init);
        SplineIndex idx{level, {}};
        for (int j = 0; j < d; ++j) idx.index.push_back(static_cast<int>(rng.below(j, (1u << level) + 2)) - 2);
        const Eigen::MatrixXd pts = uniform_box(d, probes, 0.0, 1.0, seed + 30 + d);
        ConstructionCheck c = check_scalar_fn(
            "bspline_d" + std::to_string(d), build_multivariate_bspline(idx),
            [&idx](const Eigen::VectorXd& x) { return bspline_value(idx, x); }, pts, 1e-10, false);
        c.depth_bound = ceil_log2(d) + 2;
        c.width_bound = 4 * d;
        c.passed = c.passed && c.depth <= c.depth_bound && c.width <= c.width_bound;
        out.push_back(c);
    }

    for (int level = 1; level <= 3; ++level) {
        ConstructionCheck c;
        c.name = "partition_of_unity_l" + std::to_string(level);
        c.tolerance = 1e-12;
        std::vector<Network> nets;
        for (int i = -2; i <= (1 << level) - 1; ++i) nets.push_back(build_univariate_bspline(level, i));
        const int grid = 1000;
        for (int k = 0; k < grid; ++k) {
            Eigen::VectorXd x(1);
            x[0] = static_cast<double>(k) / (grid - 1);
            double sum = 0.0;
            for (const Network& n : nets) sum += forward(n, x);
            c.max_abs_error = std::max(c.max_abs_error, std::abs(sum - 1.0));
        }
        c.max_rel_error = c.max_abs_error;
        c.probes = grid;
        c.depth = 2;
        c.width = 4;
        c.depth_bound = 2;
        c.width_bound = 4;
        c.passed = c.max_abs_error <= c.tolerance;
        out.push_back(c);
    }

    for (int k = 0; k < 4; ++k) {
        const int d = 1 + k % 3;
        const int depth = 2 + k % 3;
        ConstructionCheck c = verify_gradient_norm(random_relu2_net(d, depth, 8, seed + 100 + k), seed + 200 + k,
                                                   std::max(1, probes / 10));
        c.name = "gradient_norm_d" + std::to_string(d) + "_D" + std::to_string(depth);
        out.push_back(c);
    }
    return out;
}

}  // namespace drm
