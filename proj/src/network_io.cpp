#include "drm/network_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace drm {

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string next_token(std::istream& is)
{
    std::string tok;
    while (is >> tok) {
        if (tok.front() == '#') {
            std::string rest;
            std::getline(is, rest);
            continue;
        }
        return tok;
    }
    throw std::runtime_error("network file: unexpected end of input");
}

double parse_double(const std::string& tok)
{
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        throw std::runtime_error("network file: bad number '" + tok + "'");
    }
    return v;
}

int parse_int(const std::string& tok)
{
    int v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        throw std::runtime_error("network file: bad integer '" + tok + "'");
    }
    return v;
}

void expect(std::istream& is, const std::string& word)
{
    const std::string tok = next_token(is);
    if (tok != word) throw std::runtime_error("network file: expected '" + word + "', got '" + tok + "'");
}

}  // namespace

void write_network(std::ostream& os, const Network& net)
{
    os << "drm-network 1\n";
    os << "dims " << net.input_dim();
    for (const Layer& layer : net.layers()) os << ' ' << layer.weight.rows();
    os << '\n';
    int index = 1;
    for (const Layer& layer : net.layers()) {
        os << "layer " << index++;
        const bool uniform = std::all_of(layer.activation.begin(), layer.activation.end(),
                                         [&](Activation a) { return a == layer.activation.front(); });
        if (uniform) {
            os << ' ' << to_string(layer.activation.front());
        } else {
            os << " mixed";
            for (Activation a : layer.activation) os << ' ' << to_string(a);
        }
        os << '\n';
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
                os << (c ? " " : "") << format_double(layer.weight(r, c));
            }
            os << '\n';
        }
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
            os << (r ? " " : "") << format_double(layer.bias[r]);
        }
        os << '\n';
    }
}

Network read_network(std::istream& is)
{
    expect(is, "drm-network");
    if (parse_int(next_token(is)) != 1) throw std::runtime_error("network file: unsupported version");
    expect(is, "dims");

    // dims runs until the first "layer" keyword.
    std::vector<int> dims;
    std::string tok = next_token(is);
    while (tok != "layer") {
        dims.push_back(parse_int(tok));
        tok = next_token(is);
    }
    if (dims.size() < 2) throw std::runtime_error("network file: need at least two dims");

    std::vector<Layer> layers;
    for (std::size_t l = 1; l < dims.size(); ++l) {
        if (l > 1) {
            tok = next_token(is);
            if (tok != "layer") throw std::runtime_error("network file: expected 'layer'");
        }
        if (parse_int(next_token(is)) != static_cast<int>(l)) {
            throw std::runtime_error("network file: layers out of order");
        }
        const int rows = dims[l];
        const int cols = dims[l - 1];
        if (rows < 1 || cols < 1) throw std::runtime_error("network file: non-positive dimension");
        Layer layer;
        const std::string act = next_token(is);
        if (act == "mixed") {
            for (int r = 0; r < rows; ++r) layer.activation.push_back(activation_from_string(next_token(is)));
        } else {
            layer.activation.assign(static_cast<std::size_t>(rows), activation_from_string(act));
        }
        layer.weight.resize(rows, cols);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) layer.weight(r, c) = parse_double(next_token(is));
        }
        layer.bias.resize(rows);
        for (int r = 0; r < rows; ++r) layer.bias[r] = parse_double(next_token(is));
        layers.push_back(std::move(layer));
    }
    return Network(std::move(layers));
}

std::string network_to_string(const Network& net)
{
    std::ostringstream os;
    write_network(os, net);
    return os.str();
}

Network network_from_string(const std::string& text)
{
    std::istringstream is(text);
    return read_network(is);
}

void save_network(const std::filesystem::path& path, const Network& net)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_network(os, net);
}

Network load_network(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read_network(is);
}

}  // namespace drm
