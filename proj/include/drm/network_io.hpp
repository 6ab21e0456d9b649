/**
 * @file network_io.hpp
 * @brief Text serialization of networks.
 *
 * Format (whitespace separated, '#' starts a comment line):
 *
 *     drm-network 1
 *     dims N0 N1 ... NL
 *     layer 1 relu2                  # uniform activation for the layer
 *     <N1*N0 weights, row-major>
 *     <N1 biases>
 *     layer 2 mixed relu relu2 ...   # one tag per neuron
 *     ...
 *
 * Numbers are written in shortest round-trip form, so save/load is bit-exact.
 */
#pragma once

#include "drm/network.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace drm {

void write_network(std::ostream& os, const Network& net);
Network read_network(std::istream& is);

std::string network_to_string(const Network& net);
Network network_from_string(const std::string& text);

void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

}  // namespace drm
