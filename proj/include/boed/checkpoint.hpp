#pragma once

// Critic checkpoints. Little-endian throughout:
//
//   "BNET"                      magic
//   u32 version                 (1)
//   u32 blocks, u32 summary_dim, u32 variable_dim
//   u32 network_count           (blocks + 1: sub-networks by block, then head)
//   per network:
//     u32 layer_count
//     per layer: u32 in, u32 out, u8 activation (0 identity, 1 ReLU),
//                out*in f64 weights (row-major), out f64 biases
//
// Loading a saved network reproduces every parameter bit for bit.

#include <filesystem>
#include <iosfwd>

#include "boed/neural_net.hpp"

namespace boed {

void save_checkpoint(std::ostream& out, const BoundNetwork& net);
BoundNetwork load_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const BoundNetwork& net);
BoundNetwork load_checkpoint(const std::filesystem::path& path);

}  // namespace boed
