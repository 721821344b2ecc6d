// Trained-model serialization.
//
// Binary format "GNN1", all integers and doubles little-endian:
//   bytes 0-3   magic 'G' 'N' 'N' '1'
//   u64         number of arrays
//   per array:  u64 name length, name bytes (no terminator),
//               u64 element count, f64 values
// Arrays are the network's trainable parameters followed by its state
// buffers (batchnorm running statistics), in layer order.
//
// A JSON manifest is written next to the binary at <path>.json holding the
// format tag, the NetworkSpec, and the array directory, so a model file can
// be rebuilt into a Network without out-of-band knowledge.
#pragma once

#include <string>

#include "nirsgaf/nn_network.hpp"

namespace nirsgaf::nn {

void save_model(const std::string& path, Network& net);

// Reads <path> and <path>.json, rebuilds the architecture and fills in all
// arrays. Throws CorruptModel on bad magic, truncation, or any name/shape
// disagreement between manifest, binary, and architecture.
Network load_model(const std::string& path);

}  // namespace nirsgaf::nn
