#pragma once

#include <string>
#include <vector>

#include "ttdsr/tensor.hpp"

namespace ttdsr::ad {

/// One named parameter as stored in a checkpoint file.
struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

struct Checkpoint {
  std::string meta_json;  // free-form metadata blob (configuration etc.)
  std::vector<NamedTensor> tensors;
};

/// Binary checkpoint, little-endian, stable across releases:
///
///   bytes 0..7   magic "TTDSRCKP"
///   u32          format version (currently 1)
///   u32          metadata length, followed by that many UTF-8 bytes
///   u32          tensor count
///   per tensor:  u32 name length, name bytes,
///                u32 rank, rank * u32 dims,
///                prod(dims) * f64 values
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ttdsr::ad
