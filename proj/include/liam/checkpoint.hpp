#pragma once

// Named-tensor archive: magic, format version, a JSON manifest (stage, config
// hash, step, per-tensor name/dtype/shape/byte offset), then the float32
// payload in little-endian order.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "liam/tensor.hpp"

namespace liam {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<float> data;
  bool operator==(const NamedTensor&) const = default;
};

struct Checkpoint {
  std::string stage;
  std::uint64_t config_hash = 0;
  std::uint64_t step = 0;
  std::string optimizer;
  std::uint64_t optimizer_steps = 0;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const;
  bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace liam
