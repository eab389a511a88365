#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "liam/tensor.hpp"

namespace liam {

/// splitmix64 finalizer; derives independent stream seeds from (seed, salt).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// Platform-independent draws on top of mt19937_64 (the std distributions are
/// implementation-defined, which would break cross-toolchain reproducibility).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();  // [0, 1)
  float uniform(float lo, float hi) { return lo + (hi - lo) * static_cast<float>(uniform()); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

struct Parameter {
  std::string name;
  std::string group;
  Tensor value;
};

/// Named trainable tensors, tagged with the group their freeze flag refers to.
class ParameterStore {
 public:
  Tensor& add(const std::string& name, const std::string& group, Shape shape,
              std::vector<float> init);
  /// Fan-in scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Tensor& add_uniform(const std::string& name, const std::string& group, Shape shape,
                      std::size_t fan_in, Rng& rng);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  const std::string& group_of(const std::string& name) const;

  std::vector<Parameter>& all() { return params_; }
  const std::vector<Parameter>& all() const { return params_; }
  std::set<std::string> groups() const;

  /// Frozen groups get requires_grad = false so no gradient is ever formed for them.
  void set_frozen(const std::set<std::string>& frozen_groups);
  bool frozen(const std::string& name) const;

  std::size_t parameter_count() const;

  /// Drops stored gradients so parameters off the next graph are not updated twice.
  void clear_grads();

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
  std::set<std::string> frozen_;
};

}  // namespace liam
